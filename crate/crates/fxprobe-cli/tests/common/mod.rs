//! Helpers for driving the fxprobe binary from integration tests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_fxprobe")
}

/// Run a subcommand against a config, with a clean seed environment.
pub fn run(args: &[&str], envs: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(bin());
    cmd.args(args).env_remove("FXPROBE_SEED").env("RUST_LOG", "info");
    for (k, v) in envs {
        cmd.env(k, v);
    }
    cmd.output().expect("spawning fxprobe")
}

// Not every integration-test target exercises every helper.
#[allow(dead_code)]
pub fn assert_status(output: &Output, expected: i32, what: &str) {
    let code = output.status.code().unwrap_or(-1);
    assert_eq!(
        code,
        expected,
        "{what}: expected exit {expected}, got {code}\nstdout:\n{}\nstderr:\n{}",
        String::from_utf8_lossy(&output.stdout),
        String::from_utf8_lossy(&output.stderr)
    );
}

/// Write a synth-corpus config and return its path.
pub fn write_config(dir: &Path, seed: u64, n_per_instrument: usize, out_name: &str) -> PathBuf {
    let path = dir.join(format!("config_{out_name}.json"));
    let config = serde_json::json!({
        "seed": seed,
        "corpus": {"mode": "synth", "n_per_instrument": n_per_instrument},
        "output_dir": dir.join(out_name),
    });
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    path
}

pub fn read_csv(path: &Path) -> (Vec<String>, Vec<Vec<String>>) {
    let text = std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()));
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .expect("csv has a header")
        .split(',')
        .map(str::to_string)
        .collect();
    let rows = lines
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect();
    (header, rows)
}

/// Column value from a single-row CSV report.
pub fn csv_field(header: &[String], row: &[String], name: &str) -> String {
    let idx = header
        .iter()
        .position(|h| h == name)
        .unwrap_or_else(|| panic!("column {name} in {header:?}"));
    row[idx].clone()
}
