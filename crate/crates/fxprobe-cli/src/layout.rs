//! Output tree layout and stage caching.
//!
//! Each expensive stage hashes the config sections it depends on and stores
//! the hash next to its outputs; a rerun with an unchanged hash may skip
//! files that are already present and valid.

use crate::config::RunConfig;
use anyhow::{Context, Result};
use fxprobe::encoders::EncoderConfig;
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Clone, Debug)]
pub struct Layout {
    pub root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Layout {
        Layout {
            root: root.to_path_buf(),
        }
    }

    pub fn sources_dir(&self) -> PathBuf {
        self.root.join("sources")
    }

    pub fn clips_dir(&self) -> PathBuf {
        self.root.join("clips")
    }

    pub fn clip_path(&self, clip_id: &str) -> PathBuf {
        self.clips_dir().join(format!("{clip_id}.wav"))
    }

    pub fn manifest_path(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    pub fn render_hash_path(&self) -> PathBuf {
        self.root.join("render.hash")
    }

    /// Directory the embeddings for this encoder live in. For an external
    /// encoder that is the supplied directory itself; nothing is written.
    pub fn embeddings_dir(&self, encoder: &EncoderConfig) -> PathBuf {
        match encoder {
            EncoderConfig::External { directory } => directory.clone(),
            other => self.root.join("embeddings").join(other.encoder_id()),
        }
    }

    pub fn encode_hash_path(&self, encoder: &EncoderConfig) -> PathBuf {
        self.embeddings_dir(encoder).join("encode.hash")
    }

    pub fn reports_dir(&self) -> PathBuf {
        self.root.join("reports")
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut h = 0xcbf2_9ce4_8422_2325u64;
    for &b in bytes {
        h ^= u64::from(b);
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}

/// Hash of a stage's config inputs, via their canonical JSON serialization.
pub fn content_hash(value: &impl Serialize) -> Result<String> {
    let json = serde_json::to_string(value).context("serializing stage inputs for hashing")?;
    Ok(format!("{:016x}", fnv1a64(json.as_bytes())))
}

/// Inputs that determine every rendered byte: seed, corpus shape, loudness
/// target. Encoder and probe settings do not touch the audio.
pub fn render_hash(config: &RunConfig) -> Result<String> {
    content_hash(&serde_json::json!({
        "seed": config.seed,
        "corpus": &config.corpus,
        "target_lufs": config.target_lufs,
    }))
}

/// Embeddings depend on the rendered audio plus the encoder section.
pub fn encode_hash(config: &RunConfig) -> Result<String> {
    content_hash(&serde_json::json!({
        "render": render_hash(config)?,
        "encoder": &config.encoder,
    }))
}

pub fn hash_matches(path: &Path, hash: &str) -> bool {
    std::fs::read_to_string(path)
        .map(|s| s.trim() == hash)
        .unwrap_or(false)
}

pub fn write_hash(path: &Path, hash: &str) -> Result<()> {
    std::fs::write(path, format!("{hash}\n"))
        .with_context(|| format!("writing {}", path.display()))
}

pub fn file_nonempty(path: &Path) -> bool {
    std::fs::metadata(path)
        .map(|m| m.is_file() && m.len() > 0)
        .unwrap_or(false)
}

/// Write a CSV from preformatted cells. Every field we emit is an
/// identifier or a number, so no quoting is needed.
pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = String::new();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in rows {
        debug_assert_eq!(row.len(), header.len());
        out.push_str(&row.join(","));
        out.push('\n');
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::{CorpusConfig, SynthCorpus};

    fn config(seed: u64, n: usize) -> RunConfig {
        serde_json::from_value(serde_json::json!({
            "seed": seed,
            "corpus": {"mode": "synth", "n_per_instrument": n},
            "output_dir": "out"
        }))
        .unwrap()
    }

    #[test]
    fn hashes_react_to_the_right_sections() {
        let base = config(1, 4);
        assert_eq!(render_hash(&base).unwrap(), render_hash(&base).unwrap());

        let mut reseeded = config(2, 4);
        assert_ne!(render_hash(&base).unwrap(), render_hash(&reseeded).unwrap());

        reseeded.seed = 1;
        reseeded.corpus = CorpusConfig::Synth(SynthCorpus { n_per_instrument: 5 });
        assert_ne!(render_hash(&base).unwrap(), render_hash(&reseeded).unwrap());

        // Probe settings leave the audio untouched.
        let mut probe_tweak = config(1, 4);
        probe_tweak.probe.lr = 1e-3;
        assert_eq!(render_hash(&base).unwrap(), render_hash(&probe_tweak).unwrap());
        assert_eq!(encode_hash(&base).unwrap(), encode_hash(&probe_tweak).unwrap());

        let mut reencoded = config(1, 4);
        reencoded.encoder = serde_json::from_value(serde_json::json!({
            "kind": "random_projection", "dims": 16, "seed": 3
        }))
        .unwrap();
        assert_eq!(render_hash(&base).unwrap(), render_hash(&reencoded).unwrap());
        assert_ne!(encode_hash(&base).unwrap(), encode_hash(&reencoded).unwrap());
    }

    #[test]
    fn hash_files_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("stage.hash");
        assert!(!hash_matches(&path, "abc"));
        write_hash(&path, "abc").unwrap();
        assert!(hash_matches(&path, "abc"));
        assert!(!hash_matches(&path, "abd"));
    }

    #[test]
    fn csv_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_csv(
            &path,
            &["a", "b"],
            &[vec!["1".into(), "2".into()], vec!["3".into(), "4".into()]],
        )
        .unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "a,b\n1,2\n3,4\n");
    }
}
