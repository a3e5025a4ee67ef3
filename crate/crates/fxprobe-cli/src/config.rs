//! Run configuration: one JSON file drives every subcommand.

use anyhow::{bail, Context, Result};
use fxprobe::effects::{standard_sweeps, sweep_specs, SweepSpec};
use fxprobe::encoders::EncoderConfig;
use fxprobe::loudness::DEFAULT_TARGET_LUFS;
use fxprobe::probe::ProbeConfig;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// When set, overrides the `seed` field of any loaded config.
pub const SEED_ENV: &str = "FXPROBE_SEED";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub corpus: CorpusConfig,
    #[serde(default = "default_target_lufs")]
    pub target_lufs: f64,
    #[serde(default)]
    pub encoder: EncoderConfig,
    #[serde(default)]
    pub probe: ProbeConfig,
    #[serde(default = "standard_sweeps")]
    pub sweep: Vec<SweepSpec>,
    pub output_dir: PathBuf,
}

fn default_target_lufs() -> f64 {
    DEFAULT_TARGET_LUFS
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum CorpusConfig {
    Synth(SynthCorpus),
    External(ExternalCorpus),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthCorpus {
    pub n_per_instrument: usize,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalCorpus {
    pub input_dir: PathBuf,
}

impl RunConfig {
    /// Read a config file, apply the seed override from the environment, and
    /// validate every section before any work starts.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let bytes = std::fs::read(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let mut config: RunConfig = serde_json::from_slice(&bytes)
            .with_context(|| format!("parsing config {}", path.display()))?;
        if let Ok(seed) = std::env::var(SEED_ENV) {
            config.seed = seed
                .trim()
                .parse()
                .with_context(|| format!("{SEED_ENV}={seed:?} is not a u64"))?;
        }
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        match &self.corpus {
            CorpusConfig::Synth(c) => {
                if c.n_per_instrument == 0 {
                    bail!("corpus.n_per_instrument must be at least 1");
                }
            }
            CorpusConfig::External(c) => {
                if c.input_dir.as_os_str().is_empty() {
                    bail!("corpus.input_dir must not be empty");
                }
            }
        }
        if !self.target_lufs.is_finite() || !(-70.0..0.0).contains(&self.target_lufs) {
            bail!("target_lufs must lie in [-70, 0), got {}", self.target_lufs);
        }
        self.probe.validate().context("probe section")?;
        for sweep in &self.sweep {
            sweep_specs(sweep).with_context(|| {
                format!("sweep section ({} {})", sweep.id.code(), sweep.param)
            })?;
        }
        if self.output_dir.as_os_str().is_empty() {
            bail!("output_dir must not be empty");
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal() -> serde_json::Value {
        serde_json::json!({
            "seed": 7,
            "corpus": {"mode": "synth", "n_per_instrument": 4},
            "output_dir": "out"
        })
    }

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg: RunConfig = serde_json::from_value(minimal()).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.seed, 7);
        assert_eq!(cfg.target_lufs, -23.0);
        assert_eq!(cfg.encoder.encoder_id(), "mel32");
        assert_eq!(cfg.probe.max_epochs, 500);
        assert_eq!(cfg.sweep.len(), 4);
    }

    #[test]
    fn unknown_keys_are_rejected_at_every_level() {
        let mut top = minimal();
        top["typo"] = 1.into();
        assert!(serde_json::from_value::<RunConfig>(top).is_err());

        let mut corpus = minimal();
        corpus["corpus"]["typo"] = 1.into();
        assert!(serde_json::from_value::<RunConfig>(corpus).is_err());

        let mut probe = minimal();
        probe["probe"] = serde_json::json!({"learning_rate": 0.1});
        assert!(serde_json::from_value::<RunConfig>(probe).is_err());
    }

    #[test]
    fn out_of_range_values_fail_validation() {
        let mut zero = minimal();
        zero["corpus"]["n_per_instrument"] = 0.into();
        let cfg: RunConfig = serde_json::from_value(zero).unwrap();
        assert!(cfg.validate().is_err());

        let mut loud = minimal();
        loud["target_lufs"] = 3.0.into();
        let cfg: RunConfig = serde_json::from_value(loud).unwrap();
        assert!(cfg.validate().is_err());

        let mut sweep = minimal();
        sweep["sweep"] = serde_json::json!([{
            "id": "HPF", "param": "cutoff_hz",
            "min": 0.0, "max": 100.0, "scale": "log"
        }]);
        let cfg: RunConfig = serde_json::from_value(sweep).unwrap();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn config_round_trips_through_json() {
        let cfg: RunConfig = serde_json::from_value(minimal()).unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back.seed, cfg.seed);
        assert_eq!(back.target_lufs, cfg.target_lufs);
        assert_eq!(back.sweep.len(), cfg.sweep.len());
    }
}
