//! Encoders turn a clip into an embedding sequence (frames x dims).
//!
//! Built in: a log-mel spectrogram encoder and a seeded random projection of
//! it. Embeddings computed elsewhere (e.g. by real pretrained autoencoders)
//! enter through the raw-f32-plus-sidecar exchange format in `external`.

mod external;
mod mel;

pub use external::{load_external, write_embedding, write_meta, ExternalMeta};
pub use mel::MelConfig;

use crate::audio_io::AudioClip;
use crate::rng::derive_rng;
use ndarray::Array2;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use std::path::PathBuf;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EncoderError {
    #[error("encoder configuration: {0}")]
    Config(String),
    #[error("embedding contains non-finite value at flat index {index}")]
    NonFinite { index: usize },
    #[error("corrupt embedding file {path}: {reason}")]
    Corrupt { path: PathBuf, reason: String },
    #[error("embedding metadata: {0}")]
    Meta(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl EncoderError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        EncoderError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Time-indexed embedding: one row per frame.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingSequence {
    pub data: Array2<f32>,
    pub frame_rate_hz: f64,
    pub encoder_id: String,
}

impl EmbeddingSequence {
    pub fn new(
        data: Array2<f32>,
        frame_rate_hz: f64,
        encoder_id: String,
    ) -> Result<Self, EncoderError> {
        let (frames, dims) = data.dim();
        if frames == 0 || dims == 0 {
            return Err(EncoderError::Config(format!(
                "empty embedding shape ({frames}, {dims})"
            )));
        }
        if let Some(index) = data.iter().position(|v| !v.is_finite()) {
            return Err(EncoderError::NonFinite { index });
        }
        Ok(EmbeddingSequence {
            data,
            frame_rate_hz,
            encoder_id,
        })
    }

    pub fn frames(&self) -> usize {
        self.data.nrows()
    }

    pub fn dims(&self) -> usize {
        self.data.ncols()
    }

    pub fn flattened_len(&self) -> usize {
        self.frames() * self.dims()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomProjectionConfig {
    pub dims: usize,
    pub seed: u64,
    #[serde(default)]
    pub mel: MelConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EncoderConfig {
    Mel(MelConfig),
    RandomProjection(RandomProjectionConfig),
    External { directory: PathBuf },
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::Mel(MelConfig::default())
    }
}

impl EncoderConfig {
    pub fn encoder_id(&self) -> String {
        match self {
            EncoderConfig::Mel(cfg) => format!("mel{}", cfg.n_mels),
            EncoderConfig::RandomProjection(cfg) => format!("randproj{}", cfg.dims),
            EncoderConfig::External { .. } => "external".to_string(),
        }
    }
}

/// Encode a clip with a built-in encoder. The external variant has no
/// in-process compute path; its sequences come from `load_external`.
pub fn encode(clip: &AudioClip, config: &EncoderConfig) -> Result<EmbeddingSequence, EncoderError> {
    match config {
        EncoderConfig::Mel(cfg) => mel::encode(clip, cfg),
        EncoderConfig::RandomProjection(cfg) => {
            if cfg.dims == 0 {
                return Err(EncoderError::Config("projection dims must be >= 1".into()));
            }
            let base = mel::encode(clip, &cfg.mel)?;
            // Row-major Gaussian matrix (dims x n_mels), entries with
            // variance 1/n_mels; fixed draw order makes it reproducible.
            let scale = (1.0 / cfg.mel.n_mels as f64).sqrt();
            let mut rng = derive_rng(cfg.seed, "random-projection", cfg.dims as u64);
            let g = Array2::from_shape_fn((cfg.dims, cfg.mel.n_mels), |_| {
                let z: f64 = rng.sample(StandardNormal);
                (z * scale) as f32
            });
            let projected = base.data.dot(&g.t());
            EmbeddingSequence::new(projected, base.frame_rate_hz, config.encoder_id())
        }
        EncoderConfig::External { directory } => Err(EncoderError::Config(format!(
            "external encoder at {} cannot encode audio; load its files instead",
            directory.display()
        ))),
    }
}
