//! Audio buffers, WAV file I/O, clip slicing, and the synthetic corpus.
//!
//! Everything downstream operates on [`AudioClip`]: a stereo, 48 kHz,
//! finite-sample buffer. Mono input is doubled to stereo on ingestion and
//! non-48 kHz input is resampled, so the rest of the pipeline never has to
//! care about source formats.

mod manifest;
mod resample;
mod synth;
mod wav;

pub use manifest::{assign_splits, CorpusManifest, Instrument, ManifestEntry, Split};
pub use resample::{resample, resample_by_ratio};
pub use synth::{karplus_strong_note, piano_note, synth_corpus, synth_manifest, synth_source};
pub use wav::{read_wav, write_wav};

use crate::{CORPUS_CLIP_SAMPLES, SAMPLE_RATE};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AudioError {
    #[error("malformed WAV: {0}")]
    Format(String),
    #[error("unsupported WAV codec: {0}")]
    Unsupported(String),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("channel length mismatch: left {left}, right {right}")]
    ChannelMismatch { left: usize, right: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl AudioError {
    pub(crate) fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        AudioError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

/// Stereo sample buffer at a fixed rate. Channel 0 is left, 1 is right.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: [Vec<f32>; 2],
    sample_rate: u32,
}

impl AudioClip {
    /// Build a stereo clip, rejecting non-finite samples and ragged channels.
    pub fn new(left: Vec<f32>, right: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        if left.len() != right.len() {
            return Err(AudioError::ChannelMismatch {
                left: left.len(),
                right: right.len(),
            });
        }
        for (i, v) in left.iter().chain(right.iter()).enumerate() {
            if !v.is_finite() {
                return Err(AudioError::NonFinite(i % left.len().max(1)));
            }
        }
        Ok(Self {
            samples: [left, right],
            sample_rate,
        })
    }

    /// Double a mono buffer to stereo.
    pub fn from_mono(mono: Vec<f32>, sample_rate: u32) -> Result<Self, AudioError> {
        let right = mono.clone();
        Self::new(mono, right, sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.samples[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples[0].is_empty()
    }

    pub fn channel(&self, ch: usize) -> &[f32] {
        &self.samples[ch]
    }

    pub fn channels(&self) -> (&[f32], &[f32]) {
        (&self.samples[0], &self.samples[1])
    }

    /// Mean of the two channels, as f64 for analysis front ends.
    pub fn mono_mix(&self) -> Vec<f64> {
        self.samples[0]
            .iter()
            .zip(&self.samples[1])
            .map(|(&l, &r)| 0.5 * (f64::from(l) + f64::from(r)))
            .collect()
    }

    /// Apply a uniform linear gain to both channels.
    pub fn scaled(&self, gain: f64) -> AudioClip {
        let map = |ch: &Vec<f32>| ch.iter().map(|&x| (f64::from(x) * gain) as f32).collect();
        AudioClip {
            samples: [map(&self.samples[0]), map(&self.samples[1])],
            sample_rate: self.sample_rate,
        }
    }

    /// Whether this clip satisfies the corpus contract (stereo is inherent).
    pub fn is_corpus_shaped(&self) -> bool {
        self.sample_rate == SAMPLE_RATE && self.len() == CORPUS_CLIP_SAMPLES
    }
}

/// Cut a clip into consecutive non-overlapping windows of `length_samples`;
/// the trailing remainder is discarded. A clip shorter than one window yields
/// an empty list.
pub fn slice_clips(clip: &AudioClip, length_samples: usize) -> Result<Vec<AudioClip>, AudioError> {
    if length_samples == 0 {
        return Err(AudioError::InvalidArgument(
            "slice length must be at least 1".into(),
        ));
    }
    let n = clip.len() / length_samples;
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let a = i * length_samples;
        let b = a + length_samples;
        out.push(AudioClip {
            samples: [
                clip.samples[0][a..b].to_vec(),
                clip.samples[1][a..b].to_vec(),
            ],
            sample_rate: clip.sample_rate,
        });
    }
    Ok(out)
}
