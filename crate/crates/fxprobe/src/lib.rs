//! Audio-effect latent-space probing toolkit.
//!
//! The pipeline renders an effect-augmented audio corpus, extracts embedding
//! sequences with pluggable encoders, and quantifies how effect information is
//! encoded: PCA projections, parameter-sweep trajectory metrics, linear-probe
//! classification, and per-dimension masking sweeps.
//!
//! Modules follow the processing order:
//!
//! * [`audio_io`] — stereo clip buffers, WAV I/O, slicing, synthetic corpus.
//! * [`loudness`] — BS.1770-4 integrated loudness and normalization.
//! * [`effects`] — the ten manipulation classes and parameter sweeps.
//! * [`encoders`] — mel / random-projection encoders and the raw-f32 exchange
//!   format for externally computed embeddings.
//! * [`represent`] — time-averaging, flattening, z-scoring, PCA, trajectories.
//! * [`probe`] — linear-probe training, evaluation, and dimension masking.

pub mod audio_io;
pub mod dsp;
pub mod effects;
pub mod encoders;
pub mod loudness;
pub mod probe;
pub mod represent;
pub mod rng;

pub use audio_io::AudioClip;

/// Sample rate every clip is converted to on ingestion.
pub const SAMPLE_RATE: u32 = 48_000;

/// Length of a corpus clip in samples (2^18, about 5.46 s at 48 kHz).
pub const CORPUS_CLIP_SAMPLES: usize = 1 << 18;
