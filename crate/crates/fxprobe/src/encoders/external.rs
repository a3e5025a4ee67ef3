//! Bit-exact embedding exchange format: a meta.json sidecar describing the
//! layout plus one raw little-endian f32 file per clip, row-major
//! frames x dims. Anything that can write flat f32 arrays can produce it.

use super::{EmbeddingSequence, EncoderError};
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::Path;

pub const LAYOUT: &str = "row-major frames\u{d7}dims";
pub const DTYPE: &str = "f32le";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExternalMeta {
    pub dims: usize,
    pub frame_rate_hz: f64,
    pub encoder_id: String,
    pub dtype: String,
    pub layout: String,
}

impl ExternalMeta {
    pub fn new(dims: usize, frame_rate_hz: f64, encoder_id: &str) -> Self {
        ExternalMeta {
            dims,
            frame_rate_hz,
            encoder_id: encoder_id.to_string(),
            dtype: DTYPE.to_string(),
            layout: LAYOUT.to_string(),
        }
    }

    pub fn for_sequence(seq: &EmbeddingSequence) -> Self {
        ExternalMeta::new(seq.dims(), seq.frame_rate_hz, &seq.encoder_id)
    }

    fn validate(&self) -> Result<(), EncoderError> {
        if self.dims == 0 {
            return Err(EncoderError::Meta("dims must be >= 1".into()));
        }
        if self.dtype != DTYPE {
            return Err(EncoderError::Meta(format!(
                "dtype {:?} unsupported (expected {DTYPE:?})",
                self.dtype
            )));
        }
        if self.layout != LAYOUT {
            return Err(EncoderError::Meta(format!(
                "layout {:?} unsupported (expected {LAYOUT:?})",
                self.layout
            )));
        }
        Ok(())
    }

    pub fn load(dir: &Path) -> Result<Self, EncoderError> {
        let path = dir.join("meta.json");
        let bytes = fs::read(&path).map_err(|e| EncoderError::io(&path, e))?;
        let meta: ExternalMeta = serde_json::from_slice(&bytes)
            .map_err(|e| EncoderError::Meta(format!("{}: {e}", path.display())))?;
        meta.validate()?;
        Ok(meta)
    }
}

/// Write (or overwrite) the directory's meta.json.
pub fn write_meta(dir: &Path, meta: &ExternalMeta) -> Result<(), EncoderError> {
    let path = dir.join("meta.json");
    let json = serde_json::to_string_pretty(meta)
        .map_err(|e| EncoderError::Meta(format!("serialize: {e}")))?;
    fs::write(&path, json).map_err(|e| EncoderError::io(&path, e))
}

/// Write one clip's embedding as `<clip_id>.f32`.
pub fn write_embedding(
    dir: &Path,
    clip_id: &str,
    seq: &EmbeddingSequence,
) -> Result<(), EncoderError> {
    let path = dir.join(format!("{clip_id}.f32"));
    let mut bytes = Vec::with_capacity(seq.flattened_len() * 4);
    for &v in seq.data.iter() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    fs::write(&path, bytes).map_err(|e| EncoderError::io(&path, e))
}

/// Load one clip's embedding from a directory in the exchange format.
pub fn load_external(
    dir: &Path,
    clip_id: &str,
    meta: &ExternalMeta,
) -> Result<EmbeddingSequence, EncoderError> {
    meta.validate()?;
    let path = dir.join(format!("{clip_id}.f32"));
    let bytes = fs::read(&path).map_err(|e| EncoderError::io(&path, e))?;
    if bytes.len() % 4 != 0 || (bytes.len() / 4) % meta.dims != 0 || bytes.is_empty() {
        return Err(EncoderError::Corrupt {
            path,
            reason: format!(
                "{} bytes is not a whole number of {}-dim f32 frames",
                bytes.len(),
                meta.dims
            ),
        });
    }
    let values: Vec<f32> = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    let frames = values.len() / meta.dims;
    let data = Array2::from_shape_vec((frames, meta.dims), values)
        .expect("shape arithmetic checked above");
    EmbeddingSequence::new(data, meta.frame_rate_hz, meta.encoder_id.clone())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::{synth_source, Instrument};
    use crate::encoders::{encode, EncoderConfig};

    #[test]
    fn write_then_load_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let clip = synth_source(Instrument::GuitarLike, 17, 0).unwrap();
        let seq = encode(&clip, &EncoderConfig::default()).unwrap();
        let meta = ExternalMeta::for_sequence(&seq);
        write_meta(dir.path(), &meta).unwrap();
        write_embedding(dir.path(), "guitar-000-cln", &seq).unwrap();

        let loaded_meta = ExternalMeta::load(dir.path()).unwrap();
        assert_eq!(loaded_meta, meta);
        let loaded = load_external(dir.path(), "guitar-000-cln", &loaded_meta).unwrap();
        assert_eq!(loaded.data, seq.data);
        assert_eq!(loaded.frame_rate_hz, seq.frame_rate_hz);
        assert_eq!(loaded.encoder_id, seq.encoder_id);
    }

    #[test]
    fn shape_arithmetic_from_file_size() {
        let dir = tempfile::tempdir().unwrap();
        for (dims, floats, want_frames) in [(32usize, 16_384usize, 512usize), (64, 131_072, 2048)] {
            let meta = ExternalMeta::new(dims, 93.75, "fixture");
            let bytes: Vec<u8> = (0..floats).flat_map(|i| (i as f32).to_le_bytes()).collect();
            fs::write(dir.path().join("clip.f32"), bytes).unwrap();
            let seq = load_external(dir.path(), "clip", &meta).unwrap();
            assert_eq!((seq.frames(), seq.dims()), (want_frames, dims));
        }
    }

    #[test]
    fn truncated_file_is_corrupt() {
        let dir = tempfile::tempdir().unwrap();
        let meta = ExternalMeta::new(32, 93.75, "fixture");
        fs::write(dir.path().join("clip.f32"), vec![0u8; 32 * 4 * 3 - 4]).unwrap();
        assert!(matches!(
            load_external(dir.path(), "clip", &meta),
            Err(EncoderError::Corrupt { .. })
        ));

        fs::write(dir.path().join("odd.f32"), vec![0u8; 130]).unwrap();
        assert!(matches!(
            load_external(dir.path(), "odd", &meta),
            Err(EncoderError::Corrupt { .. })
        ));
    }

    #[test]
    fn nan_in_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let meta = ExternalMeta::new(2, 93.75, "fixture");
        let mut bytes = Vec::new();
        for v in [1.0f32, f32::NAN, 0.0, 0.0] {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        fs::write(dir.path().join("clip.f32"), bytes).unwrap();
        assert!(matches!(
            load_external(dir.path(), "clip", &meta),
            Err(EncoderError::NonFinite { index: 1 })
        ));
    }

    #[test]
    fn meta_validation_rejects_foreign_layouts() {
        let mut meta = ExternalMeta::new(8, 50.0, "fixture");
        meta.dtype = "f64le".to_string();
        assert!(matches!(meta.validate(), Err(EncoderError::Meta(_))));

        let mut meta = ExternalMeta::new(8, 50.0, "fixture");
        meta.layout = "column-major".to_string();
        assert!(meta.validate().is_err());

        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("meta.json"), b"{\"dims\": 8}").unwrap();
        assert!(matches!(
            ExternalMeta::load(dir.path()),
            Err(EncoderError::Meta(_))
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        let dir = tempfile::tempdir().unwrap();
        let meta = ExternalMeta::new(8, 50.0, "fixture");
        assert!(matches!(
            load_external(dir.path(), "ghost", &meta),
            Err(EncoderError::Io { .. })
        ));
    }
}
