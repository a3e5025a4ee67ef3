//! RIFF/WAV reading and writing.
//!
//! Read: PCM 16-bit, PCM 24-bit, and IEEE float-32, mono or stereo, including
//! the WAVE_FORMAT_EXTENSIBLE wrapping of those codecs. Mono is doubled to
//! stereo, non-48 kHz content is resampled on the way in.
//!
//! Write: IEEE float-32 stereo only, so a read-back of anything we wrote
//! reproduces the samples bit-exactly.

use super::resample::resample;
use super::{AudioClip, AudioError};
use crate::SAMPLE_RATE;
use std::fs;
use std::io::Write;
use std::path::Path;

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

// PCM scaling uses the asymmetric convention (divide by 2^(bits-1)) so that
// integer full scale maps to exactly representable values.
const PCM16_SCALE: f32 = 1.0 / 32768.0;
const PCM24_SCALE: f32 = 1.0 / 8_388_608.0;

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    bits_per_sample: u16,
}

fn u16le(b: &[u8], at: usize) -> Result<u16, AudioError> {
    b.get(at..at + 2)
        .map(|s| u16::from_le_bytes([s[0], s[1]]))
        .ok_or_else(|| AudioError::Format("truncated chunk".into()))
}

fn u32le(b: &[u8], at: usize) -> Result<u32, AudioError> {
    b.get(at..at + 4)
        .map(|s| u32::from_le_bytes([s[0], s[1], s[2], s[3]]))
        .ok_or_else(|| AudioError::Format("truncated chunk".into()))
}

fn parse_fmt(body: &[u8]) -> Result<FmtChunk, AudioError> {
    if body.len() < 16 {
        return Err(AudioError::Format("fmt chunk shorter than 16 bytes".into()));
    }
    let mut format = u16le(body, 0)?;
    let channels = u16le(body, 2)?;
    let sample_rate = u32le(body, 4)?;
    let bits_per_sample = u16le(body, 14)?;
    if format == FORMAT_EXTENSIBLE {
        // Sub-format GUID starts at offset 24; its first two bytes carry the
        // actual codec tag.
        if body.len() < 26 {
            return Err(AudioError::Format("extensible fmt chunk truncated".into()));
        }
        format = u16le(body, 24)?;
    }
    Ok(FmtChunk {
        format,
        channels,
        sample_rate,
        bits_per_sample,
    })
}

fn decode_samples(fmt: &FmtChunk, data: &[u8]) -> Result<Vec<f32>, AudioError> {
    match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => Ok(data
            .chunks_exact(2)
            .map(|c| f32::from(i16::from_le_bytes([c[0], c[1]])) * PCM16_SCALE)
            .collect()),
        (FORMAT_PCM, 24) => Ok(data
            .chunks_exact(3)
            .map(|c| {
                let v = i32::from_le_bytes([0, c[0], c[1], c[2]]) >> 8;
                v as f32 * PCM24_SCALE
            })
            .collect()),
        (FORMAT_IEEE_FLOAT, 32) => {
            let samples: Vec<f32> = data
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
                .collect();
            if let Some(bad) = samples.iter().position(|v| !v.is_finite()) {
                return Err(AudioError::NonFinite(bad));
            }
            Ok(samples)
        }
        (f, b) => Err(AudioError::Unsupported(format!(
            "format tag {f} at {b} bits per sample"
        ))),
    }
}

/// Read a WAV file into a stereo 48 kHz clip.
pub fn read_wav(path: &Path) -> Result<AudioClip, AudioError> {
    let bytes = fs::read(path).map_err(|e| AudioError::io(path, e))?;
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::Format("missing RIFF/WAVE header".into()));
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32le(&bytes, pos + 4)? as usize;
        let body_start = pos + 8;
        let body_end = body_start + size;
        if body_end > bytes.len() {
            return Err(AudioError::Format(format!(
                "chunk {:?} overruns file",
                String::from_utf8_lossy(id)
            )));
        }
        let body = &bytes[body_start..body_end];
        match id {
            b"fmt " => fmt = Some(parse_fmt(body)?),
            b"data" => data = Some(body),
            _ => {}
        }
        // Chunk bodies are padded to even length.
        pos = body_end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| AudioError::Format("no fmt chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::Format("no data chunk".into()))?;
    if fmt.channels == 0 || fmt.channels > 2 {
        return Err(AudioError::Unsupported(format!(
            "{} channels (expected mono or stereo)",
            fmt.channels
        )));
    }

    let interleaved = decode_samples(&fmt, data)?;
    let (mut left, mut right) = if fmt.channels == 1 {
        (interleaved.clone(), interleaved)
    } else {
        let mut l = Vec::with_capacity(interleaved.len() / 2);
        let mut r = Vec::with_capacity(interleaved.len() / 2);
        for pair in interleaved.chunks_exact(2) {
            l.push(pair[0]);
            r.push(pair[1]);
        }
        (l, r)
    };

    if fmt.sample_rate != SAMPLE_RATE {
        left = resample(&left, fmt.sample_rate, SAMPLE_RATE);
        right = resample(&right, fmt.sample_rate, SAMPLE_RATE);
    }
    AudioClip::new(left, right, SAMPLE_RATE)
}

/// Write a clip as IEEE float-32 stereo WAV.
pub fn write_wav(clip: &AudioClip, path: &Path) -> Result<(), AudioError> {
    let n = clip.len();
    let data_len = (n * 2 * 4) as u32;
    let byte_rate = clip.sample_rate() * 2 * 4;

    let mut out = Vec::with_capacity(data_len as usize + 58);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(4 + 8 + 16 + 8 + 4 + 8 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");

    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_IEEE_FLOAT.to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&byte_rate.to_le_bytes());
    out.extend_from_slice(&8u16.to_le_bytes()); // block align
    out.extend_from_slice(&32u16.to_le_bytes());

    // Non-PCM formats carry a fact chunk with the per-channel frame count.
    out.extend_from_slice(b"fact");
    out.extend_from_slice(&4u32.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());

    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    let (l, r) = clip.channels();
    for i in 0..n {
        out.extend_from_slice(&l[i].to_le_bytes());
        out.extend_from_slice(&r[i].to_le_bytes());
    }

    let mut file = fs::File::create(path).map_err(|e| AudioError::io(path, e))?;
    file.write_all(&out).map_err(|e| AudioError::io(path, e))?;
    Ok(())
}
