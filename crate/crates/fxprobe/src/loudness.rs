//! Integrated loudness (ITU-R BS.1770-4) and loudness normalization.
//!
//! K-weighting runs as the published two-stage biquad cascade with the 48 kHz
//! coefficient set verbatim; since every clip in this pipeline is 48 kHz no
//! filter redesign is needed. Measurement gates 400 ms blocks at 75% overlap:
//! absolute gate at -70 LUFS, then a relative gate 10 LU below the mean of
//! the surviving blocks.

use crate::AudioClip;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum LoudnessError {
    #[error("clip too short for a 400 ms gating block: {got} samples, need {need}")]
    TooShort { got: usize, need: usize },
    #[error("unsupported sample rate {0} (loudness filter is defined at 48000)")]
    UnsupportedRate(u32),
    #[error("cannot normalize silence (loudness is -inf)")]
    Silent,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LoudnessReport {
    /// Gated integrated loudness; f64::NEG_INFINITY only for silence.
    pub integrated_lufs: f64,
    /// Blocks surviving both gates.
    pub gated_block_count: usize,
}

/// Target used by the rendering pipeline when a config does not override it.
pub const DEFAULT_TARGET_LUFS: f64 = -23.0;

const RATE: u32 = 48_000;
const BLOCK: usize = (RATE as usize) * 2 / 5; // 400 ms
const HOP: usize = (RATE as usize) / 10; // 100 ms (75% overlap)
const ABSOLUTE_GATE_LUFS: f64 = -70.0;

// BS.1770-4 stage 1 (high-shelf) and stage 2 (high-pass) at 48 kHz.
const STAGE1_B: [f64; 3] = [1.53512485958697, -2.69169618940638, 1.19839281085285];
const STAGE1_A: [f64; 2] = [-1.69065929318241, 0.73248077421585];
const STAGE2_B: [f64; 3] = [1.0, -2.0, 1.0];
const STAGE2_A: [f64; 2] = [-1.99004745483398, 0.99007225036621];

fn biquad(input: &[f64], b: &[f64; 3], a: &[f64; 2]) -> Vec<f64> {
    let mut out = Vec::with_capacity(input.len());
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    for &x in input {
        let y = b[0] * x + b[1] * x1 + b[2] * x2 - a[0] * y1 - a[1] * y2;
        x2 = x1;
        x1 = x;
        y2 = y1;
        y1 = y;
        out.push(y);
    }
    out
}

fn k_weight(channel: &[f32]) -> Vec<f64> {
    let x: Vec<f64> = channel.iter().map(|&v| f64::from(v)).collect();
    biquad(&biquad(&x, &STAGE1_B, &STAGE1_A), &STAGE2_B, &STAGE2_A)
}

fn block_loudness(power: f64) -> f64 {
    if power > 0.0 {
        -0.691 + 10.0 * power.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Gated integrated loudness of a stereo clip.
pub fn integrated_loudness(clip: &AudioClip) -> Result<LoudnessReport, LoudnessError> {
    if clip.sample_rate() != RATE {
        return Err(LoudnessError::UnsupportedRate(clip.sample_rate()));
    }
    if clip.len() < BLOCK {
        return Err(LoudnessError::TooShort {
            got: clip.len(),
            need: BLOCK,
        });
    }

    let weighted = [k_weight(clip.channel(0)), k_weight(clip.channel(1))];
    let n_blocks = (clip.len() - BLOCK) / HOP + 1;

    // Per-block power: per-channel mean square, channels summed at unity
    // weight (no surround channels here).
    let mut powers = Vec::with_capacity(n_blocks);
    for j in 0..n_blocks {
        let start = j * HOP;
        let mut power = 0.0;
        for w in &weighted {
            let seg = &w[start..start + BLOCK];
            power += seg.iter().map(|&v| v * v).sum::<f64>() / BLOCK as f64;
        }
        powers.push(power);
    }

    let absolute: Vec<f64> = powers
        .iter()
        .copied()
        .filter(|&p| block_loudness(p) > ABSOLUTE_GATE_LUFS)
        .collect();
    if absolute.is_empty() {
        return Ok(LoudnessReport {
            integrated_lufs: f64::NEG_INFINITY,
            gated_block_count: 0,
        });
    }

    let mean_power = absolute.iter().sum::<f64>() / absolute.len() as f64;
    let relative_gate = block_loudness(mean_power) - 10.0;
    let gated: Vec<f64> = absolute
        .into_iter()
        .filter(|&p| block_loudness(p) > relative_gate)
        .collect();
    debug_assert!(!gated.is_empty(), "relative gate removed every block");

    let gated_mean = gated.iter().sum::<f64>() / gated.len() as f64;
    Ok(LoudnessReport {
        integrated_lufs: block_loudness(gated_mean),
        gated_block_count: gated.len(),
    })
}

/// Apply the single gain that brings the clip to `target_lufs`.
pub fn normalize_loudness(clip: &AudioClip, target_lufs: f64) -> Result<AudioClip, LoudnessError> {
    let report = integrated_loudness(clip)?;
    if !report.integrated_lufs.is_finite() {
        return Err(LoudnessError::Silent);
    }
    let gain_db = target_lufs - report.integrated_lufs;
    Ok(clip.scaled(10f64.powf(gain_db / 20.0)))
}
