//! Windowed-sinc sample-rate conversion.
//!
//! 64-tap Kaiser windowed sinc interpolation, beta 8.6, lowpass cutoff at
//! min(1, ratio) of the input Nyquist. The kernel is evaluated per output
//! sample at the exact fractional input position and normalized by its own
//! sum so DC passes at unity regardless of phase.

use crate::dsp::{bessel_i0, sinc};

const TAPS: usize = 64;
const KAISER_BETA: f64 = 8.6;

fn kaiser(x: f64, half_width: f64) -> f64 {
    let t = x / half_width;
    if t.abs() > 1.0 {
        return 0.0;
    }
    bessel_i0(KAISER_BETA * (1.0 - t * t).sqrt()) / bessel_i0(KAISER_BETA)
}

/// Resample by an arbitrary ratio of output rate to input rate.
pub fn resample_by_ratio(input: &[f32], ratio: f64) -> Vec<f32> {
    assert!(ratio.is_finite() && ratio > 0.0, "ratio must be positive");
    if input.is_empty() {
        return Vec::new();
    }
    let out_len = ((input.len() as f64) * ratio).round() as usize;
    let cutoff = ratio.min(1.0);
    let half = TAPS as f64 / 2.0;

    let mut out = Vec::with_capacity(out_len);
    for j in 0..out_len {
        let center = j as f64 / ratio;
        let first = (center - half).ceil() as isize;
        let last = (center + half).floor() as isize;
        let mut acc = 0.0f64;
        let mut norm = 0.0f64;
        for i in first..=last {
            let x = i as f64 - center;
            let w = cutoff * sinc(cutoff * x) * kaiser(x, half);
            norm += w;
            if i >= 0 && (i as usize) < input.len() {
                acc += w * f64::from(input[i as usize]);
            }
        }
        out.push(if norm.abs() > 0.0 { (acc / norm) as f32 } else { 0.0 });
    }
    out
}

/// Resample between explicit sample rates.
pub fn resample(input: &[f32], from_rate: u32, to_rate: u32) -> Vec<f32> {
    assert!(from_rate > 0 && to_rate > 0, "rates must be positive");
    if from_rate == to_rate {
        return input.to_vec();
    }
    resample_by_ratio(input, f64::from(to_rate) / f64::from(from_rate))
}
