//! One-pole 6 dB/oct filters.
//!
//! LPF: y[n] = (1-a)*x[n] + a*y[n-1] with a = exp(-2*pi*fc/fs).
//! HPF: y[n] = a*(y[n-1] + x[n] - x[n-1]), with the pole solved from the
//! half-power condition so |H(fc)|^2 = 1/2 exactly at every cutoff: with
//! c = cos(2*pi*fc/fs), a = 1/(c + sqrt(c^2 - 4c + 3)). The exp mapping used
//! by the lowpass would put the highpass -3 dB point well below fc.

use super::clip_from_f64;
use crate::audio_io::AudioClip;
use std::f64::consts::TAU;

fn one_pole_lowpass(x: &[f32], a: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let mut prev = 0.0f64;
    for &v in x {
        prev = (1.0 - a) * f64::from(v) + a * prev;
        y.push(prev);
    }
    y
}

fn one_pole_highpass(x: &[f32], a: f64) -> Vec<f64> {
    let mut y = Vec::with_capacity(x.len());
    let mut prev_y = 0.0f64;
    let mut prev_x = 0.0f64;
    for &v in x {
        let xi = f64::from(v);
        prev_y = a * (prev_y + xi - prev_x);
        prev_x = xi;
        y.push(prev_y);
    }
    y
}

pub(super) fn apply_lowpass(clip: &AudioClip, cutoff_hz: f64) -> AudioClip {
    let a = (-TAU * cutoff_hz / f64::from(clip.sample_rate())).exp();
    clip_from_f64(
        one_pole_lowpass(clip.channel(0), a),
        one_pole_lowpass(clip.channel(1), a),
        clip.sample_rate(),
    )
}

pub(super) fn apply_highpass(clip: &AudioClip, cutoff_hz: f64) -> AudioClip {
    let c = (TAU * cutoff_hz / f64::from(clip.sample_rate())).cos();
    let a = 1.0 / (c + (c * c - 4.0 * c + 3.0).sqrt());
    clip_from_f64(
        one_pole_highpass(clip.channel(0), a),
        one_pole_highpass(clip.channel(1), a),
        clip.sample_rate(),
    )
}
