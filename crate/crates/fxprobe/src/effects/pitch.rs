//! Phase-vocoder pitch shifter.
//!
//! Shift by s semitones = time-stretch by r = 2^(s/12), then resample the
//! stretched signal back to the original duration, which transposes the
//! spectrum by r. The stretch keeps the analysis hop at 512 and moves the
//! synthesis hop to round(512*r); the resampler uses the exact realized
//! ratio so the transposition error stays at the rounding level (< 0.05%).

use super::clip_from_f64;
use crate::audio_io::{resample_by_ratio, AudioClip};
use crate::dsp::{fft_forward, fft_inverse, hann_window, princarg};
use rustfft::num_complex::Complex64;
use std::f64::consts::TAU;

const FFT_SIZE: usize = 2048;
const ANALYSIS_HOP: usize = 512;

fn stretch(x: &[f32], hs: usize) -> Vec<f64> {
    let window = hann_window(FFT_SIZE);
    let n_frames = x.len() / ANALYSIS_HOP + 1;

    let frame = |k: usize| {
        let start = k * ANALYSIS_HOP;
        let mut buf = vec![Complex64::default(); FFT_SIZE];
        for (i, b) in buf.iter_mut().enumerate() {
            let s = x.get(start + i).copied().unwrap_or(0.0);
            *b = Complex64::new(f64::from(s) * window[i], 0.0);
        }
        fft_forward(&mut buf);
        buf
    };

    let out_len = (n_frames - 1) * hs + FFT_SIZE;
    let mut acc = vec![0.0f64; out_len];
    let mut norm = vec![0.0f64; out_len];

    let mut prev_phase = vec![0.0f64; FFT_SIZE];
    let mut synth_phase = vec![0.0f64; FFT_SIZE];
    for k in 0..n_frames {
        let spec = frame(k);
        let mut out_spec = vec![Complex64::default(); FFT_SIZE];
        for (bin, s) in spec.iter().enumerate() {
            let phase = s.arg();
            if k == 0 {
                synth_phase[bin] = phase;
            } else {
                // Instantaneous frequency from the phase advance over the
                // analysis hop, re-integrated over the synthesis hop.
                let expected = TAU * bin as f64 * ANALYSIS_HOP as f64 / FFT_SIZE as f64;
                let deviation = princarg(phase - prev_phase[bin] - expected);
                let freq = TAU * bin as f64 / FFT_SIZE as f64 + deviation / ANALYSIS_HOP as f64;
                synth_phase[bin] += freq * hs as f64;
            }
            prev_phase[bin] = phase;
            out_spec[bin] = Complex64::from_polar(s.norm(), synth_phase[bin]);
        }
        fft_inverse(&mut out_spec);
        let start = k * hs;
        for i in 0..FFT_SIZE {
            acc[start + i] += out_spec[i].re * window[i];
            norm[start + i] += window[i] * window[i];
        }
    }

    for (a, &w) in acc.iter_mut().zip(&norm) {
        if w > 1e-9 {
            *a /= w;
        }
    }
    acc
}

fn fit_to_len(mut v: Vec<f32>, n: usize) -> Vec<f64> {
    v.resize(n, 0.0);
    v.into_iter().map(f64::from).collect()
}

pub(super) fn apply(clip: &AudioClip, semitones: f64) -> AudioClip {
    let ratio = 2f64.powf(semitones / 12.0);
    let hs = ((ANALYSIS_HOP as f64 * ratio).round() as usize).max(1);
    let realized = hs as f64 / ANALYSIS_HOP as f64;

    let run = |ch: &[f32]| {
        let stretched: Vec<f32> = stretch(ch, hs).into_iter().map(|v| v as f32).collect();
        fit_to_len(resample_by_ratio(&stretched, 1.0 / realized), ch.len())
    };
    clip_from_f64(run(clip.channel(0)), run(clip.channel(1)), clip.sample_rate())
}
