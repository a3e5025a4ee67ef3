//! Chorus: the dry signal mixed with a copy behind a slowly modulated
//! fractional delay, y = (1-mix)*x + mix*x(t - d(t)) with
//! d(t) = d0*(1 + depth*sin(2*pi*rate*t)).

use super::clip_from_f64;
use crate::audio_io::AudioClip;
use std::f64::consts::TAU;

fn process_channel(x: &[f32], rate_hz: f64, depth: f64, d0: f64, feedback: f64, mix: f64, fs: f64) -> Vec<f64> {
    let n = x.len();
    // Delay-line contents; equals the input when feedback is zero.
    let mut line = vec![0.0f64; n];
    let mut out = vec![0.0f64; n];
    for i in 0..n {
        let d = d0 * (1.0 + depth * (TAU * rate_hz * i as f64 / fs).sin());
        let pos = i as f64 - d;
        let delayed = if pos < 0.0 {
            0.0
        } else {
            let j = pos.floor() as usize;
            let frac = pos - j as f64;
            let a = line.get(j).copied().unwrap_or(0.0);
            let b = line.get(j + 1).copied().unwrap_or(0.0);
            // Reading at or past the write head would need future samples;
            // the minimum delay d0*(1-depth) keeps pos behind i.
            debug_assert!(j + 1 <= i || frac == 0.0);
            a + frac * (b - a)
        };
        let xi = f64::from(x[i]);
        line[i] = xi + feedback * delayed;
        out[i] = (1.0 - mix) * xi + mix * delayed;
    }
    out
}

pub(super) fn apply(
    clip: &AudioClip,
    rate_hz: f64,
    depth: f64,
    centre_delay_ms: f64,
    feedback: f64,
    mix: f64,
) -> AudioClip {
    let fs = f64::from(clip.sample_rate());
    let d0 = centre_delay_ms * 1e-3 * fs;
    let run = |ch: &[f32]| process_channel(ch, rate_hz, depth, d0, feedback, mix, fs);
    clip_from_f64(run(clip.channel(0)), run(clip.channel(1)), clip.sample_rate())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::{synth_source, Instrument};
    use crate::effects::{apply_effect, EffectId, EffectSpec};

    #[test]
    fn mix_zero_is_identity_within_rounding() {
        let clip = synth_source(Instrument::GuitarLike, 3, 0).unwrap();
        let spec = EffectSpec::new(EffectId::Chs).set("mix", 0.0);
        let out = apply_effect(&clip, &spec).unwrap();
        for (a, b) in out.channel(0).iter().zip(clip.channel(0)) {
            assert!((a - b).abs() <= 1e-6, "{a} vs {b}");
        }
    }

    #[test]
    fn zero_depth_full_mix_is_a_pure_delay() {
        // depth 0 freezes the modulation, centre delay 7 ms = 336 samples
        // exactly, so the wet-only output is the input shifted by 336.
        let clip = synth_source(Instrument::PianoLike, 3, 1).unwrap();
        let spec = EffectSpec::new(EffectId::Chs)
            .set("depth", 0.0)
            .set("mix", 1.0);
        let out = apply_effect(&clip, &spec).unwrap();
        let shift = 336;
        for i in shift..2000 + shift {
            let got = out.channel(0)[i];
            let want = clip.channel(0)[i - shift];
            assert!((got - want).abs() <= 1e-6, "at {i}: {got} vs {want}");
        }
    }

    #[test]
    fn modulation_changes_the_wet_copy_over_time() {
        let clip = synth_source(Instrument::GuitarLike, 3, 2).unwrap();
        let moving = apply_effect(&clip, &EffectSpec::new(EffectId::Chs)).unwrap();
        let frozen = apply_effect(
            &clip,
            &EffectSpec::new(EffectId::Chs).set("depth", 0.0),
        )
        .unwrap();
        assert_ne!(moving.channel(0), frozen.channel(0));
    }
}
