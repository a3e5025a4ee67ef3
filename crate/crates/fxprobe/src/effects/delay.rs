//! Feedback delay: w[n] = x[n-D] + feedback*w[n-D], y = (1-mix)*x + mix*w.

use super::clip_from_f64;
use crate::audio_io::AudioClip;

fn process_channel(x: &[f32], d: usize, feedback: f64, mix: f64) -> Vec<f64> {
    let n = x.len();
    let mut wet = vec![0.0f64; n];
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        if i >= d {
            wet[i] = f64::from(x[i - d]) + feedback * wet[i - d];
        }
        out.push((1.0 - mix) * f64::from(x[i]) + mix * wet[i]);
    }
    out
}

pub(super) fn apply(clip: &AudioClip, delay_s: f64, feedback: f64, mix: f64) -> AudioClip {
    let d = (delay_s * f64::from(clip.sample_rate())).round() as usize;
    clip_from_f64(
        process_channel(clip.channel(0), d, feedback, mix),
        process_channel(clip.channel(1), d, feedback, mix),
        clip.sample_rate(),
    )
}

#[cfg(test)]
mod tests {
    use crate::audio_io::AudioClip;
    use crate::effects::{apply_effect, EffectId, EffectSpec};
    use crate::SAMPLE_RATE;

    #[test]
    fn impulse_produces_geometric_echo_train() {
        let n = SAMPLE_RATE as usize * 2;
        let mut x = vec![0.0f32; n];
        x[0] = 1.0;
        let clip = AudioClip::from_mono(x, SAMPLE_RATE).unwrap();
        let spec = EffectSpec::new(EffectId::Dly)
            .set("feedback", 0.5)
            .set("mix", 1.0);
        let out = apply_effect(&clip, &spec).unwrap();
        let d = SAMPLE_RATE as usize / 2;
        let y = out.channel(0);
        assert_eq!(y[0], 0.0);
        assert!((y[d] - 1.0).abs() < 1e-7);
        assert!((y[2 * d] - 0.5).abs() < 1e-7);
        assert!((y[3 * d] - 0.25).abs() < 1e-7);
        assert_eq!(y[d + 1], 0.0);
    }

    #[test]
    fn default_mix_halves_dry_and_adds_late_copy() {
        let n = SAMPLE_RATE as usize;
        let mut x = vec![0.0f32; n];
        x[17] = 0.8;
        let clip = AudioClip::from_mono(x, SAMPLE_RATE).unwrap();
        let out = apply_effect(&clip, &EffectSpec::new(EffectId::Dly)).unwrap();
        let d = SAMPLE_RATE as usize / 2;
        assert!((out.channel(0)[17] - 0.4).abs() < 1e-7);
        assert!((out.channel(0)[17 + d] - 0.4).abs() < 1e-7);
    }
}
