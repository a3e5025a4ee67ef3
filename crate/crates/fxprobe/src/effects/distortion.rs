//! Waveshaping distortion: y = tanh(g*x), g = 10^(drive_db/20).

use super::clip_from_f64;
use crate::audio_io::AudioClip;

// Largest f32 below 1.0; keeps the output strictly inside (-1, 1) even after
// the f64 tanh rounds to 1.0f32 at extreme drive.
const CEILING: f64 = 0.999_999_94;

pub(super) fn apply(clip: &AudioClip, drive_db: f64) -> AudioClip {
    let gain = 10f64.powf(drive_db / 20.0);
    let shape = |ch: &[f32]| {
        ch.iter()
            .map(|&x| (gain * f64::from(x)).tanh().clamp(-CEILING, CEILING))
            .collect()
    };
    clip_from_f64(shape(clip.channel(0)), shape(clip.channel(1)), clip.sample_rate())
}
