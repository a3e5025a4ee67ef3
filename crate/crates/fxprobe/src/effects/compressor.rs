//! Feed-forward compressor with a stereo-linked peak detector.
//!
//! The detector smooths the per-sample rectified max over channels with
//! one-pole attack/release ballistics in the linear domain, so on steady
//! tones it hugs the crest instead of sagging into the zero crossings. The
//! static curve out = thr + (in - thr)/ratio is applied to the detector
//! level in dB and the resulting gain drives both channels equally.

use super::clip_from_f64;
use crate::audio_io::AudioClip;

const SILENCE_DB: f64 = -200.0;

pub(super) fn apply(
    clip: &AudioClip,
    threshold_db: f64,
    ratio: f64,
    attack_ms: f64,
    release_ms: f64,
) -> AudioClip {
    let fs = f64::from(clip.sample_rate());
    let attack_coef = (-1.0 / (fs * attack_ms * 1e-3)).exp();
    let release_coef = (-1.0 / (fs * release_ms * 1e-3)).exp();

    let (l, r) = clip.channels();
    let n = clip.len();
    let mut out_l = Vec::with_capacity(n);
    let mut out_r = Vec::with_capacity(n);
    let mut env = 0.0f64;
    for i in 0..n {
        let level = f64::from(l[i].abs().max(r[i].abs()));
        let coef = if level > env { attack_coef } else { release_coef };
        env = coef * env + (1.0 - coef) * level;

        let env_db = if env > 0.0 {
            (20.0 * env.log10()).max(SILENCE_DB)
        } else {
            SILENCE_DB
        };
        let out_db = if env_db <= threshold_db {
            env_db
        } else {
            threshold_db + (env_db - threshold_db) / ratio
        };
        let gain = 10f64.powf((out_db - env_db) / 20.0);
        out_l.push(gain * f64::from(l[i]));
        out_r.push(gain * f64::from(r[i]));
    }
    clip_from_f64(out_l, out_r, clip.sample_rate())
}
