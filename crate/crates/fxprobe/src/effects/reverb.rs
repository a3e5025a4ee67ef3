//! Freeverb-topology reverb: per channel 8 parallel lowpass-feedback combs
//! into 4 series allpasses, right channel delays offset by +23 samples for
//! stereo spread. Comb/allpass tunings are the 44.1 kHz originals rescaled
//! to 48 kHz.

use super::clip_from_f64;
use crate::audio_io::AudioClip;

const COMB_TUNINGS_44K: [usize; 8] = [1116, 1188, 1277, 1356, 1422, 1491, 1557, 1617];
const ALLPASS_TUNINGS_44K: [usize; 4] = [556, 441, 341, 225];
const STEREO_SPREAD: usize = 23;
const INPUT_GAIN: f64 = 0.015;
const ALLPASS_FEEDBACK: f64 = 0.5;

fn scaled(delay_44k: usize, fs: f64) -> usize {
    (delay_44k as f64 * fs / 44_100.0).round() as usize
}

struct Comb {
    buf: Vec<f64>,
    idx: usize,
    store: f64,
    feedback: f64,
    damp: f64,
}

impl Comb {
    fn new(len: usize, feedback: f64, damp: f64) -> Self {
        Comb {
            buf: vec![0.0; len],
            idx: 0,
            store: 0.0,
            feedback,
            damp,
        }
    }

    fn tick(&mut self, input: f64) -> f64 {
        let out = self.buf[self.idx];
        self.store = out * (1.0 - self.damp) + self.store * self.damp;
        self.buf[self.idx] = input + self.store * self.feedback;
        self.idx = (self.idx + 1) % self.buf.len();
        out
    }
}

struct Allpass {
    buf: Vec<f64>,
    idx: usize,
}

impl Allpass {
    fn new(len: usize) -> Self {
        Allpass {
            buf: vec![0.0; len],
            idx: 0,
        }
    }

    fn tick(&mut self, input: f64) -> f64 {
        let delayed = self.buf[self.idx];
        self.buf[self.idx] = input + delayed * ALLPASS_FEEDBACK;
        self.idx = (self.idx + 1) % self.buf.len();
        delayed - input
    }
}

struct ReverbChannel {
    combs: Vec<Comb>,
    allpasses: Vec<Allpass>,
}

impl ReverbChannel {
    fn new(fs: f64, offset: usize, feedback: f64, damp: f64) -> Self {
        ReverbChannel {
            combs: COMB_TUNINGS_44K
                .iter()
                .map(|&d| Comb::new(scaled(d, fs) + offset, feedback, damp))
                .collect(),
            allpasses: ALLPASS_TUNINGS_44K
                .iter()
                .map(|&d| Allpass::new(scaled(d, fs) + offset))
                .collect(),
        }
    }

    fn tick(&mut self, input: f64) -> f64 {
        let mut acc = 0.0;
        for comb in &mut self.combs {
            acc += comb.tick(input);
        }
        for ap in &mut self.allpasses {
            acc = ap.tick(acc);
        }
        acc
    }
}

pub(super) fn apply(
    clip: &AudioClip,
    room_size: f64,
    damping: f64,
    wet: f64,
    dry: f64,
    width: f64,
) -> AudioClip {
    let fs = f64::from(clip.sample_rate());
    let feedback = 0.28 * room_size + 0.7;
    let damp = 0.4 * damping;
    let mut left = ReverbChannel::new(fs, 0, feedback, damp);
    let mut right = ReverbChannel::new(fs, STEREO_SPREAD, feedback, damp);

    let wet1 = wet * (width / 2.0 + 0.5);
    let wet2 = wet * ((1.0 - width) / 2.0);

    let (xl, xr) = clip.channels();
    let n = clip.len();
    let mut out_l = Vec::with_capacity(n);
    let mut out_r = Vec::with_capacity(n);
    for i in 0..n {
        // Both banks are fed the same downmixed input.
        let input = (f64::from(xl[i]) + f64::from(xr[i])) * INPUT_GAIN;
        let wl = left.tick(input);
        let wr = right.tick(input);
        out_l.push(dry * f64::from(xl[i]) + wet1 * wl + wet2 * wr);
        out_r.push(dry * f64::from(xr[i]) + wet1 * wr + wet2 * wl);
    }
    clip_from_f64(out_l, out_r, clip.sample_rate())
}

#[cfg(test)]
mod tests {
    use crate::audio_io::AudioClip;
    use crate::effects::{apply_effect, EffectId, EffectSpec};
    use crate::SAMPLE_RATE;

    fn impulse_response(room_size: f64, seconds: f64) -> AudioClip {
        let n = (seconds * f64::from(SAMPLE_RATE)) as usize;
        let mut x = vec![0.0f32; n];
        x[0] = 1.0;
        let clip = AudioClip::from_mono(x, SAMPLE_RATE).unwrap();
        let spec = EffectSpec::new(EffectId::Rvb)
            .set("room_size", room_size)
            .set("wet", 1.0)
            .set("dry", 0.0);
        apply_effect(&clip, &spec).unwrap()
    }

    /// T20-style RT60 estimate from backward-integrated energy decay.
    fn rt60(h: &[f32]) -> f64 {
        let mut edc = vec![0.0f64; h.len() + 1];
        for i in (0..h.len()).rev() {
            edc[i] = edc[i + 1] + f64::from(h[i]).powi(2);
        }
        let total = edc[0];
        let time_at = |db: f64| {
            let target = total * 10f64.powf(db / 10.0);
            edc.iter().position(|&e| e <= target).unwrap() as f64 / f64::from(SAMPLE_RATE)
        };
        3.0 * (time_at(-25.0) - time_at(-5.0))
    }

    #[test]
    fn decay_time_grows_with_room_size() {
        let times: Vec<f64> = [0.2, 0.5, 0.8]
            .iter()
            .map(|&room| rt60(impulse_response(room, 4.0).channel(0)))
            .collect();
        assert!(
            times[0] < times[1] && times[1] < times[2],
            "RT60s not increasing: {times:?}"
        );
        assert!(times[0] > 0.05, "implausibly short tail: {times:?}");
    }

    #[test]
    fn first_reflection_lands_at_the_shortest_comb_delay() {
        let ir = impulse_response(0.8, 1.0);
        // 1116 samples at 44.1 kHz is 1215 at 48 kHz; the right channel adds
        // the 23-sample spread.
        for (ch, first) in [(0, 1215), (1, 1215 + 23)] {
            let y = ir.channel(ch);
            assert!(y[..first].iter().all(|&v| v == 0.0), "channel {ch} early energy");
            assert!(y[first] != 0.0, "channel {ch} missing first reflection");
        }
    }

    #[test]
    fn dry_only_settings_pass_input_through() {
        let clip = crate::audio_io::synth_source(crate::audio_io::Instrument::GuitarLike, 8, 0)
            .unwrap();
        let spec = EffectSpec::new(EffectId::Rvb).set("wet", 0.0).set("dry", 1.0);
        let out = apply_effect(&clip, &spec).unwrap();
        assert_eq!(out.channel(0), clip.channel(0));
        assert_eq!(out.channel(1), clip.channel(1));
    }

    #[test]
    fn width_zero_collapses_wet_field_to_mono() {
        let n = SAMPLE_RATE as usize;
        let mut x = vec![0.0f32; n];
        x[0] = 1.0;
        // Stereo-asymmetric input: impulse on the left only.
        let clip = AudioClip::new(x, vec![0.0f32; n], SAMPLE_RATE).unwrap();
        let spec = EffectSpec::new(EffectId::Rvb)
            .set("wet", 1.0)
            .set("dry", 0.0)
            .set("width", 0.0);
        let out = apply_effect(&clip, &spec).unwrap();
        for i in 0..n {
            let (a, b) = (out.channel(0)[i], out.channel(1)[i]);
            assert!((a - b).abs() <= 1e-9, "wet field not mono at {i}: {a} vs {b}");
        }
    }
}
