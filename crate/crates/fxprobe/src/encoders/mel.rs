//! Log-mel spectrogram encoder.
//!
//! Mono mix -> centered STFT (Hann window, reflection padding, exactly
//! N/hop frames) -> Slaney-style mel filterbank -> log10(power + floor).
//! At the defaults (2048/512, 32 mels) a corpus clip becomes a (512, 32)
//! sequence at 93.75 frames per second.
//!
//! Frame t is centered at t*hop + hop/2, so the frame grid tiles the clip
//! symmetrically: reversing the signal maps the grid onto itself, which
//! keeps time-averaged features quasi-invariant to reversal. A grid
//! anchored at t*hop would pair an extra end-of-clip frame against the
//! start frame and break that bound near loud clip edges.

use super::{EmbeddingSequence, EncoderError};
use crate::audio_io::AudioClip;
use crate::dsp::{fft_forward, hann_window};
use ndarray::Array2;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MelConfig {
    pub n_fft: usize,
    pub hop: usize,
    pub n_mels: usize,
    pub fmin_hz: f64,
    pub fmax_hz: f64,
    pub log_floor: f64,
}

impl Default for MelConfig {
    fn default() -> Self {
        MelConfig {
            n_fft: 2048,
            hop: 512,
            n_mels: 32,
            fmin_hz: 20.0,
            fmax_hz: 24_000.0,
            log_floor: 1e-8,
        }
    }
}

impl MelConfig {
    fn validate(&self, clip_len: usize, sample_rate: u32) -> Result<(), EncoderError> {
        let fail = |msg: String| Err(EncoderError::Config(msg));
        if self.n_fft < 16 {
            return fail(format!("n_fft = {} too small", self.n_fft));
        }
        if self.hop == 0 || self.hop > self.n_fft {
            return fail(format!("hop = {} must lie in [1, n_fft]", self.hop));
        }
        if clip_len == 0 || clip_len % self.hop != 0 {
            return fail(format!(
                "hop {} does not divide clip length {clip_len}",
                self.hop
            ));
        }
        if !(8..=256).contains(&self.n_mels) {
            return fail(format!("n_mels = {} outside [8, 256]", self.n_mels));
        }
        let nyquist = f64::from(sample_rate) / 2.0;
        if !(self.fmin_hz >= 0.0 && self.fmin_hz < self.fmax_hz && self.fmax_hz <= nyquist) {
            return fail(format!(
                "mel band [{}, {}] invalid for nyquist {nyquist}",
                self.fmin_hz, self.fmax_hz
            ));
        }
        if !(self.log_floor.is_finite() && self.log_floor > 0.0) {
            return fail(format!("log_floor = {} must be positive", self.log_floor));
        }
        Ok(())
    }
}

// Slaney mel scale: linear below 1 kHz, logarithmic above.
const F_SP: f64 = 200.0 / 3.0;
const MIN_LOG_HZ: f64 = 1000.0;
const MIN_LOG_MEL: f64 = MIN_LOG_HZ / F_SP;

fn hz_to_mel(hz: f64) -> f64 {
    if hz < MIN_LOG_HZ {
        hz / F_SP
    } else {
        MIN_LOG_MEL + (hz / MIN_LOG_HZ).ln() / LOG_STEP
    }
}

fn mel_to_hz(mel: f64) -> f64 {
    if mel < MIN_LOG_MEL {
        mel * F_SP
    } else {
        MIN_LOG_HZ * (LOG_STEP * (mel - MIN_LOG_MEL)).exp()
    }
}

const LOG_STEP: f64 = 0.06875177742094912; // ln(6.4) / 27

/// Center frequencies of the `n_mels` filters (the interior band points).
#[cfg(test)]
fn filter_centers_hz(cfg: &MelConfig) -> Vec<f64> {
    band_points(cfg)[1..=cfg.n_mels].to_vec()
}

fn band_points(cfg: &MelConfig) -> Vec<f64> {
    let lo = hz_to_mel(cfg.fmin_hz);
    let hi = hz_to_mel(cfg.fmax_hz);
    (0..cfg.n_mels + 2)
        .map(|i| mel_to_hz(lo + (hi - lo) * i as f64 / (cfg.n_mels + 1) as f64))
        .collect()
}

/// Triangular filters stored sparsely as (first FFT bin, weights). Slaney
/// area normalization: each triangle scaled by 2 / bandwidth.
struct Filterbank {
    filters: Vec<(usize, Vec<f64>)>,
}

impl Filterbank {
    fn build(cfg: &MelConfig, sample_rate: u32) -> Filterbank {
        let n_bins = cfg.n_fft / 2 + 1;
        let bin_hz = f64::from(sample_rate) / cfg.n_fft as f64;
        let pts = band_points(cfg);
        let filters = (0..cfg.n_mels)
            .map(|m| {
                let (lo, mid, hi) = (pts[m], pts[m + 1], pts[m + 2]);
                let norm = 2.0 / (hi - lo);
                let first = (lo / bin_hz).ceil().max(0.0) as usize;
                let last = ((hi / bin_hz).floor() as usize).min(n_bins - 1);
                let weights = (first..=last)
                    .map(|k| {
                        let f = k as f64 * bin_hz;
                        let rising = (f - lo) / (mid - lo);
                        let falling = (hi - f) / (hi - mid);
                        norm * rising.min(falling).max(0.0)
                    })
                    .collect();
                (first, weights)
            })
            .collect();
        Filterbank { filters }
    }

    fn apply(&self, power: &[f64]) -> Vec<f64> {
        self.filters
            .iter()
            .map(|(first, weights)| {
                weights
                    .iter()
                    .zip(&power[*first..])
                    .map(|(w, p)| w * p)
                    .sum()
            })
            .collect()
    }
}

/// Index into a signal of length `n` with reflection at the edges
/// (the boundary sample itself is not repeated).
fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let mut j = i.rem_euclid(period);
    if j >= n as isize {
        j = period - j;
    }
    j as usize
}

pub(super) fn encode(clip: &AudioClip, cfg: &MelConfig) -> Result<EmbeddingSequence, EncoderError> {
    cfg.validate(clip.len(), clip.sample_rate())?;
    let mono = clip.mono_mix();
    let n = mono.len();
    let n_frames = n / cfg.hop;
    let n_bins = cfg.n_fft / 2 + 1;
    let window = hann_window(cfg.n_fft);
    let bank = Filterbank::build(cfg, clip.sample_rate());
    let half = (cfg.n_fft / 2) as isize;

    let mut data = Array2::<f32>::zeros((n_frames, cfg.n_mels));
    let mut buf = vec![Complex64::default(); cfg.n_fft];
    let mut power = vec![0.0f64; n_bins];
    for t in 0..n_frames {
        let center = (t * cfg.hop + cfg.hop / 2) as isize;
        for (i, b) in buf.iter_mut().enumerate() {
            let idx = reflect(center - half + i as isize, n);
            *b = Complex64::new(mono[idx] * window[i], 0.0);
        }
        fft_forward(&mut buf);
        for (k, p) in power.iter_mut().enumerate() {
            *p = buf[k].norm_sqr();
        }
        for (m, v) in bank.apply(&power).into_iter().enumerate() {
            data[(t, m)] = (v + cfg.log_floor).log10() as f32;
        }
    }

    EmbeddingSequence::new(
        data,
        f64::from(clip.sample_rate()) / cfg.hop as f64,
        format!("mel{}", cfg.n_mels),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio_io::{synth_source, AudioClip, Instrument};
    use crate::encoders::{encode as encode_cfg, EncoderConfig};
    use crate::{CORPUS_CLIP_SAMPLES, SAMPLE_RATE};
    use std::f64::consts::TAU;

    #[test]
    fn corpus_clip_yields_512_by_32() {
        let clip = synth_source(Instrument::PianoLike, 13, 0).unwrap();
        let seq = encode_cfg(&clip, &EncoderConfig::default()).unwrap();
        assert_eq!((seq.frames(), seq.dims()), (512, 32));
        assert_eq!(seq.flattened_len(), 16_384);
        assert_eq!(seq.frame_rate_hz, 93.75);
        assert_eq!(seq.encoder_id, "mel32");
    }

    #[test]
    fn silence_hits_the_log_floor_everywhere() {
        let clip = AudioClip::from_mono(vec![0.0; CORPUS_CLIP_SAMPLES], SAMPLE_RATE).unwrap();
        let seq = encode_cfg(&clip, &EncoderConfig::default()).unwrap();
        for &v in seq.data.iter() {
            assert_eq!(v, -8.0);
        }
    }

    #[test]
    fn sine_peaks_in_the_filter_nearest_one_khz() {
        let samples: Vec<f32> = (0..CORPUS_CLIP_SAMPLES)
            .map(|i| (0.5 * (TAU * 1000.0 * i as f64 / f64::from(SAMPLE_RATE)).sin()) as f32)
            .collect();
        let clip = AudioClip::from_mono(samples, SAMPLE_RATE).unwrap();
        let cfg = MelConfig::default();
        let seq = encode(&clip, &cfg).unwrap();

        let centers = filter_centers_hz(&cfg);
        let nearest = (0..centers.len())
            .min_by(|&a, &b| {
                (centers[a] - 1000.0)
                    .abs()
                    .partial_cmp(&(centers[b] - 1000.0).abs())
                    .unwrap()
            })
            .unwrap();
        assert_eq!(nearest, 7, "center table changed: {centers:?}");

        for t in 2..seq.frames() - 2 {
            let row = seq.data.row(t);
            let argmax = (0..row.len())
                .max_by(|&a, &b| row[a].partial_cmp(&row[b]).unwrap())
                .unwrap();
            assert_eq!(argmax, nearest, "frame {t}");
        }
    }

    #[test]
    fn hop_must_divide_clip_length() {
        let clip = AudioClip::from_mono(vec![0.1; 48_000], SAMPLE_RATE).unwrap();
        let cfg = MelConfig {
            hop: 7,
            ..MelConfig::default()
        };
        assert!(matches!(
            encode(&clip, &cfg),
            Err(EncoderError::Config(_))
        ));
    }

    #[test]
    fn encoding_is_bitwise_deterministic() {
        let clip = synth_source(Instrument::GuitarLike, 13, 1).unwrap();
        let a = encode(&clip, &MelConfig::default()).unwrap();
        let b = encode(&clip, &MelConfig::default()).unwrap();
        assert_eq!(a.data, b.data);
    }

    #[test]
    fn mel_scale_round_trips() {
        for hz in [20.0, 440.0, 999.9, 1000.0, 4321.0, 24_000.0] {
            let back = mel_to_hz(hz_to_mel(hz));
            assert!((back - hz).abs() < 1e-6, "{hz} -> {back}");
        }
        // Linear region slope: 200/3 Hz per mel.
        assert!((hz_to_mel(200.0) - 3.0).abs() < 1e-12);
    }

    #[test]
    fn reflection_indexing_tiles_correctly() {
        assert_eq!(reflect(0, 5), 0);
        assert_eq!(reflect(-1, 5), 1);
        assert_eq!(reflect(-4, 5), 4);
        assert_eq!(reflect(4, 5), 4);
        assert_eq!(reflect(5, 5), 3);
        assert_eq!(reflect(8, 5), 0);
        assert_eq!(reflect(3, 1), 0);
    }
}
