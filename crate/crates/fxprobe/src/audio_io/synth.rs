//! Self-contained synthetic corpus: Karplus-Strong plucked strings and
//! additive piano tones, mixed into fixed-length source clips.
//!
//! Everything is a pure function of (seed, instrument, index), so corpus
//! generation is bitwise reproducible across runs and machines.

use super::manifest::{assign_splits, CorpusManifest, Instrument, ManifestEntry};
use super::wav::write_wav;
use super::{AudioClip, AudioError};
use crate::effects::EffectId;
use crate::rng::derive_rng;
use crate::{CORPUS_CLIP_SAMPLES, SAMPLE_RATE};
use rand::Rng;
use std::path::Path;

// MIDI ranges: E2-E5 for the plucked strings, C3-C5 for the piano tones.
const GUITAR_MIDI: (u8, u8) = (40, 76);
const PIANO_MIDI: (u8, u8) = (48, 72);

// Long rings and a dense note count keep every clip's spectrum populated
// over most frames; sparse decaying clips leave so many floor-level mel
// frames that per-clip feature variance swamps the effect signatures.
const GUITAR_T60_S: f64 = 5.0;
const PIANO_TAU0_S: f64 = 2.5;
const PIANO_ATTACK_S: f64 = 0.005;

const NOTES_PER_CLIP: (u32, u32) = (32, 40);
const MAX_NOTE_S: f64 = 5.0;
const PEAK_TARGET: f64 = 0.7;

fn midi_to_hz(midi: f64) -> f64 {
    440.0 * 2f64.powf((midi - 69.0) / 12.0)
}

/// Karplus-Strong pluck: a noise burst fed through the classic averaging
/// delay-line loop, with loop gain set so the feedback loses 60 dB over
/// `t60_s` seconds.
pub fn karplus_strong_note(
    freq_hz: f64,
    n_samples: usize,
    t60_s: f64,
    rng: &mut impl Rng,
) -> Vec<f32> {
    assert!(freq_hz > 0.0 && t60_s > 0.0);
    let fs = f64::from(SAMPLE_RATE);
    // The averaging filter adds half a sample of delay to the loop.
    let delay = ((fs / freq_hz - 0.5).round() as usize).max(2);
    // The gain acts once per loop trip of delay + 0.5 samples, so the trip
    // length scales the per-trip decay exponent.
    let decay = 0.001f64.powf((delay as f64 + 0.5) / (fs * t60_s));

    let burst: Vec<f64> = (0..delay.min(n_samples))
        .map(|_| rng.gen_range(-1.0..1.0))
        .collect();

    let mut y = vec![0.0f64; n_samples];
    for i in 0..n_samples {
        let excite = if i < burst.len() { burst[i] } else { 0.0 };
        let a = if i >= delay { y[i - delay] } else { 0.0 };
        let b = if i >= delay + 1 { y[i - delay - 1] } else { 0.0 };
        y[i] = excite + decay * 0.5 * (a + b);
    }
    y.into_iter().map(|v| v as f32).collect()
}

/// Additive piano tone: partials at f, 2f, 3f, 4f with amplitudes 1, 0.5,
/// 0.25, 0.125, each decaying with time constant tau0/k, under a short
/// linear attack ramp.
pub fn piano_note(freq_hz: f64, n_samples: usize) -> Vec<f32> {
    assert!(freq_hz > 0.0);
    let fs = f64::from(SAMPLE_RATE);
    let mut out = vec![0.0f64; n_samples];
    for (k, amp) in [(1.0, 1.0), (2.0, 0.5), (3.0, 0.25), (4.0, 0.125)] {
        let w = 2.0 * std::f64::consts::PI * k * freq_hz / fs;
        let rate = k / (PIANO_TAU0_S * fs);
        for (i, o) in out.iter_mut().enumerate() {
            let t = i as f64;
            *o += amp * (-rate * t).exp() * (w * t).sin();
        }
    }
    let attack = PIANO_ATTACK_S * fs;
    for (i, o) in out.iter_mut().enumerate() {
        let ramp = (i as f64 / attack).min(1.0);
        *o *= ramp;
    }
    out.into_iter().map(|v| v as f32).collect()
}

/// One deterministic source clip: a dense sequence of notes at random
/// onsets and pitches, peak-normalized to 0.7.
pub fn synth_source(instrument: Instrument, seed: u64, index: u64) -> Result<AudioClip, AudioError> {
    let (midi_range, purpose) = match instrument {
        Instrument::GuitarLike => (GUITAR_MIDI, "synth/guitar-like"),
        Instrument::PianoLike => (PIANO_MIDI, "synth/piano-like"),
        Instrument::External => {
            return Err(AudioError::InvalidArgument(
                "cannot synthesize an external clip".into(),
            ))
        }
    };
    let mut rng = derive_rng(seed, purpose, index);
    let n = CORPUS_CLIP_SAMPLES;
    let max_note = (MAX_NOTE_S * f64::from(SAMPLE_RATE)) as usize;

    let mut mix = vec![0.0f64; n];
    let n_notes = rng.gen_range(NOTES_PER_CLIP.0..=NOTES_PER_CLIP.1);
    for _ in 0..n_notes {
        let onset = rng.gen_range(0..n * 17 / 20);
        let midi = rng.gen_range(midi_range.0..=midi_range.1);
        let gain = rng.gen_range(0.4..1.0);
        let dur = (n - onset).min(max_note);
        let note = match instrument {
            Instrument::GuitarLike => {
                karplus_strong_note(midi_to_hz(f64::from(midi)), dur, GUITAR_T60_S, &mut rng)
            }
            Instrument::PianoLike => piano_note(midi_to_hz(f64::from(midi)), dur),
            Instrument::External => unreachable!(),
        };
        for (i, s) in note.iter().enumerate() {
            mix[onset + i] += gain * f64::from(*s);
        }
    }

    let peak = mix.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak > 0.0 {
        let scale = PEAK_TARGET / peak;
        for v in &mut mix {
            *v *= scale;
        }
    }
    AudioClip::from_mono(mix.into_iter().map(|v| v as f32).collect(), SAMPLE_RATE)
}

fn source_ids(n_per_instrument: usize) -> Vec<(String, Instrument, u64)> {
    let mut out = Vec::with_capacity(n_per_instrument * 2);
    for (prefix, instrument) in [
        ("guitar", Instrument::GuitarLike),
        ("piano", Instrument::PianoLike),
    ] {
        for i in 0..n_per_instrument {
            out.push((format!("{prefix}-{i:03}"), instrument, i as u64));
        }
    }
    out
}

/// Enumerate the source-level manifest without touching the filesystem.
/// Sources carry the clean effect tag; effect variants are added at render
/// time and inherit the source's split.
pub fn synth_manifest(n_per_instrument: usize, seed: u64) -> CorpusManifest {
    let guitar_splits = assign_splits(n_per_instrument, seed, Instrument::GuitarLike.label());
    let piano_splits = assign_splits(n_per_instrument, seed, Instrument::PianoLike.label());
    let entries = source_ids(n_per_instrument)
        .into_iter()
        .map(|(clip_id, instrument, i)| {
            let split = match instrument {
                Instrument::GuitarLike => guitar_splits[i as usize],
                _ => piano_splits[i as usize],
            };
            ManifestEntry {
                source: format!("sources/{clip_id}.wav").into(),
                clip_id,
                instrument,
                effect: EffectId::Cln,
                param_value: None,
                split,
            }
        })
        .collect();
    CorpusManifest { seed, entries }
}

/// Write `2 * n_per_instrument` source WAVs under `dir/sources/` and return
/// their manifest. Source paths in the manifest are relative to `dir`.
pub fn synth_corpus(
    dir: &Path,
    n_per_instrument: usize,
    seed: u64,
) -> Result<CorpusManifest, AudioError> {
    assert!(n_per_instrument >= 1);
    let manifest = synth_manifest(n_per_instrument, seed);
    let sources_dir = dir.join("sources");
    std::fs::create_dir_all(&sources_dir).map_err(|e| AudioError::io(&sources_dir, e))?;
    for (i, entry) in manifest.entries.iter().enumerate() {
        let index = (i % n_per_instrument) as u64;
        let clip = synth_source(entry.instrument, seed, index)?;
        write_wav(&clip, &dir.join(&entry.source))?;
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::super::manifest::Split;
    use super::*;
    use rustfft::num_complex::Complex64;

    #[test]
    fn sources_are_corpus_shaped_and_peak_normalized() {
        for instrument in [Instrument::GuitarLike, Instrument::PianoLike] {
            let clip = synth_source(instrument, 42, 0).unwrap();
            assert!(clip.is_corpus_shaped());
            let peak = clip
                .channel(0)
                .iter()
                .fold(0.0f32, |m, &v| m.max(v.abs()));
            assert!((f64::from(peak) - PEAK_TARGET).abs() < 1e-4, "peak {peak}");
            assert_eq!(clip.channel(0), clip.channel(1));
        }
    }

    #[test]
    fn synthesis_is_deterministic_per_seed_and_index() {
        let a = synth_source(Instrument::GuitarLike, 42, 3).unwrap();
        let b = synth_source(Instrument::GuitarLike, 42, 3).unwrap();
        let c = synth_source(Instrument::GuitarLike, 43, 3).unwrap();
        let d = synth_source(Instrument::GuitarLike, 42, 4).unwrap();
        assert_eq!(a.channel(0), b.channel(0));
        assert_ne!(a.channel(0), c.channel(0));
        assert_ne!(a.channel(0), d.channel(0));
    }

    fn spectrum(samples: &[f32]) -> Vec<f64> {
        let mut buf: Vec<Complex64> = samples
            .iter()
            .map(|&x| Complex64::new(f64::from(x), 0.0))
            .collect();
        let mut planner = rustfft::FftPlanner::new();
        planner.plan_fft_forward(buf.len()).process(&mut buf);
        buf.iter().take(samples.len() / 2).map(|c| c.norm()).collect()
    }

    fn peak_near(mag: &[f64], freq: f64, n: usize) -> f64 {
        let bin = freq * n as f64 / f64::from(SAMPLE_RATE);
        let lo = (bin - 16.0).max(1.0) as usize;
        let hi = ((bin + 16.0) as usize).min(mag.len() - 1);
        mag[lo..=hi].iter().cloned().fold(0.0, f64::max)
    }

    #[test]
    fn piano_partials_sit_at_harmonics_with_decreasing_amplitude() {
        let n = 1 << 17;
        let note = piano_note(220.0, n);
        let mag = spectrum(&note);
        let peaks: Vec<f64> = [220.0, 440.0, 660.0, 880.0]
            .iter()
            .map(|&f| peak_near(&mag, f, n))
            .collect();
        for w in peaks.windows(2) {
            assert!(w[0] > w[1], "partial magnitudes not decreasing: {peaks:?}");
        }
        // Energy between partials stays well below the weakest partial.
        let off = peak_near(&mag, 330.0, n);
        assert!(off < peaks[3] / 10.0, "inter-partial energy {off}");
    }

    #[test]
    fn karplus_strong_rings_near_requested_pitch() {
        // Autocorrelation peak over plausible lags locates the loop period;
        // a spectral argmax would be fragile because the noise burst can
        // favor any single harmonic.
        let n = 1 << 16;
        let mut rng = derive_rng(1, "test/ks", 0);
        let note = karplus_strong_note(110.0, n, GUITAR_T60_S, &mut rng);
        let fs = f64::from(SAMPLE_RATE);
        let (lo, hi) = ((fs / 200.0) as usize, (fs / 50.0) as usize);
        let corr = |lag: usize| -> f64 {
            note[..n - lag]
                .iter()
                .zip(&note[lag..])
                .map(|(&a, &b)| f64::from(a) * f64::from(b))
                .sum()
        };
        let best = (lo..=hi).max_by(|&a, &b| corr(a).partial_cmp(&corr(b)).unwrap()).unwrap();
        let freq = fs / best as f64;
        assert!((freq - 110.0).abs() < 3.0, "period {best} samples = {freq} Hz");
    }

    #[test]
    fn karplus_strong_decays() {
        let n = 1 << 16;
        let mut rng = derive_rng(1, "test/ks", 1);
        let note = karplus_strong_note(220.0, n, 0.3, &mut rng);
        let head: f64 = note[..8192].iter().map(|&v| f64::from(v).powi(2)).sum();
        let tail: f64 = note[n - 8192..].iter().map(|&v| f64::from(v).powi(2)).sum();
        assert!(tail < head / 100.0, "head {head} tail {tail}");
    }

    #[test]
    fn manifest_enumerates_both_instruments_with_splits() {
        let m = synth_manifest(4, 9);
        assert_eq!(m.entries.len(), 8);
        m.validate().unwrap();
        assert!(m.entries.iter().all(|e| e.effect == EffectId::Cln));
        let guitars = m
            .entries
            .iter()
            .filter(|e| e.instrument == Instrument::GuitarLike)
            .count();
        assert_eq!(guitars, 4);
        // Each instrument stratum contributes one val and one test source.
        for inst in [Instrument::GuitarLike, Instrument::PianoLike] {
            let vals = m
                .entries
                .iter()
                .filter(|e| e.instrument == inst && e.split == Split::Val)
                .count();
            assert_eq!(vals, 1);
        }
    }

    #[test]
    fn corpus_files_are_bitwise_reproducible() {
        let d1 = tempfile::tempdir().unwrap();
        let d2 = tempfile::tempdir().unwrap();
        let m1 = synth_corpus(d1.path(), 1, 42).unwrap();
        let m2 = synth_corpus(d2.path(), 1, 42).unwrap();
        assert_eq!(m1, m2);
        for entry in &m1.entries {
            let b1 = std::fs::read(d1.path().join(&entry.source)).unwrap();
            let b2 = std::fs::read(d2.path().join(&entry.source)).unwrap();
            assert_eq!(b1, b2, "{}", entry.clip_id);
        }
    }
}
