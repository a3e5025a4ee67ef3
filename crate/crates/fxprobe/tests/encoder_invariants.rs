//! Statistical invariants of the built-in encoders, checked on synthetic
//! corpus clips rather than toy buffers.

use fxprobe::audio_io::{synth_source, Instrument};
use fxprobe::effects::{apply_effect, EffectId, EffectSpec};
use fxprobe::encoders::{encode, EncoderConfig, MelConfig, RandomProjectionConfig};
use fxprobe::represent::time_average;
use fxprobe::AudioClip;

fn l2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Time-averaged log-mel features barely move when the signal is reversed:
/// the frame grid tiles the clip symmetrically, so reversal permutes frames
/// and only shifts the analysis window by one sample within each frame.
#[test]
fn mel_time_average_is_quasi_invariant_to_reversal() {
    let config = EncoderConfig::Mel(MelConfig::default());
    let trv = EffectSpec::new(EffectId::Trv);

    let mut clips: Vec<(String, AudioClip)> = Vec::new();
    for (instrument, tag) in [
        (Instrument::GuitarLike, "guitar"),
        (Instrument::PianoLike, "piano"),
    ] {
        for index in 0..3 {
            let clip = synth_source(instrument, 17, index).unwrap();
            clips.push((format!("{tag}-{index}"), clip));
        }
    }
    // Effects that pile energy against the clip edges are the hard cases
    // for any boundary-frame asymmetry.
    let base = synth_source(Instrument::GuitarLike, 17, 9).unwrap();
    for id in [EffectId::Rvb, EffectId::Dly] {
        let spec = EffectSpec::new(id);
        clips.push((format!("{id}"), apply_effect(&base, &spec).unwrap()));
    }

    for (name, clip) in &clips {
        let forward = time_average(&encode(clip, &config).unwrap());
        let reversed_clip = apply_effect(clip, &trv).unwrap();
        let reversed = time_average(&encode(&reversed_clip, &config).unwrap());
        let rel = l2(&sub(&forward, &reversed)) / l2(&forward);
        assert!(rel <= 1e-3, "{name}: relative drift {rel}");
    }
}

/// A seeded Gaussian projection to half the dimensions keeps the geometry
/// of the embedding cloud: pairwise distances before and after correlate
/// strongly across 100 clips.
#[test]
fn random_projection_preserves_pairwise_distances() {
    let mel_config = EncoderConfig::Mel(MelConfig::default());
    let proj_config = EncoderConfig::RandomProjection(RandomProjectionConfig {
        dims: 16,
        seed: 99,
        mel: MelConfig::default(),
    });

    let mut mel_points = Vec::new();
    let mut proj_points = Vec::new();
    for index in 0..50 {
        for instrument in [Instrument::GuitarLike, Instrument::PianoLike] {
            let clip = synth_source(instrument, 23, index).unwrap();
            mel_points.push(time_average(&encode(&clip, &mel_config).unwrap()));
            proj_points.push(time_average(&encode(&clip, &proj_config).unwrap()));
        }
    }
    assert_eq!(mel_points.len(), 100);
    assert_eq!(proj_points[0].len(), 16);

    let distances = |points: &[Vec<f64>]| {
        let mut d = Vec::new();
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                d.push(l2(&sub(&points[i], &points[j])));
            }
        }
        d
    };
    let a = distances(&mel_points);
    let b = distances(&proj_points);
    assert_eq!(a.len(), 100 * 99 / 2);

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let (ma, mb) = (mean(&a), mean(&b));
    let mut num = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in a.iter().zip(&b) {
        num += (x - ma) * (y - mb);
        va += (x - ma).powi(2);
        vb += (y - mb).powi(2);
    }
    let corr = num / (va.sqrt() * vb.sqrt());
    assert!(corr > 0.9, "pairwise distance correlation {corr}");
}
