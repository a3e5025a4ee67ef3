//! Property-based checks of structural invariants across the library.

use fxprobe::audio_io::{assign_splits, slice_clips, Split};
use fxprobe::effects::{apply_effect, sweep_values, EffectId, EffectSpec, SweepScale, SweepSpec};
use fxprobe::encoders::EmbeddingSequence;
use fxprobe::probe::format_param_count;
use fxprobe::represent::{apply_norm, fit_norm, flatten, time_average, trajectory_metrics};
use fxprobe::rng::derive_seed;
use fxprobe::{AudioClip, SAMPLE_RATE};
use ndarray::{Array2, Axis};
use proptest::prelude::*;

fn finite_f32() -> impl Strategy<Value = f32> {
    (-1.0f32..=1.0).prop_map(|v| if v.is_finite() { v } else { 0.0 })
}

fn stereo_clip(max_len: usize) -> impl Strategy<Value = AudioClip> {
    (1..max_len).prop_flat_map(|n| {
        (
            proptest::collection::vec(finite_f32(), n),
            proptest::collection::vec(finite_f32(), n),
        )
            .prop_map(|(l, r)| AudioClip::new(l, r, SAMPLE_RATE).unwrap())
    })
}

proptest! {
    #[test]
    fn slices_tile_a_prefix_without_overlap(
        clip in stereo_clip(2_000),
        window in 1usize..600,
    ) {
        let slices = slice_clips(&clip, window).unwrap();
        prop_assert_eq!(slices.len(), clip.len() / window);
        let mut rebuilt_l: Vec<f32> = Vec::new();
        let mut rebuilt_r: Vec<f32> = Vec::new();
        for s in &slices {
            prop_assert_eq!(s.len(), window);
            rebuilt_l.extend_from_slice(s.channel(0));
            rebuilt_r.extend_from_slice(s.channel(1));
        }
        let covered = slices.len() * window;
        prop_assert_eq!(rebuilt_l.as_slice(), &clip.channel(0)[..covered]);
        prop_assert_eq!(rebuilt_r.as_slice(), &clip.channel(1)[..covered]);
    }

    #[test]
    fn time_reversal_is_an_involution(clip in stereo_clip(800)) {
        let trv = EffectSpec::new(EffectId::Trv);
        let twice = apply_effect(&apply_effect(&clip, &trv).unwrap(), &trv).unwrap();
        prop_assert_eq!(twice.channel(0), clip.channel(0));
        prop_assert_eq!(twice.channel(1), clip.channel(1));
    }

    #[test]
    fn flatten_is_the_row_major_layout(
        frames in 1usize..8,
        dims in 1usize..8,
        seed in any::<u64>(),
    ) {
        let data = Array2::from_shape_fn((frames, dims), |(t, d)| {
            let v = derive_seed(seed, "prop/flatten", (t * dims + d) as u64);
            (v % 1000) as f32 / 500.0 - 1.0
        });
        let seq = EmbeddingSequence::new(data.clone(), 93.75, "test".into()).unwrap();
        let flat = flatten(&seq);
        prop_assert_eq!(flat.len(), frames * dims);
        for t in 0..frames {
            for d in 0..dims {
                prop_assert_eq!(flat[t * dims + d], f64::from(data[(t, d)]));
            }
        }
        let avg = time_average(&seq);
        for (d, &value) in avg.iter().enumerate() {
            let col = data.column(d).iter().map(|&v| f64::from(v)).sum::<f64>()
                / frames as f64;
            prop_assert!((value - col).abs() < 1e-9);
        }
    }

    #[test]
    fn straightness_stays_within_unit_interval(
        rows in 2usize..24,
        dims in 1usize..5,
        seed in any::<u64>(),
    ) {
        let points = Array2::from_shape_fn((rows, dims), |(i, j)| {
            let v = derive_seed(seed, "prop/path", (i * dims + j) as u64);
            (v % 10_000) as f64 / 500.0 - 10.0
        });
        let report = trajectory_metrics(&points, None).unwrap();
        prop_assert!(report.arc_length >= report.chord_length - 1e-9);
        prop_assert!(report.straightness > 0.0);
        prop_assert!(report.straightness <= 1.0 + 1e-12);
    }

    #[test]
    fn z_scoring_is_invertible_and_standardizes(
        rows in 2usize..20,
        dims in 1usize..6,
        seed in any::<u64>(),
    ) {
        let x = Array2::from_shape_fn((rows, dims), |(i, j)| {
            let v = derive_seed(seed, "prop/norm", (i * dims + j) as u64);
            (v % 100_000) as f64 / 1000.0
        });
        let stats = fit_norm(&x).unwrap();
        let z = apply_norm(&stats, &x).unwrap();
        for d in 0..dims {
            let col = z.index_axis(Axis(1), d);
            let mean = col.sum() / rows as f64;
            prop_assert!(mean.abs() < 1e-9, "column {d} mean {mean}");
        }
        // Undo using the stored statistics: x = z * std + mean.
        for i in 0..rows {
            for d in 0..dims {
                let back = z[(i, d)] * stats.std[d] + stats.mean[d];
                prop_assert!((back - x[(i, d)]).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn split_assignment_is_deterministic_with_documented_counts(
        n in 1usize..200,
        seed in any::<u64>(),
    ) {
        let splits = assign_splits(n, seed, "prop");
        prop_assert_eq!(splits.len(), n);
        let count = |kind: Split| splits.iter().filter(|&&s| s == kind).count();
        let expected_held = if n >= 3 { (n / 10).max(1) } else { n / 10 };
        prop_assert_eq!(count(Split::Val), expected_held);
        prop_assert_eq!(count(Split::Test), expected_held);
        prop_assert_eq!(count(Split::Train), n - 2 * expected_held);
        prop_assert_eq!(assign_splits(n, seed, "prop"), splits);
    }

    #[test]
    fn sweep_values_are_monotone_with_exact_endpoints(
        min in 0.01f64..100.0,
        span in 0.5f64..100.0,
        steps in 2usize..64,
        log in any::<bool>(),
    ) {
        let sweep = SweepSpec {
            id: EffectId::Dis,
            param: "drive_db".to_string(),
            min,
            max: min + span,
            steps,
            scale: if log { SweepScale::Log } else { SweepScale::Linear },
        };
        let v = sweep_values(&sweep).unwrap();
        prop_assert_eq!(v.len(), steps);
        prop_assert_eq!(v[0], min);
        prop_assert!((v[steps - 1] - (min + span)).abs() < 1e-9 * (min + span));
        for w in v.windows(2) {
            prop_assert!(w[1] > w[0]);
        }
    }

    #[test]
    fn param_count_rendering_shape(count in 0usize..100_000_000) {
        let shown = format_param_count(count);
        let re = regex_lite_check(&shown);
        prop_assert!(re, "bad rendering {shown}");
    }
}

/// "<digits>.<digit> k" without pulling in a regex dependency.
fn regex_lite_check(s: &str) -> bool {
    let Some(body) = s.strip_suffix(" k") else {
        return false;
    };
    let mut parts = body.split('.');
    let (Some(int), Some(frac), None) = (parts.next(), parts.next(), parts.next()) else {
        return false;
    };
    !int.is_empty()
        && int.chars().all(|c| c.is_ascii_digit())
        && frac.len() == 1
        && frac.chars().all(|c| c.is_ascii_digit())
}
