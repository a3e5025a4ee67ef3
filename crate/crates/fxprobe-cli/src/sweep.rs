//! Parameter sweeps: re-render selected sources at stepped effect settings,
//! encode each variant, and measure how straight the resulting path of
//! time-averaged features is, in the corpus PCA frame.

use crate::config::RunConfig;
use crate::features::load_corpus;
use crate::layout::{write_csv, Layout};
use anyhow::{bail, Context, Result};
use fxprobe::audio_io::{read_wav, AudioClip, Instrument};
use fxprobe::effects::{apply_effect, sweep_specs, sweep_values};
use fxprobe::encoders::{encode, EncoderConfig};
use fxprobe::loudness::normalize_loudness;
use fxprobe::represent::{pca_fit, time_average, trajectory_metrics, FeatureMode, PcaModel};
use ndarray::Array2;
use rayon::prelude::*;
use std::path::PathBuf;

/// How many source clips per instrument feed each sweep, following the
/// reported setup (16 guitar plus 16 piano samples).
const CLIPS_PER_INSTRUMENT: usize = 16;

struct SweepClip {
    clip_id: String,
    source: PathBuf,
}

struct ClipTrajectory {
    path_rows: Vec<Vec<String>>,
    summary_row: Vec<String>,
    straightness: f64,
}

pub fn cmd_sweep(config: &RunConfig, layout: &Layout) -> Result<()> {
    if matches!(config.encoder, EncoderConfig::External { .. }) {
        bail!("sweeps need a built-in encoder; external embeddings cannot be recomputed per step");
    }
    if config.sweep.is_empty() {
        bail!("config lists no sweeps");
    }

    let corpus = load_corpus(config, layout, FeatureMode::TimeAvg)?;
    let model = pca_fit(&corpus.features.rows, 3).context("fitting corpus PCA")?;
    let clips = select_clips(&corpus.manifest);
    if clips.is_empty() {
        bail!("manifest has no clean clips to sweep");
    }
    log::info!(
        "sweeping {} effects over {} clips x {} steps",
        config.sweep.len(),
        clips.len(),
        config.sweep.first().map(|s| s.steps).unwrap_or(0)
    );

    let mut path_rows = Vec::new();
    let mut summary_rows = Vec::new();
    let mut stats_rows = Vec::new();
    let mut failures = Vec::new();
    for sweep in &config.sweep {
        let values = sweep_values(sweep)?;
        let specs = sweep_specs(sweep)?;
        let results: Vec<Result<ClipTrajectory>> = clips
            .par_iter()
            .map(|clip| trace_clip(config, layout, &model, sweep.id.code(), &sweep.param, clip, &values, &specs))
            .collect();

        let mut straightness = Vec::new();
        for (clip, result) in clips.iter().zip(results) {
            match result {
                Ok(t) => {
                    path_rows.extend(t.path_rows);
                    summary_rows.push(t.summary_row);
                    straightness.push(t.straightness);
                }
                Err(e) => failures.push(format!(
                    "{} sweep, clip {}: {e:#}",
                    sweep.id.code(),
                    clip.clip_id
                )),
            }
        }
        if !straightness.is_empty() {
            let stats = straightness_stats(&mut straightness);
            log::info!(
                "  {} {}: straightness min {:.4} / median {:.4} / max {:.4} over {} clips",
                sweep.id.code(),
                sweep.param,
                stats.0,
                stats.1,
                stats.2,
                straightness.len()
            );
            stats_rows.push(vec![
                sweep.id.code().to_string(),
                sweep.param.clone(),
                straightness.len().to_string(),
                format!("{:.6}", stats.0),
                format!("{:.6}", stats.1),
                format!("{:.6}", stats.2),
                format!("{:.6}", stats.3),
            ]);
        }
    }

    let dir = layout.reports_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let enc = config.encoder.encoder_id();
    let paths_csv = dir.join(format!("sweep_paths_{enc}.csv"));
    write_csv(
        &paths_csv,
        &["effect", "param", "clip_id", "step", "param_value", "pc1", "pc2", "pc3"],
        &path_rows,
    )?;
    let summary_csv = dir.join(format!("sweep_summary_{enc}.csv"));
    write_csv(
        &summary_csv,
        &["effect", "param", "clip_id", "arc_length", "chord_length", "straightness"],
        &summary_rows,
    )?;
    let stats_csv = dir.join(format!("sweep_stats_{enc}.csv"));
    write_csv(
        &stats_csv,
        &[
            "effect",
            "param",
            "clips",
            "straightness_min",
            "straightness_median",
            "straightness_max",
            "straightness_mean",
        ],
        &stats_rows,
    )?;
    log::info!(
        "wrote {}, {} and {}",
        paths_csv.display(),
        summary_csv.display(),
        stats_csv.display()
    );

    if !failures.is_empty() {
        for f in &failures {
            log::error!("sweep failure: {f}");
        }
        bail!("{} sweep trajectories failed; the rest were written", failures.len());
    }
    Ok(())
}

/// The first N clean clips per instrument, in manifest order.
fn select_clips(manifest: &fxprobe::audio_io::CorpusManifest) -> Vec<SweepClip> {
    let mut by_instrument: Vec<(Instrument, usize)> = Vec::new();
    let mut clips = Vec::new();
    for entry in &manifest.entries {
        if entry.effect != fxprobe::effects::EffectId::Cln {
            continue;
        }
        let taken = match by_instrument.iter_mut().find(|(i, _)| *i == entry.instrument) {
            Some((_, count)) => count,
            None => {
                by_instrument.push((entry.instrument, 0));
                &mut by_instrument.last_mut().expect("just pushed").1
            }
        };
        if *taken >= CLIPS_PER_INSTRUMENT {
            continue;
        }
        *taken += 1;
        let stem = entry
            .source
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| entry.clip_id.clone());
        clips.push(SweepClip {
            clip_id: stem,
            source: entry.source.clone(),
        });
    }
    clips
}

#[allow(clippy::too_many_arguments)]
fn trace_clip(
    config: &RunConfig,
    layout: &Layout,
    model: &PcaModel,
    effect_code: &str,
    param: &str,
    clip: &SweepClip,
    values: &[f64],
    specs: &[fxprobe::effects::EffectSpec],
) -> Result<ClipTrajectory> {
    let source: AudioClip = read_wav(&layout.root.join(&clip.source))
        .with_context(|| format!("reading {}", clip.source.display()))?;

    let mut rows = Vec::with_capacity(specs.len());
    for spec in specs {
        let wet = apply_effect(&source, spec)?;
        let leveled = normalize_loudness(&wet, config.target_lufs)?;
        let seq = encode(&leveled, &config.encoder)?;
        rows.push(time_average(&seq));
    }
    let width = rows[0].len();
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let path = Array2::from_shape_vec((specs.len(), width), flat)
        .expect("equal widths from one encoder");
    let report = trajectory_metrics(&path, Some(model))?;
    let projected = report.pca3_path.as_ref().expect("model supplied");

    let path_rows = (0..specs.len())
        .map(|step| {
            vec![
                effect_code.to_string(),
                param.to_string(),
                clip.clip_id.clone(),
                step.to_string(),
                format!("{}", values[step]),
                format!("{:.6}", projected[[step, 0]]),
                format!("{:.6}", projected[[step, 1]]),
                format!("{:.6}", projected[[step, 2]]),
            ]
        })
        .collect();
    let summary_row = vec![
        effect_code.to_string(),
        param.to_string(),
        clip.clip_id.clone(),
        format!("{:.6}", report.arc_length),
        format!("{:.6}", report.chord_length),
        format!("{:.6}", report.straightness),
    ];
    Ok(ClipTrajectory {
        path_rows,
        summary_row,
        straightness: report.straightness,
    })
}

/// (min, median, max, mean); sorts in place.
fn straightness_stats(values: &mut [f64]) -> (f64, f64, f64, f64) {
    values.sort_by(|a, b| a.partial_cmp(b).expect("finite straightness"));
    let n = values.len();
    let median = if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    };
    let mean = values.iter().sum::<f64>() / n as f64;
    (values[0], median, values[n - 1], mean)
}
