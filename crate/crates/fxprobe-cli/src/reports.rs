//! Analysis subcommands: PCA projection, the ten-way effect probe, and the
//! per-dimension masking sweep.

use crate::config::RunConfig;
use crate::features::{effect_index, load_corpus, probe_config_for, Corpus};
use crate::layout::{write_csv, Layout};
use anyhow::{bail, Context, Result};
use fxprobe::audio_io::Split;
use fxprobe::effects::EffectId;
use fxprobe::probe::{evaluate, format_param_count, mask_sweep, train_probe, ProbeDataset};
use fxprobe::represent::{apply_norm, fit_norm, pca_fit, pca_transform, FeatureMode};
use ndarray::{Array2, Axis};

fn ensure_reports_dir(layout: &Layout) -> Result<()> {
    let dir = layout.reports_dir();
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn cmd_project(config: &RunConfig, layout: &Layout, mode: FeatureMode) -> Result<()> {
    let corpus = load_corpus(config, layout, mode)?;
    let model = pca_fit(&corpus.features.rows, 3).context("fitting corpus PCA")?;
    let projected = pca_transform(&model, &corpus.features.rows)?;
    log::info!(
        "PCA explained variance: {:.4}, {:.4}, {:.4}",
        model.explained_variance[0],
        model.explained_variance[1],
        model.explained_variance[2]
    );

    let rows: Vec<Vec<String>> = corpus
        .manifest
        .entries
        .iter()
        .enumerate()
        .map(|(i, entry)| {
            vec![
                entry.clip_id.clone(),
                entry.instrument.label().to_string(),
                entry.effect.code().to_string(),
                entry.param_value.map(|v| format!("{v}")).unwrap_or_default(),
                format!("{:.6}", projected[[i, 0]]),
                format!("{:.6}", projected[[i, 1]]),
                format!("{:.6}", projected[[i, 2]]),
            ]
        })
        .collect();

    ensure_reports_dir(layout)?;
    let path = layout.reports_dir().join(format!(
        "pca_{}_{}.csv",
        config.encoder.encoder_id(),
        mode.label()
    ));
    write_csv(
        &path,
        &["clip_id", "instrument", "effect", "param_value", "pc1", "pc2", "pc3"],
        &rows,
    )?;
    log::info!("wrote {} ({} rows)", path.display(), rows.len());
    Ok(())
}

/// The three splits of the corpus as z-scored matrices, using statistics fit
/// on the training rows only.
struct SplitData {
    train_x: Array2<f64>,
    train_y: Vec<usize>,
    val_x: Array2<f64>,
    val_y: Vec<usize>,
    test_x: Array2<f64>,
    test_y: Vec<usize>,
}

fn split_corpus(corpus: &Corpus) -> Result<SplitData> {
    for split in [Split::Train, Split::Val, Split::Test] {
        if corpus.split_rows(split).is_empty() {
            bail!(
                "{} split is empty; the corpus needs at least 3 sources per instrument",
                split.label()
            );
        }
    }
    let (train_x, train_y) = corpus.select(&corpus.split_rows(Split::Train));
    let (val_x, val_y) = corpus.select(&corpus.split_rows(Split::Val));
    let (test_x, test_y) = corpus.select(&corpus.split_rows(Split::Test));
    let stats = fit_norm(&train_x)?;
    Ok(SplitData {
        train_x: apply_norm(&stats, &train_x)?,
        train_y,
        val_x: apply_norm(&stats, &val_x)?,
        val_y,
        test_x: apply_norm(&stats, &test_x)?,
        test_y,
    })
}

pub fn cmd_probe(config: &RunConfig, layout: &Layout, mode: FeatureMode) -> Result<()> {
    let corpus = load_corpus(config, layout, mode)?;
    corpus.manifest.validate_classification()?;
    let data = split_corpus(&corpus)?;
    let classes = EffectId::ALL.len();
    let dims = data.train_x.ncols();
    log::info!(
        "training {classes}-way probe on {} features ({} train / {} val / {} test rows), size {}",
        dims,
        data.train_y.len(),
        data.val_y.len(),
        data.test_y.len(),
        format_param_count(fxprobe::probe::param_count(classes, dims)),
    );

    let probe_cfg = probe_config_for(config, &format!("probe/train/{}", mode.label()));
    let model = train_probe(
        &data.train_x,
        &data.train_y,
        &data.val_x,
        &data.val_y,
        classes,
        &probe_cfg,
    )?;
    log::info!(
        "best val accuracy {:.2}% at epoch {} ({} epochs run)",
        model.best_val_acc * 100.0,
        model.best_epoch,
        model.history.len()
    );
    let report = evaluate(&model, &data.test_x, &data.test_y)?;
    for (i, fx) in EffectId::ALL.iter().enumerate() {
        log::info!("  {} recall {:.1}%", fx.code(), report.per_class_recall[i]);
    }
    log::info!(
        "test accuracy: macro {:.2}%, overall {:.2}%",
        report.macro_recall,
        report.overall_accuracy
    );

    ensure_reports_dir(layout)?;
    let enc = config.encoder.encoder_id();
    let mut header: Vec<&str> = vec!["encoder", "mode"];
    let codes: Vec<&str> = EffectId::ALL.iter().map(|fx| fx.code()).collect();
    header.extend(&codes);
    header.extend(["AVG_MACRO", "AVG_OVERALL"]);
    let mut row = vec![enc.clone(), mode.label().to_string()];
    row.extend(report.per_class_recall.iter().map(|r| format!("{r:.2}")));
    row.push(format!("{:.2}", report.macro_recall));
    row.push(format!("{:.2}", report.overall_accuracy));
    let csv_path = layout
        .reports_dir()
        .join(format!("probe_{enc}_{}.csv", mode.label()));
    write_csv(&csv_path, &header, &[row])?;

    let per_class: serde_json::Map<String, serde_json::Value> = EffectId::ALL
        .iter()
        .zip(&report.per_class_recall)
        .map(|(fx, &r)| (fx.code().to_string(), serde_json::Value::from(r)))
        .collect();
    let confusion: Vec<Vec<usize>> = report
        .confusion
        .outer_iter()
        .map(|r| r.to_vec())
        .collect();
    let detail = serde_json::json!({
        "encoder": enc,
        "mode": mode.label(),
        "dims": dims,
        "classes": classes,
        "param_count": fxprobe::probe::param_count(classes, dims),
        "probe_size": format_param_count(fxprobe::probe::param_count(classes, dims)),
        "best_epoch": model.best_epoch,
        "best_val_acc": model.best_val_acc,
        "epochs_run": model.history.len(),
        "macro_recall": report.macro_recall,
        "overall_accuracy": report.overall_accuracy,
        "per_class_recall": per_class,
        "confusion": confusion,
    });
    let json_path = layout
        .reports_dir()
        .join(format!("probe_{enc}_{}.json", mode.label()));
    std::fs::write(&json_path, serde_json::to_string_pretty(&detail)? + "\n")
        .with_context(|| format!("writing {}", json_path.display()))?;
    log::info!("wrote {} and {}", csv_path.display(), json_path.display());
    Ok(())
}

/// Effect-vs-clean binary dataset over the corpus splits, z-scored with the
/// task's own training statistics.
fn binary_task(corpus: &Corpus, fx: EffectId) -> Result<ProbeDataset> {
    let positive = effect_index(fx);
    let clean = effect_index(EffectId::Cln);
    let pick = |split: Split| {
        let rows: Vec<usize> = (0..corpus.labels.len())
            .filter(|&i| {
                corpus.splits[i] == split
                    && (corpus.labels[i] == positive || corpus.labels[i] == clean)
            })
            .collect();
        let x = corpus.features.rows.select(Axis(0), &rows);
        let y: Vec<usize> = rows
            .iter()
            .map(|&i| usize::from(corpus.labels[i] == positive))
            .collect();
        (x, y)
    };
    let (train_x, train_y) = pick(Split::Train);
    let (val_x, val_y) = pick(Split::Val);
    let (test_x, test_y) = pick(Split::Test);
    let stats = fit_norm(&train_x)?;
    let dataset = ProbeDataset {
        train_x: apply_norm(&stats, &train_x)?,
        train_y,
        val_x: apply_norm(&stats, &val_x)?,
        val_y,
        test_x: apply_norm(&stats, &test_x)?,
        test_y,
    };
    dataset.validate()?;
    Ok(dataset)
}

pub fn cmd_mask(config: &RunConfig, layout: &Layout, mode: FeatureMode) -> Result<()> {
    let corpus = load_corpus(config, layout, mode)?;
    corpus.manifest.validate_classification()?;

    let mut tasks = Vec::new();
    for fx in EffectId::ALL {
        if fx == EffectId::Cln {
            continue;
        }
        let dataset = binary_task(&corpus, fx)
            .with_context(|| format!("building {} vs CLN task", fx.code()))?;
        tasks.push((fx.code().to_string(), dataset));
    }
    let dims = tasks[0].1.dims();
    log::info!(
        "masking sweep: {} tasks x {} dims ({} probes incl. baselines)",
        tasks.len(),
        dims,
        tasks.len() * (dims + 1)
    );

    let mask_cfg = probe_config_for(config, &format!("probe/mask/{}", mode.label())).masking();
    let matrix = mask_sweep(&tasks, &mask_cfg)?;

    let mut header: Vec<String> = vec!["effect".into(), "baseline_acc".into()];
    header.extend((0..dims).map(|d| format!("dim_{d}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows: Vec<Vec<String>> = matrix
        .tasks
        .iter()
        .enumerate()
        .map(|(t, name)| {
            let mut row = vec![name.clone(), format!("{:.2}", matrix.baseline_acc[t])];
            row.extend((0..dims).map(|d| format!("{:.4}", matrix.delta_pp[[t, d]])));
            row
        })
        .collect();

    for (t, name) in matrix.tasks.iter().enumerate() {
        let best = (0..dims)
            .max_by(|&a, &b| {
                matrix.delta_pp[[t, a]]
                    .partial_cmp(&matrix.delta_pp[[t, b]])
                    .expect("finite deltas")
            })
            .expect("at least one dim");
        log::info!(
            "  {name}: baseline {:.1}%, most sensitive dim {best} (delta {:+.2} pp)",
            matrix.baseline_acc[t],
            matrix.delta_pp[[t, best]]
        );
    }

    ensure_reports_dir(layout)?;
    let path = layout.reports_dir().join(format!(
        "mask_{}_{}.csv",
        config.encoder.encoder_id(),
        mode.label()
    ));
    write_csv(&path, &header_refs, &rows)?;
    log::info!("wrote {} ({} tasks x {} dims)", path.display(), rows.len(), dims);
    Ok(())
}
