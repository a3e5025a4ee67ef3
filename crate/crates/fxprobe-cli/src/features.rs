//! Assembling feature matrices and labels from a manifest plus an embedding
//! directory.

use crate::config::RunConfig;
use crate::layout::Layout;
use anyhow::{bail, Context, Result};
use fxprobe::audio_io::{CorpusManifest, Split};
use fxprobe::effects::EffectId;
use fxprobe::encoders::{load_external, ExternalMeta};
use fxprobe::probe::ProbeConfig;
use fxprobe::represent::{flatten, time_average, FeatureMatrix, FeatureMode};
use fxprobe::rng::derive_seed;
use ndarray::Array2;
use rayon::prelude::*;

/// Class index of an effect: its position in the fixed ten-effect roster.
pub fn effect_index(fx: EffectId) -> usize {
    EffectId::ALL
        .iter()
        .position(|&e| e == fx)
        .expect("every effect is in the roster")
}

pub struct Corpus {
    pub manifest: CorpusManifest,
    pub features: FeatureMatrix,
    pub labels: Vec<usize>,
    pub splits: Vec<Split>,
}

impl Corpus {
    /// Row indices of one split, in manifest order.
    pub fn split_rows(&self, split: Split) -> Vec<usize> {
        (0..self.splits.len())
            .filter(|&i| self.splits[i] == split)
            .collect()
    }

    pub fn select(&self, rows: &[usize]) -> (Array2<f64>, Vec<usize>) {
        let x = self.features.rows.select(ndarray::Axis(0), rows);
        let y = rows.iter().map(|&i| self.labels[i]).collect();
        (x, y)
    }
}

/// Load every manifest clip's embedding and collapse it to one feature row.
pub fn load_corpus(config: &RunConfig, layout: &Layout, mode: FeatureMode) -> Result<Corpus> {
    let manifest = crate::render::load_manifest(layout)?;
    let dir = layout.embeddings_dir(&config.encoder);
    let meta = ExternalMeta::load(&dir)
        .with_context(|| format!("{} (run `fxprobe encode` first?)", dir.display()))?;

    let vectors: Vec<Result<Vec<f64>>> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let seq = load_external(&dir, &entry.clip_id, &meta)
                .with_context(|| format!("clip {}", entry.clip_id))?;
            Ok(match mode {
                FeatureMode::TimeAvg => time_average(&seq),
                FeatureMode::Flatten => flatten(&seq),
            })
        })
        .collect();

    let mut rows = Vec::with_capacity(vectors.len());
    for v in vectors {
        rows.push(v?);
    }
    let width = rows.first().map(|r| r.len()).unwrap_or(0);
    if width == 0 {
        bail!("corpus is empty");
    }
    for (row, entry) in rows.iter().zip(&manifest.entries) {
        if row.len() != width {
            bail!(
                "clip {}: feature width {} differs from {} (mixed embedding shapes?)",
                entry.clip_id,
                row.len(),
                width
            );
        }
    }
    let flat: Vec<f64> = rows.into_iter().flatten().collect();
    let matrix = Array2::from_shape_vec((manifest.entries.len(), width), flat)
        .expect("widths checked above");
    let clip_ids = manifest.entries.iter().map(|e| e.clip_id.clone()).collect();
    let features = FeatureMatrix::new(matrix, clip_ids, mode)?;

    let labels = manifest.entries.iter().map(|e| effect_index(e.effect)).collect();
    let splits = manifest.entries.iter().map(|e| e.split).collect();
    Ok(Corpus {
        manifest,
        features,
        labels,
        splits,
    })
}

/// Probe settings for one training site. The run seed and the site name fix
/// the shuffle stream; the probe section's own seed acts as a user-chosen
/// variant index on top.
pub fn probe_config_for(config: &RunConfig, site: &str) -> ProbeConfig {
    ProbeConfig {
        seed: derive_seed(config.seed, site, config.probe.seed),
        ..config.probe.clone()
    }
}
