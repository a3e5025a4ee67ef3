//! Representation post-processing: collapse embedding sequences to feature
//! vectors (time average or flatten), z-score normalization with train-split
//! statistics, PCA, and path metrics for parameter sweeps.

mod pca;

pub use pca::{pca_fit, pca_transform, PcaModel};

use crate::encoders::EmbeddingSequence;
use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum RepresentError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("need at least {need} rows, got {got}")]
    TooFewRows { got: usize, need: usize },
    #[error("k = {k} exceeds min(rows, features) = {limit}")]
    BadK { k: usize, limit: usize },
    #[error("need at least 2 path points, got {0}")]
    TooFewPoints(usize),
    #[error("non-finite value in input")]
    NonFinite,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMode {
    TimeAvg,
    Flatten,
}

impl FeatureMode {
    pub fn label(self) -> &'static str {
        match self {
            FeatureMode::TimeAvg => "timeavg",
            FeatureMode::Flatten => "flatten",
        }
    }
}

/// Per-dimension mean over frames.
pub fn time_average(seq: &EmbeddingSequence) -> Vec<f64> {
    let t = seq.frames() as f64;
    (0..seq.dims())
        .map(|d| seq.data.column(d).iter().map(|&v| f64::from(v)).sum::<f64>() / t)
        .collect()
}

/// Row-major concatenation of all frames.
pub fn flatten(seq: &EmbeddingSequence) -> Vec<f64> {
    seq.data.iter().map(|&v| f64::from(v)).collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    pub rows: Array2<f64>,
    pub clip_ids: Vec<String>,
    pub mode: FeatureMode,
}

impl FeatureMatrix {
    pub fn new(
        rows: Array2<f64>,
        clip_ids: Vec<String>,
        mode: FeatureMode,
    ) -> Result<Self, RepresentError> {
        if rows.nrows() != clip_ids.len() {
            return Err(RepresentError::DimensionMismatch(format!(
                "{} rows vs {} clip ids",
                rows.nrows(),
                clip_ids.len()
            )));
        }
        if rows.iter().any(|v| !v.is_finite()) {
            return Err(RepresentError::NonFinite);
        }
        Ok(FeatureMatrix {
            rows,
            clip_ids,
            mode,
        })
    }

    /// Assemble one row per sequence; all sequences must agree on the
    /// resulting feature width.
    pub fn from_sequences(
        clip_ids: Vec<String>,
        seqs: &[EmbeddingSequence],
        mode: FeatureMode,
    ) -> Result<Self, RepresentError> {
        if clip_ids.len() != seqs.len() {
            return Err(RepresentError::DimensionMismatch(format!(
                "{} clip ids vs {} sequences",
                clip_ids.len(),
                seqs.len()
            )));
        }
        if seqs.is_empty() {
            return Err(RepresentError::TooFewRows { got: 0, need: 1 });
        }
        let vector = |seq: &EmbeddingSequence| match mode {
            FeatureMode::TimeAvg => time_average(seq),
            FeatureMode::Flatten => flatten(seq),
        };
        let width = match mode {
            FeatureMode::TimeAvg => seqs[0].dims(),
            FeatureMode::Flatten => seqs[0].flattened_len(),
        };
        let mut rows = Array2::zeros((seqs.len(), width));
        for (i, (seq, id)) in seqs.iter().zip(&clip_ids).enumerate() {
            let v = vector(seq);
            if v.len() != width {
                return Err(RepresentError::DimensionMismatch(format!(
                    "clip {id}: feature width {} vs {width}",
                    v.len()
                )));
            }
            rows.row_mut(i).assign(&Array1::from(v));
        }
        FeatureMatrix::new(rows, clip_ids, mode)
    }
}

pub const STD_FLOOR: f64 = 1e-8;

#[derive(Clone, Debug, PartialEq)]
pub struct NormStats {
    pub mean: Array1<f64>,
    pub std: Array1<f64>,
}

/// Per-feature mean and population standard deviation of the training rows,
/// with the std floored so constant features normalize to zero instead of
/// dividing by zero.
pub fn fit_norm(train: &Array2<f64>) -> Result<NormStats, RepresentError> {
    if train.nrows() < 2 {
        return Err(RepresentError::TooFewRows {
            got: train.nrows(),
            need: 2,
        });
    }
    let n = train.nrows() as f64;
    let mean = train.mean_axis(Axis(0)).expect("nrows >= 2");
    let std = train
        .axis_iter(Axis(1))
        .zip(mean.iter())
        .map(|(col, &m)| {
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<f64>() / n;
            var.sqrt().max(STD_FLOOR)
        })
        .collect::<Array1<f64>>();
    Ok(NormStats { mean, std })
}

pub fn apply_norm(stats: &NormStats, x: &Array2<f64>) -> Result<Array2<f64>, RepresentError> {
    if x.ncols() != stats.mean.len() {
        return Err(RepresentError::DimensionMismatch(format!(
            "{} features vs stats over {}",
            x.ncols(),
            stats.mean.len()
        )));
    }
    Ok((x - &stats.mean) / &stats.std)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryReport {
    pub arc_length: f64,
    pub chord_length: f64,
    /// chord/arc; 1.0 for a degenerate single-point path.
    pub straightness: f64,
    /// Path projected by a supplied 3-component PCA model, when given.
    pub pca3_path: Option<Array2<f64>>,
}

/// Metrics of an ordered path of points (rows).
pub fn trajectory_metrics(
    points: &Array2<f64>,
    model: Option<&PcaModel>,
) -> Result<TrajectoryReport, RepresentError> {
    if points.nrows() < 2 {
        return Err(RepresentError::TooFewPoints(points.nrows()));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(RepresentError::NonFinite);
    }
    let dist = |a: usize, b: usize| {
        points
            .row(a)
            .iter()
            .zip(points.row(b).iter())
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    };
    let arc_length: f64 = (1..points.nrows()).map(|i| dist(i - 1, i)).sum();
    let chord_length = dist(0, points.nrows() - 1);
    let straightness = if arc_length == 0.0 {
        1.0
    } else {
        chord_length / arc_length
    };

    let pca3_path = match model {
        None => None,
        Some(m) => {
            if m.components.nrows() != 3 {
                return Err(RepresentError::DimensionMismatch(format!(
                    "path projection needs a 3-component model, got {}",
                    m.components.nrows()
                )));
            }
            Some(pca_transform(m, points)?)
        }
    };

    Ok(TrajectoryReport {
        arc_length,
        chord_length,
        straightness,
        pca3_path,
    })
}
