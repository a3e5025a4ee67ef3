//! Linear-probe training and evaluation on embedding features, plus the
//! dimension-masking sweep that scores per-dimension importance.
//!
//! Probes are single linear layers trained with softmax cross-entropy and
//! AdamW. Training is deterministic for a fixed seed: epoch shuffling is
//! driven by a derived stream, batches are visited in shuffle order, and all
//! reductions run single-threaded within one fit.

use ndarray::{azip, Array1, Array2, Axis};
use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::rng::{derive_rng, derive_seed};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid probe config: {0}")]
    Config(String),
    #[error("invalid dataset: {0}")]
    Data(String),
    #[error("class {class} has no samples in the {split} set")]
    EmptyClass { class: usize, split: &'static str },
    #[error("label {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
    #[error("feature width {got} does not match expected {want}")]
    DimensionMismatch { got: usize, want: usize },
    #[error("dimension {dim} out of range for {dims}-dim features")]
    BadDim { dim: usize, dims: usize },
    #[error("training diverged: non-finite loss at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("mask sweep {task} ({stage}): {source}")]
    MaskTask {
        task: String,
        stage: String,
        #[source]
        source: Box<ProbeError>,
    },
}

/// Optimization settings for probe training. Defaults follow the reported
/// setup: batch 32, AdamW at lr 3e-4, up to 500 epochs with patience 50.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub lr: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
    pub patience: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub weight_decay: f64,
    pub seed: u64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            lr: 3e-4,
            batch_size: 32,
            max_epochs: 500,
            patience: 50,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            weight_decay: 0.01,
            seed: 0,
        }
    }
}

impl ProbeConfig {
    /// Variant used by the masking sweep: fixed 100-epoch budget, best
    /// checkpoint still selected on validation accuracy, no early stop.
    pub fn masking(&self) -> ProbeConfig {
        ProbeConfig {
            max_epochs: 100,
            patience: 100,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        let positive = [
            ("lr", self.lr),
            ("eps", self.eps),
        ];
        for (name, value) in positive {
            if !value.is_finite() || value <= 0.0 {
                return Err(ProbeError::Config(format!("{name} must be positive, got {value}")));
            }
        }
        if !self.weight_decay.is_finite() || self.weight_decay < 0.0 {
            return Err(ProbeError::Config(format!(
                "weight_decay must be non-negative, got {}",
                self.weight_decay
            )));
        }
        for (name, value) in [("beta1", self.beta1), ("beta2", self.beta2)] {
            if !value.is_finite() || !(0.0..1.0).contains(&value) {
                return Err(ProbeError::Config(format!("{name} must lie in [0, 1), got {value}")));
            }
        }
        if self.batch_size == 0 {
            return Err(ProbeError::Config("batch_size must be at least 1".into()));
        }
        if self.max_epochs == 0 {
            return Err(ProbeError::Config("max_epochs must be at least 1".into()));
        }
        if self.patience == 0 || self.patience > self.max_epochs {
            return Err(ProbeError::Config(format!(
                "patience must lie in 1..={}, got {}",
                self.max_epochs, self.patience
            )));
        }
        Ok(())
    }
}

/// Per-epoch training trace.
#[derive(Debug, Clone, Copy)]
pub struct EpochStats {
    pub train_loss: f64,
    pub val_acc: f64,
}

/// Trained linear probe: logits = x . weights^T + bias.
#[derive(Debug, Clone)]
pub struct ProbeModel {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub best_val_acc: f64,
    pub best_epoch: usize,
    pub history: Vec<EpochStats>,
}

impl ProbeModel {
    pub fn classes(&self) -> usize {
        self.weights.nrows()
    }

    pub fn dims(&self) -> usize {
        self.weights.ncols()
    }

    pub fn param_count(&self) -> usize {
        param_count(self.classes(), self.dims())
    }
}

/// Trainable parameters of a linear layer mapping `dims` features to
/// `classes` logits, bias included.
pub fn param_count(classes: usize, dims: usize) -> usize {
    classes * dims + classes
}

/// Renders a parameter count the way probe sizes are reported: rounded to
/// the nearest hundred and printed in thousands with one decimal, so 330
/// becomes "0.3 k" and 163850 becomes "163.9 k".
pub fn format_param_count(count: usize) -> String {
    let tenths = (count as f64 / 100.0).round() as u64;
    format!("{}.{} k", tenths / 10, tenths % 10)
}

/// Classification quality on a held-out set. Recalls are percentages;
/// classes absent from the set get a NaN recall and are excluded from the
/// macro mean.
#[derive(Debug, Clone)]
pub struct EvalReport {
    pub per_class_recall: Vec<f64>,
    pub overall_accuracy: f64,
    pub macro_recall: f64,
    pub confusion: Array2<usize>,
}

fn forward_logits(weights: &Array2<f64>, bias: &Array1<f64>, x: &Array2<f64>) -> Array2<f64> {
    let mut logits = x.dot(&weights.t());
    for mut row in logits.rows_mut() {
        row += bias;
    }
    logits
}

fn argmax_row(row: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in row.iter().enumerate() {
        if v > row[best] {
            best = i;
        }
    }
    best
}

/// Mean softmax cross-entropy and its analytic gradient over a batch.
/// Public so callers can verify the optimizer's objective independently.
pub fn loss_and_grad(
    weights: &Array2<f64>,
    bias: &Array1<f64>,
    x: &Array2<f64>,
    y: &[usize],
) -> (f64, Array2<f64>, Array1<f64>) {
    let n = x.nrows();
    debug_assert_eq!(n, y.len());
    let mut probs = forward_logits(weights, bias, x);
    let mut loss = 0.0;
    for (i, mut row) in probs.rows_mut().into_iter().enumerate() {
        let target_logit = row[y[i]];
        let max = row.fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        row.mapv_inplace(|v| (v - max).exp());
        let sum = row.sum();
        loss += max + sum.ln() - target_logit;
        row.mapv_inplace(|v| v / sum);
        row[y[i]] -= 1.0;
    }
    let scale = 1.0 / n as f64;
    let grad_w = probs.t().dot(x) * scale;
    let grad_b = probs.sum_axis(Axis(0)) * scale;
    (loss * scale, grad_w, grad_b)
}

fn accuracy(weights: &Array2<f64>, bias: &Array1<f64>, x: &Array2<f64>, y: &[usize]) -> f64 {
    let logits = forward_logits(weights, bias, x);
    let correct = logits
        .rows()
        .into_iter()
        .zip(y)
        .filter(|(row, &label)| argmax_row(row.as_slice().expect("contiguous row")) == label)
        .count();
    correct as f64 / y.len() as f64
}

struct AdamW {
    m_w: Array2<f64>,
    v_w: Array2<f64>,
    m_b: Array1<f64>,
    v_b: Array1<f64>,
    step: i32,
}

impl AdamW {
    fn new(classes: usize, dims: usize) -> Self {
        AdamW {
            m_w: Array2::zeros((classes, dims)),
            v_w: Array2::zeros((classes, dims)),
            m_b: Array1::zeros(classes),
            v_b: Array1::zeros(classes),
            step: 0,
        }
    }

    /// One decoupled-weight-decay Adam step; decay applies to every
    /// parameter, bias included.
    fn update(
        &mut self,
        cfg: &ProbeConfig,
        weights: &mut Array2<f64>,
        bias: &mut Array1<f64>,
        grad_w: &Array2<f64>,
        grad_b: &Array1<f64>,
    ) {
        self.step += 1;
        let bc1 = 1.0 - cfg.beta1.powi(self.step);
        let bc2 = 1.0 - cfg.beta2.powi(self.step);
        azip!((p in weights, g in grad_w, m in &mut self.m_w, v in &mut self.v_w) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * *g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * *g * *g;
            let step = (*m / bc1) / ((*v / bc2).sqrt() + cfg.eps);
            *p -= cfg.lr * (step + cfg.weight_decay * *p);
        });
        azip!((p in bias, g in grad_b, m in &mut self.m_b, v in &mut self.v_b) {
            *m = cfg.beta1 * *m + (1.0 - cfg.beta1) * *g;
            *v = cfg.beta2 * *v + (1.0 - cfg.beta2) * *g * *g;
            let step = (*m / bc1) / ((*v / bc2).sqrt() + cfg.eps);
            *p -= cfg.lr * (step + cfg.weight_decay * *p);
        });
    }
}

fn check_labels(
    x: &Array2<f64>,
    y: &[usize],
    classes: usize,
    split: &'static str,
) -> Result<(), ProbeError> {
    if x.nrows() != y.len() {
        return Err(ProbeError::Data(format!(
            "{split} set has {} feature rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(ProbeError::Data(format!("{split} set is empty")));
    }
    let mut seen = vec![false; classes];
    for &label in y {
        if label >= classes {
            return Err(ProbeError::BadLabel { label, classes });
        }
        seen[label] = true;
    }
    if let Some(class) = seen.iter().position(|&s| !s) {
        return Err(ProbeError::EmptyClass { class, split });
    }
    Ok(())
}

/// Trains a linear probe with softmax cross-entropy and AdamW. The model
/// snapshot returned is the one from the first epoch reaching the best
/// validation accuracy; training stops early once `patience` consecutive
/// epochs fail to improve on it.
pub fn train_probe(
    train_x: &Array2<f64>,
    train_y: &[usize],
    val_x: &Array2<f64>,
    val_y: &[usize],
    classes: usize,
    config: &ProbeConfig,
) -> Result<ProbeModel, ProbeError> {
    config.validate()?;
    if classes < 2 {
        return Err(ProbeError::Data(format!("need at least 2 classes, got {classes}")));
    }
    check_labels(train_x, train_y, classes, "train")?;
    check_labels(val_x, val_y, classes, "val")?;
    if val_x.ncols() != train_x.ncols() {
        return Err(ProbeError::DimensionMismatch {
            got: val_x.ncols(),
            want: train_x.ncols(),
        });
    }

    let dims = train_x.ncols();
    let n = train_x.nrows();
    let mut weights = Array2::<f64>::zeros((classes, dims));
    let mut bias = Array1::<f64>::zeros(classes);
    let mut opt = AdamW::new(classes, dims);

    let mut best_weights = weights.clone();
    let mut best_bias = bias.clone();
    let mut best_val_acc = f64::NEG_INFINITY;
    let mut best_epoch = 0;
    let mut since_best = 0;
    let mut history = Vec::new();

    let mut order: Vec<usize> = (0..n).collect();
    for epoch in 1..=config.max_epochs {
        let mut rng = derive_rng(config.seed, "probe/shuffle", epoch as u64);
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        for batch in order.chunks(config.batch_size) {
            let xb = train_x.select(Axis(0), batch);
            let yb: Vec<usize> = batch.iter().map(|&i| train_y[i]).collect();
            let (loss, grad_w, grad_b) = loss_and_grad(&weights, &bias, &xb, &yb);
            if !loss.is_finite() {
                return Err(ProbeError::Diverged { epoch });
            }
            opt.update(config, &mut weights, &mut bias, &grad_w, &grad_b);
            loss_sum += loss * batch.len() as f64;
        }
        let train_loss = loss_sum / n as f64;
        let val_acc = accuracy(&weights, &bias, val_x, val_y);
        history.push(EpochStats { train_loss, val_acc });

        if val_acc > best_val_acc {
            best_val_acc = val_acc;
            best_epoch = epoch;
            best_weights.assign(&weights);
            best_bias.assign(&bias);
            since_best = 0;
        } else {
            since_best += 1;
            if since_best >= config.patience {
                break;
            }
        }
    }

    Ok(ProbeModel {
        weights: best_weights,
        bias: best_bias,
        best_val_acc,
        best_epoch,
        history,
    })
}

/// Scores argmax predictions: per-class recall, macro recall over classes
/// present in the set, overall accuracy, and the full confusion matrix.
pub fn evaluate(model: &ProbeModel, x: &Array2<f64>, y: &[usize]) -> Result<EvalReport, ProbeError> {
    if x.ncols() != model.dims() {
        return Err(ProbeError::DimensionMismatch {
            got: x.ncols(),
            want: model.dims(),
        });
    }
    if x.nrows() != y.len() {
        return Err(ProbeError::Data(format!(
            "test set has {} feature rows but {} labels",
            x.nrows(),
            y.len()
        )));
    }
    if y.is_empty() {
        return Err(ProbeError::Data("test set is empty".into()));
    }
    let classes = model.classes();
    let mut confusion = Array2::<usize>::zeros((classes, classes));
    let logits = forward_logits(&model.weights, &model.bias, x);
    for (row, &label) in logits.rows().into_iter().zip(y) {
        if label >= classes {
            return Err(ProbeError::BadLabel { label, classes });
        }
        let pred = argmax_row(row.as_slice().expect("contiguous row"));
        confusion[[label, pred]] += 1;
    }

    let mut per_class_recall = Vec::with_capacity(classes);
    let mut macro_sum = 0.0;
    let mut macro_n = 0;
    for c in 0..classes {
        let total: usize = confusion.row(c).sum();
        if total == 0 {
            per_class_recall.push(f64::NAN);
        } else {
            let recall = 100.0 * confusion[[c, c]] as f64 / total as f64;
            per_class_recall.push(recall);
            macro_sum += recall;
            macro_n += 1;
        }
    }
    let trace: usize = (0..classes).map(|c| confusion[[c, c]]).sum();
    Ok(EvalReport {
        per_class_recall,
        overall_accuracy: 100.0 * trace as f64 / y.len() as f64,
        macro_recall: macro_sum / macro_n as f64,
        confusion,
    })
}

/// Zeroes column `d`. On z-scored features this pins the dimension to the
/// training mean of the raw space.
pub fn mask_dimension(x: &Array2<f64>, d: usize) -> Result<Array2<f64>, ProbeError> {
    if d >= x.ncols() {
        return Err(ProbeError::BadDim { dim: d, dims: x.ncols() });
    }
    let mut masked = x.clone();
    masked.column_mut(d).fill(0.0);
    Ok(masked)
}

/// One binary (or small multi-class) classification dataset with fixed
/// train/val/test splits, features already normalized.
#[derive(Debug, Clone)]
pub struct ProbeDataset {
    pub train_x: Array2<f64>,
    pub train_y: Vec<usize>,
    pub val_x: Array2<f64>,
    pub val_y: Vec<usize>,
    pub test_x: Array2<f64>,
    pub test_y: Vec<usize>,
}

impl ProbeDataset {
    pub fn dims(&self) -> usize {
        self.train_x.ncols()
    }

    pub fn classes(&self) -> usize {
        let max = self
            .train_y
            .iter()
            .chain(&self.val_y)
            .chain(&self.test_y)
            .copied()
            .max()
            .unwrap_or(0);
        max + 1
    }

    pub fn validate(&self) -> Result<(), ProbeError> {
        let classes = self.classes();
        if classes < 2 {
            return Err(ProbeError::Data(format!("need at least 2 classes, got {classes}")));
        }
        check_labels(&self.train_x, &self.train_y, classes, "train")?;
        check_labels(&self.val_x, &self.val_y, classes, "val")?;
        if self.test_x.nrows() != self.test_y.len() || self.test_y.is_empty() {
            return Err(ProbeError::Data("test set is empty or mislabeled".into()));
        }
        for split_x in [&self.val_x, &self.test_x] {
            if split_x.ncols() != self.dims() {
                return Err(ProbeError::DimensionMismatch {
                    got: split_x.ncols(),
                    want: self.dims(),
                });
            }
        }
        Ok(())
    }

    fn masked(&self, d: usize) -> Result<ProbeDataset, ProbeError> {
        Ok(ProbeDataset {
            train_x: mask_dimension(&self.train_x, d)?,
            train_y: self.train_y.clone(),
            val_x: mask_dimension(&self.val_x, d)?,
            val_y: self.val_y.clone(),
            test_x: mask_dimension(&self.test_x, d)?,
            test_y: self.test_y.clone(),
        })
    }
}

/// Per-dimension importance scores from the masking sweep. `delta_pp[t, d]`
/// is the drop in test accuracy, in percentage points, when dimension `d`
/// is masked for task `t`, relative to that task's unmasked baseline.
#[derive(Debug, Clone)]
pub struct MaskMatrix {
    pub tasks: Vec<String>,
    pub baseline_acc: Vec<f64>,
    pub delta_pp: Array2<f64>,
}

impl MaskMatrix {
    pub fn dims(&self) -> usize {
        self.delta_pp.ncols()
    }
}

fn fit_and_score(dataset: &ProbeDataset, config: &ProbeConfig) -> Result<f64, ProbeError> {
    let model = train_probe(
        &dataset.train_x,
        &dataset.train_y,
        &dataset.val_x,
        &dataset.val_y,
        dataset.classes(),
        config,
    )?;
    Ok(evaluate(&model, &dataset.test_x, &dataset.test_y)?.overall_accuracy)
}

/// Trains one unmasked baseline per task plus one probe per (task, dim)
/// with that dimension masked in train/val/test alike. Jobs run in
/// parallel; each derives its own seed from the task name and dimension,
/// so results do not depend on scheduling.
pub fn mask_sweep(
    tasks: &[(String, ProbeDataset)],
    config: &ProbeConfig,
) -> Result<MaskMatrix, ProbeError> {
    config.validate()?;
    if tasks.is_empty() {
        return Err(ProbeError::Data("mask sweep needs at least one task".into()));
    }
    let dims = tasks[0].1.dims();
    for (name, dataset) in tasks {
        dataset.validate().map_err(|e| ProbeError::MaskTask {
            task: name.clone(),
            stage: "validate".into(),
            source: Box::new(e),
        })?;
        if dataset.dims() != dims {
            return Err(ProbeError::DimensionMismatch {
                got: dataset.dims(),
                want: dims,
            });
        }
    }

    // Job index 0 is the baseline; d + 1 is the probe with dimension d masked.
    let jobs: Vec<(usize, Option<usize>)> = (0..tasks.len())
        .flat_map(|t| std::iter::once((t, None)).chain((0..dims).map(move |d| (t, Some(d)))))
        .collect();
    let scores: Vec<(usize, Option<usize>, f64)> = jobs
        .par_iter()
        .map(|&(t, dim)| {
            let (name, dataset) = &tasks[t];
            let purpose = format!("probe/mask/{name}");
            let index = dim.map(|d| d as u64 + 1).unwrap_or(0);
            let job_config = ProbeConfig {
                seed: derive_seed(config.seed, &purpose, index),
                ..config.clone()
            };
            let run = || -> Result<f64, ProbeError> {
                match dim {
                    None => fit_and_score(dataset, &job_config),
                    Some(d) => fit_and_score(&dataset.masked(d)?, &job_config),
                }
            };
            let acc = run().map_err(|e| ProbeError::MaskTask {
                task: name.clone(),
                stage: dim.map_or("baseline".into(), |d| format!("dim {d}")),
                source: Box::new(e),
            })?;
            Ok((t, dim, acc))
        })
        .collect::<Result<_, ProbeError>>()?;

    let mut baseline_acc = vec![f64::NAN; tasks.len()];
    let mut masked_acc = Array2::<f64>::zeros((tasks.len(), dims));
    for (t, dim, acc) in scores {
        match dim {
            None => baseline_acc[t] = acc,
            Some(d) => masked_acc[[t, d]] = acc,
        }
    }
    let mut delta_pp = Array2::<f64>::zeros((tasks.len(), dims));
    for t in 0..tasks.len() {
        for d in 0..dims {
            delta_pp[[t, d]] = baseline_acc[t] - masked_acc[[t, d]];
        }
    }
    Ok(MaskMatrix {
        tasks: tasks.iter().map(|(name, _)| name.clone()).collect(),
        baseline_acc,
        delta_pp,
    })
}
