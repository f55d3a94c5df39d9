//! L2-regularized logistic models, binary and multinomial, trained with
//! deterministic full-batch gradient descent.
//!
//! The trainer is intentionally plain: standardize features on the training
//! subset, start from small seeded Gaussian weights, take full-batch steps,
//! and on any loss increase retry the same epoch with a halved learning rate
//! (the halved rate sticks). That makes the recorded loss history monotone
//! non-increasing by construction and the whole procedure a pure function of
//! `(data, config)` — two runs produce bit-identical weights.
//!
//! Scores go through a pre-activation clamp so reported confidences stay
//! strictly inside `(0, 1)`; exact 0.5 therefore only arises from genuinely
//! tied inputs, never from saturation.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::predictions::PredictionTable;
use crate::types::{self, LabeledFeatureSet};

/// Pre-activation clamp: `sigmoid(±30)` is within 1e-13 of the saturation
/// values while keeping scores strictly inside the open unit interval.
pub const SCORE_CLAMP: f64 = 30.0;

/// Supported file format revision for persisted models.
pub const MODEL_FORMAT_VERSION: u32 = 1;

fn default_format_version() -> u32 {
    MODEL_FORMAT_VERSION
}

/// How per-sample weights are assigned during training.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeighting {
    /// Every sample weighs 1.
    #[default]
    None,
    /// Classes contribute equally: a sample of class `c` weighs
    /// `n / (k * n_c)`.
    Balanced,
}

/// Hyperparameters for one training run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: u32,
    pub l2: f64,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.5,
            epochs: 300,
            l2: 1e-4,
            seed: 0,
            class_weighting: ClassWeighting::None,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !self.learning_rate.is_finite() || self.learning_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.epochs == 0 {
            return Err(Error::InvalidParameter("epochs must be at least 1".into()));
        }
        if !self.l2.is_finite() || self.l2 < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "l2 strength must be non-negative, got {}",
                self.l2
            )));
        }
        Ok(())
    }

    /// Parse from TOML text. Unknown keys are rejected to catch typos.
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: TrainConfig = toml::from_str(text).map_err(|e| {
            Error::InvalidParameter(format!(
                "train config: {}",
                e.to_string().replace('\n', " ")
            ))
        })?;
        config.validate()?;
        Ok(config)
    }
}

/// Per-feature affine normalization fitted on a training subset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    /// Population standard deviation; constant features get scale 1 so they
    /// standardize to exactly 0 instead of dividing by zero.
    pub std: Vec<f64>,
}

impl Standardizer {
    pub fn fit(samples: &[&[f64]], dim: usize) -> Self {
        let n = samples.len().max(1) as f64;
        let mut mean = vec![0.0; dim];
        for row in samples {
            for (m, v) in mean.iter_mut().zip(row.iter()) {
                *m += v;
            }
        }
        for m in &mut mean {
            *m /= n;
        }
        let mut var = vec![0.0; dim];
        for row in samples {
            for ((s, v), m) in var.iter_mut().zip(row.iter()).zip(mean.iter()) {
                let d = v - m;
                *s += d * d;
            }
        }
        let std = var
            .into_iter()
            .map(|s| {
                let sd = (s / n).sqrt();
                if sd > 0.0 {
                    sd
                } else {
                    1.0
                }
            })
            .collect();
        Self { mean, std }
    }

    pub fn apply_into(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.mean.len() {
            out[i] = (x[i] - self.mean[i]) / self.std[i];
        }
    }

}

/// What a model discriminates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "role", rename_all = "lowercase")]
pub enum ModelTarget {
    /// Binary: `positive` against the pooled `negatives`.
    Ovr {
        positive: String,
        negatives: Vec<String>,
    },
    /// Binary: the canonical pair, score read as confidence for `second`.
    Pair { first: String, second: String },
    /// Multinomial over the full universe.
    Multi { classes: Vec<String> },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Binary,
    Multinomial,
}

/// A trained linear model: standardizer plus one weight row per output
/// (binary models have a single row). Each row is `dim` weights followed by
/// the bias.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    #[serde(default = "default_format_version")]
    pub format_version: u32,
    pub kind: ModelKind,
    pub target: ModelTarget,
    pub feature_dim: usize,
    pub standardizer: Standardizer,
    pub weights: Vec<Vec<f64>>,
    pub train_config: TrainConfig,
    /// Loss after initialization and after each accepted epoch. Not
    /// persisted; reload gives an empty history.
    #[serde(skip)]
    pub loss_history: Vec<f64>,
}

impl LinearModel {
    fn check_input_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: x.len(),
            });
        }
        Ok(())
    }

    fn raw_score(&self, row: usize, x_std: &[f64]) -> f64 {
        let w = &self.weights[row];
        let mut z = w[self.feature_dim];
        for d in 0..self.feature_dim {
            z += w[d] * x_std[d];
        }
        z
    }

    /// Confidence of a binary model, strictly inside `(0, 1)`.
    pub fn binary_score(&self, x: &[f64]) -> Result<f64> {
        if self.kind != ModelKind::Binary {
            return Err(Error::ModeMismatch {
                expected: "binary",
                found: "multinomial",
            });
        }
        self.check_input_dim(x)?;
        let mut buf = vec![0.0; self.feature_dim];
        self.standardizer.apply_into(x, &mut buf);
        let z = self.raw_score(0, &buf).clamp(-SCORE_CLAMP, SCORE_CLAMP);
        Ok(sigmoid(z))
    }

    /// Probability vector of a multinomial model (softmax; sums to 1 up to
    /// float rounding).
    pub fn multi_probs(&self, x: &[f64]) -> Result<Vec<f64>> {
        if self.kind != ModelKind::Multinomial {
            return Err(Error::ModeMismatch {
                expected: "multinomial",
                found: "binary",
            });
        }
        self.check_input_dim(x)?;
        let mut buf = vec![0.0; self.feature_dim];
        self.standardizer.apply_into(x, &mut buf);
        let z: Vec<f64> = (0..self.weights.len())
            .map(|c| self.raw_score(c, &buf))
            .collect();
        Ok(softmax(&z))
    }

    /// Serialize to the on-disk JSON form (pretty, trailing newline).
    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("model serializes");
        text.push('\n');
        text
    }

    /// Parse and structurally validate a persisted model.
    pub fn from_json(text: &str) -> Result<Self> {
        let model: LinearModel = serde_json::from_str(text).map_err(|e| {
            Error::InvalidParameter(format!("model file: {e}").replace('\n', " "))
        })?;
        model.validate()?;
        Ok(model)
    }

    fn validate(&self) -> Result<()> {
        if self.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported model format version {}",
                self.format_version
            )));
        }
        self.train_config.validate()?;
        if self.standardizer.mean.len() != self.feature_dim
            || self.standardizer.std.len() != self.feature_dim
        {
            return Err(Error::DimensionMismatch {
                expected: self.feature_dim,
                found: self.standardizer.mean.len(),
            });
        }
        if self.standardizer.std.iter().any(|&s| !(s > 0.0) || !s.is_finite()) {
            return Err(Error::InvalidParameter(
                "standardizer scales must be positive".into(),
            ));
        }
        let expected_rows = match (&self.kind, &self.target) {
            (ModelKind::Binary, ModelTarget::Ovr { positive, negatives }) => {
                if negatives.is_empty() {
                    return Err(Error::EmptySet("negative class list"));
                }
                if negatives.contains(positive) {
                    return Err(Error::TargetInNegatives(positive.clone()));
                }
                1
            }
            (ModelKind::Binary, ModelTarget::Pair { first, second }) => {
                if first == second {
                    return Err(Error::IdenticalPair(first.clone()));
                }
                if first > second {
                    return Err(Error::InvalidParameter(
                        "pair target must be in canonical label order".into(),
                    ));
                }
                1
            }
            (ModelKind::Multinomial, ModelTarget::Multi { classes }) => {
                if classes.len() < 2 {
                    return Err(Error::EmptySet("multinomial class list"));
                }
                classes.len()
            }
            _ => {
                return Err(Error::InvalidParameter(
                    "model kind does not match its target".into(),
                ))
            }
        };
        if self.weights.len() != expected_rows {
            return Err(Error::InvalidParameter(format!(
                "expected {expected_rows} weight rows, found {}",
                self.weights.len()
            )));
        }
        for row in &self.weights {
            if row.len() != self.feature_dim + 1 {
                return Err(Error::DimensionMismatch {
                    expected: self.feature_dim + 1,
                    found: row.len(),
                });
            }
            if row.iter().any(|w| !w.is_finite()) {
                return Err(Error::InvalidParameter(
                    "model weights must be finite".into(),
                ));
            }
        }
        Ok(())
    }

    pub fn save_to(&self, path: &std::path::Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load_from(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

fn softmax(z: &[f64]) -> Vec<f64> {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = z.iter().map(|&v| (v - max).exp()).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn logsumexp(z: &[f64]) -> f64 {
    let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + z.iter().map(|&v| (v - max).exp()).sum::<f64>().ln()
}

/// Standardized design matrix plus labels and per-sample weights.
struct Design {
    x: Vec<f64>,
    n: usize,
    dim: usize,
    /// Class index per sample; 0/1 for binary problems.
    y: Vec<usize>,
    /// Per-sample weights, summing to `n`.
    sw: Vec<f64>,
    standardizer: Standardizer,
}

impl Design {
    fn build(
        rows: &[(&[f64], usize)],
        dim: usize,
        n_outputs: usize,
        weighting: ClassWeighting,
    ) -> Self {
        let raw: Vec<&[f64]> = rows.iter().map(|(x, _)| *x).collect();
        let standardizer = Standardizer::fit(&raw, dim);
        let n = rows.len();
        let mut x = vec![0.0; n * dim];
        for (i, row) in raw.iter().enumerate() {
            standardizer.apply_into(row, &mut x[i * dim..(i + 1) * dim]);
        }
        let y: Vec<usize> = rows.iter().map(|(_, y)| *y).collect();
        let sw = match weighting {
            ClassWeighting::None => vec![1.0; n],
            ClassWeighting::Balanced => {
                let mut counts = vec![0usize; n_outputs];
                for &label in &y {
                    counts[label] += 1;
                }
                y.iter()
                    .map(|&label| n as f64 / (n_outputs as f64 * counts[label] as f64))
                    .collect()
            }
        };
        Self {
            x,
            n,
            dim,
            y,
            sw,
            standardizer,
        }
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }
}

/// Weighted mean cross-entropy plus the L2 term (biases unregularized).
fn objective(design: &Design, weights: &[Vec<f64>], l2: f64, binary: bool) -> f64 {
    let dim = design.dim;
    let total_w: f64 = design.sw.iter().sum();
    let mut data_term = 0.0;
    if binary {
        let w = &weights[0];
        for i in 0..design.n {
            let xi = design.row(i);
            let mut z = w[dim];
            for d in 0..dim {
                z += w[d] * xi[d];
            }
            let yi = design.y[i] as f64;
            data_term += design.sw[i] * (softplus(z) - yi * z);
        }
    } else {
        let mut z = vec![0.0; weights.len()];
        for i in 0..design.n {
            let xi = design.row(i);
            for (c, row) in weights.iter().enumerate() {
                let mut v = row[dim];
                for d in 0..dim {
                    v += row[d] * xi[d];
                }
                z[c] = v;
            }
            data_term += design.sw[i] * (logsumexp(&z) - z[design.y[i]]);
        }
    }
    let mut reg = 0.0;
    for row in weights {
        for &w in &row[..dim] {
            reg += w * w;
        }
    }
    data_term / total_w + 0.5 * l2 * reg
}

/// Gradient of [`objective`] with the same layout as `weights`.
fn gradient(design: &Design, weights: &[Vec<f64>], l2: f64, binary: bool) -> Vec<Vec<f64>> {
    let dim = design.dim;
    let total_w: f64 = design.sw.iter().sum();
    let mut grad = vec![vec![0.0; dim + 1]; weights.len()];
    if binary {
        let w = &weights[0];
        let g = &mut grad[0];
        for i in 0..design.n {
            let xi = design.row(i);
            let mut z = w[dim];
            for d in 0..dim {
                z += w[d] * xi[d];
            }
            let delta = design.sw[i] * (sigmoid(z) - design.y[i] as f64);
            for d in 0..dim {
                g[d] += delta * xi[d];
            }
            g[dim] += delta;
        }
    } else {
        let k = weights.len();
        let mut z = vec![0.0; k];
        for i in 0..design.n {
            let xi = design.row(i);
            for (c, row) in weights.iter().enumerate() {
                let mut v = row[dim];
                for d in 0..dim {
                    v += row[d] * xi[d];
                }
                z[c] = v;
            }
            let probs = softmax(&z);
            for c in 0..k {
                let indicator = if design.y[i] == c { 1.0 } else { 0.0 };
                let delta = design.sw[i] * (probs[c] - indicator);
                for d in 0..dim {
                    grad[c][d] += delta * xi[d];
                }
                grad[c][dim] += delta;
            }
        }
    }
    for (g, w) in grad.iter_mut().zip(weights.iter()) {
        for d in 0..dim {
            g[d] = g[d] / total_w + l2 * w[d];
            // biases skip the L2 term
        }
        g[dim] /= total_w;
    }
    grad
}

/// Full-batch descent with the loss-halving backoff. Returns the weight rows
/// and the accepted-loss history (initial loss first).
fn fit(
    design: &Design,
    n_rows: usize,
    config: &TrainConfig,
    rng: &mut ChaCha8Rng,
    binary: bool,
) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let init = Normal::new(0.0, 0.01).expect("valid init distribution");
    let mut weights: Vec<Vec<f64>> = (0..n_rows)
        .map(|_| (0..design.dim + 1).map(|_| init.sample(rng)).collect())
        .collect();
    let mut loss = objective(design, &weights, config.l2, binary);
    if !loss.is_finite() {
        return Err(Error::NonFiniteLoss(0));
    }
    let mut history = vec![loss];
    let mut lr = config.learning_rate;
    'epochs: for epoch in 1..=config.epochs {
        let grad = gradient(design, &weights, config.l2, binary);
        loop {
            if lr == 0.0 {
                // backoff underflowed: no usable step size left
                break 'epochs;
            }
            let candidate: Vec<Vec<f64>> = weights
                .iter()
                .zip(grad.iter())
                .map(|(w, g)| w.iter().zip(g.iter()).map(|(w, g)| w - lr * g).collect())
                .collect();
            let candidate_loss = objective(design, &candidate, config.l2, binary);
            if candidate_loss.is_nan() {
                return Err(Error::NonFiniteLoss(epoch));
            }
            if candidate_loss <= loss {
                weights = candidate;
                loss = candidate_loss;
                history.push(loss);
                break;
            }
            // overshoot: retry this epoch with half the rate, and keep it
            lr *= 0.5;
        }
    }
    Ok((weights, history))
}

fn subset_rows<'a>(
    train: &'a LabeledFeatureSet,
    label_of: impl Fn(usize) -> Option<usize>,
) -> Vec<(&'a [f64], usize)> {
    train
        .samples()
        .iter()
        .filter_map(|s| label_of(s.class).map(|y| (s.features.as_slice(), y)))
        .collect()
}

/// Train `positive` against the pooled `negatives` (one-vs-rest component).
pub fn train_ovr(
    train: &LabeledFeatureSet,
    positive: &str,
    negatives: &[String],
    config: &TrainConfig,
) -> Result<LinearModel> {
    config.validate()?;
    let pos_idx = train.classes().require(positive)?;
    if negatives.is_empty() {
        return Err(Error::EmptySet("negative class list"));
    }
    let mut neg_idx = Vec::with_capacity(negatives.len());
    for label in negatives {
        let idx = train.classes().require(label)?;
        if idx == pos_idx {
            return Err(Error::TargetInNegatives(positive.to_string()));
        }
        if neg_idx.contains(&idx) {
            return Err(Error::DuplicateLabel(label.clone()));
        }
        neg_idx.push(idx);
    }
    let rows = subset_rows(train, |class| {
        if class == pos_idx {
            Some(1)
        } else if neg_idx.contains(&class) {
            Some(0)
        } else {
            None
        }
    });
    let n_pos = rows.iter().filter(|(_, y)| *y == 1).count();
    if n_pos == 0 {
        return Err(Error::EmptyClass(positive.to_string()));
    }
    if n_pos == rows.len() {
        return Err(Error::EmptySet("negative training samples"));
    }
    let design = Design::build(&rows, train.dim(), 2, config.class_weighting);
    let mut rng = init_stream(config.seed, train.classes().len(), StreamRole::Ovr(pos_idx));
    let (weights, history) = fit(&design, 1, config, &mut rng, true)?;
    let mut negatives: Vec<String> = negatives.to_vec();
    negatives.sort();
    Ok(LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::Binary,
        target: ModelTarget::Ovr {
            positive: positive.to_string(),
            negatives,
        },
        feature_dim: train.dim(),
        standardizer: design.standardizer,
        weights,
        train_config: config.clone(),
        loss_history: history,
    })
}

/// Train the shared classifier of one class pair. The pair is stored in
/// canonical label order and the score is the confidence for the second.
pub fn train_pair(
    train: &LabeledFeatureSet,
    first: &str,
    second: &str,
    config: &TrainConfig,
) -> Result<LinearModel> {
    config.validate()?;
    let i = train.classes().require(first)?;
    let j = train.classes().require(second)?;
    if i == j {
        return Err(Error::IdenticalPair(first.to_string()));
    }
    let (a, b) = (i.min(j), i.max(j));
    let rows = subset_rows(train, |class| {
        if class == a {
            Some(0)
        } else if class == b {
            Some(1)
        } else {
            None
        }
    });
    if !rows.iter().any(|(_, y)| *y == 0) {
        return Err(Error::EmptyClass(train.classes().label(a).to_string()));
    }
    if !rows.iter().any(|(_, y)| *y == 1) {
        return Err(Error::EmptyClass(train.classes().label(b).to_string()));
    }
    let design = Design::build(&rows, train.dim(), 2, config.class_weighting);
    let k = train.classes().len();
    let mut rng = init_stream(config.seed, k, StreamRole::Pair(a, b));
    let (weights, history) = fit(&design, 1, config, &mut rng, true)?;
    Ok(LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::Binary,
        target: ModelTarget::Pair {
            first: train.classes().label(a).to_string(),
            second: train.classes().label(b).to_string(),
        },
        feature_dim: train.dim(),
        standardizer: design.standardizer,
        weights,
        train_config: config.clone(),
        loss_history: history,
    })
}

/// Train one multinomial model over the full class universe.
pub fn train_multi(train: &LabeledFeatureSet, config: &TrainConfig) -> Result<LinearModel> {
    config.validate()?;
    let k = train.classes().len();
    if k < 2 {
        return Err(Error::InvalidParameter(
            "multinomial training needs at least two classes".into(),
        ));
    }
    let counts = train.per_class_counts();
    for (c, &n) in counts.iter().enumerate() {
        if n == 0 {
            return Err(Error::EmptyClass(train.classes().label(c).to_string()));
        }
    }
    let rows = subset_rows(train, Some);
    let design = Design::build(&rows, train.dim(), k, config.class_weighting);
    let mut rng = init_stream(config.seed, k, StreamRole::Multi);
    let (weights, history) = fit(&design, k, config, &mut rng, false)?;
    Ok(LinearModel {
        format_version: MODEL_FORMAT_VERSION,
        kind: ModelKind::Multinomial,
        target: ModelTarget::Multi {
            classes: train.classes().labels().to_vec(),
        },
        feature_dim: train.dim(),
        standardizer: design.standardizer,
        weights,
        train_config: config.clone(),
        loss_history: history,
    })
}

enum StreamRole {
    Ovr(usize),
    Pair(usize, usize),
    Multi,
}

/// Distinct deterministic init stream per model of a run: one-vs-rest models
/// use slots `[0, k)`, pair models `[k, k + k^2)`, the multinomial model
/// `k + k^2`.
fn init_stream(seed: u64, k: usize, role: StreamRole) -> ChaCha8Rng {
    let slot = match role {
        StreamRole::Ovr(pos) => pos,
        StreamRole::Pair(a, b) => k + a * k + b,
        StreamRole::Multi => k + k * k,
    };
    ChaCha8Rng::seed_from_u64(types::mix_seed(seed, types::stream::INIT ^ (slot as u64)))
}

/// Score an evaluation set with one model, producing a table fragment of the
/// matching shape (one column for one-vs-rest, the pair's samples for pair
/// models, full vectors for multinomial).
pub fn predict(model: &LinearModel, eval: &LabeledFeatureSet) -> Result<PredictionTable> {
    if eval.dim() != model.feature_dim {
        return Err(Error::DimensionMismatch {
            expected: model.feature_dim,
            found: eval.dim(),
        });
    }
    match &model.target {
        ModelTarget::Ovr { positive, .. } => {
            let target = eval.classes().require(positive)?;
            let mut table = PredictionTable::new_ovr(eval.classes().clone());
            for sample in eval.samples() {
                let score = model.binary_score(&sample.features)?;
                table.insert_ovr(&sample.id, target, score)?;
            }
            Ok(table)
        }
        ModelTarget::Pair { first, second } => {
            let a = eval.classes().require(first)?;
            let b = eval.classes().require(second)?;
            let pair = (a.min(b), a.max(b));
            let mut table = PredictionTable::new_pairwise(eval.classes().clone());
            for sample in eval.samples() {
                if sample.class != pair.0 && sample.class != pair.1 {
                    continue;
                }
                let score = model.binary_score(&sample.features)?;
                table.insert_pairwise(&sample.id, pair, score)?;
            }
            Ok(table)
        }
        ModelTarget::Multi { classes } => {
            if classes != eval.classes().labels() {
                return Err(Error::ClassSetMismatch);
            }
            let mut table = PredictionTable::new_multi(eval.classes().clone());
            for sample in eval.samples() {
                let probs = model.multi_probs(&sample.features)?;
                table.insert_multi(&sample.id, probs)?;
            }
            Ok(table)
        }
    }
}

/// One one-vs-rest model per class, each against all the others. Training
/// runs in parallel; model order (and every model) is independent of the
/// thread count.
pub fn train_ovr_suite(
    train: &LabeledFeatureSet,
    config: &TrainConfig,
) -> Result<Vec<LinearModel>> {
    use rayon::prelude::*;
    let classes = train.classes().clone();
    let results: Vec<Result<LinearModel>> = (0..classes.len())
        .into_par_iter()
        .map(|c| {
            let positive = classes.label(c);
            let negatives: Vec<String> = classes
                .labels()
                .iter()
                .filter(|l| l.as_str() != positive)
                .cloned()
                .collect();
            train_ovr(train, positive, &negatives, config)
        })
        .collect();
    results.into_iter().collect()
}

/// One shared classifier per unordered pair, in canonical pair order.
pub fn train_pairwise_suite(
    train: &LabeledFeatureSet,
    config: &TrainConfig,
) -> Result<Vec<((usize, usize), LinearModel)>> {
    use rayon::prelude::*;
    let classes = train.classes().clone();
    let pairs: Vec<(usize, usize)> = classes.pairs().collect();
    let results: Vec<Result<((usize, usize), LinearModel)>> = pairs
        .into_par_iter()
        .map(|(a, b)| {
            train_pair(train, classes.label(a), classes.label(b), config)
                .map(|m| ((a, b), m))
        })
        .collect();
    results.into_iter().collect()
}

/// Merge per-class one-vs-rest models into one fully covered table.
pub fn ovr_prediction_table(
    models: &[LinearModel],
    eval: &LabeledFeatureSet,
) -> Result<PredictionTable> {
    let mut table = PredictionTable::new_ovr(eval.classes().clone());
    if models.len() != eval.classes().len() {
        return Err(Error::InvalidParameter(format!(
            "expected {} one-vs-rest models, got {}",
            eval.classes().len(),
            models.len()
        )));
    }
    for (c, model) in models.iter().enumerate() {
        let ModelTarget::Ovr { positive, .. } = &model.target else {
            return Err(Error::InvalidParameter(
                "one-vs-rest table needs one-vs-rest models".into(),
            ));
        };
        if eval.classes().require(positive)? != c {
            return Err(Error::InvalidParameter(format!(
                "model for `{positive}` out of canonical position"
            )));
        }
        if eval.dim() != model.feature_dim {
            return Err(Error::DimensionMismatch {
                expected: model.feature_dim,
                found: eval.dim(),
            });
        }
        for sample in eval.samples() {
            let score = model.binary_score(&sample.features)?;
            table.insert_ovr(&sample.id, c, score)?;
        }
    }
    Ok(table)
}

/// Merge pair models into one table covering every unordered pair.
pub fn pairwise_prediction_table(
    models: &[((usize, usize), LinearModel)],
    eval: &LabeledFeatureSet,
) -> Result<PredictionTable> {
    let mut table = PredictionTable::new_pairwise(eval.classes().clone());
    for ((a, b), model) in models {
        let fragment = predict(model, eval)?;
        for sample in eval.samples() {
            if sample.class != *a && sample.class != *b {
                continue;
            }
            if let Some(score) = fragment.pairwise_score(&sample.id, (*a, *b)) {
                table.insert_pairwise(&sample.id, (*a, *b), score)?;
            }
        }
    }
    Ok(table)
}
