//! Synthetic generative scenarios with analytically known class densities.
//!
//! A scenario fixes, per class, a density from a small closed family
//! (1-D Gaussian, axis-aligned 2-D Gaussian, discrete over a value grid),
//! plus priors and sampling sizes. That buys two things:
//!
//! * the pairwise distribution overlap `∫ min(p_i, p_j)` is computable
//!   exactly — in closed form for equal-variance 1-D Gaussians, by summation
//!   for discrete pairs, by adaptive quadrature otherwise — and serves as
//!   the oracle the empirical similarity estimate is judged against;
//! * the optimal (Bayes) pairwise classifier is available in closed form, so
//!   the estimator can be run with every modeling error switched off.
//!
//! Samples are drawn from per-class RNG streams derived from `(seed, class
//! index)`, so a scenario's dataset is reproducible and per-class draws do
//! not depend on how many later classes exist.

mod quadrature;
pub mod validate;

pub use validate::{validate_classim, OracleMode, PairValidation, ValidationReport};

use std::collections::BTreeMap;

use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::types::{self, stream, stratified_split, ClassSet, Sample, SplitDataset};

/// Σ|probs| − 1 tolerance for discrete densities and priors.
pub const PROB_SUM_TOL: f64 = 1e-9;

/// Densities are truncated at ±9σ for quadrature; the discarded two-sided
/// tail mass is below 2.3e-19, far under every tolerance in play.
const GAUSS_RANGE_SIGMAS: f64 = 9.0;

/// Absolute tolerance for 1-D overlap quadrature.
const TOL_1D: f64 = 1e-10;
/// Outer/inner tolerances for iterated 2-D overlap quadrature.
const TOL_2D_OUTER: f64 = 1e-7;
const TOL_2D_INNER: f64 = 1e-9;

/// Standard normal CDF via the complementary error function.
fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x / std::f64::consts::SQRT_2)
}

fn normal_pdf(x: f64, mean: f64, std: f64) -> f64 {
    let z = (x - mean) / std;
    (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt())
}

/// One class-conditional density.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum Density {
    #[serde(rename = "gaussian-1d")]
    Gaussian1d { mean: f64, std: f64 },
    #[serde(rename = "gaussian-2d")]
    Gaussian2d { mean: [f64; 2], std: [f64; 2] },
    /// Point masses on a strictly ascending value grid.
    #[serde(rename = "discrete")]
    Discrete { values: Vec<f64>, probs: Vec<f64> },
}

impl Density {
    pub fn dim(&self) -> usize {
        match self {
            Density::Gaussian1d { .. } | Density::Discrete { .. } => 1,
            Density::Gaussian2d { .. } => 2,
        }
    }

    fn validate(&self, class: &str) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(format!("class `{class}`: {msg}")));
        match self {
            Density::Gaussian1d { mean, std } => {
                if !mean.is_finite() || !std.is_finite() || *std <= 0.0 {
                    return bad(format!("gaussian needs finite mean and std > 0, got ({mean}, {std})"));
                }
            }
            Density::Gaussian2d { mean, std } => {
                if mean.iter().any(|m| !m.is_finite())
                    || std.iter().any(|s| !s.is_finite() || *s <= 0.0)
                {
                    return bad("gaussian needs finite means and stds > 0".to_string());
                }
            }
            Density::Discrete { values, probs } => {
                if values.is_empty() || values.len() != probs.len() {
                    return bad("values and probs must be non-empty and equally long".to_string());
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return bad("grid values must be finite".to_string());
                }
                if values.windows(2).any(|w| w[0] >= w[1]) {
                    return bad("grid values must be strictly ascending".to_string());
                }
                if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
                    return bad("probabilities must be non-negative".to_string());
                }
                let sum: f64 = probs.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return bad(format!("probabilities sum to {sum}, expected 1"));
                }
            }
        }
        Ok(())
    }

    /// Density (or point mass) at `x`. For discrete densities only exact
    /// grid values carry mass; everything else is 0.
    pub fn pdf(&self, x: &[f64]) -> f64 {
        match self {
            Density::Gaussian1d { mean, std } => normal_pdf(x[0], *mean, *std),
            Density::Gaussian2d { mean, std } => {
                normal_pdf(x[0], mean[0], std[0]) * normal_pdf(x[1], mean[1], std[1])
            }
            Density::Discrete { values, probs } => values
                .iter()
                .position(|v| *v == x[0])
                .map_or(0.0, |i| probs[i]),
        }
    }

    fn sample_into(&self, rng: &mut impl Rng, out: &mut [f64]) {
        use rand_distr::{Distribution, StandardNormal};
        match self {
            Density::Gaussian1d { mean, std } => {
                let z: f64 = StandardNormal.sample(rng);
                out[0] = mean + std * z;
            }
            Density::Gaussian2d { mean, std } => {
                for d in 0..2 {
                    let z: f64 = StandardNormal.sample(rng);
                    out[d] = mean[d] + std[d] * z;
                }
            }
            Density::Discrete { values, probs } => {
                let u: f64 = rng.random();
                let mut acc = 0.0;
                let mut chosen = values.len() - 1;
                for (i, p) in probs.iter().enumerate() {
                    acc += p;
                    if u < acc {
                        chosen = i;
                        break;
                    }
                }
                out[0] = values[chosen];
            }
        }
    }
}

/// How many samples each class contributes.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SamplingPlan {
    /// `samples_per_class` from every class.
    PerClass,
    /// `samples_per_class * K` in total, allocated by priors (largest
    /// remainder).
    Proportional,
}

/// A fully validated synthetic scenario.
#[derive(Clone, Debug)]
pub struct Scenario {
    classes: ClassSet,
    densities: Vec<Density>,
    priors: Vec<f64>,
    seed: u64,
    samples_per_class: u64,
    sampling: SamplingPlan,
    annotation_noise: f64,
    dim: usize,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    seed: u64,
    samples_per_class: u64,
    #[serde(default)]
    sampling: Option<String>,
    #[serde(default)]
    annotation_noise: Option<f64>,
    classes: BTreeMap<String, Density>,
    #[serde(default)]
    priors: Option<BTreeMap<String, f64>>,
}

impl Scenario {
    /// Parse and validate the TOML scenario format:
    ///
    /// ```toml
    /// seed = 7
    /// samples_per_class = 10000
    ///
    /// [classes.left]
    /// kind = "gaussian-1d"
    /// mean = 0.0
    /// std = 1.0
    ///
    /// [classes.right]
    /// kind = "gaussian-1d"
    /// mean = 2.0
    /// std = 1.0
    /// ```
    ///
    /// Optional top-level keys: `sampling` (`"per-class"` default, or
    /// `"proportional"`), `annotation_noise` (label-noise rate in `[0, 1]`,
    /// default 0) and a `[priors]` table (uniform when absent).
    pub fn from_toml(text: &str) -> Result<Self> {
        let raw: RawScenario = toml::from_str(text).map_err(|e| {
            Error::InvalidParameter(format!("scenario: {}", e.to_string().replace('\n', " ")))
        })?;
        let classes = ClassSet::new(raw.classes.keys().cloned())?;
        if classes.len() < 2 {
            return Err(Error::InvalidParameter(
                "a scenario needs at least two classes".into(),
            ));
        }
        let densities: Vec<Density> = classes
            .labels()
            .iter()
            .map(|label| raw.classes[label].clone())
            .collect();
        for (label, density) in classes.labels().iter().zip(&densities) {
            density.validate(label)?;
        }
        let dim = densities[0].dim();
        for (label, density) in classes.labels().iter().zip(&densities) {
            if density.dim() != dim {
                return Err(Error::InvalidParameter(format!(
                    "class `{label}` has dimension {} but the scenario uses {dim}",
                    density.dim()
                )));
            }
        }
        let priors = match &raw.priors {
            None => vec![1.0 / classes.len() as f64; classes.len()],
            Some(map) => {
                for key in map.keys() {
                    if classes.index_of(key).is_none() {
                        return Err(Error::UnknownLabel(key.clone()));
                    }
                }
                let mut priors = Vec::with_capacity(classes.len());
                for label in classes.labels() {
                    let p = *map.get(label).ok_or_else(|| {
                        Error::InvalidParameter(format!("missing prior for class `{label}`"))
                    })?;
                    if !p.is_finite() || p <= 0.0 {
                        return Err(Error::InvalidParameter(format!(
                            "prior for `{label}` must be positive, got {p}"
                        )));
                    }
                    priors.push(p);
                }
                let sum: f64 = priors.iter().sum();
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(Error::InvalidParameter(format!(
                        "priors sum to {sum}, expected 1"
                    )));
                }
                priors
            }
        };
        let sampling = match raw.sampling.as_deref() {
            None | Some("per-class") => SamplingPlan::PerClass,
            Some("proportional") => SamplingPlan::Proportional,
            Some(other) => {
                return Err(Error::InvalidParameter(format!(
                    "unknown sampling plan `{other}`"
                )))
            }
        };
        let annotation_noise = raw.annotation_noise.unwrap_or(0.0);
        if !(0.0..=1.0).contains(&annotation_noise) {
            return Err(Error::InvalidParameter(format!(
                "annotation noise must lie in [0, 1], got {annotation_noise}"
            )));
        }
        if raw.samples_per_class == 0 {
            return Err(Error::InvalidParameter(
                "samples_per_class must be at least 1".into(),
            ));
        }
        Ok(Self {
            classes,
            densities,
            priors,
            seed: raw.seed,
            samples_per_class: raw.samples_per_class,
            sampling,
            annotation_noise,
            dim,
        })
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn density(&self, class: usize) -> &Density {
        &self.densities[class]
    }

    pub fn prior(&self, class: usize) -> f64 {
        self.priors[class]
    }

    /// Replace the seed (used when a run overrides the scenario file).
    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// True when every prior equals `1/K` (up to float noise). The sampled
    /// misclassification ratios estimate the pure density overlap only in
    /// this regime; reports carry the flag.
    pub fn priors_equal(&self) -> bool {
        let uniform = 1.0 / self.classes.len() as f64;
        self.priors.iter().all(|p| (p - uniform).abs() <= 1e-12)
    }

    /// Exact overlap `∫ min(p_i, p_j)` of two class densities, by the
    /// cheapest exact route available (closed form, summation, quadrature).
    pub fn exact_intersection(&self, i: usize, j: usize) -> Result<f64> {
        self.intersection_inner(i, j, false)
    }

    /// Like [`Scenario::exact_intersection`] but never taking the closed
    /// form, so closed-form and quadrature routes can be cross-checked.
    pub fn intersection_by_quadrature(&self, i: usize, j: usize) -> Result<f64> {
        self.intersection_inner(i, j, true)
    }

    fn intersection_inner(&self, i: usize, j: usize, force_quadrature: bool) -> Result<f64> {
        self.check_pair(i, j)?;
        let (di, dj) = (&self.densities[i], &self.densities[j]);
        match (di, dj) {
            (
                Density::Gaussian1d { mean: m1, std: s1 },
                Density::Gaussian1d { mean: m2, std: s2 },
            ) => {
                if *s1 == *s2 && !force_quadrature {
                    // equal variances: the two densities cross once, half a
                    // tail on each side
                    return Ok(2.0 * normal_cdf(-(m1 - m2).abs() / (2.0 * s1)));
                }
                let lo = (m1 - GAUSS_RANGE_SIGMAS * s1).min(m2 - GAUSS_RANGE_SIGMAS * s2);
                let hi = (m1 + GAUSS_RANGE_SIGMAS * s1).max(m2 + GAUSS_RANGE_SIGMAS * s2);
                quadrature::integrate(
                    |x| normal_pdf(x, *m1, *s1).min(normal_pdf(x, *m2, *s2)),
                    lo,
                    hi,
                    TOL_1D,
                )
            }
            (
                Density::Gaussian2d { mean: m1, std: s1 },
                Density::Gaussian2d { mean: m2, std: s2 },
            ) => {
                let lo = |d: usize| {
                    (m1[d] - GAUSS_RANGE_SIGMAS * s1[d]).min(m2[d] - GAUSS_RANGE_SIGMAS * s2[d])
                };
                let hi = |d: usize| {
                    (m1[d] + GAUSS_RANGE_SIGMAS * s1[d]).max(m2[d] + GAUSS_RANGE_SIGMAS * s2[d])
                };
                quadrature::integrate_2d(
                    |x, y| {
                        let p = normal_pdf(x, m1[0], s1[0]) * normal_pdf(y, m1[1], s1[1]);
                        let q = normal_pdf(x, m2[0], s2[0]) * normal_pdf(y, m2[1], s2[1]);
                        p.min(q)
                    },
                    lo(0),
                    hi(0),
                    lo(1),
                    hi(1),
                    TOL_2D_OUTER,
                    TOL_2D_INNER,
                )
            }
            (
                Density::Discrete {
                    values: v1,
                    probs: p1,
                },
                Density::Discrete {
                    values: v2,
                    probs: p2,
                },
            ) => {
                // both grids ascending: two-pointer merge on exact values
                let mut total = 0.0;
                let (mut a, mut b) = (0, 0);
                while a < v1.len() && b < v2.len() {
                    if v1[a] == v2[b] {
                        total += p1[a].min(p2[b]);
                        a += 1;
                        b += 1;
                    } else if v1[a] < v2[b] {
                        a += 1;
                    } else {
                        b += 1;
                    }
                }
                Ok(total)
            }
            _ => Err(Error::UnsupportedDensityPair {
                a: self.classes.label(i).to_string(),
                b: self.classes.label(j).to_string(),
            }),
        }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<()> {
        let k = self.classes.len();
        if i >= k || j >= k {
            return Err(Error::UnknownLabel(format!("#{}", i.max(j))));
        }
        if i == j {
            return Err(Error::IdenticalPair(self.classes.label(i).to_string()));
        }
        Ok(())
    }

    /// The optimal pairwise decision for classes `(i, j)`: 1 iff the
    /// posterior of `j` strictly exceeds the posterior of `i`, 0 otherwise
    /// (ties answer `i`). The return value doubles as the pair confidence
    /// score for `j`.
    pub fn ideal_pair_score(&self, i: usize, j: usize, x: &[f64]) -> Result<f64> {
        self.check_pair(i, j)?;
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: x.len(),
            });
        }
        let weight_i = self.priors[i] * self.densities[i].pdf(x);
        let weight_j = self.priors[j] * self.densities[j].pdf(x);
        Ok(if weight_j > weight_i { 1.0 } else { 0.0 })
    }

    /// Per-class sample counts under the sampling plan.
    fn class_counts(&self) -> Vec<u64> {
        match self.sampling {
            SamplingPlan::PerClass => vec![self.samples_per_class; self.classes.len()],
            SamplingPlan::Proportional => {
                let total = self.samples_per_class * self.classes.len() as u64;
                largest_remainder(&self.priors, total)
            }
        }
    }

    /// Draw the scenario dataset and split it 0.64 / 0.16 / 0.20,
    /// stratified by (annotated) class. Everything is derived from the
    /// scenario seed through fixed per-class streams.
    pub fn sample(&self) -> Result<SplitDataset> {
        let counts = self.class_counts();
        let mut samples = Vec::new();
        for (c, &n) in counts.iter().enumerate() {
            if n == 0 {
                return Err(Error::EmptyClass(self.classes.label(c).to_string()));
            }
            let label = self.classes.label(c);
            let mut draw = types::class_stream(self.seed, stream::DRAW, c);
            let mut noise = types::class_stream(self.seed, stream::NOISE, c);
            for idx in 0..n {
                let mut features = vec![0.0; self.dim];
                self.densities[c].sample_into(&mut draw, &mut features);
                let annotated = if self.annotation_noise > 0.0
                    && noise.random::<f64>() < self.annotation_noise
                {
                    self.draw_posterior_label(&features, noise.random::<f64>())
                } else {
                    c
                };
                samples.push(Sample {
                    id: format!("{label}-{idx:06}"),
                    class: annotated,
                    features,
                });
            }
        }
        stratified_split(self.classes.clone(), self.dim, samples, self.seed)
    }

    /// Sample a label from the posterior `p(c | x)` with the uniform draw
    /// `u`; used to model annotation mistakes.
    fn draw_posterior_label(&self, x: &[f64], u: f64) -> usize {
        let weights: Vec<f64> = (0..self.classes.len())
            .map(|c| self.priors[c] * self.densities[c].pdf(x))
            .collect();
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            // x carries no mass under any class (possible off-grid); keep
            // the draw deterministic by falling back to the prior
            let mut acc = 0.0;
            for (c, p) in self.priors.iter().enumerate() {
                acc += p;
                if u < acc {
                    return c;
                }
            }
            return self.classes.len() - 1;
        }
        let mut acc = 0.0;
        for (c, w) in weights.iter().enumerate() {
            acc += w / total;
            if u < acc {
                return c;
            }
        }
        self.classes.len() - 1
    }
}

/// Integer allocation of `total` by weights, largest remainder first, ties
/// to the lower index.
fn largest_remainder(weights: &[f64], total: u64) -> Vec<u64> {
    let exact: Vec<f64> = weights.iter().map(|w| w * total as f64).collect();
    let mut counts: Vec<u64> = exact.iter().map(|e| e.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    for idx in 0..(total - assigned) as usize {
        counts[order[idx % order.len()]] += 1;
    }
    counts
}
