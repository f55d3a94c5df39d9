//! Moment-based parametric distance: the unnormalized baseline the
//! similarity score is contrasted with.
//!
//! Each class is summarized by one Gaussian (per-dimension mean and sample
//! standard deviation) over its raw feature vectors, and the distance of two
//! classes is the squared euclidean distance between their stacked moment
//! vectors. Lower means more similar; values are unnormalized and not
//! comparable across feature scalings (multiplying every feature by `k`
//! scales distances by `k²`), which is exactly the contrast the similarity
//! score avoids by living on classifier decisions.

use crate::error::{Error, Result};
use crate::types::{ClassSet, LabeledFeatureSet};

/// Per-class first and second moments.
#[derive(Clone, Debug, PartialEq)]
pub struct ClassMoments {
    pub class: String,
    pub count: u64,
    pub mean: Vec<f64>,
    /// Sample standard deviation (n − 1 in the denominator), so it needs at
    /// least two samples per class.
    pub std: Vec<f64>,
}

/// Fit per-class moments, in canonical class order.
pub fn class_moments(set: &LabeledFeatureSet) -> Result<Vec<ClassMoments>> {
    let classes = set.classes();
    let dim = set.dim();
    let counts = set.per_class_counts();
    for (c, &n) in counts.iter().enumerate() {
        if n < 2 {
            return Err(Error::InvalidParameter(format!(
                "class `{}` has {n} samples; moments need at least 2",
                classes.label(c)
            )));
        }
    }
    let mut mean = vec![vec![0.0; dim]; classes.len()];
    for sample in set.samples() {
        for (m, v) in mean[sample.class].iter_mut().zip(&sample.features) {
            *m += v;
        }
    }
    for (c, row) in mean.iter_mut().enumerate() {
        for m in row {
            *m /= counts[c] as f64;
        }
    }
    let mut sq = vec![vec![0.0; dim]; classes.len()];
    for sample in set.samples() {
        for ((s, v), m) in sq[sample.class]
            .iter_mut()
            .zip(&sample.features)
            .zip(&mean[sample.class])
        {
            let d = v - m;
            *s += d * d;
        }
    }
    Ok((0..classes.len())
        .map(|c| ClassMoments {
            class: classes.label(c).to_string(),
            count: counts[c],
            mean: mean[c].clone(),
            std: sq[c]
                .iter()
                .map(|s| (s / (counts[c] - 1) as f64).sqrt())
                .collect(),
        })
        .collect())
}

/// `Σ_d (Δμ_d)² + (Δσ_d)²`: symmetric, non-negative, zero iff the moments
/// coincide.
pub fn parametric_distance(a: &ClassMoments, b: &ClassMoments) -> Result<f64> {
    if a.mean.len() != b.mean.len() {
        return Err(Error::DimensionMismatch {
            expected: a.mean.len(),
            found: b.mean.len(),
        });
    }
    let mut total = 0.0;
    for d in 0..a.mean.len() {
        let dm = a.mean[d] - b.mean[d];
        let ds = a.std[d] - b.std[d];
        total += dm * dm + ds * ds;
    }
    Ok(total)
}

/// Symmetric distance matrix with a zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct PdMatrix {
    classes: ClassSet,
    values: Vec<f64>,
}

impl PdMatrix {
    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.classes.len() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `k` *closest* classes (ascending distance, ties by label).
    pub fn top_k(&self, target: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let t = self.classes.require(target)?;
        let limit = self.classes.len() - 1;
        if k == 0 || k > limit {
            return Err(Error::InvalidParameter(format!(
                "top-k must be between 1 and {limit}, got {k}"
            )));
        }
        let mut others: Vec<usize> = (0..self.classes.len()).filter(|&j| j != t).collect();
        others.sort_by(|&x, &y| self.get(t, x).total_cmp(&self.get(t, y)));
        Ok(others
            .into_iter()
            .take(k)
            .map(|j| (self.classes.label(j).to_string(), self.get(t, j)))
            .collect())
    }
}

/// Moments plus pairwise distances in one step.
pub fn pd_matrix(set: &LabeledFeatureSet) -> Result<PdMatrix> {
    let classes = set.classes().clone();
    if classes.len() < 2 {
        return Err(Error::InvalidParameter(
            "distance matrix needs at least two classes".into(),
        ));
    }
    let moments = class_moments(set)?;
    let k = classes.len();
    let mut values = vec![0.0; k * k];
    for (a, b) in classes.pairs() {
        let v = parametric_distance(&moments[a], &moments[b])?;
        values[a * k + b] = v;
        values[b * k + a] = v;
    }
    Ok(PdMatrix { classes, values })
}
