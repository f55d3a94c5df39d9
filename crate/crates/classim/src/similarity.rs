//! The similarity score itself: average of the two directed
//! misclassification rates of a class pair, and the full symmetric matrix.

use serde::{Deserialize, Serialize};

use crate::counting::ConfusionCounts;
use crate::error::{Error, Result};
use crate::types::ClassSet;

/// Similarity of one class pair:
/// `(N_{j|i} / N_i + N_{i|j} / N_j) / 2`.
///
/// The two ratios are always evaluated with the pair in canonical index
/// order before averaging, so `class_sim(c, i, j)` and `class_sim(c, j, i)`
/// are the same expression and therefore bit-identical.
pub fn class_sim(counts: &ConfusionCounts, i: usize, j: usize) -> Result<f64> {
    let k = counts.classes().len();
    if i >= k || j >= k {
        return Err(Error::UnknownLabel(format!("#{}", i.max(j))));
    }
    if i == j {
        return Err(Error::IdenticalPair(counts.classes().label(i).to_string()));
    }
    let (a, b) = (i.min(j), i.max(j));
    let rate_ab = counts.misclassified(a, b) as f64 / counts.total(a) as f64;
    let rate_ba = counts.misclassified(b, a) as f64 / counts.total(b) as f64;
    Ok(0.5 * (rate_ab + rate_ba))
}

/// Symmetric per-pair similarity over the whole class universe, with the
/// diagonal fixed at 1 (a class is maximally similar to itself).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityMatrix {
    classes: ClassSet,
    /// Row-major `K x K`.
    values: Vec<f64>,
}

impl SimilarityMatrix {
    /// Rebuild from raw values (e.g. a parsed file), enforcing shape,
    /// range, unit diagonal and bit-exact symmetry.
    pub fn from_parts(classes: ClassSet, values: Vec<f64>) -> Result<Self> {
        let k = classes.len();
        if values.len() != k * k {
            return Err(Error::InvalidParameter(format!(
                "similarity matrix shape mismatch for {k} classes"
            )));
        }
        for i in 0..k {
            if values[i * k + i] != 1.0 {
                return Err(Error::InvalidParameter(format!(
                    "similarity diagonal for `{}` must be 1",
                    classes.label(i)
                )));
            }
            for j in 0..k {
                let v = values[i * k + j];
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::InvalidParameter(format!(
                        "similarity value {v} outside [0, 1]"
                    )));
                }
                if v.to_bits() != values[j * k + i].to_bits() {
                    return Err(Error::InvalidParameter(format!(
                        "similarity matrix not symmetric at ({}, {})",
                        classes.label(i),
                        classes.label(j)
                    )));
                }
            }
        }
        Ok(Self { classes, values })
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.classes.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let k = self.classes.len();
        &self.values[i * k..(i + 1) * k]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The `k` most similar classes to `target`, descending, ties broken by
    /// label order. `k` may not exceed the number of other classes.
    pub fn top_k(&self, target: &str, k: usize) -> Result<Vec<(String, f64)>> {
        let t = self.classes.require(target)?;
        let limit = self.classes.len() - 1;
        if k == 0 || k > limit {
            return Err(Error::InvalidParameter(format!(
                "top-k must be between 1 and {limit}, got {k}"
            )));
        }
        let mut others: Vec<usize> = (0..self.classes.len()).filter(|&j| j != t).collect();
        // stable sort + lexicographic base order = deterministic tie-break
        others.sort_by(|&x, &y| self.get(t, y).total_cmp(&self.get(t, x)));
        Ok(others
            .into_iter()
            .take(k)
            .map(|j| (self.classes.label(j).to_string(), self.get(t, j)))
            .collect())
    }
}

/// Build the similarity matrix from a count table. Each unordered pair is
/// computed once and mirrored, so symmetry holds bit-for-bit.
pub fn similarity_matrix(counts: &ConfusionCounts) -> Result<SimilarityMatrix> {
    let classes = counts.classes().clone();
    let k = classes.len();
    if k < 2 {
        return Err(Error::InvalidParameter(
            "similarity needs at least two classes".to_string(),
        ));
    }
    let mut values = vec![0.0f64; k * k];
    for i in 0..k {
        values[i * k + i] = 1.0;
    }
    for (a, b) in classes.pairs() {
        let v = class_sim(counts, a, b)?;
        values[a * k + b] = v;
        values[b * k + a] = v;
    }
    SimilarityMatrix::from_parts(classes, values)
}

/// Render one `class:score` entry with three decimals, the row format used
/// by the top-k tables.
pub fn format_ranked_entry(label: &str, score: f64) -> String {
    format!("{label}:{score:.3}")
}
