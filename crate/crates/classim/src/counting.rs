//! Misclassification counting: prediction tables plus ground truth turn into
//! a table of directed counts `N_{j|i}` (samples of class `i` predicted as
//! `j`) and per-class totals.
//!
//! Decision rules are fixed here once, for all three table shapes:
//!
//! * one-vs-rest: a foreign target fires iff its confidence is strictly
//!   above 0.5, so a sample can be "misclassified" toward several targets at
//!   once and an exact 0.5 never fires;
//! * multi-class: argmax, ties resolved to the lowest class index;
//! * pairwise: one shared classifier per unordered pair `(a, b)`, `a < b`,
//!   whose score is read as the confidence for `b`. An `a`-sample counts
//!   against `b` iff the score is strictly above 0.5; a `b`-sample counts
//!   against `a` iff it is at or below 0.5. Every sample of the pair is
//!   therefore assigned to exactly one side, which is what lets the ratio
//!   sum estimate a distribution overlap without double counting ties.

use crate::error::{Error, Result};
use crate::predictions::{PredictionMode, PredictionTable};
use crate::types::{ClassSet, LabeledFeatureSet};

/// Directed misclassification counts over one evaluation set.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConfusionCounts {
    classes: ClassSet,
    /// Row-major `K x K`; entry `(i, j)` is `N_{j|i}`. Diagonal fixed at 0.
    misclass: Vec<u64>,
    /// Evaluation samples per class; all strictly positive.
    totals: Vec<u64>,
}

impl ConfusionCounts {
    /// Assemble counts from raw parts, enforcing the structural invariants:
    /// square table, zero diagonal, positive totals, `N_{j|i} <= N_i`.
    pub fn from_parts(classes: ClassSet, misclass: Vec<u64>, totals: Vec<u64>) -> Result<Self> {
        let k = classes.len();
        if misclass.len() != k * k || totals.len() != k {
            return Err(Error::InvalidParameter(format!(
                "count table shape mismatch for {k} classes"
            )));
        }
        for (i, &total) in totals.iter().enumerate() {
            if total == 0 {
                return Err(Error::EmptyClass(classes.label(i).to_string()));
            }
        }
        for i in 0..k {
            if misclass[i * k + i] != 0 {
                return Err(Error::InvalidParameter(format!(
                    "diagonal entry for class `{}` must be zero",
                    classes.label(i)
                )));
            }
            for j in 0..k {
                if misclass[i * k + j] > totals[i] {
                    return Err(Error::CountExceedsTotal {
                        a: classes.label(i).to_string(),
                        b: classes.label(j).to_string(),
                        count: misclass[i * k + j],
                        total: totals[i],
                    });
                }
            }
        }
        Ok(Self {
            classes,
            misclass,
            totals,
        })
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    /// `N_{j|i}`: samples of class `i` misclassified as `j`.
    pub fn misclassified(&self, i: usize, j: usize) -> u64 {
        self.misclass[i * self.classes.len() + j]
    }

    /// `N_i`: evaluation samples of class `i`.
    pub fn total(&self, i: usize) -> u64 {
        self.totals[i]
    }
}

fn check_universe(eval: &LabeledFeatureSet, preds: &PredictionTable) -> Result<()> {
    if eval.classes() != preds.classes() {
        return Err(Error::ClassSetMismatch);
    }
    Ok(())
}

/// Per-class totals of the evaluation set, failing on any empty class.
fn positive_totals(eval: &LabeledFeatureSet) -> Result<Vec<u64>> {
    let totals = eval.per_class_counts();
    for (i, &n) in totals.iter().enumerate() {
        if n == 0 {
            return Err(Error::EmptyClass(eval.classes().label(i).to_string()));
        }
    }
    Ok(totals)
}

/// Count misclassifications from one-vs-rest confidences. Requires one score
/// per (sample, target class), including the sample's own class.
pub fn count_misclass_ovr(
    eval: &LabeledFeatureSet,
    preds: &PredictionTable,
) -> Result<ConfusionCounts> {
    if preds.mode() != PredictionMode::Ovr {
        return Err(Error::ModeMismatch {
            expected: "ovr",
            found: preds.mode().as_str(),
        });
    }
    check_universe(eval, preds)?;
    let totals = positive_totals(eval)?;
    let k = eval.classes().len();
    let mut misclass = vec![0u64; k * k];
    for sample in eval.samples() {
        let row = preds
            .ovr_row(&sample.id)
            .ok_or_else(|| Error::MissingPrediction(sample.id.clone()))?;
        for (target, slot) in row.iter().enumerate() {
            let score = slot.ok_or_else(|| Error::MissingScore {
                sample: sample.id.clone(),
                target: eval.classes().label(target).to_string(),
            })?;
            if target != sample.class && score > 0.5 {
                misclass[sample.class * k + target] += 1;
            }
        }
    }
    ConfusionCounts::from_parts(eval.classes().clone(), misclass, totals)
}

/// Count misclassifications from multi-class probability vectors via argmax
/// (ties to the lowest class index).
pub fn count_misclass_multi(
    eval: &LabeledFeatureSet,
    preds: &PredictionTable,
) -> Result<ConfusionCounts> {
    if preds.mode() != PredictionMode::Multi {
        return Err(Error::ModeMismatch {
            expected: "multi",
            found: preds.mode().as_str(),
        });
    }
    check_universe(eval, preds)?;
    let totals = positive_totals(eval)?;
    let k = eval.classes().len();
    let mut misclass = vec![0u64; k * k];
    for sample in eval.samples() {
        let probs = preds
            .multi_row(&sample.id)
            .ok_or_else(|| Error::MissingPrediction(sample.id.clone()))?;
        let mut best = 0usize;
        for (j, &p) in probs.iter().enumerate() {
            if p > probs[best] {
                best = j;
            }
        }
        if best != sample.class {
            misclass[sample.class * k + best] += 1;
        }
    }
    ConfusionCounts::from_parts(eval.classes().clone(), misclass, totals)
}

/// Count the two directed misclassification totals for one class pair from
/// the pair's shared classifier. Returns `(N_{second|first},
/// N_{first|second})` for the pair as given, in either order.
pub fn count_misclass_pairwise(
    eval: &LabeledFeatureSet,
    preds: &PredictionTable,
    first: &str,
    second: &str,
) -> Result<(u64, u64)> {
    if preds.mode() != PredictionMode::Pairwise {
        return Err(Error::ModeMismatch {
            expected: "pairwise",
            found: preds.mode().as_str(),
        });
    }
    check_universe(eval, preds)?;
    let i = eval.classes().require(first)?;
    let j = eval.classes().require(second)?;
    if i == j {
        return Err(Error::IdenticalPair(first.to_string()));
    }
    let (a, b) = (i.min(j), i.max(j));
    let (toward_b, toward_a) = count_pair_canonical(eval, preds, a, b)?;
    if (i, j) == (a, b) {
        Ok((toward_b, toward_a))
    } else {
        Ok((toward_a, toward_b))
    }
}

/// Shared-classifier counting for the canonical pair `(a, b)`, `a < b`.
/// Returns `(N_{b|a}, N_{a|b})`.
fn count_pair_canonical(
    eval: &LabeledFeatureSet,
    preds: &PredictionTable,
    a: usize,
    b: usize,
) -> Result<(u64, u64)> {
    let mut n_a = 0u64;
    let mut n_b = 0u64;
    let mut toward_b = 0u64; // a-samples pushed to b's side
    let mut toward_a = 0u64; // b-samples left on a's side
    for sample in eval.samples() {
        if sample.class != a && sample.class != b {
            continue;
        }
        let score = preds
            .pairwise_score(&sample.id, (a, b))
            .ok_or_else(|| Error::MissingScore {
                sample: sample.id.clone(),
                target: format!("{}|{}", eval.classes().label(a), eval.classes().label(b)),
            })?;
        if sample.class == a {
            n_a += 1;
            if score > 0.5 {
                toward_b += 1;
            }
        } else {
            n_b += 1;
            if score <= 0.5 {
                toward_a += 1;
            }
        }
    }
    if n_a == 0 {
        return Err(Error::EmptyClass(eval.classes().label(a).to_string()));
    }
    if n_b == 0 {
        return Err(Error::EmptyClass(eval.classes().label(b).to_string()));
    }
    Ok((toward_b, toward_a))
}

/// Pairwise counting over every unordered pair, assembled into one table.
pub fn count_misclass_pairwise_all(
    eval: &LabeledFeatureSet,
    preds: &PredictionTable,
) -> Result<ConfusionCounts> {
    if preds.mode() != PredictionMode::Pairwise {
        return Err(Error::ModeMismatch {
            expected: "pairwise",
            found: preds.mode().as_str(),
        });
    }
    check_universe(eval, preds)?;
    let totals = positive_totals(eval)?;
    let k = eval.classes().len();
    let mut misclass = vec![0u64; k * k];
    for (a, b) in eval.classes().pairs() {
        let (toward_b, toward_a) = count_pair_canonical(eval, preds, a, b)?;
        misclass[a * k + b] = toward_b;
        misclass[b * k + a] = toward_a;
    }
    ConfusionCounts::from_parts(eval.classes().clone(), misclass, totals)
}
