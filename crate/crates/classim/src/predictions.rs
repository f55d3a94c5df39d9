//! Prediction tables: per-sample classifier outputs in one of three shapes.
//!
//! * one-vs-rest — one confidence in `[0, 1]` per (sample, target class);
//! * multi-class — one probability vector per sample, summing to 1;
//! * pairwise — one confidence per (sample, unordered class pair), read as
//!   the confidence for the *second* class of the canonically ordered pair.
//!
//! Scores are validated at insertion, so a constructed table always holds
//! finite values in range. Coverage (every required score present) is
//! checked where the table meets an evaluation set, in [`crate::counting`].

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::types::ClassSet;

/// Tolerance for multi-class probability vectors summing to one.
pub const MULTI_SUM_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PredictionMode {
    Pairwise,
    Ovr,
    Multi,
}

impl PredictionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            PredictionMode::Pairwise => "pairwise",
            PredictionMode::Ovr => "ovr",
            PredictionMode::Multi => "multi",
        }
    }
}

#[derive(Clone, Debug)]
enum Entries {
    /// sample id -> per-target confidence, slot per class index.
    Ovr(BTreeMap<String, Vec<Option<f64>>>),
    /// sample id -> probability vector over all classes.
    Multi(BTreeMap<String, Vec<f64>>),
    /// sample id -> scores per canonical pair (i < j), confidence for j.
    Pairwise(BTreeMap<String, BTreeMap<(usize, usize), f64>>),
}

/// Classifier outputs for a set of samples over a fixed class universe.
#[derive(Clone, Debug)]
pub struct PredictionTable {
    classes: ClassSet,
    entries: Entries,
}

fn check_score(sample: &str, value: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&value) {
        return Err(Error::ScoreOutOfRange {
            sample: sample.to_string(),
            value,
        });
    }
    Ok(value)
}

impl PredictionTable {
    pub fn new_ovr(classes: ClassSet) -> Self {
        Self {
            classes,
            entries: Entries::Ovr(BTreeMap::new()),
        }
    }

    pub fn new_multi(classes: ClassSet) -> Self {
        Self {
            classes,
            entries: Entries::Multi(BTreeMap::new()),
        }
    }

    pub fn new_pairwise(classes: ClassSet) -> Self {
        Self {
            classes,
            entries: Entries::Pairwise(BTreeMap::new()),
        }
    }

    pub fn mode(&self) -> PredictionMode {
        match &self.entries {
            Entries::Ovr(_) => PredictionMode::Ovr,
            Entries::Multi(_) => PredictionMode::Multi,
            Entries::Pairwise(_) => PredictionMode::Pairwise,
        }
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    /// Number of samples with at least one score.
    pub fn len(&self) -> usize {
        match &self.entries {
            Entries::Ovr(m) => m.len(),
            Entries::Multi(m) => m.len(),
            Entries::Pairwise(m) => m.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn expect_mode(&self, expected: PredictionMode) -> Result<()> {
        let found = self.mode();
        if found != expected {
            return Err(Error::ModeMismatch {
                expected: expected.as_str(),
                found: found.as_str(),
            });
        }
        Ok(())
    }

    /// Record a one-vs-rest confidence for `(sample, target)`.
    pub fn insert_ovr(&mut self, sample: &str, target: usize, score: f64) -> Result<()> {
        self.expect_mode(PredictionMode::Ovr)?;
        let score = check_score(sample, score)?;
        let k = self.classes.len();
        if target >= k {
            return Err(Error::UnknownLabel(format!("#{target}")));
        }
        let Entries::Ovr(map) = &mut self.entries else {
            unreachable!()
        };
        let row = map.entry(sample.to_string()).or_insert_with(|| vec![None; k]);
        if row[target].is_some() {
            return Err(Error::DuplicatePrediction {
                sample: sample.to_string(),
                target: self.classes.label(target).to_string(),
            });
        }
        row[target] = Some(score);
        Ok(())
    }

    /// Record a full probability vector for `sample`.
    pub fn insert_multi(&mut self, sample: &str, probs: Vec<f64>) -> Result<()> {
        self.expect_mode(PredictionMode::Multi)?;
        if probs.len() != self.classes.len() {
            return Err(Error::DimensionMismatch {
                expected: self.classes.len(),
                found: probs.len(),
            });
        }
        for &p in &probs {
            check_score(sample, p)?;
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > MULTI_SUM_TOL {
            return Err(Error::NotNormalized {
                sample: sample.to_string(),
                sum,
                tol: MULTI_SUM_TOL,
            });
        }
        let Entries::Multi(map) = &mut self.entries else {
            unreachable!()
        };
        if map.contains_key(sample) {
            return Err(Error::DuplicatePrediction {
                sample: sample.to_string(),
                target: "*".to_string(),
            });
        }
        map.insert(sample.to_string(), probs);
        Ok(())
    }

    /// Record a pairwise confidence. The pair must be canonical (`first <
    /// second` by class index) and the score is the confidence for `second`.
    pub fn insert_pairwise(
        &mut self,
        sample: &str,
        pair: (usize, usize),
        score: f64,
    ) -> Result<()> {
        self.expect_mode(PredictionMode::Pairwise)?;
        let score = check_score(sample, score)?;
        let (first, second) = pair;
        let k = self.classes.len();
        if first >= k || second >= k {
            return Err(Error::UnknownLabel(format!("#{}", first.max(second))));
        }
        if first == second {
            return Err(Error::IdenticalPair(self.classes.label(first).to_string()));
        }
        if first > second {
            return Err(Error::InvalidParameter(format!(
                "pairwise scores must be keyed by the canonical pair ({}, {})",
                self.classes.label(second),
                self.classes.label(first)
            )));
        }
        let Entries::Pairwise(map) = &mut self.entries else {
            unreachable!()
        };
        let row = map.entry(sample.to_string()).or_default();
        if row.contains_key(&pair) {
            return Err(Error::DuplicatePrediction {
                sample: sample.to_string(),
                target: format!(
                    "{}|{}",
                    self.classes.label(first),
                    self.classes.label(second)
                ),
            });
        }
        row.insert(pair, score);
        Ok(())
    }

    /// The per-target row for a sample (one-vs-rest tables).
    pub fn ovr_row(&self, sample: &str) -> Option<&[Option<f64>]> {
        match &self.entries {
            Entries::Ovr(map) => map.get(sample).map(Vec::as_slice),
            _ => None,
        }
    }

    /// The probability vector for a sample (multi-class tables).
    pub fn multi_row(&self, sample: &str) -> Option<&[f64]> {
        match &self.entries {
            Entries::Multi(map) => map.get(sample).map(Vec::as_slice),
            _ => None,
        }
    }

    /// The confidence for the canonical pair `(i, j)`, `i < j` (pairwise
    /// tables). The value is the confidence for class `j`.
    pub fn pairwise_score(&self, sample: &str, pair: (usize, usize)) -> Option<f64> {
        match &self.entries {
            Entries::Pairwise(map) => map.get(sample).and_then(|row| row.get(&pair).copied()),
            _ => None,
        }
    }
}
