//! Two-level one-vs-rest classification built on the similarity structure.
//!
//! Classes whose similarity exceeds a threshold form each class's *similar
//! set*. The first level is an ordinary one-vs-rest suite; every class with
//! a non-empty similar set additionally gets a second-level model trained
//! only against that set, which re-checks first-level hits among easily
//! confused classes.
//!
//! Routing walks the classes in a fixed order — lexicographic label order by
//! default, overridable by editing `routing_order` in the persisted manifest
//! for domain-informed walks. The first class whose first-level confidence
//! exceeds its threshold wins, unless a second-level model exists and rejects
//! the hit — then the walk *continues* with the next class. If no class
//! accepts, the router answers `None` ("none"); there is deliberately no
//! fallback to the best-scoring class.

use std::path::{Component, Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::classifier::{self, LinearModel, ModelTarget, TrainConfig};
use crate::error::{Error, Result};
use crate::similarity::SimilarityMatrix;
use crate::types::{ClassSet, LabeledFeatureSet, NONE_LABEL};

/// Supported file format revision for persisted two-level models.
pub const TWOLEVEL_FORMAT_VERSION: u32 = 1;

/// Default similarity threshold for forming similar sets.
pub const DEFAULT_SIMILARITY_THRESHOLD: f64 = 0.1;

/// First- and second-level decision thresholds on the confidence scores.
pub const DECISION_THRESHOLDS: (f64, f64) = (0.5, 0.5);

/// Per-class sets of similar classes (class indices, ascending, never
/// containing the class itself).
#[derive(Clone, Debug, PartialEq)]
pub struct SimilarSets {
    classes: ClassSet,
    sets: Vec<Vec<usize>>,
    threshold: f64,
}

impl SimilarSets {
    /// Select every class pair with similarity strictly above `threshold`.
    pub fn select(matrix: &SimilarityMatrix, threshold: f64) -> Result<Self> {
        if !threshold.is_finite() || !(0.0..=1.0).contains(&threshold) {
            return Err(Error::InvalidParameter(format!(
                "similarity threshold must lie in [0, 1], got {threshold}"
            )));
        }
        let k = matrix.classes().len();
        let sets = (0..k)
            .map(|c| {
                (0..k)
                    .filter(|&other| other != c && matrix.get(c, other) > threshold)
                    .collect()
            })
            .collect();
        Ok(Self {
            classes: matrix.classes().clone(),
            sets,
            threshold,
        })
    }

    /// Rebuild from label lists (the persisted form).
    fn from_labels(classes: ClassSet, labels: &[Vec<String>], threshold: f64) -> Result<Self> {
        if labels.len() != classes.len() {
            return Err(Error::InvalidParameter(
                "similar-set list length does not match class count".into(),
            ));
        }
        let mut sets = Vec::with_capacity(labels.len());
        for (c, members) in labels.iter().enumerate() {
            let mut set = Vec::with_capacity(members.len());
            for label in members {
                let idx = classes.require(label)?;
                if idx == c {
                    return Err(Error::InvalidParameter(format!(
                        "class `{label}` cannot be in its own similar set"
                    )));
                }
                set.push(idx);
            }
            let mut sorted = set.clone();
            sorted.sort_unstable();
            sorted.dedup();
            if sorted != set {
                return Err(Error::InvalidParameter(format!(
                    "similar set for `{}` is not in canonical order",
                    classes.label(c)
                )));
            }
            sets.push(set);
        }
        Ok(Self {
            classes,
            sets,
            threshold,
        })
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn threshold(&self) -> f64 {
        self.threshold
    }

    pub fn set(&self, class: usize) -> &[usize] {
        &self.sets[class]
    }

    pub fn labels(&self, class: usize) -> Vec<String> {
        self.sets[class]
            .iter()
            .map(|&i| self.classes.label(i).to_string())
            .collect()
    }

    /// True if no class has any similar class (the degenerate case where the
    /// two-level model collapses to the baseline).
    pub fn all_empty(&self) -> bool {
        self.sets.iter().all(Vec::is_empty)
    }
}

/// Anything that maps a feature vector to a class or the rejection outcome.
pub trait Router {
    fn classes(&self) -> &ClassSet;
    fn feature_dim(&self) -> usize;
    /// `None` encodes the reserved `none` outcome.
    fn route(&self, x: &[f64]) -> Result<Option<usize>>;
}

/// The two-level model: a full one-vs-rest first level plus per-class
/// second-level models against the similar sets.
#[derive(Clone, Debug)]
pub struct TwoLevelModel {
    classes: ClassSet,
    sets: SimilarSets,
    first: Vec<LinearModel>,
    second: Vec<Option<LinearModel>>,
    thresholds: (f64, f64),
    /// Class indices in routing-walk order (a permutation of 0..K).
    order: Vec<usize>,
}

impl TwoLevelModel {
    /// Train both levels. The first level trains on `first_train`; the
    /// second-level models (one per class with a non-empty similar set)
    /// train on `second_train`, each discriminating its class against only
    /// the similar classes.
    pub fn build(
        first_train: &LabeledFeatureSet,
        second_train: &LabeledFeatureSet,
        sets: &SimilarSets,
        config: &TrainConfig,
    ) -> Result<Self> {
        use rayon::prelude::*;
        if first_train.classes() != sets.classes() || second_train.classes() != sets.classes() {
            return Err(Error::ClassSetMismatch);
        }
        if first_train.dim() != second_train.dim() {
            return Err(Error::DimensionMismatch {
                expected: first_train.dim(),
                found: second_train.dim(),
            });
        }
        let first = classifier::train_ovr_suite(first_train, config)?;
        let classes = sets.classes().clone();
        let second: Vec<Result<Option<LinearModel>>> = (0..classes.len())
            .into_par_iter()
            .map(|c| {
                if sets.set(c).is_empty() {
                    return Ok(None);
                }
                let negatives = sets.labels(c);
                classifier::train_ovr(second_train, classes.label(c), &negatives, config)
                    .map(Some)
            })
            .collect();
        let second = second.into_iter().collect::<Result<Vec<_>>>()?;
        let order = (0..classes.len()).collect();
        Ok(Self {
            classes,
            sets: sets.clone(),
            first,
            second,
            thresholds: DECISION_THRESHOLDS,
            order,
        })
    }

    /// Labels in routing-walk order.
    pub fn routing_labels(&self) -> Vec<&str> {
        self.order.iter().map(|&c| self.classes.label(c)).collect()
    }

    pub fn similar_sets(&self) -> &SimilarSets {
        &self.sets
    }

    pub fn first_level(&self) -> &[LinearModel] {
        &self.first
    }

    pub fn second_level(&self) -> &[Option<LinearModel>] {
        &self.second
    }

    /// Number of second-level models actually trained.
    pub fn second_level_count(&self) -> usize {
        self.second.iter().filter(|m| m.is_some()).count()
    }

    /// The first level alone, as the flat comparison router.
    pub fn baseline(&self) -> BaselineRouter<'_> {
        BaselineRouter {
            classes: &self.classes,
            first: &self.first,
            threshold: self.thresholds.0,
            order: &self.order,
        }
    }

    /// Persist as a directory: `twolevel.json` plus a `models/` folder with
    /// one JSON file per trained model, named by class position.
    pub fn save_dir(&self, dir: &Path) -> Result<()> {
        let models_dir = dir.join("models");
        std::fs::create_dir_all(&models_dir).map_err(|e| Error::io(&models_dir, e))?;
        let mut first_paths = Vec::new();
        let mut second_paths = Vec::new();
        for (c, model) in self.first.iter().enumerate() {
            let rel = format!("models/first_{c:03}.json");
            model.save_to(&dir.join(&rel))?;
            first_paths.push(rel);
        }
        for (c, model) in self.second.iter().enumerate() {
            match model {
                Some(model) => {
                    let rel = format!("models/second_{c:03}.json");
                    model.save_to(&dir.join(&rel))?;
                    second_paths.push(Some(rel));
                }
                None => second_paths.push(None),
            }
        }
        let manifest = TwoLevelManifest {
            format_version: TWOLEVEL_FORMAT_VERSION,
            classes: self.classes.clone(),
            routing_order: self
                .routing_labels()
                .into_iter()
                .map(str::to_string)
                .collect(),
            selection_threshold: self.sets.threshold(),
            decision_thresholds: self.thresholds,
            similar_sets: (0..self.classes.len()).map(|c| self.sets.labels(c)).collect(),
            first: first_paths,
            second: second_paths,
        };
        let path = dir.join("twolevel.json");
        let mut text =
            serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }

    /// Load a persisted model directory, re-validating every structural
    /// invariant (model targets, ordering, dimensions).
    pub fn load_dir(dir: &Path) -> Result<Self> {
        let path = dir.join("twolevel.json");
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let manifest: TwoLevelManifest = serde_json::from_str(&text).map_err(|e| {
            Error::File {
                path: path.display().to_string(),
                msg: e.to_string().replace('\n', " "),
            }
        })?;
        if manifest.format_version != TWOLEVEL_FORMAT_VERSION {
            return Err(Error::InvalidParameter(format!(
                "unsupported two-level format version {}",
                manifest.format_version
            )));
        }
        let classes = manifest.classes;
        let order = routing_order(&classes, &manifest.routing_order)?;
        let sets = SimilarSets::from_labels(
            classes.clone(),
            &manifest.similar_sets,
            manifest.selection_threshold,
        )?;
        if manifest.first.len() != classes.len() || manifest.second.len() != classes.len() {
            return Err(Error::InvalidParameter(
                "model list length does not match class count".into(),
            ));
        }
        let load = |rel: &str| -> Result<LinearModel> {
            LinearModel::load_from(&safe_join(dir, rel)?)
        };
        let mut first = Vec::with_capacity(classes.len());
        for (c, rel) in manifest.first.iter().enumerate() {
            let model = load(rel)?;
            expect_ovr_target(&model, classes.label(c))?;
            first.push(model);
        }
        let mut second = Vec::with_capacity(classes.len());
        for (c, rel) in manifest.second.iter().enumerate() {
            match rel {
                Some(rel) => {
                    if sets.set(c).is_empty() {
                        return Err(Error::InvalidParameter(format!(
                            "class `{}` has a second-level model but an empty similar set",
                            classes.label(c)
                        )));
                    }
                    let model = load(rel)?;
                    expect_ovr_target(&model, classes.label(c))?;
                    if let ModelTarget::Ovr { negatives, .. } = &model.target {
                        if *negatives != sets.labels(c) {
                            return Err(Error::InvalidParameter(format!(
                                "second-level negatives for `{}` do not match the similar set",
                                classes.label(c)
                            )));
                        }
                    }
                    second.push(Some(model));
                }
                None => {
                    if !sets.set(c).is_empty() {
                        return Err(Error::InvalidParameter(format!(
                            "class `{}` has a similar set but no second-level model",
                            classes.label(c)
                        )));
                    }
                    second.push(None);
                }
            }
        }
        let dim = first
            .first()
            .map(|m| m.feature_dim)
            .ok_or(Error::EmptySet("first-level model list"))?;
        for model in first.iter().chain(second.iter().flatten()) {
            if model.feature_dim != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: model.feature_dim,
                });
            }
        }
        Ok(Self {
            classes,
            sets,
            first,
            second,
            thresholds: manifest.decision_thresholds,
            order,
        })
    }
}

/// Resolve a routing-order label list to indices, requiring a permutation of
/// the class set.
fn routing_order(classes: &ClassSet, labels: &[String]) -> Result<Vec<usize>> {
    let mut order = Vec::with_capacity(labels.len());
    for label in labels {
        order.push(classes.require(label)?);
    }
    let mut seen = vec![false; classes.len()];
    for &c in &order {
        seen[c] = true;
    }
    if order.len() != classes.len() || seen.iter().any(|s| !s) {
        return Err(Error::InvalidParameter(
            "routing order must list every class exactly once".into(),
        ));
    }
    Ok(order)
}

fn expect_ovr_target(model: &LinearModel, positive: &str) -> Result<()> {
    match &model.target {
        ModelTarget::Ovr { positive: p, .. } if p == positive => Ok(()),
        _ => Err(Error::InvalidParameter(format!(
            "expected a one-vs-rest model for `{positive}`"
        ))),
    }
}

/// Join a manifest-relative path, rejecting absolute paths and `..`.
fn safe_join(dir: &Path, rel: &str) -> Result<PathBuf> {
    let rel_path = Path::new(rel);
    let plain = rel_path
        .components()
        .all(|c| matches!(c, Component::Normal(_)));
    if !plain {
        return Err(Error::InvalidParameter(format!(
            "model path `{rel}` must be a plain relative path"
        )));
    }
    Ok(dir.join(rel_path))
}

impl Router for TwoLevelModel {
    fn classes(&self) -> &ClassSet {
        &self.classes
    }

    fn feature_dim(&self) -> usize {
        self.first[0].feature_dim
    }

    fn route(&self, x: &[f64]) -> Result<Option<usize>> {
        let (t1, t2) = self.thresholds;
        for &c in &self.order {
            if self.first[c].binary_score(x)? > t1 {
                match &self.second[c] {
                    None => return Ok(Some(c)),
                    Some(model) => {
                        if model.binary_score(x)? > t2 {
                            return Ok(Some(c));
                        }
                        // second level vetoed the hit: keep walking
                    }
                }
            }
        }
        Ok(None)
    }
}

/// Flat one-vs-rest routing: first class whose confidence clears the
/// threshold, in the same walk order as the two-level router.
pub struct BaselineRouter<'a> {
    classes: &'a ClassSet,
    first: &'a [LinearModel],
    threshold: f64,
    order: &'a [usize],
}

impl Router for BaselineRouter<'_> {
    fn classes(&self) -> &ClassSet {
        self.classes
    }

    fn feature_dim(&self) -> usize {
        self.first[0].feature_dim
    }

    fn route(&self, x: &[f64]) -> Result<Option<usize>> {
        for &c in self.order {
            if self.first[c].binary_score(x)? > self.threshold {
                return Ok(Some(c));
            }
        }
        Ok(None)
    }
}

/// Outcome tallies for one class.
#[derive(Clone, Debug, Serialize)]
pub struct ClassOutcome {
    pub class: String,
    pub total: u64,
    pub correct: u64,
    pub recall: f64,
}

/// Routing quality on one evaluation set.
#[derive(Clone, Debug, Serialize)]
pub struct EvalReport {
    pub classes: ClassSet,
    pub total: u64,
    pub correct: u64,
    pub accuracy: f64,
    /// Samples routed to the rejection outcome.
    pub none_count: u64,
    pub per_class: Vec<ClassOutcome>,
    /// Row per true class; `K` routed-class columns plus a final `none`
    /// column.
    pub confusion: Vec<Vec<u64>>,
}

impl EvalReport {
    /// Column labels of the confusion table (classes plus `none`).
    pub fn outcome_labels(&self) -> Vec<&str> {
        self.classes
            .labels()
            .iter()
            .map(String::as_str)
            .chain(std::iter::once(NONE_LABEL))
            .collect()
    }
}

/// Route every sample of `eval` and tally accuracy, per-class recall and the
/// routed confusion table.
pub fn evaluate(router: &impl Router, eval: &LabeledFeatureSet) -> Result<EvalReport> {
    if eval.classes() != router.classes() {
        return Err(Error::ClassSetMismatch);
    }
    if eval.is_empty() {
        return Err(Error::EmptySet("evaluation set"));
    }
    if eval.dim() != router.feature_dim() {
        return Err(Error::DimensionMismatch {
            expected: router.feature_dim(),
            found: eval.dim(),
        });
    }
    let k = eval.classes().len();
    let totals = eval.per_class_counts();
    for (c, &n) in totals.iter().enumerate() {
        if n == 0 {
            return Err(Error::EmptyClass(eval.classes().label(c).to_string()));
        }
    }
    let mut confusion = vec![vec![0u64; k + 1]; k];
    for sample in eval.samples() {
        let outcome = router.route(&sample.features)?;
        let col = outcome.unwrap_or(k);
        confusion[sample.class][col] += 1;
    }
    let correct: u64 = (0..k).map(|c| confusion[c][c]).sum();
    let total: u64 = totals.iter().sum();
    let none_count: u64 = (0..k).map(|c| confusion[c][k]).sum();
    let per_class = (0..k)
        .map(|c| ClassOutcome {
            class: eval.classes().label(c).to_string(),
            total: totals[c],
            correct: confusion[c][c],
            recall: confusion[c][c] as f64 / totals[c] as f64,
        })
        .collect();
    Ok(EvalReport {
        classes: eval.classes().clone(),
        total,
        correct,
        accuracy: correct as f64 / total as f64,
        none_count,
        per_class,
        confusion,
    })
}

#[derive(Serialize, Deserialize)]
struct TwoLevelManifest {
    format_version: u32,
    classes: ClassSet,
    routing_order: Vec<String>,
    selection_threshold: f64,
    decision_thresholds: (f64, f64),
    similar_sets: Vec<Vec<String>>,
    first: Vec<String>,
    second: Vec<Option<String>>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifier::{ModelKind, Standardizer, MODEL_FORMAT_VERSION};
    use crate::types::{Sample, Split};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn labels(k: usize) -> ClassSet {
        ClassSet::new((0..k).map(|c| format!("c{c}"))).unwrap()
    }

    /// Hand-built binary model: identity standardizer, fixed weights.
    fn stub_ovr(classes: &ClassSet, positive: usize, dim: usize, w: Vec<f64>) -> LinearModel {
        assert_eq!(w.len(), dim + 1);
        LinearModel {
            format_version: MODEL_FORMAT_VERSION,
            kind: ModelKind::Binary,
            target: ModelTarget::Ovr {
                positive: classes.label(positive).to_string(),
                negatives: classes
                    .labels()
                    .iter()
                    .filter(|l| l.as_str() != classes.label(positive))
                    .cloned()
                    .collect(),
            },
            feature_dim: dim,
            standardizer: Standardizer {
                mean: vec![0.0; dim],
                std: vec![1.0; dim],
            },
            weights: vec![w],
            train_config: TrainConfig::default(),
            loss_history: Vec::new(),
        }
    }

    /// A two-level model over `k` classes and `2k` features where the
    /// first-level decision of class `c` is `x[c] > 0` and the second-level
    /// decision (if the class has a similar set) is `x[k + c] > 0`.
    fn crafted_model(k: usize, with_second: &[bool]) -> TwoLevelModel {
        let classes = labels(k);
        let dim = 2 * k;
        let coord = |i: usize| {
            let mut w = vec![0.0; dim + 1];
            w[i] = 10.0;
            w
        };
        let first: Vec<LinearModel> = (0..k)
            .map(|c| stub_ovr(&classes, c, dim, coord(c)))
            .collect();
        let second: Vec<Option<LinearModel>> = (0..k)
            .map(|c| {
                with_second[c].then(|| stub_ovr(&classes, c, dim, coord(k + c)))
            })
            .collect();
        let sets = SimilarSets {
            classes: classes.clone(),
            sets: (0..k)
                .map(|c| {
                    if with_second[c] {
                        vec![if c == 0 { 1 } else { 0 }]
                    } else {
                        Vec::new()
                    }
                })
                .collect(),
            threshold: DEFAULT_SIMILARITY_THRESHOLD,
        };
        TwoLevelModel {
            classes,
            sets,
            first,
            second,
            thresholds: DECISION_THRESHOLDS,
            order: (0..k).collect(),
        }
    }

    /// The routing rule written out longhand, used as the reference.
    fn reference_route(model: &TwoLevelModel, x: &[f64]) -> Option<usize> {
        for c in 0..model.classes.len() {
            let s1 = model.first[c].binary_score(x).unwrap();
            if s1 > 0.5 {
                match &model.second[c] {
                    None => return Some(c),
                    Some(m) => {
                        if m.binary_score(x).unwrap() > 0.5 {
                            return Some(c);
                        }
                    }
                }
            }
        }
        None
    }

    #[test]
    fn selection_is_strictly_above_threshold() {
        let classes = labels(3);
        let k = 3;
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            values[i * k + i] = 1.0;
        }
        let mut put = |i: usize, j: usize, v: f64| {
            values[i * k + j] = v;
            values[j * k + i] = v;
        };
        put(0, 1, 0.1); // exactly at the threshold: excluded
        put(0, 2, 0.100001); // just above: included
        let matrix = SimilarityMatrix::from_parts(classes, values).unwrap();
        let sets = SimilarSets::select(&matrix, 0.1).unwrap();
        assert_eq!(sets.set(0), &[2]);
        assert_eq!(sets.set(1), &[] as &[usize]);
        assert_eq!(sets.set(2), &[0]);
        assert!(!sets.all_empty());
        assert!(SimilarSets::select(&matrix, 1.5).is_err());
        assert!(SimilarSets::select(&matrix, f64::NAN).is_err());
    }

    #[test]
    fn routing_matches_reference_on_random_inputs() {
        let model = crafted_model(4, &[true, false, true, false]);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut seen_none = 0;
        let mut seen_fall_through = 0;
        for _ in 0..1000 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            let got = model.route(&x).unwrap();
            let want = reference_route(&model, &x);
            assert_eq!(got, want, "divergence at {x:?}");
            if got.is_none() {
                seen_none += 1;
            }
            // fall-through case: class 0 fires, its second level vetoes,
            // and something later still answers
            if x[0] > 0.0 && x[4] <= 0.0 && got.is_some() {
                seen_fall_through += 1;
            }
        }
        assert!(seen_none > 0, "rejection outcome never exercised");
        assert!(seen_fall_through > 0, "fall-through never exercised");
    }

    #[test]
    fn veto_falls_through_to_later_class_or_none() {
        let model = crafted_model(3, &[true, false, false]);
        // class 0 fires but is vetoed; class 2 fires -> 2 wins
        let x = [1.0, -1.0, 1.0, -1.0, 0.0, 0.0];
        assert_eq!(model.route(&x).unwrap(), Some(2));
        // class 0 fires and passes its second level -> 0 wins immediately
        let x = [1.0, -1.0, 1.0, 1.0, 0.0, 0.0];
        assert_eq!(model.route(&x).unwrap(), Some(0));
        // class 0 vetoed, nothing else fires -> none
        let x = [1.0, -1.0, -1.0, -1.0, 0.0, 0.0];
        assert_eq!(model.route(&x).unwrap(), None);
    }

    #[test]
    fn routing_order_is_editable_in_the_manifest() {
        let model = crafted_model(3, &[false, false, false]);
        let dir = tempfile::tempdir().unwrap();
        model.save_dir(dir.path()).unwrap();
        // both c0 and c2 fire; default walk answers c0
        let x = [1.0, -1.0, 1.0, 0.0, 0.0, 0.0];
        assert_eq!(model.route(&x).unwrap(), Some(0));

        let manifest_path = dir.path().join("twolevel.json");
        let text = std::fs::read_to_string(&manifest_path).unwrap();
        let set_order = |labels: &[&str]| {
            let mut v: serde_json::Value = serde_json::from_str(&text).unwrap();
            v["routing_order"] = serde_json::json!(labels);
            std::fs::write(&manifest_path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
        };

        set_order(&["c2", "c1", "c0"]);
        let reloaded = TwoLevelModel::load_dir(dir.path()).unwrap();
        assert_eq!(reloaded.routing_labels(), vec!["c2", "c1", "c0"]);
        assert_eq!(reloaded.route(&x).unwrap(), Some(2));
        assert_eq!(reloaded.baseline().route(&x).unwrap(), Some(2));

        // the order must cover every class exactly once
        set_order(&["c0", "c1"]);
        assert!(TwoLevelModel::load_dir(dir.path()).is_err());
        set_order(&["c0", "c1", "c1"]);
        assert!(TwoLevelModel::load_dir(dir.path()).is_err());
    }

    #[test]
    fn degenerate_model_equals_baseline() {
        let model = crafted_model(4, &[false, false, false, false]);
        assert!(model.similar_sets().all_empty());
        let baseline = model.baseline();
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        for _ in 0..1000 {
            let x: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
            assert_eq!(model.route(&x).unwrap(), baseline.route(&x).unwrap());
        }
    }

    fn blob_dataset(
        centers: &[(f64, f64)],
        per_class: usize,
        spread: f64,
        seed: u64,
        split: Split,
    ) -> LabeledFeatureSet {
        use rand_distr::{Distribution, Normal};
        let classes = labels(centers.len());
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, spread).unwrap();
        let mut samples = Vec::new();
        for (c, (cx, cy)) in centers.iter().enumerate() {
            for i in 0..per_class {
                samples.push(Sample {
                    id: format!("{}-{c}-{i}", split.as_str()),
                    class: c,
                    features: vec![cx + noise.sample(&mut rng), cy + noise.sample(&mut rng)],
                });
            }
        }
        LabeledFeatureSet::new(classes, split, 2, samples).unwrap()
    }

    #[test]
    fn trained_two_level_round_trips_through_disk() {
        let centers = [(0.0, 0.0), (1.2, 0.0), (8.0, 8.0)];
        let train = blob_dataset(&centers, 60, 0.8, 31, Split::Train);
        let classes = train.classes().clone();
        let k = 3;
        let mut values = vec![0.0; k * k];
        for i in 0..k {
            values[i * k + i] = 1.0;
        }
        values[1] = 0.4; // c0 ~ c1 similar
        values[k] = 0.4;
        let matrix = SimilarityMatrix::from_parts(classes, values).unwrap();
        let sets = SimilarSets::select(&matrix, 0.1).unwrap();
        let model = TwoLevelModel::build(&train, &train, &sets, &TrainConfig::default()).unwrap();
        assert_eq!(model.second_level_count(), 2);

        let eval = blob_dataset(&centers, 30, 0.8, 32, Split::Test);
        let report = evaluate(&model, &eval).unwrap();
        assert!(report.accuracy > 0.8, "accuracy {}", report.accuracy);
        assert_eq!(report.total, 90);
        let row_sums: Vec<u64> = report.confusion.iter().map(|r| r.iter().sum()).collect();
        assert_eq!(row_sums, vec![30, 30, 30]);

        let dir = tempfile::tempdir().unwrap();
        model.save_dir(dir.path()).unwrap();
        let reloaded = TwoLevelModel::load_dir(dir.path()).unwrap();
        let report2 = evaluate(&reloaded, &eval).unwrap();
        assert_eq!(report.accuracy.to_bits(), report2.accuracy.to_bits());
        assert_eq!(report.confusion, report2.confusion);
    }

    #[test]
    fn load_rejects_inconsistent_directories() {
        let train = blob_dataset(&[(0.0, 0.0), (5.0, 5.0)], 20, 0.5, 33, Split::Train);
        let k = 2;
        let mut values = vec![1.0, 0.3, 0.3, 1.0];
        values[0] = 1.0;
        let matrix = SimilarityMatrix::from_parts(train.classes().clone(), values).unwrap();
        let sets = SimilarSets::select(&matrix, 0.1).unwrap();
        let model = TwoLevelModel::build(&train, &train, &sets, &TrainConfig::default()).unwrap();
        let dir = tempfile::tempdir().unwrap();
        model.save_dir(dir.path()).unwrap();

        // swap the two first-level models: targets now sit at wrong positions
        let a = dir.path().join("models/first_000.json");
        let b = dir.path().join("models/first_001.json");
        let tmp = dir.path().join("models/tmp.json");
        std::fs::rename(&a, &tmp).unwrap();
        std::fs::rename(&b, &a).unwrap();
        std::fs::rename(&tmp, &b).unwrap();
        assert!(TwoLevelModel::load_dir(dir.path()).is_err());
        let _ = k;
    }

    #[test]
    fn evaluate_requires_nonempty_classes() {
        let model = crafted_model(2, &[false, false]);
        let classes = model.classes().clone();
        let eval = LabeledFeatureSet::new(
            classes,
            Split::Test,
            4,
            vec![Sample {
                id: "only".into(),
                class: 0,
                features: vec![1.0, 0.0, 0.0, 0.0],
            }],
        )
        .unwrap();
        assert!(matches!(
            evaluate(&model, &eval),
            Err(Error::EmptyClass(_))
        ));
    }
}
