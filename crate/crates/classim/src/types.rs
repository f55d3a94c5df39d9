//! Core domain types: class universe, labeled samples, splits.
//!
//! Class labels live in a [`ClassSet`] which stores them in lexicographic
//! byte order; every matrix, model list and iteration in the toolkit uses
//! that canonical order, which is what makes outputs reproducible
//! byte-for-byte.

use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Reserved label for the rejection outcome of routers. Never a class.
pub const NONE_LABEL: &str = "none";

/// Characters that would break the CSV and `class:score` output formats.
const FORBIDDEN_LABEL_CHARS: &[char] = &[',', ':', '"'];

/// Check a class label against the naming rules (non-empty, not the reserved
/// `none`, no separator or control characters).
pub fn validate_label(label: &str) -> Result<()> {
    if label.is_empty() {
        return Err(Error::EmptyLabel);
    }
    if label == NONE_LABEL {
        return Err(Error::ReservedLabel);
    }
    if label
        .chars()
        .any(|c| c.is_control() || FORBIDDEN_LABEL_CHARS.contains(&c))
    {
        return Err(Error::InvalidLabel(label.to_string()));
    }
    Ok(())
}

pub(crate) fn validate_sample_id(id: &str) -> Result<()> {
    if id.is_empty() || id.chars().any(|c| c.is_control() || c == ',' || c == '"') {
        return Err(Error::InvalidSampleId(id.to_string()));
    }
    Ok(())
}

/// The class universe, stored sorted so that an index is a stable identity.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ClassSet {
    labels: Vec<String>,
}

impl ClassSet {
    /// Build from labels in any order; rejects duplicates and invalid names.
    pub fn new<I, S>(labels: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.is_empty() {
            return Err(Error::EmptySet("class set"));
        }
        for label in &labels {
            validate_label(label)?;
        }
        labels.sort();
        for pair in labels.windows(2) {
            if pair[0] == pair[1] {
                return Err(Error::DuplicateLabel(pair[0].clone()));
            }
        }
        Ok(Self { labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Labels in canonical order.
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, index: usize) -> &str {
        &self.labels[index]
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.binary_search_by(|l| l.as_str().cmp(label)).ok()
    }

    /// Like [`ClassSet::index_of`] but failing with `UnknownLabel`.
    pub fn require(&self, label: &str) -> Result<usize> {
        self.index_of(label)
            .ok_or_else(|| Error::UnknownLabel(label.to_string()))
    }

    /// Unordered index pairs `(i, j)` with `i < j`, in canonical order.
    pub fn pairs(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        let k = self.len();
        (0..k).flat_map(move |i| (i + 1..k).map(move |j| (i, j)))
    }
}

impl TryFrom<Vec<String>> for ClassSet {
    type Error = Error;

    fn try_from(labels: Vec<String>) -> Result<Self> {
        // Deserialized label lists must already be canonical; re-sorting here
        // would mask corrupted files.
        let set = ClassSet::new(labels.clone())?;
        if set.labels != labels {
            return Err(Error::InvalidParameter(
                "class labels not in canonical order".to_string(),
            ));
        }
        Ok(set)
    }
}

impl From<ClassSet> for Vec<String> {
    fn from(set: ClassSet) -> Self {
        set.labels
    }
}

/// Which partition of a dataset a sample belongs to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Self> {
        match tag {
            "train" => Some(Split::Train),
            "validation" => Some(Split::Validation),
            "test" => Some(Split::Test),
            _ => None,
        }
    }
}

/// One labeled observation. `class` indexes into the owning set's
/// [`ClassSet`].
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub id: String,
    pub class: usize,
    pub features: Vec<f64>,
}

/// Samples of one split, all with the same dimensionality and class universe.
#[derive(Clone, Debug)]
pub struct LabeledFeatureSet {
    classes: ClassSet,
    split: Split,
    dim: usize,
    samples: Vec<Sample>,
}

impl LabeledFeatureSet {
    /// Validates ids (unique, printable), class indices, dimensions and
    /// feature finiteness. Sample order is preserved; it is part of the
    /// deterministic contract downstream.
    pub fn new(classes: ClassSet, split: Split, dim: usize, samples: Vec<Sample>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter(
                "feature dimension must be at least 1".to_string(),
            ));
        }
        let mut seen = BTreeSet::new();
        for sample in &samples {
            validate_sample_id(&sample.id)?;
            if !seen.insert(sample.id.as_str()) {
                return Err(Error::DuplicateSampleId(sample.id.clone()));
            }
            if sample.class >= classes.len() {
                return Err(Error::UnknownLabel(format!("#{}", sample.class)));
            }
            if sample.features.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: sample.features.len(),
                });
            }
            if sample.features.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature(sample.id.clone()));
            }
        }
        // `seen` borrows from `samples`; drop it before moving them.
        drop(seen);
        Ok(Self {
            classes,
            split,
            dim,
            samples,
        })
    }

    pub fn classes(&self) -> &ClassSet {
        &self.classes
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Number of samples per class, indexed like the class set.
    pub fn per_class_counts(&self) -> Vec<u64> {
        let mut counts = vec![0u64; self.classes.len()];
        for sample in &self.samples {
            counts[sample.class] += 1;
        }
        counts
    }

    /// Subset containing only samples of the given classes. The class
    /// universe (and therefore all indices) is unchanged.
    pub fn filter_classes(&self, keep: &BTreeSet<usize>) -> Self {
        let samples = self
            .samples
            .iter()
            .filter(|s| keep.contains(&s.class))
            .cloned()
            .collect();
        Self {
            classes: self.classes.clone(),
            split: self.split,
            dim: self.dim,
            samples,
        }
    }

    /// Concatenate several sets over the same universe into one set tagged
    /// `split`. Ids must stay unique across the parts.
    pub fn concat(parts: &[&LabeledFeatureSet], split: Split) -> Result<Self> {
        let first = parts.first().ok_or(Error::EmptySet("feature set list"))?;
        let mut samples = Vec::new();
        for part in parts {
            if part.classes != first.classes {
                return Err(Error::ClassSetMismatch);
            }
            if part.dim != first.dim {
                return Err(Error::DimensionMismatch {
                    expected: first.dim,
                    found: part.dim,
                });
            }
            samples.extend(part.samples.iter().cloned());
        }
        LabeledFeatureSet::new(first.classes.clone(), split, first.dim, samples)
    }
}

/// A dataset divided into train / validation / test over one class universe.
#[derive(Clone, Debug)]
pub struct SplitDataset {
    pub train: LabeledFeatureSet,
    pub validation: LabeledFeatureSet,
    pub test: LabeledFeatureSet,
}

impl SplitDataset {
    /// Checks that the three parts agree on classes and dimensionality and
    /// that no sample id occurs in more than one split.
    pub fn new(
        train: LabeledFeatureSet,
        validation: LabeledFeatureSet,
        test: LabeledFeatureSet,
    ) -> Result<Self> {
        for part in [&validation, &test] {
            if part.classes != train.classes {
                return Err(Error::ClassSetMismatch);
            }
            if part.dim != train.dim {
                return Err(Error::DimensionMismatch {
                    expected: train.dim,
                    found: part.dim,
                });
            }
        }
        let mut seen = BTreeSet::new();
        for part in [&train, &validation, &test] {
            for sample in &part.samples {
                if !seen.insert(sample.id.as_str()) {
                    return Err(Error::DuplicateSampleId(sample.id.clone()));
                }
            }
        }
        drop(seen);
        Ok(Self {
            train,
            validation,
            test,
        })
    }

    pub fn classes(&self) -> &ClassSet {
        self.train.classes()
    }

    pub fn dim(&self) -> usize {
        self.train.dim()
    }

    /// All samples of the three splits in order, re-tagged as `split`.
    pub fn merged(&self, split: Split) -> Result<LabeledFeatureSet> {
        LabeledFeatureSet::concat(&[&self.train, &self.validation, &self.test], split)
    }
}

/// Split sizes for `n` samples under the 0.64 / 0.16 / 0.20 scheme:
/// `round(0.8 n)` goes to train+validation, of which `round(0.8 ..)` to
/// train. Integer arithmetic, so the sizes are exact and portable.
pub fn split_counts(n: usize) -> (usize, usize, usize) {
    let trainval = (8 * n + 5) / 10;
    let train = (8 * trainval + 5) / 10;
    (train, trainval - train, n - trainval)
}

/// SplitMix64 step; used to derive independent per-class RNG streams from a
/// run seed without correlated low bits.
pub(crate) fn mix_seed(seed: u64, salt: u64) -> u64 {
    let mut z = seed ^ salt.wrapping_mul(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub(crate) fn class_stream(seed: u64, purpose: u64, class: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(mix_seed(seed, purpose ^ ((class as u64) << 32)))
}

/// Salt namespaces for the derived streams.
pub(crate) mod stream {
    pub const SPLIT: u64 = 0x5350_4c49;
    pub const DRAW: u64 = 0x4452_4157;
    pub const NOISE: u64 = 0x4e4f_4953;
    pub const INIT: u64 = 0x494e_4954;
}

/// Stratified split: shuffle each class with its own seeded stream, then cut
/// by [`split_counts`]. Output order is by class, then shuffled position, so
/// the result depends only on `(samples, seed)`.
pub fn stratified_split(
    classes: ClassSet,
    dim: usize,
    samples: Vec<Sample>,
    seed: u64,
) -> Result<SplitDataset> {
    let mut by_class: Vec<Vec<Sample>> = (0..classes.len()).map(|_| Vec::new()).collect();
    for sample in samples {
        if sample.class >= classes.len() {
            return Err(Error::UnknownLabel(format!("#{}", sample.class)));
        }
        by_class[sample.class].push(sample);
    }
    let mut train = Vec::new();
    let mut validation = Vec::new();
    let mut test = Vec::new();
    for (class, mut members) in by_class.into_iter().enumerate() {
        let mut rng = class_stream(seed, stream::SPLIT, class);
        members.shuffle(&mut rng);
        let (n_train, n_val, _) = split_counts(members.len());
        for (pos, sample) in members.into_iter().enumerate() {
            if pos < n_train {
                train.push(sample);
            } else if pos < n_train + n_val {
                validation.push(sample);
            } else {
                test.push(sample);
            }
        }
    }
    SplitDataset::new(
        LabeledFeatureSet::new(classes.clone(), Split::Train, dim, train)?,
        LabeledFeatureSet::new(classes.clone(), Split::Validation, dim, validation)?,
        LabeledFeatureSet::new(classes, Split::Test, dim, test)?,
    )
}
