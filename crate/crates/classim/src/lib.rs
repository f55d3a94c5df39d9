//! Classifier-agnostic inter-class similarity from misclassification counts.
//!
//! The toolkit turns binary or multi-class misclassification statistics into a
//! symmetric similarity score per class pair, validates that score against
//! exact distribution-overlap computations on synthetic generative scenarios,
//! and uses the resulting similarity structure to build a two-level
//! one-vs-rest classification model with a rejection outcome.
//!
//! The crate is split along those lines:
//!
//! * [`types`], [`predictions`], [`counting`], [`similarity`] — the metric
//!   itself, from labeled samples and prediction tables to the similarity
//!   matrix.
//! * [`classifier`] — regularized logistic models (binary and multinomial)
//!   used both as the reference classifier family and inside the two-level
//!   model.
//! * [`twolevel`] — similar-set selection, two-level routing, evaluation.
//! * [`oracle`] — synthetic scenarios with known densities, exact overlap
//!   integrals, and the estimator-vs-oracle validation harness.
//! * [`pd`] — the parametric moment-distance baseline.
//! * [`io`] — the on-disk formats (feature CSV, prediction JSONL, matrix and
//!   top-k tables).
//!
//! All randomness is seeded and all iteration orders are canonical (classes
//! sorted lexicographically, samples in input order), so every computation in
//! this crate is reproducible byte-for-byte.

pub mod classifier;
pub mod counting;
pub mod error;
pub mod io;
pub mod oracle;
pub mod pd;
pub mod predictions;
pub mod similarity;
pub mod twolevel;
pub mod types;

pub use error::{Error, Result};
pub use similarity::{class_sim, similarity_matrix, SimilarityMatrix};
pub use types::{ClassSet, LabeledFeatureSet, Sample, Split, SplitDataset};
