//! Error type shared across the toolkit.
//!
//! Every variant renders as a single line so callers can report it verbatim.
//! [`Error::kind`] gives a stable machine-readable tag and
//! [`Error::is_numeric`] separates numerical failures (divergent training,
//! quadrature breakdown) from data-validation failures; the command-line
//! frontend maps the two groups to different exit codes.

use std::path::PathBuf;

/// Result alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Hard-failure conditions. The toolkit never silently skips or imputes:
/// anything malformed or out of contract surfaces as one of these.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("empty class label")]
    EmptyLabel,
    #[error("label `none` is reserved for the rejection outcome")]
    ReservedLabel,
    #[error("label `{0}` contains a forbidden character (one of `,:\"` or a control character)")]
    InvalidLabel(String),
    #[error("duplicate class label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown class label `{0}`")]
    UnknownLabel(String),
    #[error("invalid sample id `{0}`")]
    InvalidSampleId(String),
    #[error("duplicate sample id `{0}`")]
    DuplicateSampleId(String),
    #[error("class `{0}` has no samples")]
    EmptyClass(String),
    #[error("empty {0}")]
    EmptySet(&'static str),
    #[error("missing score for sample `{sample}`, target `{target}`")]
    MissingScore { sample: String, target: String },
    #[error("missing prediction vector for sample `{0}`")]
    MissingPrediction(String),
    #[error("duplicate prediction for sample `{sample}`, target `{target}`")]
    DuplicatePrediction { sample: String, target: String },
    #[error("score {value} for sample `{sample}` lies outside [0, 1]")]
    ScoreOutOfRange { sample: String, value: f64 },
    #[error("probability vector for sample `{sample}` sums to {sum:e}, expected 1 within {tol:e}")]
    NotNormalized { sample: String, sum: f64, tol: f64 },
    #[error("pair must name two distinct classes, got `{0}` twice")]
    IdenticalPair(String),
    #[error("feature dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite feature value for sample `{0}`")]
    NonFiniteFeature(String),
    #[error("class sets differ between inputs")]
    ClassSetMismatch,
    #[error("prediction table holds {found} scores, expected {expected}")]
    ModeMismatch {
        expected: &'static str,
        found: &'static str,
    },
    #[error("target class `{0}` also appears among the negatives")]
    TargetInNegatives(String),
    #[error("misclassification count {count} for ({a} -> {b}) exceeds class total {total}")]
    CountExceedsTotal {
        a: String,
        b: String,
        count: u64,
        total: u64,
    },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("unsupported density pair for classes `{a}` and `{b}`")]
    UnsupportedDensityPair { a: String, b: String },
    #[error("{path}:{line}: {msg}")]
    Format {
        path: String,
        line: usize,
        msg: String,
    },
    #[error("{path}: {msg}")]
    File { path: String, msg: String },
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("training loss became non-finite at epoch {0}")]
    NonFiniteLoss(u32),
    #[error("quadrature failed to converge: estimated error {err:e} above tolerance {tol:e}")]
    QuadratureNotConverged { tol: f64, err: f64 },
}

impl Error {
    /// Stable kebab-case tag for machine consumption.
    pub fn kind(&self) -> &'static str {
        use Error::*;
        match self {
            EmptyLabel => "empty-label",
            ReservedLabel => "reserved-label",
            InvalidLabel(_) => "invalid-label",
            DuplicateLabel(_) => "duplicate-label",
            UnknownLabel(_) => "unknown-label",
            InvalidSampleId(_) => "invalid-sample-id",
            DuplicateSampleId(_) => "duplicate-sample-id",
            EmptyClass(_) => "empty-class",
            EmptySet(_) => "empty-set",
            MissingScore { .. } => "missing-score",
            MissingPrediction(_) => "missing-prediction",
            DuplicatePrediction { .. } => "duplicate-prediction",
            ScoreOutOfRange { .. } => "score-out-of-range",
            NotNormalized { .. } => "not-normalized",
            IdenticalPair(_) => "identical-pair",
            DimensionMismatch { .. } => "dimension-mismatch",
            NonFiniteFeature(_) => "non-finite-feature",
            ClassSetMismatch => "class-set-mismatch",
            ModeMismatch { .. } => "mode-mismatch",
            TargetInNegatives(_) => "target-in-negatives",
            CountExceedsTotal { .. } => "count-exceeds-total",
            InvalidParameter(_) => "invalid-parameter",
            UnsupportedDensityPair { .. } => "unsupported-density-pair",
            Format { .. } => "format",
            File { .. } => "file",
            Io { .. } => "io",
            NonFiniteLoss(_) => "non-finite-loss",
            QuadratureNotConverged { .. } => "quadrature-not-converged",
        }
    }

    /// True when the failure is numerical rather than a data/contract issue.
    pub fn is_numeric(&self) -> bool {
        matches!(
            self,
            Error::NonFiniteLoss(_) | Error::QuadratureNotConverged { .. }
        )
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
