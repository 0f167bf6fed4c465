use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::attribution::ExplainerId;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid dataset: {0}")]
    InvalidDataset(String),
    #[error("expected a vector of length {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },
    #[error("split part `{part}` is empty after rounding")]
    EmptySplitPart { part: &'static str },
    #[error("training data contains a single class")]
    SingleClass,
    #[error("training data has no labels")]
    MissingLabels,
    #[error("non-finite loss at epoch {epoch}")]
    NonFiniteLoss { epoch: usize },
    #[error("model has no gradient capability")]
    NoGradient,
    #[error("non-finite gradient")]
    NonFiniteGradient,
    #[error("non-finite model output")]
    NonFiniteOutput,
    #[error("sample is not in the lookup table")]
    UnknownSample,
    #[error("length mismatch: {what} has {found} entries, expected {expected}")]
    LengthMismatch { what: &'static str, expected: usize, found: usize },
    #[error("model {index}: {source}")]
    Model { index: usize, source: Box<Error> },
    #[error("explainer {explainer} failed on sample {sample}: {source}")]
    Explainer { explainer: ExplainerId, sample: usize, source: Box<Error> },
    #[error("transaction database is empty")]
    EmptyDatabase,
    #[error("ground set of size {0} is too large for exhaustive counting")]
    GroundSetTooLarge(usize),
    #[error("sample set is empty")]
    EmptySamples,
    #[error("feature set is empty")]
    EmptyFeatureSet,
    #[error("no input sample is predicted as class {0}")]
    EmptyClass(usize),
    #[error("invalid interval [{lo}, {hi}] for feature {feature}")]
    InvalidInterval { feature: usize, lo: f64, hi: f64 },
    #[error("all explainers failed: {}", join_failures(.0))]
    AllExplainersFailed(Vec<(ExplainerId, Error)>),
    #[error("no explanation for sample {0}")]
    MissingExplanation(usize),
}

fn join_failures(failures: &[(ExplainerId, Error)]) -> String {
    use core::fmt::Write;
    let mut out = String::new();
    for (i, (id, err)) in failures.iter().enumerate() {
        if i > 0 {
            out.push_str("; ");
        }
        let _ = write!(out, "{id}: {err}");
    }
    out
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { name, reason: reason.into() }
    }
}
