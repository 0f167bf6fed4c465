//! Global rule models from local attributions.
//!
//! Local explainers mark the important features of each sample, closed
//! frequent feature sets over those markings seed bounded boxes, and a
//! greedy cover assembles one DNF of boxes per predicted class. The crate is
//! `no_std` with `alloc`; IO and the command line live in the `cfire` crate.

#![no_std]
extern crate alloc;

pub mod attribution;
pub mod blackbox;
pub mod boxes;
pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod itemsets;
pub mod linalg;
pub mod rulemodel;
pub mod synth;

pub use attribution::{
    important_features, integrated_gradients, kernel_shap, lime_local, AttributionVector,
    Explainer, ExplainerId, ExplainerParams, LocalExplainer,
};
pub use blackbox::{BlackBox, LinearModel, LookupOracle, Mlp, MlpConfig, RashomonEnsemble};
pub use boxes::{BoxParams, CandidateTerm, Interval, IntervalBox};
pub use dataset::{ClassBlock, ClassId, Dataset, SplitSpec};
pub use error::{Error, Result};
pub use eval::{EnsembleReport, EvalOptions, EvalReport};
pub use features::FeatureSet;
pub use itemsets::{ClosedSet, TransactionDb};
pub use rulemodel::{CfireParams, ClassDnf, Prediction, Provenance, RuleModel, Term};
