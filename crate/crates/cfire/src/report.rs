//! Report documents, the ensemble CSV table and attribution dumps.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use cfire_core::{AttributionVector, EnsembleReport, EvalReport};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StatsDoc {
    pub mean: f64,
    pub std: f64,
}

impl From<cfire_core::eval::MetricStats> for StatsDoc {
    fn from(s: cfire_core::eval::MetricStats) -> Self {
        StatsDoc { mean: s.mean, std: s.std }
    }
}

/// Evaluation of one model's rules on the test split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelReportDoc {
    pub model: usize,
    pub seed: u64,
    pub explainer: String,
    pub blackbox_test_accuracy: f64,
    pub precision: f64,
    pub coverage: f64,
    pub f1: f64,
    pub size: usize,
    pub complete: bool,
    pub prec_local: Option<f64>,
    pub prec_local_vacuous: bool,
    pub per_class_term_counts: BTreeMap<usize, usize>,
}

impl ModelReportDoc {
    pub fn new(model: usize, seed: u64, explainer: &str, bb_accuracy: f64, r: &EvalReport) -> Self {
        ModelReportDoc {
            model,
            seed,
            explainer: explainer.into(),
            blackbox_test_accuracy: bb_accuracy,
            precision: r.precision,
            coverage: r.coverage,
            f1: r.f1,
            size: r.size,
            complete: r.complete,
            prec_local: r.prec_local,
            prec_local_vacuous: r.prec_local_vacuous,
            per_class_term_counts: r.per_class_term_counts.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FailureDoc {
    pub model: usize,
    pub stage: String,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleDoc {
    pub n_models_requested: usize,
    pub n_models: usize,
    pub precision: StatsDoc,
    pub coverage: StatsDoc,
    pub f1: StatsDoc,
    pub size: StatsDoc,
    pub prec_local: Option<StatsDoc>,
    pub completeness_rate: f64,
    pub failures: Vec<FailureDoc>,
}

impl EnsembleDoc {
    pub fn new(requested: usize, r: &EnsembleReport, failures: Vec<FailureDoc>) -> Self {
        EnsembleDoc {
            n_models_requested: requested,
            n_models: r.n_models,
            precision: r.precision.into(),
            coverage: r.coverage.into(),
            f1: r.f1.into(),
            size: r.size.into(),
            prec_local: r.prec_local.map(Into::into),
            completeness_rate: r.completeness_rate,
            failures,
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("reports always serialize");
    s.push('\n');
    s
}

pub fn from_json<T: for<'de> Deserialize<'de>>(text: &str) -> Result<T> {
    let de = &mut serde_json::Deserializer::from_str(text);
    serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Document(format!("{}: {}", e.path(), e.inner())))
}

const CSV_HEADER: [&str; 10] = [
    "model",
    "seed",
    "explainer",
    "blackbox_accuracy",
    "precision",
    "coverage",
    "f1",
    "size",
    "complete",
    "prec_local",
];

/// One row per surviving model.
pub fn ensemble_csv(rows: &[ModelReportDoc]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        w.write_record([
            r.model.to_string(),
            r.seed.to_string(),
            r.explainer.clone(),
            r.blackbox_test_accuracy.to_string(),
            r.precision.to_string(),
            r.coverage.to_string(),
            r.f1.to_string(),
            r.size.to_string(),
            r.complete.to_string(),
            r.prec_local.map(|v| v.to_string()).unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
}

/// `sample,<feature names...>`, one row per explained sample.
pub fn write_attributions(path: &Path, names: &[String], attrs: &[AttributionVector]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| CliError::data(path, e.to_string()))?;
    let mut header = vec!["sample".to_owned()];
    header.extend(names.iter().cloned());
    w.write_record(&header).map_err(|e| CliError::data(path, e.to_string()))?;
    for a in attrs {
        let mut row = vec![a.sample_index.to_string()];
        row.extend(a.weights.iter().map(f64::to_string));
        w.write_record(&row).map_err(|e| CliError::data(path, e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

fn stats(s: &StatsDoc) -> String {
    format!("{:.3} ± {:.3}", s.mean, s.std)
}

pub fn summary_text(rows: &[ModelReportDoc], ensemble: Option<&EnsembleDoc>, failures: &[FailureDoc]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>5}  {:>4}  {:>8}  {:>9}  {:>8}  {:>6}  {:>4}  {:>8}  {:>6}",
        "model", "expl", "bb_acc", "precision", "coverage", "f1", "size", "complete", "prec_l"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:>5}  {:>4}  {:>8.3}  {:>9.3}  {:>8.3}  {:>6.3}  {:>4}  {:>8}  {:>6}",
            r.model,
            r.explainer,
            r.blackbox_test_accuracy,
            r.precision,
            r.coverage,
            r.f1,
            r.size,
            if r.complete { "yes" } else { "no" },
            r.prec_local.map(|v| format!("{v:.3}")).unwrap_or_else(|| "-".into()),
        );
    }
    if let Some(e) = ensemble {
        let _ = writeln!(out);
        let _ = writeln!(out, "models      {} of {}", e.n_models, e.n_models_requested);
        let _ = writeln!(out, "precision   {}", stats(&e.precision));
        let _ = writeln!(out, "coverage    {}", stats(&e.coverage));
        let _ = writeln!(out, "f1          {}", stats(&e.f1));
        let _ = writeln!(out, "size        {}", stats(&e.size));
        if let Some(pl) = &e.prec_local {
            let _ = writeln!(out, "prec_local  {}", stats(pl));
        }
        let _ = writeln!(out, "complete    {:.3}", e.completeness_rate);
    }
    for f in failures {
        let _ = writeln!(out, "model {} failed during {}: {}", f.model, f.stage, f.error);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(model: usize, precision: f64) -> ModelReportDoc {
        ModelReportDoc {
            model,
            seed: 7,
            explainer: "KS".into(),
            blackbox_test_accuracy: 0.97,
            precision,
            coverage: 0.8,
            f1: 0.5,
            size: 3,
            complete: true,
            prec_local: None,
            prec_local_vacuous: false,
            per_class_term_counts: BTreeMap::from([(0, 1), (1, 2)]),
        }
    }

    #[test]
    fn csv_has_one_row_per_model() {
        let text = ensemble_csv(&[row(0, 0.9), row(1, 1.0)]);
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 3);
        assert!(lines[0].starts_with("model,seed,explainer"));
        assert_eq!(lines[2], "1,7,KS,0.97,1,0.8,0.5,3,true,");
    }

    #[test]
    fn model_report_round_trips() {
        let r = row(4, 0.25);
        let back: ModelReportDoc = from_json(&to_json(&r)).unwrap();
        assert_eq!(back, r);
    }
}
