//! JSON rule-model documents and the human-readable DNF rendering.

use std::fmt::Write as _;

use cfire_core::rulemodel::{CandidateSummary, EmptyClassPolicy};
use cfire_core::{
    BoxParams, CfireParams, ClassDnf, ExplainerId, IntervalBox, Provenance, RuleModel, Term,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RuleDocument {
    pub classes: Vec<ClassDoc>,
    pub explainer: String,
    pub params: ParamsDoc,
    pub provenance: ProvenanceDoc,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ClassDoc {
    pub class_id: usize,
    pub terms: Vec<TermDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TermDoc {
    pub constraints: Vec<ConstraintDoc>,
    pub precision: f64,
    pub covered: usize,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstraintDoc {
    pub feature: usize,
    #[serde(default)]
    pub name: String,
    pub lo: f64,
    pub hi: f64,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsDoc {
    pub iota: f64,
    pub tau: f64,
    pub max_depth: usize,
    pub purity_threshold: f64,
    pub min_leaf_positives: usize,
    #[serde(default = "default_policy")]
    pub empty_class: String,
}

fn default_policy() -> String {
    "skip".into()
}

#[derive(Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProvenanceDoc {
    /// Hex, so the full 64 bits survive JSON number handling elsewhere.
    #[serde(default)]
    pub dataset_fingerprint: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub model_label: Option<String>,
    #[serde(default)]
    pub skipped_classes: Vec<usize>,
    #[serde(default)]
    pub candidates: Vec<CandidateDoc>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CandidateDoc {
    pub explainer: String,
    pub accuracy: Option<f64>,
    pub error: Option<String>,
}

fn feature_name(names: &[String], f: usize) -> String {
    names.get(f).cloned().unwrap_or_else(|| format!("x{f}"))
}

fn parse_explainer(code: &str, at: &str) -> Result<ExplainerId> {
    ExplainerId::from_code(code)
        .ok_or_else(|| CliError::Document(format!("{at}: unknown explainer `{code}`")))
}

impl RuleDocument {
    pub fn from_model(rm: &RuleModel, feature_names: &[String]) -> Self {
        let classes = rm
            .classes
            .iter()
            .map(|dnf| ClassDoc {
                class_id: dnf.class_id,
                terms: dnf
                    .terms
                    .iter()
                    .map(|t| TermDoc {
                        constraints: t
                            .bbox
                            .constraints()
                            .map(|(f, iv)| ConstraintDoc {
                                feature: f,
                                name: feature_name(feature_names, f),
                                lo: iv.lo,
                                hi: iv.hi,
                            })
                            .collect(),
                        precision: t.precision,
                        covered: t.covered,
                    })
                    .collect(),
            })
            .collect();
        let p = &rm.params;
        let prov = &rm.provenance;
        RuleDocument {
            classes,
            explainer: rm.explainer.code().into(),
            params: ParamsDoc {
                iota: p.iota,
                tau: p.tau,
                max_depth: p.boxes.max_depth,
                purity_threshold: p.boxes.purity_threshold,
                min_leaf_positives: p.boxes.min_leaf_positives,
                empty_class: match p.empty_class {
                    EmptyClassPolicy::Error => "error".into(),
                    EmptyClassPolicy::Skip => "skip".into(),
                },
            },
            provenance: ProvenanceDoc {
                dataset_fingerprint: format!("{:016x}", prov.dataset_fingerprint),
                seed: prov.seed,
                model_label: prov.model_label.clone(),
                skipped_classes: prov.skipped_classes.clone(),
                candidates: prov
                    .candidates
                    .iter()
                    .map(|c| CandidateDoc {
                        explainer: c.explainer.code().into(),
                        accuracy: c.accuracy,
                        error: c.error.clone(),
                    })
                    .collect(),
            },
        }
    }

    pub fn to_model(&self) -> Result<RuleModel> {
        let mut classes = Vec::with_capacity(self.classes.len());
        for (ci, c) in self.classes.iter().enumerate() {
            let mut terms = Vec::with_capacity(c.terms.len());
            for (ti, t) in c.terms.iter().enumerate() {
                let mut bbox = IntervalBox::new();
                for (k, con) in t.constraints.iter().enumerate() {
                    let at = format!("classes[{ci}].terms[{ti}].constraints[{k}]");
                    if bbox.get(con.feature).is_some() {
                        return Err(CliError::Document(format!(
                            "{at}: second constraint on feature {}",
                            con.feature
                        )));
                    }
                    bbox.constrain(con.feature, con.lo, con.hi)
                        .map_err(|e| CliError::Document(format!("{at}: {e}")))?;
                }
                if !(0.0..=1.0).contains(&t.precision) {
                    return Err(CliError::Document(format!(
                        "classes[{ci}].terms[{ti}].precision: {} is not in [0, 1]",
                        t.precision
                    )));
                }
                terms.push(Term { bbox, precision: t.precision, covered: t.covered });
            }
            classes.push(ClassDnf { class_id: c.class_id, terms });
        }
        let mut ids: Vec<usize> = classes.iter().map(|c| c.class_id).collect();
        ids.sort_unstable();
        ids.dedup();
        if ids.len() != classes.len() {
            return Err(CliError::Document("classes: duplicate class_id".into()));
        }
        let p = &self.params;
        let params = CfireParams {
            iota: p.iota,
            tau: p.tau,
            boxes: BoxParams {
                max_depth: p.max_depth,
                purity_threshold: p.purity_threshold,
                min_leaf_positives: p.min_leaf_positives,
            },
            empty_class: match p.empty_class.as_str() {
                "error" => EmptyClassPolicy::Error,
                "skip" => EmptyClassPolicy::Skip,
                other => {
                    return Err(CliError::Document(format!(
                        "params.empty_class: unknown policy `{other}`"
                    )))
                }
            },
        };
        params.validate().map_err(|e| CliError::Document(format!("params: {e}")))?;
        let prov = &self.provenance;
        let fingerprint = if prov.dataset_fingerprint.is_empty() {
            0
        } else {
            u64::from_str_radix(&prov.dataset_fingerprint, 16).map_err(|_| {
                CliError::Document("provenance.dataset_fingerprint: not a hex number".into())
            })?
        };
        let candidates = prov
            .candidates
            .iter()
            .enumerate()
            .map(|(i, c)| {
                Ok(CandidateSummary {
                    explainer: parse_explainer(&c.explainer, &format!("provenance.candidates[{i}]"))?,
                    accuracy: c.accuracy,
                    error: c.error.clone(),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RuleModel {
            classes,
            explainer: parse_explainer(&self.explainer, "explainer")?,
            params,
            provenance: Provenance {
                dataset_fingerprint: fingerprint,
                seed: prov.seed,
                model_label: prov.model_label.clone(),
                skipped_classes: prov.skipped_classes.clone(),
                candidates,
            },
        })
    }
}

/// Pretty-printed JSON, newline-terminated.
pub fn serialize(rm: &RuleModel, feature_names: &[String]) -> String {
    let mut out = serde_json::to_string_pretty(&RuleDocument::from_model(rm, feature_names))
        .expect("rule documents always serialize");
    out.push('\n');
    out
}

/// Parses a rule document; schema errors name the offending path.
pub fn deserialize(text: &str) -> Result<RuleModel> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let doc: RuleDocument = serde_path_to_error::deserialize(de)
        .map_err(|e| CliError::Document(format!("{}: {}", e.path(), e.inner())))?;
    doc.to_model()
}

fn number(v: f64) -> String {
    let s = format!("{v:.4}");
    let s = s.trim_end_matches('0').trim_end_matches('.');
    if s == "-0" { "0".into() } else { s.into() }
}

/// One line per class: `class: (name ∈ [lo, hi] ∧ ...) ∨ (...)`.
pub fn render(rm: &RuleModel, feature_names: &[String]) -> String {
    let mut out = String::new();
    for dnf in &rm.classes {
        let _ = write!(out, "{}: ", dnf.class_id);
        if dnf.terms.is_empty() {
            out.push_str("(no terms)");
        }
        for (i, t) in dnf.terms.iter().enumerate() {
            if i > 0 {
                out.push_str(" ∨ ");
            }
            let parts: Vec<String> = t
                .bbox
                .constraints()
                .map(|(f, iv)| {
                    format!("{} ∈ [{}, {}]", feature_name(feature_names, f), number(iv.lo), number(iv.hi))
                })
                .collect();
            let _ = write!(out, "({})", parts.join(" ∧ "));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
      "classes": [
        { "class_id": 1, "terms": [
          { "constraints": [ { "feature": 2, "name": "Amount", "lo": 250.0, "hi": 4250.0 } ],
            "precision": 0.9, "covered": 12 } ] }
      ],
      "explainer": "LI",
      "params": { "iota": 0.01, "tau": 0.01, "max_depth": 7, "purity_threshold": 0.95,
                  "min_leaf_positives": 1 },
      "provenance": {}
    }"#;

    #[test]
    fn golden_minimal_document() {
        let rm = deserialize(MINIMAL).unwrap();
        assert_eq!(rm.explainer, ExplainerId::Lime);
        assert_eq!(rm.classes.len(), 1);
        let dnf = &rm.classes[0];
        assert_eq!(dnf.class_id, 1);
        assert_eq!(dnf.terms[0].covered, 12);
        assert_eq!(
            dnf.terms[0].bbox,
            IntervalBox::from_constraints([(2, 250.0, 4250.0)]).unwrap()
        );
        let names = vec!["Recency".into(), "Time".into(), "Amount".into()];
        assert_eq!(render(&rm, &names), "1: (Amount ∈ [250, 4250])\n");
    }

    #[test]
    fn missing_bound_names_the_field() {
        let broken = MINIMAL.replace(r#", "hi": 4250.0"#, "");
        let msg = deserialize(&broken).unwrap_err().to_string();
        assert!(msg.contains("classes[0].terms[0].constraints[0]"), "{msg}");
        assert!(msg.contains("hi"), "{msg}");
    }

    #[test]
    fn invalid_interval_is_rejected() {
        let broken = MINIMAL.replace("4250.0", "1.0");
        assert!(deserialize(&broken).unwrap_err().to_string().contains("constraints[0]"));
    }
}
