//! Per-class DNF rule models: greedy term selection, the extraction loop over
//! classes, selection among explainers, and rule-based prediction.

use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::cmp::Ordering;

use crate::attribution::{attribute_all, important_features, AttributionVector, ExplainerId, LocalExplainer};
use crate::blackbox::{predict_all, BlackBox};
use crate::boxes::{learn_terms, BoxParams, CandidateTerm, ClassView, IntervalBox};
use crate::dataset::{class_block, ClassId, Dataset};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::itemsets::{enumerate_closed, TransactionDb};

/// A selected term as stored in a rule model.
#[derive(Debug, Clone, PartialEq)]
pub struct Term {
    pub bbox: IntervalBox,
    /// Precision on the input set, frozen at extraction time.
    pub precision: f64,
    /// Number of input samples of the class the term covers.
    pub covered: usize,
}

impl From<&CandidateTerm> for Term {
    fn from(c: &CandidateTerm) -> Self {
        Term { bbox: c.bbox.clone(), precision: c.precision, covered: c.covered.len() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassDnf {
    pub class_id: ClassId,
    pub terms: Vec<Term>,
}

/// What to do when no input sample is predicted as some class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EmptyClassPolicy {
    Error,
    #[default]
    Skip,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CfireParams {
    pub iota: f64,
    pub tau: f64,
    pub boxes: BoxParams,
    pub empty_class: EmptyClassPolicy,
}

impl Default for CfireParams {
    fn default() -> Self {
        Self { iota: 0.01, tau: 0.01, boxes: BoxParams::default(), empty_class: EmptyClassPolicy::Skip }
    }
}

impl CfireParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.iota > 0.0 && self.iota < 1.0) {
            return Err(Error::param("iota", "must lie in (0, 1)"));
        }
        if !(self.tau > 0.0 && self.tau <= 1.0) {
            return Err(Error::param("tau", "must lie in (0, 1]"));
        }
        self.boxes.validate()
    }
}

/// Outcome of one explainer when several were tried.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSummary {
    pub explainer: ExplainerId,
    /// Rule accuracy against the black box on the input set.
    pub accuracy: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Provenance {
    pub dataset_fingerprint: u64,
    pub seed: Option<u64>,
    pub model_label: Option<String>,
    /// Classes without any predicted input sample.
    pub skipped_classes: Vec<ClassId>,
    pub candidates: Vec<CandidateSummary>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RuleModel {
    pub classes: Vec<ClassDnf>,
    pub explainer: ExplainerId,
    pub params: CfireParams,
    pub provenance: Provenance,
}

impl RuleModel {
    /// Total number of terms across classes.
    pub fn size(&self) -> usize {
        self.classes.iter().map(|c| c.terms.len()).sum()
    }

    pub fn class(&self, class_id: ClassId) -> Option<&ClassDnf> {
        self.classes.iter().find(|c| c.class_id == class_id)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TermRef {
    pub class_id: ClassId,
    pub term_index: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Prediction {
    /// `None` means abstain: no term covers the sample.
    pub class: Option<ClassId>,
    pub winning_term: Option<TermRef>,
    pub n_satisfied_classes: usize,
}

/// Greedy set cover over `positives`. Returns indices into `terms` in
/// selection order.
///
/// Each round takes the term covering the most uncovered positives; ties go
/// to higher precision, then fewer constraints, then the earlier term.
pub fn greedy_select(terms: &[CandidateTerm], positives: &[usize]) -> Vec<usize> {
    let bound = positives
        .iter()
        .chain(terms.iter().flat_map(|t| &t.covered))
        .max()
        .map_or(0, |m| m + 1);
    let mut uncovered = alloc::vec![false; bound];
    positives.iter().for_each(|&p| uncovered[p] = true);
    let mut picked = Vec::new();
    let mut used = alloc::vec![false; terms.len()];
    loop {
        let mut best: Option<(usize, usize)> = None;
        for (i, t) in terms.iter().enumerate() {
            if used[i] {
                continue;
            }
            let gain = t.covered.iter().filter(|&&p| uncovered[p]).count();
            if gain == 0 {
                continue;
            }
            let better = match best {
                None => true,
                Some((b, bgain)) => {
                    let bt = &terms[b];
                    gain.cmp(&bgain)
                        .then_with(|| t.precision.total_cmp(&bt.precision))
                        .then_with(|| bt.bbox.n_constraints().cmp(&t.bbox.n_constraints()))
                        == Ordering::Greater
                }
            };
            if better {
                best = Some((i, gain));
            }
        }
        let Some((i, _)) = best else { break };
        used[i] = true;
        terms[i].covered.iter().for_each(|&p| uncovered[p] = false);
        picked.push(i);
    }
    picked
}

/// Builds one DNF per class from precomputed important-feature sets.
///
/// `important[i]` belongs to `input.sample(i)`; `predictions` are the black
/// box's outputs on the input set; `n_classes` fixes the label space.
pub fn extract_rules(
    input: &Dataset,
    predictions: &[ClassId],
    important: &[FeatureSet],
    n_classes: usize,
    explainer: ExplainerId,
    params: &CfireParams,
) -> Result<RuleModel> {
    params.validate()?;
    for (what, len) in [("predictions", predictions.len()), ("important feature sets", important.len())] {
        if len != input.len() {
            return Err(Error::LengthMismatch { what, expected: input.len(), found: len });
        }
    }
    let mut classes = Vec::new();
    let mut skipped = Vec::new();
    for class_id in 0..n_classes {
        let block = class_block(predictions, class_id);
        if block.is_empty() {
            match params.empty_class {
                EmptyClassPolicy::Error => return Err(Error::EmptyClass(class_id)),
                EmptyClassPolicy::Skip => {
                    skipped.push(class_id);
                    continue;
                }
            }
        }
        let db = TransactionDb::new(
            block.indices.iter().map(|&i| important[i].clone()).collect(),
            input.dim(),
        )?;
        let view = ClassView { input, predictions, block: &block };
        let mut candidates = Vec::new();
        for closed in enumerate_closed(&db, params.tau)? {
            // a term without constraints would cover everything
            if closed.features.is_empty() {
                continue;
            }
            candidates.extend(learn_terms(&closed, &view, &params.boxes)?);
        }
        let terms = greedy_select(&candidates, &block.indices)
            .into_iter()
            .map(|i| Term::from(&candidates[i]))
            .collect();
        classes.push(ClassDnf { class_id, terms });
    }
    Ok(RuleModel {
        classes,
        explainer,
        params: *params,
        provenance: Provenance {
            dataset_fingerprint: input.fingerprint(),
            skipped_classes: skipped,
            ..Provenance::default()
        },
    })
}

pub fn important_sets(attributions: &[AttributionVector], iota: f64) -> Vec<FeatureSet> {
    attributions.iter().map(|a| important_features(&a.weights, iota)).collect()
}

/// Explains every input sample with `explainer` and extracts a rule model.
pub fn cfire(
    model: &dyn BlackBox,
    explainer: &dyn LocalExplainer,
    input: &Dataset,
    params: &CfireParams,
) -> Result<RuleModel> {
    let predictions = predict_all(model, input)?;
    let attributions = attribute_all(model, explainer, input)?;
    extract_rules(
        input,
        &predictions,
        &important_sets(&attributions, params.iota),
        model.n_classes(),
        explainer.id(),
        params,
    )
}

/// Fraction of `input` where the rules agree with `predictions`; abstentions
/// count as disagreement.
pub fn rule_accuracy(rm: &RuleModel, input: &Dataset, predictions: &[ClassId]) -> f64 {
    if input.is_empty() {
        return 0.0;
    }
    let hits = input
        .samples()
        .iter()
        .zip(predictions)
        .filter(|(x, &p)| predict_rules(rm, x).class == Some(p))
        .count();
    hits as f64 / input.len() as f64
}

/// One explainer's run inside [`cfire_multi_detailed`].
#[derive(Debug, Clone)]
pub struct ExplainerRun {
    pub explainer: ExplainerId,
    pub attributions: Vec<AttributionVector>,
    pub outcome: Result<(RuleModel, f64)>,
}

#[derive(Debug, Clone)]
pub struct MultiExtraction {
    pub chosen: RuleModel,
    pub runs: Vec<ExplainerRun>,
}

impl MultiExtraction {
    pub fn chosen_run(&self) -> &ExplainerRun {
        self.runs.iter().find(|r| r.explainer == self.chosen.explainer).expect("chosen run exists")
    }
}

/// Runs every explainer and keeps the rule model with the highest rule
/// accuracy on the input set; ties go to the canonical order KS, LI, IG.
pub fn cfire_multi_detailed(
    model: &dyn BlackBox,
    explainers: &[&dyn LocalExplainer],
    input: &Dataset,
    params: &CfireParams,
) -> Result<MultiExtraction> {
    if explainers.is_empty() {
        return Err(Error::param("explainers", "at least one explainer is required"));
    }
    let predictions = predict_all(model, input)?;
    let mut ordered: Vec<&dyn LocalExplainer> = explainers.to_vec();
    ordered.sort_by_key(|e| e.id());

    let mut runs = Vec::with_capacity(ordered.len());
    for explainer in ordered {
        let id = explainer.id();
        let (attributions, outcome) = match attribute_all(model, explainer, input) {
            Err(e) => (Vec::new(), Err(e)),
            Ok(attr) => {
                let outcome = extract_rules(
                    input,
                    &predictions,
                    &important_sets(&attr, params.iota),
                    model.n_classes(),
                    id,
                    params,
                )
                .map(|rm| {
                    let acc = rule_accuracy(&rm, input, &predictions);
                    (rm, acc)
                });
                (attr, outcome)
            }
        };
        runs.push(ExplainerRun { explainer: id, attributions, outcome });
    }

    let summaries: Vec<CandidateSummary> = runs
        .iter()
        .map(|r| match &r.outcome {
            Ok((_, acc)) => CandidateSummary { explainer: r.explainer, accuracy: Some(*acc), error: None },
            Err(e) => CandidateSummary {
                explainer: r.explainer,
                accuracy: None,
                error: Some(e.to_string()),
            },
        })
        .collect();

    let mut best: Option<(usize, f64)> = None;
    for (i, r) in runs.iter().enumerate() {
        if let Ok((_, acc)) = &r.outcome {
            if best.is_none_or(|(_, b)| *acc > b) {
                best = Some((i, *acc));
            }
        }
    }
    let Some((i, _)) = best else {
        let failures = runs
            .into_iter()
            .filter_map(|r| r.outcome.err().map(|e| (r.explainer, e)))
            .collect();
        return Err(Error::AllExplainersFailed(failures));
    };
    let mut chosen = runs[i].outcome.as_ref().map(|(rm, _)| rm.clone()).expect("ok outcome");
    chosen.provenance.candidates = summaries;
    Ok(MultiExtraction { chosen, runs })
}

pub fn cfire_multi(
    model: &dyn BlackBox,
    explainers: &[&dyn LocalExplainer],
    input: &Dataset,
    params: &CfireParams,
) -> Result<RuleModel> {
    cfire_multi_detailed(model, explainers, input, params).map(|m| m.chosen)
}

/// Terms covering `x`, as `(class, term index, term)`.
pub fn satisfied_terms<'a>(
    rm: &'a RuleModel,
    x: &'a [f64],
) -> impl Iterator<Item = (ClassId, usize, &'a Term)> + 'a {
    rm.classes.iter().flat_map(move |dnf| {
        dnf.terms
            .iter()
            .enumerate()
            .filter(move |(_, t)| t.bbox.covers(x))
            .map(move |(i, t)| (dnf.class_id, i, t))
    })
}

/// Predicts with the rules. When terms of several classes cover `x`, the
/// term with the highest stored precision wins, then the one covering more
/// samples, then the lowest class id and term index.
pub fn predict_rules(rm: &RuleModel, x: &[f64]) -> Prediction {
    let mut best: Option<(ClassId, usize, &Term)> = None;
    let mut satisfied_classes: Vec<ClassId> = Vec::new();
    for (class_id, index, term) in satisfied_terms(rm, x) {
        if !satisfied_classes.contains(&class_id) {
            satisfied_classes.push(class_id);
        }
        let wins = match best {
            None => true,
            Some((bc, bi, bt)) => term
                .precision
                .total_cmp(&bt.precision)
                .then(term.covered.cmp(&bt.covered))
                .then(bc.cmp(&class_id))
                .then(bi.cmp(&index))
                == Ordering::Greater,
        };
        if wins {
            best = Some((class_id, index, term));
        }
    }
    Prediction {
        class: best.map(|b| b.0),
        winning_term: best.map(|(class_id, term_index, _)| TermRef { class_id, term_index }),
        n_satisfied_classes: satisfied_classes.len(),
    }
}
