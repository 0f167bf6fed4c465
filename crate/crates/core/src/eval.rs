//! Faithfulness, compactness, completeness and explainer-agreement measures
//! for rule models, and their aggregation over a model ensemble.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::blackbox::BlackBox;
use crate::dataset::{ClassId, Dataset};
use crate::error::{Error, Result};
use crate::features::FeatureSet;
use crate::rulemodel::{predict_rules, satisfied_terms, RuleModel};

/// Precision a rule model must beat to count as complete.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum ChanceLevel {
    /// `1 / number of classes`
    #[default]
    Uniform,
    /// A fixed level such as the majority-class rate.
    Fixed(f64),
}

/// Which terms a sample's important features are compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PrecLocalMode {
    #[default]
    WinningTerm,
    /// Mean over all satisfied terms of the predicted class.
    AllSatisfied,
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct EvalOptions {
    pub chance: ChanceLevel,
    pub prec_local_mode: PrecLocalMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    /// Agreement with the black box among covered samples.
    pub precision: f64,
    /// Fraction of samples on which the rules do not abstain.
    pub coverage: f64,
    pub f1: f64,
    pub size: usize,
    pub complete: bool,
    pub prec_local: Option<f64>,
    /// Set when no sample agreed with the black box, so `prec_local` is 0 by convention.
    pub prec_local_vacuous: bool,
    pub per_class_term_counts: BTreeMap<ClassId, usize>,
}

/// Harmonic mean of precision and coverage, 0 when both are 0.
pub fn f1_score(precision: f64, coverage: f64) -> f64 {
    if precision + coverage <= 0.0 {
        0.0
    } else {
        2.0 * precision * coverage / (precision + coverage)
    }
}

/// Rule predictions paired with black-box predictions for every sample.
fn agreement(rm: &RuleModel, model: &dyn BlackBox, x_eval: &Dataset) -> Result<(usize, usize)> {
    let mut covered = 0;
    let mut agree = 0;
    for x in x_eval.samples() {
        if let Some(c) = predict_rules(rm, x).class {
            covered += 1;
            if c == model.predict(x)? {
                agree += 1;
            }
        }
    }
    Ok((covered, agree))
}

pub fn evaluate(
    rm: &RuleModel,
    model: &dyn BlackBox,
    x_eval: &Dataset,
    explanations: Option<&[Option<FeatureSet>]>,
    options: &EvalOptions,
) -> Result<EvalReport> {
    if x_eval.is_empty() {
        return Err(Error::EmptySamples);
    }
    let (covered, agree) = agreement(rm, model, x_eval)?;
    let coverage = covered as f64 / x_eval.len() as f64;
    let precision = if covered == 0 { 0.0 } else { agree as f64 / covered as f64 };

    let n_classes = model.n_classes();
    let mut per_class_term_counts: BTreeMap<ClassId, usize> = (0..n_classes).map(|c| (c, 0)).collect();
    for dnf in &rm.classes {
        *per_class_term_counts.entry(dnf.class_id).or_default() += dnf.terms.len();
    }
    let chance = match options.chance {
        ChanceLevel::Uniform => 1.0 / n_classes.max(1) as f64,
        ChanceLevel::Fixed(level) => level,
    };
    let complete = precision > chance && per_class_term_counts.values().all(|&n| n > 0);

    let (prec_local, vacuous) = match explanations {
        Some(e) => {
            let pl = prec_local(rm, e, model, x_eval, options.prec_local_mode)?;
            (Some(pl.value), pl.vacuous)
        }
        None => (None, false),
    };
    Ok(EvalReport {
        precision,
        coverage,
        f1: f1_score(precision, coverage),
        size: rm.size(),
        complete,
        prec_local,
        prec_local_vacuous: vacuous,
        per_class_term_counts,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrecLocal {
    pub value: f64,
    /// No sample agreed with the black box.
    pub vacuous: bool,
}

fn overlap(term_features: &FeatureSet, important: &FeatureSet) -> f64 {
    let n = term_features.len();
    if n == 0 {
        return 0.0;
    }
    term_features.intersection(important).len() as f64 / n as f64
}

/// Mean share of the applicable term's features that the local explanation
/// also marks important, over samples where rules and black box agree.
pub fn prec_local(
    rm: &RuleModel,
    explanations: &[Option<FeatureSet>],
    model: &dyn BlackBox,
    x_eval: &Dataset,
    mode: PrecLocalMode,
) -> Result<PrecLocal> {
    let mut total = 0.0;
    let mut n = 0usize;
    for (i, x) in x_eval.samples().iter().enumerate() {
        let pred = predict_rules(rm, x);
        let (Some(class), Some(win)) = (pred.class, pred.winning_term) else {
            continue;
        };
        if class != model.predict(x)? {
            continue;
        }
        let important = explanations
            .get(i)
            .and_then(Option::as_ref)
            .ok_or(Error::MissingExplanation(i))?;
        let score = match mode {
            PrecLocalMode::WinningTerm => {
                let dnf = rm.class(win.class_id).expect("winning class exists");
                overlap(&dnf.terms[win.term_index].bbox.features(), important)
            }
            PrecLocalMode::AllSatisfied => {
                let scores: Vec<f64> = satisfied_terms(rm, x)
                    .filter(|(c, _, _)| *c == class)
                    .map(|(_, _, t)| overlap(&t.bbox.features(), important))
                    .collect();
                scores.iter().sum::<f64>() / scores.len() as f64
            }
        };
        total += score;
        n += 1;
    }
    Ok(if n == 0 {
        PrecLocal { value: 0.0, vacuous: true }
    } else {
        PrecLocal { value: total / n as f64, vacuous: false }
    })
}

/// Mean and population standard deviation; `(0, 0)` for no values.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, libm::sqrt(var))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricStats {
    pub mean: f64,
    pub std: f64,
}

impl MetricStats {
    fn of(values: &[f64]) -> Self {
        let (mean, std) = mean_std(values);
        Self { mean, std }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnsembleReport {
    pub n_models: usize,
    pub precision: MetricStats,
    pub coverage: MetricStats,
    pub f1: MetricStats,
    pub size: MetricStats,
    /// Over the models whose reports carry a value.
    pub prec_local: Option<MetricStats>,
    pub completeness_rate: f64,
}

pub fn aggregate(reports: &[EvalReport]) -> Result<EnsembleReport> {
    if reports.is_empty() {
        return Err(Error::EmptySamples);
    }
    let collect = |f: fn(&EvalReport) -> f64| reports.iter().map(f).collect::<Vec<_>>();
    let local: Vec<f64> = reports.iter().filter_map(|r| r.prec_local).collect();
    Ok(EnsembleReport {
        n_models: reports.len(),
        precision: MetricStats::of(&collect(|r| r.precision)),
        coverage: MetricStats::of(&collect(|r| r.coverage)),
        f1: MetricStats::of(&collect(|r| r.f1)),
        size: MetricStats::of(&collect(|r| r.size as f64)),
        prec_local: (!local.is_empty()).then(|| MetricStats::of(&local)),
        completeness_rate: reports.iter().filter(|r| r.complete).count() as f64
            / reports.len() as f64,
    })
}

/// Evaluates each rule model against its paired black box and aggregates.
pub fn evaluate_ensemble(
    rule_models: &[RuleModel],
    models: &[&dyn BlackBox],
    x_eval: &Dataset,
    options: &EvalOptions,
) -> Result<EnsembleReport> {
    if rule_models.len() != models.len() {
        return Err(Error::LengthMismatch {
            what: "models",
            expected: rule_models.len(),
            found: models.len(),
        });
    }
    let reports = rule_models
        .iter()
        .zip(models)
        .map(|(rm, m)| evaluate(rm, *m, x_eval, None, options))
        .collect::<Result<Vec<_>>>()?;
    aggregate(&reports)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::ExplainerId;
    use crate::blackbox::LookupOracle;
    use crate::boxes::IntervalBox;
    use crate::rulemodel::{CfireParams, ClassDnf, Provenance, Term};
    use alloc::vec;

    fn rules(terms0: Vec<Term>, terms1: Vec<Term>) -> RuleModel {
        RuleModel {
            classes: vec![
                ClassDnf { class_id: 0, terms: terms0 },
                ClassDnf { class_id: 1, terms: terms1 },
            ],
            explainer: ExplainerId::KernelShap,
            params: CfireParams::default(),
            provenance: Provenance::default(),
        }
    }

    fn term(constraints: &[(usize, f64, f64)]) -> Term {
        Term {
            bbox: IntervalBox::from_constraints(constraints.iter().copied()).unwrap(),
            precision: 1.0,
            covered: 1,
        }
    }

    /// 10 points on a line; class 1 predicted for x >= 5.
    fn line() -> (Dataset, LookupOracle) {
        let ds = Dataset::from_rows((0..10).map(|i| vec![i as f64, 0.0]).collect(), None).unwrap();
        let preds = (0..10).map(|i| usize::from(i >= 5)).collect();
        let oracle = LookupOracle::new(&ds, preds, None).unwrap();
        (ds, oracle)
    }

    #[test]
    fn perfect_rules() {
        let (ds, oracle) = line();
        let rm = rules(vec![term(&[(0, 0.0, 4.0)])], vec![term(&[(0, 5.0, 9.0)])]);
        let r = evaluate(&rm, &oracle, &ds, None, &EvalOptions::default()).unwrap();
        assert_eq!((r.precision, r.coverage, r.f1), (1.0, 1.0, 1.0));
        assert!(r.complete);
        assert_eq!(r.size, 2);
    }

    #[test]
    fn partial_coverage_and_errors() {
        let (ds, oracle) = line();
        let rm = rules(vec![term(&[(0, 0.0, 5.0)])], vec![term(&[(0, 6.0, 7.0)])]);
        // class 0 claims 0..=5: 5 is wrong; class 1 claims 6,7: ok => 8 covered, 7 agree
        let r = evaluate(&rm, &oracle, &ds, None, &EvalOptions::default()).unwrap();
        assert_eq!(r.coverage, 0.8);
        assert_eq!(r.precision, 7.0 / 8.0);
        let rm = rules(vec![term(&[(0, 0.0, 6.0)])], vec![term(&[(0, 7.0, 7.0)])]);
        let r = evaluate(&rm, &oracle, &ds, None, &EvalOptions::default()).unwrap();
        // covered 0..=7, wrong at 5 and 6
        assert_eq!(r.coverage, 0.8);
        assert_eq!(r.precision, 0.75);
        assert!((r.f1 - 0.774_193_548_387).abs() < 1e-9);
    }

    #[test]
    fn missing_class_is_incomplete() {
        let (ds, oracle) = line();
        let rm = rules(vec![term(&[(0, 0.0, 4.0)])], vec![]);
        let r = evaluate(&rm, &oracle, &ds, None, &EvalOptions::default()).unwrap();
        assert_eq!(r.precision, 1.0);
        assert!(!r.complete);
        let mut rm = rm;
        rm.classes.pop();
        assert!(!evaluate(&rm, &oracle, &ds, None, &EvalOptions::default()).unwrap().complete);
    }

    #[test]
    fn prec_local_scores() {
        let (ds, oracle) = line();
        let rm = rules(vec![term(&[(0, 0.0, 4.0), (1, -1.0, 1.0)])], vec![term(&[(0, 5.0, 9.0)])]);
        let mut expl: Vec<Option<FeatureSet>> = vec![Some(FeatureSet::from([0, 1, 5])); 10];
        let full = prec_local(&rm, &expl, &oracle, &ds, PrecLocalMode::WinningTerm).unwrap();
        assert_eq!(full.value, 1.0);
        for e in expl.iter_mut().take(5) {
            *e = Some(FeatureSet::from([1]));
        }
        // five samples score 0.5, five score 1.0
        let half = prec_local(&rm, &expl, &oracle, &ds, PrecLocalMode::WinningTerm).unwrap();
        assert_eq!(half.value, 0.75);
        expl[0] = None;
        assert_eq!(
            prec_local(&rm, &expl, &oracle, &ds, PrecLocalMode::WinningTerm).unwrap_err(),
            Error::MissingExplanation(0)
        );
    }

    #[test]
    fn prec_local_vacuous() {
        let (ds, oracle) = line();
        let rm = rules(vec![term(&[(0, 5.0, 9.0)])], vec![term(&[(0, 0.0, 4.0)])]);
        let expl = vec![None; 10];
        let pl = prec_local(&rm, &expl, &oracle, &ds, PrecLocalMode::WinningTerm).unwrap();
        assert_eq!(pl, PrecLocal { value: 0.0, vacuous: true });
    }

    fn report(precision: f64, complete: bool) -> EvalReport {
        EvalReport {
            precision,
            coverage: 1.0,
            f1: f1_score(precision, 1.0),
            size: 2,
            complete,
            prec_local: None,
            prec_local_vacuous: false,
            per_class_term_counts: BTreeMap::new(),
        }
    }

    #[test]
    fn aggregation() {
        let one = aggregate(&[report(0.8, true)]).unwrap();
        assert_eq!(one.precision, MetricStats { mean: 0.8, std: 0.0 });
        let two = aggregate(&[report(0.8, true), report(1.0, false)]).unwrap();
        assert!((two.precision.mean - 0.9).abs() < 1e-12);
        assert!((two.precision.std - 0.1).abs() < 1e-12);
        assert_eq!(two.completeness_rate, 0.5);
        assert!(aggregate(&[]).is_err());
    }

    #[test]
    fn f1_edges() {
        assert_eq!(f1_score(0.0, 0.0), 0.0);
        assert_eq!(f1_score(0.0, 1.0), 0.0);
        assert_eq!(f1_score(1.0, 1.0), 1.0);
    }
}
