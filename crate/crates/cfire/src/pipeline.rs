//! End-to-end run: load, split, train an ensemble, extract rules per model,
//! evaluate on the test split and write every artifact.
//!
//! Every random stream derives from the root seed as
//! `root ^ (tag << 32) ^ index` with tags 1 (split), 2 (model training,
//! index = model) and 3 (explainer sampling, index = model).

use std::path::{Path, PathBuf};

use cfire_core::attribution::attribute_all;
use cfire_core::blackbox::{accuracy, train_mlp};
use cfire_core::dataset::split;
use cfire_core::eval::evaluate;
use cfire_core::rulemodel::{cfire_multi_detailed, EmptyClassPolicy, ExplainerRun};
use cfire_core::{
    important_features, BoxParams, CfireParams, Dataset, EvalOptions, Explainer, ExplainerId,
    ExplainerParams, LocalExplainer, Mlp, MlpConfig, RuleModel, SplitSpec,
};
use rayon::prelude::*;

use crate::csvio::{load_csv, write_text};
use crate::document;
use crate::error::{CliError, Result, StageExt};
use crate::report::{
    ensemble_csv, summary_text, to_json, write_attributions, EnsembleDoc, FailureDoc,
    ModelReportDoc,
};

/// Environment variable holding the worker thread count.
pub const THREADS_ENV: &str = "CFIRE_THREADS";

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub data: PathBuf,
    pub label_column: String,
    /// Train, input and test fractions.
    pub split: [f64; 3],
    pub seed: u64,
    pub n_models: usize,
    pub explainers: Vec<ExplainerId>,
    pub iota: f64,
    pub tau: f64,
    pub max_depth: usize,
    pub purity_threshold: f64,
    pub mlp: MlpConfig,
    pub ks_budget: usize,
    pub lime_budget: usize,
    pub ig_steps: usize,
    pub dump_attributions: bool,
    pub out: PathBuf,
}

impl RunConfig {
    pub fn new(data: impl Into<PathBuf>, out: impl Into<PathBuf>) -> Self {
        RunConfig {
            data: data.into(),
            label_column: "label".into(),
            split: [0.8, 0.1, 0.1],
            seed: 0,
            n_models: 10,
            explainers: vec![ExplainerId::KernelShap, ExplainerId::Lime, ExplainerId::IntegratedGradients],
            iota: 0.01,
            tau: 0.01,
            max_depth: 7,
            purity_threshold: 0.95,
            mlp: MlpConfig::default(),
            ks_budget: 300,
            lime_budget: 300,
            ig_steps: 200,
            dump_attributions: false,
            out: out.into(),
        }
    }

    pub fn cfire_params(&self) -> CfireParams {
        CfireParams {
            iota: self.iota,
            tau: self.tau,
            boxes: BoxParams {
                max_depth: self.max_depth,
                purity_threshold: self.purity_threshold,
                ..BoxParams::default()
            },
            empty_class: EmptyClassPolicy::Skip,
        }
    }

    fn split_spec(&self) -> cfire_core::Result<SplitSpec> {
        let [a, b, c] = self.split;
        SplitSpec::new(a, b, c, derive_seed(self.seed, 1, 0))
    }

    /// Checks every parameter before any data is read; messages name the flag.
    pub fn validate(&self) -> Result<()> {
        let config = |e: cfire_core::Error| CliError::Config(e.to_string());
        if self.n_models == 0 {
            return Err(CliError::Config("models: must be at least 1".into()));
        }
        if self.explainers.is_empty() {
            return Err(CliError::Config("explainers: at least one is required".into()));
        }
        if self.ks_budget < 2 || self.lime_budget < 2 || self.ig_steps == 0 {
            return Err(CliError::Config("explainer budgets must be positive".into()));
        }
        self.split_spec().map_err(config)?;
        self.cfire_params().validate().map_err(config)?;
        self.mlp.validate().map_err(config)
    }
}

pub fn derive_seed(root: u64, tag: u64, index: u64) -> u64 {
    root ^ (tag << 32) ^ index
}

/// Outcome for one ensemble member.
#[derive(Debug)]
pub struct ModelRecord {
    pub index: usize,
    pub seed: u64,
    pub result: Result<ModelArtifacts, FailureDoc>,
}

#[derive(Debug)]
pub struct ModelArtifacts {
    pub rules: RuleModel,
    pub report: ModelReportDoc,
    pub runs: Vec<ExplainerRun>,
}

#[derive(Debug)]
pub struct RunOutcome {
    pub models: Vec<ModelRecord>,
    pub ensemble: Option<EnsembleDoc>,
    pub feature_names: Vec<String>,
}

struct Splits {
    train: Dataset,
    input: Dataset,
    test: Dataset,
}

fn fail(index: usize, stage: &str, e: impl ToString) -> FailureDoc {
    FailureDoc { model: index, stage: stage.into(), error: e.to_string() }
}

fn run_model(cfg: &RunConfig, s: &Splits, index: usize) -> Result<ModelArtifacts, FailureDoc> {
    let seed = derive_seed(cfg.seed, 2, 0).wrapping_add(index as u64);
    let model: Mlp =
        train_mlp(&s.train, &MlpConfig { seed, ..cfg.mlp }).map_err(|e| fail(index, "train", e))?;
    let bb_accuracy = accuracy(&model, &s.test).map_err(|e| fail(index, "train", e))?;

    let params = ExplainerParams {
        ks_budget: cfg.ks_budget,
        lime_budget: cfg.lime_budget,
        ig_steps: cfg.ig_steps,
        iota: cfg.iota,
        ..ExplainerParams::from_training(&s.train, derive_seed(cfg.seed, 3, index as u64))
    };
    let explainers: Vec<Explainer> =
        cfg.explainers.iter().map(|&k| Explainer::new(k, params.clone())).collect();
    let refs: Vec<&dyn LocalExplainer> = explainers.iter().map(|e| e as &dyn LocalExplainer).collect();

    let multi = cfire_multi_detailed(&model, &refs, &s.input, &cfg.cfire_params())
        .map_err(|e| fail(index, "extract", e))?;
    let mut rules = multi.chosen;
    rules.provenance.dataset_fingerprint = s.input.fingerprint();
    rules.provenance.seed = Some(seed);
    rules.provenance.model_label = Some(format!("mlp-{index:03}"));

    let chosen = explainers.iter().find(|e| e.kind == rules.explainer).expect("chosen explainer");
    let explanations: Vec<_> = attribute_all(&model, chosen, &s.test)
        .map_err(|e| fail(index, "evaluate", e))?
        .iter()
        .map(|a| Some(important_features(&a.weights, cfg.iota)))
        .collect();
    let report = evaluate(&rules, &model, &s.test, Some(&explanations), &EvalOptions::default())
        .map_err(|e| fail(index, "evaluate", e))?;
    Ok(ModelArtifacts {
        report: ModelReportDoc::new(index, seed, rules.explainer.code(), bb_accuracy, &report),
        rules,
        runs: multi.runs,
    })
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .map_err(|_| CliError::Config(format!("{THREADS_ENV}: `{v}` is not a thread count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Config(format!("thread pool: {e}")))
}

/// Runs the configured pipeline and writes all artifacts under `cfg.out`.
/// Fails with [`CliError::AllModelsFailed`] only when no model survives.
pub fn run(cfg: &RunConfig) -> Result<RunOutcome> {
    cfg.validate()?;
    let data = load_csv(&cfg.data, Some(&cfg.label_column))?;
    let (train, input, test) = split(&data, &cfg.split_spec().stage("split")?)
        .map_err(|e| CliError::data(&cfg.data, e.to_string()))?;
    let splits = Splits { train, input, test };
    log::info!(
        "split {} rows into {} train, {} input, {} test",
        data.len(),
        splits.train.len(),
        splits.input.len(),
        splits.test.len()
    );

    let pool = thread_pool()?;
    let models: Vec<ModelRecord> = pool.install(|| {
        (0..cfg.n_models)
            .into_par_iter()
            .map(|index| {
                let result = run_model(cfg, &splits, index);
                match &result {
                    Ok(a) => log::info!("model {index}: {} terms via {}", a.rules.size(), a.rules.explainer),
                    Err(f) => log::warn!("model {index} failed during {}: {}", f.stage, f.error),
                }
                ModelRecord { index, seed: derive_seed(cfg.seed, 2, 0).wrapping_add(index as u64), result }
            })
            .collect()
    });

    let outcome = summarize(cfg, models, data.feature_names().to_vec());
    write_outputs(cfg, &outcome)?;
    if outcome.ensemble.is_none() {
        return Err(CliError::AllModelsFailed);
    }
    Ok(outcome)
}

fn summarize(cfg: &RunConfig, models: Vec<ModelRecord>, feature_names: Vec<String>) -> RunOutcome {
    let reports: Vec<_> = models
        .iter()
        .filter_map(|m| m.result.as_ref().ok())
        .map(|a| to_eval_report(&a.report))
        .collect();
    let failures: Vec<FailureDoc> =
        models.iter().filter_map(|m| m.result.as_ref().err().cloned()).collect();
    let ensemble = cfire_core::eval::aggregate(&reports)
        .ok()
        .map(|r| EnsembleDoc::new(cfg.n_models, &r, failures));
    RunOutcome { models, ensemble, feature_names }
}

fn to_eval_report(r: &ModelReportDoc) -> cfire_core::EvalReport {
    cfire_core::EvalReport {
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

fn write_outputs(cfg: &RunConfig, outcome: &RunOutcome) -> Result<()> {
    let out = &cfg.out;
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let names = &outcome.feature_names;
    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for m in &outcome.models {
        let stem = format!("model_{:03}", m.index);
        match &m.result {
            Ok(a) => {
                write_text(&out.join(format!("{stem}.rules.json")), &document::serialize(&a.rules, names))?;
                write_text(&out.join(format!("{stem}.rules.txt")), &document::render(&a.rules, names))?;
                write_text(&out.join(format!("{stem}.report.json")), &to_json(&a.report))?;
                if cfg.dump_attributions {
                    dump_runs(out, &stem, names, &a.runs)?;
                }
                rows.push(a.report.clone());
            }
            Err(f) => failures.push(f.clone()),
        }
    }
    if let Some(e) = &outcome.ensemble {
        write_text(&out.join("ensemble.json"), &to_json(e))?;
        write_text(&out.join("ensemble.csv"), &ensemble_csv(&rows))?;
    }
    write_text(&out.join("summary.txt"), &summary_text(&rows, outcome.ensemble.as_ref(), &failures))
}

fn dump_runs(out: &Path, stem: &str, names: &[String], runs: &[ExplainerRun]) -> Result<()> {
    for r in runs.iter().filter(|r| !r.attributions.is_empty()) {
        let path = out.join(format!("{stem}.attributions.{}.csv", r.explainer.code()));
        write_attributions(&path, names, &r.attributions)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seeds_differ_by_stage_and_index() {
        let a = derive_seed(42, 1, 0);
        let b = derive_seed(42, 2, 0);
        let c = derive_seed(42, 3, 1);
        assert!(a != b && b != c && a != c);
        assert_eq!(derive_seed(0, 0, 5), 5);
    }

    #[test]
    fn validation_names_the_flag() {
        let mut cfg = RunConfig::new("x.csv", "out");
        cfg.tau = 0.0;
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("tau"), "{msg}");
        let mut cfg = RunConfig::new("x.csv", "out");
        cfg.split = [0.5, 0.1, 0.1];
        assert!(matches!(cfg.validate(), Err(CliError::Config(_))));
        let mut cfg = RunConfig::new("x.csv", "out");
        cfg.n_models = 0;
        assert_eq!(cfg.validate().unwrap_err().exit_code(), 1);
    }
}
