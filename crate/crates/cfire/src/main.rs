use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cfire::csvio::write_csv;
use cfire::error::{CliError, Result};
use cfire::{document, pipeline, RunConfig};
use cfire_core::synth::{word_frequency_task, BoxTask};
use cfire_core::{ExplainerId, MlpConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};

/// Global rule extraction from local explanations.
#[derive(Parser)]
#[command(name = "cfire", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train an ensemble, extract one rule model per member and evaluate it.
    Run(RunArgs),
    /// Write a synthetic dataset as CSV.
    Generate(GenerateArgs),
    /// Pretty-print a rule-model document.
    Show {
        path: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value = "label")]
    label_col: String,
    /// Train, input and test fractions.
    #[arg(long, default_value = "0.8,0.1,0.1", value_delimiter = ',')]
    split: Vec<f64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    models: usize,
    /// Comma-separated subset of ks, li, ig.
    #[arg(long, default_value = "ks,li,ig", value_delimiter = ',')]
    explainers: Vec<String>,
    #[arg(long, default_value_t = 0.01)]
    iota: f64,
    #[arg(long, default_value_t = 0.01)]
    tau: f64,
    #[arg(long, default_value_t = 7)]
    max_depth: usize,
    #[arg(long, default_value_t = 0.95)]
    purity: f64,
    #[arg(long, default_value_t = 16)]
    hidden: usize,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 0.01)]
    learning_rate: f64,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    /// Coalitions sampled per KernelSHAP explanation.
    #[arg(long, default_value_t = 300)]
    ks_samples: usize,
    /// Perturbations per LIME explanation.
    #[arg(long, default_value_t = 300)]
    lime_samples: usize,
    #[arg(long, default_value_t = 200)]
    ig_steps: usize,
    /// Also write every explainer's attributions on the input set.
    #[arg(long)]
    dump_attributions: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Task {
    /// Two corner boxes in two of eight uniform dimensions.
    Boxes,
    /// Sparse non-negative counts with a linear threshold label.
    Words,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    task: Task,
    #[arg(long, default_value_t = 2000)]
    n: usize,
    /// Dimension of the `words` task.
    #[arg(long, default_value_t = 57)]
    dim: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn run_config(a: RunArgs) -> Result<RunConfig> {
    let explainers = a
        .explainers
        .iter()
        .map(|s| {
            ExplainerId::from_code(s)
                .ok_or_else(|| CliError::Config(format!("explainers: unknown explainer `{s}`")))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut explainers = explainers;
    explainers.sort();
    explainers.dedup();
    let [train, input, test] = a.split[..] else {
        return Err(CliError::Config(format!("split: expected three fractions, got {}", a.split.len())));
    };
    let mut cfg = RunConfig::new(a.data, a.out);
    cfg.label_column = a.label_col;
    cfg.split = [train, input, test];
    cfg.seed = a.seed;
    cfg.n_models = a.models;
    cfg.explainers = explainers;
    cfg.iota = a.iota;
    cfg.tau = a.tau;
    cfg.max_depth = a.max_depth;
    cfg.purity_threshold = a.purity;
    cfg.mlp = MlpConfig {
        hidden_width: a.hidden,
        epochs: a.epochs,
        learning_rate: a.learning_rate,
        batch_size: a.batch_size,
        seed: 0,
    };
    cfg.ks_budget = a.ks_samples;
    cfg.lime_budget = a.lime_samples;
    cfg.ig_steps = a.ig_steps;
    cfg.dump_attributions = a.dump_attributions;
    Ok(cfg)
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(args) => {
            let cfg = run_config(args)?;
            let outcome = pipeline::run(&cfg)?;
            // a closed stdout (e.g. piped into `head`) is not an error
            let mut stdout = std::io::stdout().lock();
            if let Some(e) = &outcome.ensemble {
                let _ = writeln!(
                    stdout,
                    "{} of {} models: precision {:.3}, coverage {:.3}, size {:.1}, complete {:.2}",
                    e.n_models,
                    e.n_models_requested,
                    e.precision.mean,
                    e.coverage.mean,
                    e.size.mean,
                    e.completeness_rate
                );
            }
            let _ = writeln!(stdout, "artifacts written to {}", cfg.out.display());
            Ok(())
        }
        Command::Generate(g) => {
            let ds = match g.task {
                Task::Boxes => BoxTask::two_corners().generate(g.n, g.seed),
                Task::Words => word_frequency_task(g.n, g.dim, g.seed),
            }
            .map_err(|e| CliError::Config(e.to_string()))?;
            write_csv(&g.out, &ds)
        }
        Command::Show { path } => {
            let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
            let doc: document::RuleDocument = cfire::report::from_json(&text)?;
            let rm = doc.to_model()?;
            let mut names: Vec<String> = Vec::new();
            for c in doc.classes.iter().flat_map(|c| &c.terms).flat_map(|t| &t.constraints) {
                if names.len() <= c.feature {
                    names.resize(c.feature + 1, String::new());
                }
                names[c.feature] = c.name.clone();
            }
            for (i, n) in names.iter_mut().enumerate() {
                if n.is_empty() {
                    *n = format!("x{i}");
                }
            }
            let _ = std::io::stdout().lock().write_all(document::render(&rm, &names).as_bytes());
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if e.use_stderr() => {
            let _ = e.print();
            // usage mistakes are configuration errors
            return ExitCode::from(1);
        }
        Err(e) => e.exit(),
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
