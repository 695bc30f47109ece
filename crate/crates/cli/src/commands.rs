use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use lexfuse_core::evaluate::{evaluate_distributions, EvalOptions, EvaluationReport};
use lexfuse_core::lexical::run_module;
use lexfuse_core::merge::merge_with;
use lexfuse_core::simulate::gen_calibrated_independent;
use lexfuse_core::{
    argmax_choice, expected_utility_threshold, merge_all, optimize, Distribution, ForecastSet, GenerativeSpec,
    OptimizerParams, OutputMode, QuestionSet, Rule,
};
use serde::Serialize;

use crate::cache::ForecastCache;
use crate::config::{ModuleConfig, CONFIG_ENV, DEFAULT_CONFIG};
use crate::error::{CliError, CliResult};
use crate::io::{file_digest, write_atomic};
use crate::questions::{load_questions, render_questions};
use crate::weights::{ParamsRecord, TrainingRecord, WeightsFile};

#[derive(Debug, Parser)]
#[command(name = "lexfuse", version, about = "Merge multiple-choice forecasts from lexical solver modules")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Score a question set with every configured module and write a forecast cache.
    RunModules(RunModulesArgs),
    /// Fit merging-rule weights by maximum likelihood.
    Train(TrainArgs),
    /// Report accuracy, mean likelihood, penalty score and intervals.
    Eval(EvalArgs),
    /// Generate a synthetic cache and question set.
    Simulate(SimulateArgs),
    /// Print the merged distribution and chosen answer per question.
    Predict(PredictArgs),
}

#[derive(Debug, Args)]
pub struct RunModulesArgs {
    #[arg(long)]
    pub questions: PathBuf,
    /// Module configuration file.
    #[arg(long, env = CONFIG_ENV, default_value = DEFAULT_CONFIG)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Mixture,
    Logarithmic,
    Product,
}

impl From<RuleArg> for Rule {
    fn from(r: RuleArg) -> Self {
        match r {
            RuleArg::Mixture => Rule::Mixture,
            RuleArg::Logarithmic => Rule::Logarithmic,
            RuleArg::Product => Rule::Product,
        }
    }
}

/// Optimizer settings; unset flags keep the defaults.
#[derive(Debug, Default, Args)]
pub struct OptimizerOverrides {
    #[arg(long)]
    pub restarts: Option<usize>,
    #[arg(long)]
    pub step_budget: Option<usize>,
    #[arg(long)]
    pub fd_delta: Option<f64>,
    #[arg(long)]
    pub grad_clip: Option<f64>,
    #[arg(long)]
    pub step_size: Option<f64>,
    #[arg(long)]
    pub min_step_size: Option<f64>,
    #[arg(long)]
    pub grad_norm_stop: Option<f64>,
    #[arg(long)]
    pub smoothing_epsilon: Option<f64>,
}

impl OptimizerOverrides {
    fn apply(&self, seed: u64) -> OptimizerParams {
        let d = OptimizerParams::default();
        OptimizerParams {
            fd_delta: self.fd_delta.unwrap_or(d.fd_delta),
            grad_clip: self.grad_clip.unwrap_or(d.grad_clip),
            step_size: self.step_size.unwrap_or(d.step_size),
            min_step_size: self.min_step_size.unwrap_or(d.min_step_size),
            step_budget: self.step_budget.unwrap_or(d.step_budget),
            grad_norm_stop: self.grad_norm_stop.unwrap_or(d.grad_norm_stop),
            restarts: self.restarts.unwrap_or(d.restarts),
            seed,
            smoothing_epsilon: self.smoothing_epsilon.unwrap_or(d.smoothing_epsilon),
        }
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub questions: PathBuf,
    #[arg(long, value_enum)]
    pub rule: RuleArg,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[command(flatten)]
    pub optimizer: OptimizerOverrides,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub questions: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    /// Points lost per wrong answer.
    #[arg(long, default_value_t = 0.5)]
    pub penalty: f64,
    /// Answer only when the top probability exceeds this; defaults to the
    /// break-even point for the penalty.
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Also write the report as JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Calibrated,
    OneHot,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Accuracy of one simulated module; repeat for more modules.
    #[arg(long = "acc", required = true)]
    pub accuracies: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub m: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value_t = ModeArg::Calibrated)]
    pub mode: ModeArg,
    #[arg(long)]
    pub out_cache: PathBuf,
    #[arg(long)]
    pub out_questions: PathBuf,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub cache: PathBuf,
    #[arg(long)]
    pub weights: PathBuf,
    #[arg(long)]
    pub questions: PathBuf,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Write predictions here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run(cli: Cli, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    match cli.command {
        Command::RunModules(a) => run_modules(&a, stdout),
        Command::Train(a) => train(&a, stdout),
        Command::Eval(a) => eval(&a, stdout),
        Command::Simulate(a) => simulate(&a, stdout),
        Command::Predict(a) => predict(&a, stdout),
    }
}

fn emit(stdout: &mut dyn std::io::Write, text: &str) -> CliResult<()> {
    match stdout.write_all(text.as_bytes()) {
        // a closed pipe (`| head`) is not an error
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        other => other.map_err(|e| CliError::Input(format!("standard output: {e}"))),
    }
}

fn run_modules(args: &RunModulesArgs, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    let questions = load_questions(&args.questions)?;
    let config = ModuleConfig::load(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    let modules = config.build(base)?;
    let mut columns = Vec::with_capacity(modules.len());
    for module in &modules {
        if module.task() != questions.task() {
            return Err(CliError::Consistency(format!(
                "module {} scores {:?} questions but {} holds {:?} questions",
                module.id,
                module.task(),
                args.questions.display(),
                questions.task()
            )));
        }
        log::info!("running module {}", module.id);
        columns.push(run_module(module, &questions)?);
    }
    let ids = modules.iter().map(|m| m.id.clone()).collect();
    let forecasts = ForecastSet::from_columns(ids, columns)?;
    let cache = ForecastCache::from_forecasts(&questions, &forecasts)?;
    write_atomic(&args.out, cache.render().as_bytes())?;
    emit(
        stdout,
        &format!(
            "wrote {} records ({} questions x {} modules) to {}\n",
            cache.records.len(),
            questions.len(),
            modules.len(),
            args.out.display()
        ),
    )
}

fn load_inputs(cache: &Path, questions: &Path) -> CliResult<(QuestionSet, ForecastSet)> {
    let questions = load_questions(questions)?;
    let forecasts = ForecastCache::load(cache)?.to_forecast_set(&questions)?;
    Ok((questions, forecasts))
}

fn train(args: &TrainArgs, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    let (questions, forecasts) = load_inputs(&args.cache, &args.questions)?;
    let answers = questions.answers();
    let rule = Rule::from(args.rule);
    let params = args.optimizer.apply(args.seed);
    let report = optimize(rule, &forecasts, &answers, &params)?;
    if !report.log_likelihood.is_finite() {
        return Err(CliError::Numeric(format!(
            "every restart ended at log-likelihood {}; some correct answer has zero probability under all weights tried",
            report.log_likelihood
        )));
    }

    let mut text = String::new();
    for (r, t) in report.restarts.iter().enumerate() {
        let _ = writeln!(text, "restart {r}: log-likelihood {:.6} after {} steps", t.log_likelihood, t.steps);
    }
    let mut individual = std::collections::BTreeMap::new();
    for (i, id) in forecasts.module_ids().iter().enumerate() {
        let single = optimize(Rule::Product, &forecasts.select(&[i])?, &answers, &params)?;
        individual.insert(id.clone(), single.best_weights.weights()[0]);
    }
    let file = WeightsFile {
        rule: rule.as_str().to_string(),
        weights: forecasts
            .module_ids()
            .iter()
            .cloned()
            .zip(report.best_weights.weights().iter().copied())
            .collect(),
        individual,
        training: TrainingRecord {
            seed: args.seed,
            log_likelihood: report.log_likelihood,
            mean_likelihood: report.mean_likelihood,
            smoothing_epsilon: report.smoothing_epsilon,
            question_digest: file_digest(&args.questions)?,
            params: ParamsRecord::from_params(&params),
        },
    };
    write_atomic(&args.out, file.render().as_bytes())?;
    let _ = writeln!(text, "rule {}: mean likelihood {:.6}", rule.as_str(), report.mean_likelihood);
    for (id, w) in &file.weights {
        let _ = writeln!(text, "  {id} = {w:.6}");
    }
    let _ = writeln!(text, "wrote {}", args.out.display());
    emit(stdout, &text)
}

/// One row of an evaluation report.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportRow {
    pub name: String,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub mean_likelihood: f64,
    pub penalty_score: f64,
    pub answered: usize,
    pub skipped: usize,
    pub ci95_low: f64,
    pub ci95_high: f64,
}

impl ReportRow {
    fn new(name: &str, r: &EvaluationReport, total: usize) -> Self {
        Self {
            name: name.to_string(),
            accuracy: r.accuracy,
            correct: r.correct,
            total,
            mean_likelihood: r.mean_likelihood,
            penalty_score: r.penalty_score,
            answered: r.answered,
            skipped: r.skipped,
            ci95_low: r.ci95.0,
            ci95_high: r.ci95.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalOutput {
    pub rule: String,
    pub penalty: f64,
    pub threshold: f64,
    /// Individual modules (own product-rule weight) followed by the merged row.
    pub rows: Vec<ReportRow>,
}

fn resolve_threshold(threshold: Option<f64>, penalty: f64) -> CliResult<f64> {
    if !(penalty >= 0.0 && penalty.is_finite()) {
        return Err(CliError::Input(format!("penalty must be finite and non-negative, got {penalty}")));
    }
    let t = threshold.unwrap_or_else(|| expected_utility_threshold(penalty));
    if !(0.0..=1.0).contains(&t) {
        return Err(CliError::Input(format!("threshold must lie in [0, 1], got {t}")));
    }
    Ok(t)
}

/// Forecasts merged with the file's weights, after the smoothing that was
/// applied during training.
fn merged_forecasts(weights: &WeightsFile, forecasts: &ForecastSet) -> CliResult<Vec<Distribution>> {
    let w = weights.weight_vector(forecasts.module_ids())?;
    let eps = weights.training.smoothing_epsilon;
    let prepared = if eps > 0.0 { forecasts.smoothed(eps)? } else { forecasts.clone() };
    Ok(merge_all(&prepared, &w)?.distributions().to_vec())
}

fn eval(args: &EvalArgs, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    let (questions, forecasts) = load_inputs(&args.cache, &args.questions)?;
    let weights = WeightsFile::load(&args.weights)?;
    let answers = questions.answers();
    let threshold = resolve_threshold(args.threshold, args.penalty)?;
    let options = EvalOptions {
        penalty: args.penalty,
        threshold,
        ..EvalOptions::default()
    };
    let m = answers.len();
    let mut rows = Vec::new();
    for (i, id) in forecasts.module_ids().iter().enumerate() {
        let Some(&w) = weights.individual.get(id) else {
            log::warn!("no individual weight for module {id}; skipping its row");
            continue;
        };
        let merged = forecasts
            .column(i)
            .iter()
            .map(|d| merge_with(Rule::Product, std::slice::from_ref(d), &[w]))
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(ReportRow::new(id, &evaluate_distributions(&merged, &answers, &options)?, m));
    }
    let merged = merged_forecasts(&weights, &forecasts)?;
    let rule = weights.rule()?;
    let name = format!("merged ({})", rule.as_str());
    rows.push(ReportRow::new(&name, &evaluate_distributions(&merged, &answers, &options)?, m));

    let output = EvalOutput {
        rule: rule.as_str().to_string(),
        penalty: args.penalty,
        threshold,
        rows,
    };
    if let Some(path) = &args.out {
        let json = serde_json::to_string_pretty(&output).expect("reports serialize") + "\n";
        write_atomic(path, json.as_bytes())?;
    }
    emit(stdout, &render_table(&output))
}

pub fn render_table(output: &EvalOutput) -> String {
    let width = output.rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max("module".len());
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<width$}  {:>8}  {:>10}  {:>17}  {:>8}  {:>7}",
        "module", "accuracy", "mean lik.", "95% interval", "penalty", "skipped"
    );
    for r in &output.rows {
        let _ = writeln!(
            s,
            "{:<width$}  {:>7.2}%  {:>10.4}  {:>6.2}% - {:>6.2}%  {:>8.1}  {:>7}",
            r.name,
            100.0 * r.accuracy,
            r.mean_likelihood,
            100.0 * r.ci95_low,
            100.0 * r.ci95_high,
            r.penalty_score,
            r.skipped
        );
    }
    let _ = writeln!(s, "penalty {} per wrong answer, answering above {:.4}", output.penalty, output.threshold);
    s
}

fn simulate(args: &SimulateArgs, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    let spec = GenerativeSpec {
        k: args.k,
        module_accuracies: args.accuracies.clone(),
        m: args.m,
        seed: args.seed,
        mode: match args.mode {
            ModeArg::Calibrated => OutputMode::Calibrated,
            ModeArg::OneHot => OutputMode::OneHot,
        },
    };
    let ds = gen_calibrated_independent(&spec)?;
    let questions = ds.questions();
    let cache = ForecastCache::from_forecasts(&questions, &ds.forecasts)?;
    write_atomic(&args.out_questions, render_questions(&questions).as_bytes())?;
    write_atomic(&args.out_cache, cache.render().as_bytes())?;
    emit(
        stdout,
        &format!(
            "seed {}: {} questions, {} modules, k = {}\n",
            args.seed,
            args.m,
            args.accuracies.len(),
            args.k
        ),
    )
}

/// One line of `predict` output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction<'a> {
    pub id: &'a str,
    pub choice: usize,
    pub probs: &'a [f64],
    pub skip: bool,
}

fn predict(args: &PredictArgs, stdout: &mut dyn std::io::Write) -> CliResult<()> {
    let (questions, forecasts) = load_inputs(&args.cache, &args.questions)?;
    let weights = WeightsFile::load(&args.weights)?;
    let threshold = resolve_threshold(args.threshold, 0.5)?;
    let merged = merged_forecasts(&weights, &forecasts)?;
    let mut text = String::new();
    for (inst, d) in questions.instances().iter().zip(&merged) {
        let line = Prediction {
            id: &inst.id,
            choice: argmax_choice(d),
            probs: d.probs(),
            skip: d.max_prob() <= threshold,
        };
        text.push_str(&serde_json::to_string(&line).expect("predictions serialize"));
        text.push('\n');
    }
    match &args.out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => emit(stdout, &text),
    }
}
