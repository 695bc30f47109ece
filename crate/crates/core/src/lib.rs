//! Merging rules for multiple-choice forecasts.
//!
//! A set of solver modules each produce a probability distribution over the
//! choices of a question. This crate combines those distributions with the
//! mixture, logarithmic and product rules, trains the per-module rule
//! weights by maximum likelihood, scores the result, and provides offline
//! lexical modules for synonym and analogy questions together with a
//! simulator of calibrated, conditionally independent forecasters.

pub mod error;
pub mod evaluate;
pub mod lexical;
pub mod merge;
pub mod optimize;
pub mod simulate;
pub mod types;

pub use error::{FusionError, Result};
pub use evaluate::{
    accuracy, clopper_pearson, evaluate, expected_utility_threshold, penalty_score, EvalOptions,
    EvaluationReport,
};
pub use merge::{
    logarithmic_merge, merge, merge_all, mixture_merge, product_merge, MergedForecast,
};
pub use optimize::{
    estimate_gradient, hillclimb, log_likelihood, mean_likelihood, optimize, OptimizerParams,
    TrainingReport,
};
pub use simulate::{
    bayes_posterior, duplicate_module, gen_calibrated_independent, GenerativeSpec, OutputMode,
    SyntheticDataset,
};
pub use types::{
    argmax_choice, normalize, smooth, Distribution, ForecastSet, Instance, QuestionSet, Rule,
    TaskKind, WeightVector, WordTuple,
};
