//! Weights files (TOML).
//!
//! ```toml
//! rule = "product"
//!
//! [weights]
//! pmi = 0.8
//!
//! [individual]
//! pmi = 0.8
//!
//! [training]
//! seed = 0
//! log_likelihood = -1094.09
//! mean_likelihood = 0.578
//! smoothing_epsilon = 0.0
//! question_digest = "<sha256 of the training questions file>"
//!
//! [training.params]
//! fd_delta = 0.01
//! ...
//! ```
//!
//! `[individual]` holds each module's own product-rule weight, used for the
//! per-module rows of an evaluation report.

use std::collections::BTreeMap;
use std::path::Path;

use lexfuse_core::{OptimizerParams, Rule, WeightVector};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};
use crate::io::read_text;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsRecord {
    pub fd_delta: f64,
    pub grad_clip: f64,
    pub step_size: f64,
    pub min_step_size: f64,
    pub step_budget: usize,
    pub grad_norm_stop: f64,
    pub restarts: usize,
    pub smoothing_epsilon: f64,
}

impl ParamsRecord {
    pub fn from_params(p: &OptimizerParams) -> Self {
        Self {
            fd_delta: p.fd_delta,
            grad_clip: p.grad_clip,
            step_size: p.step_size,
            min_step_size: p.min_step_size,
            step_budget: p.step_budget,
            grad_norm_stop: p.grad_norm_stop,
            restarts: p.restarts,
            smoothing_epsilon: p.smoothing_epsilon,
        }
    }

    pub fn to_params(&self, seed: u64) -> OptimizerParams {
        OptimizerParams {
            fd_delta: self.fd_delta,
            grad_clip: self.grad_clip,
            step_size: self.step_size,
            min_step_size: self.min_step_size,
            step_budget: self.step_budget,
            grad_norm_stop: self.grad_norm_stop,
            restarts: self.restarts,
            seed,
            smoothing_epsilon: self.smoothing_epsilon,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingRecord {
    pub seed: u64,
    pub log_likelihood: f64,
    pub mean_likelihood: f64,
    /// Smoothing applied to the forecasts before training and merging.
    pub smoothing_epsilon: f64,
    pub question_digest: String,
    pub params: ParamsRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightsFile {
    pub rule: String,
    pub weights: BTreeMap<String, f64>,
    #[serde(default)]
    pub individual: BTreeMap<String, f64>,
    pub training: TrainingRecord,
}

impl WeightsFile {
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let file: Self = toml::from_str(text).map_err(|e| CliError::Input(format!("{source}: {e}")))?;
        file.rule()?;
        Ok(file)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    pub fn render(&self) -> String {
        toml::to_string(self).expect("weights files serialize")
    }

    pub fn rule(&self) -> CliResult<Rule> {
        self.rule.parse().map_err(CliError::from)
    }

    /// The trained weights ordered like `module_ids`, which must name
    /// exactly the modules in the file.
    pub fn weight_vector(&self, module_ids: &[String]) -> CliResult<WeightVector> {
        let rule = self.rule()?;
        let stored = WeightVector::new(
            rule,
            self.weights.keys().cloned().collect(),
            self.weights.values().copied().collect(),
        )?;
        Ok(stored.aligned_to(module_ids)?)
    }
}
