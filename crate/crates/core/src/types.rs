//! Domain types shared by every module: questions, forecasts, distributions
//! and weight vectors, plus the normalization and smoothing primitives.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{FusionError, Result};

/// Tolerance on the sum of a probability vector.
pub const SUM_TOLERANCE: f64 = 1e-9;

/// Case-folds a token and strips surrounding punctuation.
pub fn normalize_token(raw: &str) -> String {
    raw.trim_matches(|c: char| !c.is_alphanumeric())
        .to_lowercase()
}

/// One word (synonym questions) or an ordered word pair (analogy questions).
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct WordTuple(Vec<String>);

impl WordTuple {
    pub fn new<I, S>(words: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let words: Vec<String> = words
            .into_iter()
            .map(|w| normalize_token(w.as_ref()))
            .collect();
        if words.is_empty() || words.len() > 2 {
            return Err(FusionError::InvalidQuestion(format!(
                "word tuple must hold 1 or 2 tokens, got {}",
                words.len()
            )));
        }
        if words.iter().any(String::is_empty) {
            return Err(FusionError::InvalidQuestion(
                "word tuple contains an empty token".into(),
            ));
        }
        Ok(Self(words))
    }

    pub fn words(&self) -> &[String] {
        &self.0
    }

    pub fn arity(&self) -> usize {
        self.0.len()
    }

    pub fn first(&self) -> &str {
        &self.0[0]
    }

    /// Second word of a pair; `None` for single words.
    pub fn second(&self) -> Option<&str> {
        self.0.get(1).map(String::as_str)
    }
}

impl fmt::Display for WordTuple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.join(":"))
    }
}

/// A multiple-choice question with exactly one correct choice.
#[derive(Debug, Clone, PartialEq)]
pub struct Instance {
    pub id: String,
    pub stem: WordTuple,
    pub choices: Vec<WordTuple>,
    pub answer: usize,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        stem: WordTuple,
        choices: Vec<WordTuple>,
        answer: usize,
    ) -> Result<Self> {
        let id = id.into();
        if choices.len() < 2 {
            return Err(FusionError::InvalidQuestion(format!(
                "instance {id}: need at least 2 choices, got {}",
                choices.len()
            )));
        }
        if answer >= choices.len() {
            return Err(FusionError::InvalidQuestion(format!(
                "instance {id}: answer index {answer} out of range for {} choices",
                choices.len()
            )));
        }
        if choices.iter().any(|c| c.arity() != stem.arity()) {
            return Err(FusionError::InvalidQuestion(format!(
                "instance {id}: choice arity differs from stem arity {}",
                stem.arity()
            )));
        }
        Ok(Self {
            id,
            stem,
            choices,
            answer,
        })
    }

    pub fn k(&self) -> usize {
        self.choices.len()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TaskKind {
    Synonym,
    Analogy,
}

impl TaskKind {
    pub fn arity(self) -> usize {
        match self {
            TaskKind::Synonym => 1,
            TaskKind::Analogy => 2,
        }
    }

    fn from_arity(arity: usize) -> Option<Self> {
        match arity {
            1 => Some(TaskKind::Synonym),
            2 => Some(TaskKind::Analogy),
            _ => None,
        }
    }
}

/// A set of instances sharing the number of choices and the tuple arity.
#[derive(Debug, Clone, PartialEq)]
pub struct QuestionSet {
    instances: Vec<Instance>,
    task: TaskKind,
}

impl QuestionSet {
    pub fn new(instances: Vec<Instance>) -> Result<Self> {
        let first = instances
            .first()
            .ok_or_else(|| FusionError::InvalidQuestion("question set is empty".into()))?;
        let k = first.k();
        let task = TaskKind::from_arity(first.stem.arity())
            .ok_or_else(|| FusionError::InvalidQuestion("bad stem arity".into()))?;
        let mut seen = HashSet::new();
        for inst in &instances {
            if inst.k() != k {
                return Err(FusionError::InvalidQuestion(format!(
                    "instance {} has {} choices but the set uses {k}",
                    inst.id,
                    inst.k()
                )));
            }
            if inst.stem.arity() != task.arity() {
                return Err(FusionError::InvalidQuestion(format!(
                    "instance {} mixes tuple arities",
                    inst.id
                )));
            }
            if !seen.insert(inst.id.as_str()) {
                return Err(FusionError::InvalidQuestion(format!(
                    "duplicate instance id {}",
                    inst.id
                )));
            }
        }
        Ok(Self { instances, task })
    }

    pub fn instances(&self) -> &[Instance] {
        &self.instances
    }

    pub fn task(&self) -> TaskKind {
        self.task
    }

    pub fn k(&self) -> usize {
        self.instances[0].k()
    }

    pub fn len(&self) -> usize {
        self.instances.len()
    }

    pub fn is_empty(&self) -> bool {
        self.instances.is_empty()
    }

    pub fn answers(&self) -> Vec<usize> {
        self.instances.iter().map(|i| i.answer).collect()
    }
}

/// A probability vector over the choices of one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution(Vec<f64>);

impl Distribution {
    /// Validates a probability vector; the sum must be within
    /// [`SUM_TOLERANCE`] of one.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_scores(&probs)?;
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            return Err(FusionError::InvalidDistribution(format!(
                "entries sum to {sum}, expected 1"
            )));
        }
        Ok(Self(probs))
    }

    /// Lenient constructor for ingested data: vectors whose sum is off by more
    /// than the tolerance are rescaled with a warning. Negative, non-finite or
    /// all-zero vectors are rejected.
    pub fn ingest(probs: Vec<f64>) -> Result<Self> {
        check_scores(&probs)?;
        let sum: f64 = probs.iter().sum();
        if sum <= 0.0 {
            return Err(FusionError::InvalidDistribution(
                "entries sum to zero".into(),
            ));
        }
        if (sum - 1.0).abs() > SUM_TOLERANCE {
            log::warn!("renormalizing distribution with sum {sum}");
            return Ok(Self(probs.into_iter().map(|p| p / sum).collect()));
        }
        Ok(Self(probs))
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform distribution needs at least one choice");
        Self(vec![1.0 / k as f64; k])
    }

    /// Wraps an already-normalized vector produced inside the crate.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        Self(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn k(&self) -> usize {
        self.0.len()
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn max_prob(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

impl AsRef<[f64]> for Distribution {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

fn check_scores(scores: &[f64]) -> Result<()> {
    if scores.is_empty() {
        return Err(FusionError::InvalidDistribution("empty vector".into()));
    }
    for (index, &value) in scores.iter().enumerate() {
        if !value.is_finite() || value < 0.0 {
            return Err(FusionError::InvalidScore { index, value });
        }
    }
    Ok(())
}

/// Scales non-negative scores to sum to one. All-zero input is uniform.
pub fn normalize(raw: &[f64]) -> Result<Distribution> {
    check_scores(raw)?;
    let sum: f64 = raw.iter().sum();
    if sum == 0.0 {
        return Ok(Distribution::uniform(raw.len()));
    }
    Ok(Distribution(raw.iter().map(|x| x / sum).collect()))
}

/// Adds `epsilon` to every entry and renormalizes: `(d_j + eps) / (1 + k eps)`.
pub fn smooth(d: &Distribution, epsilon: f64) -> Result<Distribution> {
    if !epsilon.is_finite() || epsilon < 0.0 {
        return Err(FusionError::InvalidParameter {
            name: "epsilon",
            reason: format!("must be finite and non-negative, got {epsilon}"),
        });
    }
    if epsilon == 0.0 {
        return Ok(d.clone());
    }
    let denom = 1.0 + d.k() as f64 * epsilon;
    Ok(Distribution(
        d.0.iter().map(|p| (p + epsilon) / denom).collect(),
    ))
}

/// Index of the largest probability, ties to the lowest index.
pub fn argmax_choice(d: &Distribution) -> usize {
    argmax_slice(&d.0)
}

pub(crate) fn argmax_slice(xs: &[f64]) -> usize {
    let mut best = 0;
    for (j, &x) in xs.iter().enumerate().skip(1) {
        if x > xs[best] {
            best = j;
        }
    }
    best
}

/// Module forecasts for `m` instances and `n` modules.
#[derive(Debug, Clone, PartialEq)]
pub struct ForecastSet {
    module_ids: Vec<String>,
    k: usize,
    // row-major: instance h, module i at h * n + i
    cells: Vec<Distribution>,
}

impl ForecastSet {
    /// Builds a set from one row per instance, each row holding one
    /// distribution per module in `module_ids` order.
    pub fn new(module_ids: Vec<String>, rows: Vec<Vec<Distribution>>) -> Result<Self> {
        let n = module_ids.len();
        if n == 0 {
            return Err(FusionError::DimensionMismatch("no modules".into()));
        }
        if rows.is_empty() {
            return Err(FusionError::DimensionMismatch("no instances".into()));
        }
        let mut ids = HashSet::new();
        for id in &module_ids {
            if !ids.insert(id.as_str()) {
                return Err(FusionError::DimensionMismatch(format!(
                    "duplicate module id {id}"
                )));
            }
        }
        let k = rows[0]
            .first()
            .map(Distribution::k)
            .ok_or_else(|| FusionError::DimensionMismatch("empty forecast row".into()))?;
        let mut cells = Vec::with_capacity(rows.len() * n);
        for (h, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(FusionError::DimensionMismatch(format!(
                    "instance {h} has {} forecasts for {n} modules",
                    row.len()
                )));
            }
            for d in row {
                if d.k() != k {
                    return Err(FusionError::DimensionMismatch(format!(
                        "instance {h} mixes {k} and {} choices",
                        d.k()
                    )));
                }
                cells.push(d);
            }
        }
        Ok(Self {
            module_ids,
            k,
            cells,
        })
    }

    /// Builds a set from per-module columns (one distribution per instance).
    pub fn from_columns(module_ids: Vec<String>, columns: Vec<Vec<Distribution>>) -> Result<Self> {
        if columns.len() != module_ids.len() {
            return Err(FusionError::DimensionMismatch(format!(
                "{} columns for {} modules",
                columns.len(),
                module_ids.len()
            )));
        }
        let m = columns.first().map(Vec::len).unwrap_or(0);
        if columns.iter().any(|c| c.len() != m) {
            return Err(FusionError::DimensionMismatch(
                "columns differ in length".into(),
            ));
        }
        let mut iters: Vec<_> = columns.into_iter().map(Vec::into_iter).collect();
        let rows = (0..m)
            .map(|_| iters.iter_mut().map(|it| it.next().unwrap()).collect())
            .collect();
        Self::new(module_ids, rows)
    }

    pub fn module_ids(&self) -> &[String] {
        &self.module_ids
    }

    pub fn n_modules(&self) -> usize {
        self.module_ids.len()
    }

    pub fn n_instances(&self) -> usize {
        self.cells.len() / self.module_ids.len()
    }

    pub fn k(&self) -> usize {
        self.k
    }

    /// The `n` module distributions for instance `h`.
    pub fn instance(&self, h: usize) -> &[Distribution] {
        let n = self.n_modules();
        &self.cells[h * n..(h + 1) * n]
    }

    pub fn get(&self, h: usize, i: usize) -> &Distribution {
        &self.cells[h * self.n_modules() + i]
    }

    pub fn column(&self, i: usize) -> Vec<Distribution> {
        (0..self.n_instances())
            .map(|h| self.get(h, i).clone())
            .collect()
    }

    pub fn module_index(&self, id: &str) -> Option<usize> {
        self.module_ids.iter().position(|m| m == id)
    }

    /// Keeps only the listed modules, in the listed order.
    pub fn select(&self, modules: &[usize]) -> Result<Self> {
        if let Some(&bad) = modules.iter().find(|&&i| i >= self.n_modules()) {
            return Err(FusionError::DimensionMismatch(format!(
                "module index {bad} out of range"
            )));
        }
        let ids = modules.iter().map(|&i| self.module_ids[i].clone()).collect();
        let rows = (0..self.n_instances())
            .map(|h| modules.iter().map(|&i| self.get(h, i).clone()).collect())
            .collect();
        Self::new(ids, rows)
    }

    /// Appends a module column.
    pub fn with_module(&self, id: impl Into<String>, column: Vec<Distribution>) -> Result<Self> {
        let id = id.into();
        if column.len() != self.n_instances() {
            return Err(FusionError::DimensionMismatch(format!(
                "column has {} entries for {} instances",
                column.len(),
                self.n_instances()
            )));
        }
        let mut ids = self.module_ids.clone();
        ids.push(id);
        let rows = column
            .into_iter()
            .enumerate()
            .map(|(h, d)| {
                let mut row = self.instance(h).to_vec();
                row.push(d);
                row
            })
            .collect();
        Self::new(ids, rows)
    }

    /// Applies [`smooth`] to every cell.
    pub fn smoothed(&self, epsilon: f64) -> Result<Self> {
        let cells = self
            .cells
            .iter()
            .map(|d| smooth(d, epsilon))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            module_ids: self.module_ids.clone(),
            k: self.k,
            cells,
        })
    }
}

/// The three merging rules.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    Mixture,
    Logarithmic,
    Product,
}

impl Rule {
    pub const ALL: [Rule; 3] = [Rule::Mixture, Rule::Logarithmic, Rule::Product];

    pub fn as_str(self) -> &'static str {
        match self {
            Rule::Mixture => "mixture",
            Rule::Logarithmic => "logarithmic",
            Rule::Product => "product",
        }
    }

    /// Feasible interval for every weight of this rule.
    pub fn weight_bounds(self) -> (f64, f64) {
        match self {
            Rule::Mixture | Rule::Product => (0.0, 1.0),
            Rule::Logarithmic => (0.0, LOG_WEIGHT_MAX),
        }
    }
}

/// Upper bound on logarithmic-rule weights.
pub const LOG_WEIGHT_MAX: f64 = 10.0;

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Rule {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mixture" => Ok(Rule::Mixture),
            "logarithmic" | "log" => Ok(Rule::Logarithmic),
            "product" => Ok(Rule::Product),
            other => Err(FusionError::InvalidParameter {
                name: "rule",
                reason: format!("unknown rule `{other}`"),
            }),
        }
    }
}

/// Per-module weights together with the rule they parameterize.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    rule: Rule,
    module_ids: Vec<String>,
    weights: Vec<f64>,
}

impl WeightVector {
    pub fn new(rule: Rule, module_ids: Vec<String>, weights: Vec<f64>) -> Result<Self> {
        if module_ids.len() != weights.len() {
            return Err(FusionError::DimensionMismatch(format!(
                "{} weights for {} modules",
                weights.len(),
                module_ids.len()
            )));
        }
        check_weights(rule, &weights)?;
        Ok(Self {
            rule,
            module_ids,
            weights,
        })
    }

    /// Weights keyed by the position of each module, with generated ids.
    pub fn unnamed(rule: Rule, weights: Vec<f64>) -> Result<Self> {
        let ids = (0..weights.len()).map(|i| format!("m{i}")).collect();
        Self::new(rule, ids, weights)
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn module_ids(&self) -> &[String] {
        &self.module_ids
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, module_id: &str) -> Option<f64> {
        self.module_ids
            .iter()
            .position(|m| m == module_id)
            .map(|i| self.weights[i])
    }

    /// Reorders the weights to follow `module_ids`; every id must be present.
    pub fn aligned_to(&self, module_ids: &[String]) -> Result<Self> {
        let weights = module_ids
            .iter()
            .map(|id| {
                self.get(id).ok_or_else(|| {
                    FusionError::DimensionMismatch(format!("no weight for module {id}"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        if module_ids.len() != self.module_ids.len() {
            return Err(FusionError::DimensionMismatch(format!(
                "weights cover {} modules, forecasts have {}",
                self.module_ids.len(),
                module_ids.len()
            )));
        }
        Self::new(self.rule, module_ids.to_vec(), weights)
    }
}

pub(crate) fn check_weights(rule: Rule, weights: &[f64]) -> Result<()> {
    let (lo, hi) = rule.weight_bounds();
    for &w in weights {
        if !w.is_finite() || w < lo || w > hi {
            return Err(FusionError::InvalidParameter {
                name: "weights",
                reason: format!("{rule} weight {w} outside [{lo}, {hi}]"),
            });
        }
    }
    Ok(())
}
