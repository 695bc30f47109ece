//! Maximum-likelihood training of merging-rule weights.
//!
//! The objective is the training log-likelihood `S(w) = Σ_h ln D^{h,w}_{a(h)}`.
//! Training runs several restart hill-climbs from uniform random starting
//! points. Each hill-climb estimates the gradient by finite differences and
//! takes steps whose largest component has length `step_size`. A step that
//! fails to raise `S` is rejected and the step length halved, so the accepted
//! iterates are monotone in likelihood.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{FusionError, Result};
use crate::merge::merge_into;
use crate::types::{ForecastSet, Rule, WeightVector};

/// Free constants of the optimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct OptimizerParams {
    /// Half-width of the central finite difference.
    pub fd_delta: f64,
    /// Gradient components smaller than this in magnitude are zeroed.
    pub grad_clip: f64,
    /// Length of the largest gradient component's move on each step.
    pub step_size: f64,
    /// Hill-climbing stops once the step length halves below this.
    pub min_step_size: f64,
    pub step_budget: usize,
    pub grad_norm_stop: f64,
    pub restarts: usize,
    pub seed: u64,
    /// Smoothing applied before training the mixture and logarithmic rules.
    pub smoothing_epsilon: f64,
}

impl Default for OptimizerParams {
    fn default() -> Self {
        Self {
            fd_delta: 0.01,
            grad_clip: 0.05,
            step_size: 0.05,
            min_step_size: 1e-6,
            step_budget: 500,
            grad_norm_stop: 2.0,
            restarts: 10,
            seed: 0,
            smoothing_epsilon: 1e-5,
        }
    }
}

impl OptimizerParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("fd_delta", self.fd_delta),
            ("grad_clip", self.grad_clip),
            ("step_size", self.step_size),
            ("min_step_size", self.min_step_size),
            ("grad_norm_stop", self.grad_norm_stop),
            ("smoothing_epsilon", self.smoothing_epsilon),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(FusionError::InvalidParameter {
                    name,
                    reason: format!("must be positive and finite, got {v}"),
                });
            }
        }
        if self.step_budget == 0 {
            return Err(FusionError::InvalidParameter {
                name: "step_budget",
                reason: "must be at least 1".into(),
            });
        }
        if self.restarts == 0 {
            return Err(FusionError::InvalidParameter {
                name: "restarts",
                reason: "must be at least 1".into(),
            });
        }
        Ok(())
    }

    /// Smoothing the given rule trains on; the product rule uses raw forecasts.
    pub fn epsilon_for(&self, rule: Rule) -> f64 {
        match rule {
            Rule::Product => 0.0,
            Rule::Mixture | Rule::Logarithmic => self.smoothing_epsilon,
        }
    }
}

/// One hill-climb of a training run.
#[derive(Debug, Clone, PartialEq)]
pub struct RestartTrace {
    pub start: Vec<f64>,
    pub end: Vec<f64>,
    pub log_likelihood: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainingReport {
    pub best_weights: WeightVector,
    pub log_likelihood: f64,
    pub mean_likelihood: f64,
    pub restarts: Vec<RestartTrace>,
    /// Smoothing that was applied to the forecasts before training.
    pub smoothing_epsilon: f64,
}

/// Applies the rule's training-time smoothing to a forecast set.
pub fn prepare_forecasts(rule: Rule, forecasts: &ForecastSet, params: &OptimizerParams) -> Result<ForecastSet> {
    let eps = params.epsilon_for(rule);
    if eps > 0.0 {
        forecasts.smoothed(eps)
    } else {
        Ok(forecasts.clone())
    }
}

/// `Σ_h ln D^{h,w}_{a(h)}`. Returns negative infinity when some correct
/// answer receives zero probability.
pub fn log_likelihood(rule: Rule, weights: &[f64], forecasts: &ForecastSet, answers: &[usize]) -> Result<f64> {
    check_answers(forecasts, answers)?;
    if weights.len() != forecasts.n_modules() {
        return Err(FusionError::DimensionMismatch(format!(
            "{} weights for {} modules",
            weights.len(),
            forecasts.n_modules()
        )));
    }
    let mut scratch = vec![0.0; forecasts.k()];
    let mut total = 0.0;
    for (h, &a) in answers.iter().enumerate() {
        merge_into(rule, forecasts.instance(h), weights, &mut scratch)?;
        total += scratch[a].ln();
    }
    Ok(total)
}

/// Geometric mean of the probabilities assigned to the correct answers.
pub fn mean_likelihood(rule: Rule, weights: &[f64], forecasts: &ForecastSet, answers: &[usize]) -> Result<f64> {
    let ll = log_likelihood(rule, weights, forecasts, answers)?;
    Ok((ll / answers.len() as f64).exp())
}

/// Finite-difference estimate of `∂S/∂w_i`. Central differences are used
/// where both probes stay inside the rule's box, one-sided differences
/// otherwise.
pub fn estimate_gradient(
    rule: Rule,
    weights: &[f64],
    forecasts: &ForecastSet,
    answers: &[usize],
    fd_delta: f64,
) -> Result<Vec<f64>> {
    let objective = Objective::new(rule, forecasts, answers)?;
    let here = objective.eval(weights)?;
    objective.gradient(weights, here, fd_delta)
}

/// Hill-climbs from `w0` and returns the final weights and log-likelihood.
pub fn hillclimb(
    rule: Rule,
    w0: &[f64],
    forecasts: &ForecastSet,
    answers: &[usize],
    params: &OptimizerParams,
) -> Result<(WeightVector, f64)> {
    params.validate()?;
    let objective = Objective::new(rule, forecasts, answers)?;
    let trace = objective.climb(w0, params)?;
    let w = WeightVector::new(rule, forecasts.module_ids().to_vec(), trace.end)?;
    Ok((w, trace.log_likelihood))
}

/// Trains weights for `rule` on `forecasts` with `params.restarts` seeded
/// restarts. Forecasts are smoothed per [`OptimizerParams::epsilon_for`].
pub fn optimize(
    rule: Rule,
    forecasts: &ForecastSet,
    answers: &[usize],
    params: &OptimizerParams,
) -> Result<TrainingReport> {
    params.validate()?;
    let prepared = prepare_forecasts(rule, forecasts, params)?;
    let objective = Objective::new(rule, &prepared, answers)?;

    let starts = random_starts(rule, prepared.n_modules(), params);
    let traces = starts
        .into_par_iter()
        .map(|start| objective.climb(&start, params))
        .collect::<Result<Vec<_>>>()?;

    // first strictly-better wins, so ties go to the lower restart index
    let mut best = 0;
    for (r, t) in traces.iter().enumerate().skip(1) {
        if t.log_likelihood > traces[best].log_likelihood {
            best = r;
        }
    }
    let log_likelihood = traces[best].log_likelihood;
    let best_weights = WeightVector::new(
        rule,
        prepared.module_ids().to_vec(),
        traces[best].end.clone(),
    )?;
    Ok(TrainingReport {
        best_weights,
        log_likelihood,
        mean_likelihood: (log_likelihood / answers.len() as f64).exp(),
        restarts: traces,
        smoothing_epsilon: params.epsilon_for(rule),
    })
}

/// Uniform random starting points, drawn sequentially from the seeded stream.
pub fn random_starts(rule: Rule, n_modules: usize, params: &OptimizerParams) -> Vec<Vec<f64>> {
    let (lo, hi) = rule.weight_bounds();
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    (0..params.restarts)
        .map(|_| (0..n_modules).map(|_| rng.random_range(lo..=hi)).collect())
        .collect()
}

fn check_answers(forecasts: &ForecastSet, answers: &[usize]) -> Result<()> {
    if answers.is_empty() {
        return Err(FusionError::DimensionMismatch("no training instances".into()));
    }
    if answers.len() != forecasts.n_instances() {
        return Err(FusionError::DimensionMismatch(format!(
            "{} answers for {} instances",
            answers.len(),
            forecasts.n_instances()
        )));
    }
    if let Some(&a) = answers.iter().find(|&&a| a >= forecasts.k()) {
        return Err(FusionError::DimensionMismatch(format!(
            "answer index {a} out of range for k = {}",
            forecasts.k()
        )));
    }
    Ok(())
}

struct Objective<'a> {
    rule: Rule,
    forecasts: &'a ForecastSet,
    answers: &'a [usize],
    bounds: (f64, f64),
}

impl<'a> Objective<'a> {
    fn new(rule: Rule, forecasts: &'a ForecastSet, answers: &'a [usize]) -> Result<Self> {
        check_answers(forecasts, answers)?;
        Ok(Self {
            rule,
            forecasts,
            answers,
            bounds: rule.weight_bounds(),
        })
    }

    fn eval(&self, w: &[f64]) -> Result<f64> {
        log_likelihood(self.rule, w, self.forecasts, self.answers)
    }

    fn gradient(&self, w: &[f64], here: f64, delta: f64) -> Result<Vec<f64>> {
        let (lo, hi) = self.bounds;
        let mut probe = w.to_vec();
        let mut grad = vec![0.0; w.len()];
        for i in 0..w.len() {
            let can_up = w[i] + delta <= hi;
            let can_down = w[i] - delta >= lo;
            let g = match (can_down, can_up) {
                (true, true) => {
                    probe[i] = w[i] + delta;
                    let up = self.eval(&probe)?;
                    probe[i] = w[i] - delta;
                    let down = self.eval(&probe)?;
                    (up - down) / (2.0 * delta)
                }
                (false, true) => {
                    probe[i] = w[i] + delta;
                    (self.eval(&probe)? - here) / delta
                }
                (true, false) => {
                    probe[i] = w[i] - delta;
                    (here - self.eval(&probe)?) / delta
                }
                (false, false) => 0.0,
            };
            probe[i] = w[i];
            grad[i] = if g.is_finite() {
                g
            } else {
                self.finite_fallback(&mut probe, i, here, delta, can_down, can_up)?
            };
        }
        Ok(grad)
    }

    /// A probe that lands on a zero-probability answer makes the difference
    /// infinite. Retry one-sided on the finite side, and failing that keep
    /// only the direction.
    fn finite_fallback(
        &self,
        probe: &mut [f64],
        i: usize,
        here: f64,
        delta: f64,
        can_down: bool,
        can_up: bool,
    ) -> Result<f64> {
        let wi = probe[i];
        let mut side = |offset: f64| -> Result<f64> {
            probe[i] = wi + offset;
            let v = self.eval(probe)?;
            probe[i] = wi;
            Ok(v)
        };
        let up = if can_up { side(delta)? } else { f64::NAN };
        let down = if can_down { side(-delta)? } else { f64::NAN };
        if here.is_finite() {
            if down.is_finite() {
                return Ok((here - down) / delta);
            }
            if up.is_finite() {
                return Ok((up - here) / delta);
            }
        }
        // only the sign is meaningful here
        let u = if can_up { up } else { here };
        let d = if can_down { down } else { here };
        let g = match u.partial_cmp(&d) {
            Some(std::cmp::Ordering::Greater) => 1.0,
            Some(std::cmp::Ordering::Less) => -1.0,
            _ => 0.0,
        };
        Ok(g * f64::MAX.sqrt())
    }

    fn climb(&self, w0: &[f64], params: &OptimizerParams) -> Result<RestartTrace> {
        let (lo, hi) = self.bounds;
        let start: Vec<f64> = w0.iter().map(|w| w.clamp(lo, hi)).collect();
        let mut w = start.clone();
        let mut here = self.eval(&w)?;
        let mut step = params.step_size;
        let mut steps = 0;

        while steps < params.step_budget {
            steps += 1;
            let mut g = self.gradient(&w, here, params.fd_delta)?;
            for (gi, &wi) in g.iter_mut().zip(&w) {
                let leaves_box = (wi <= lo && *gi < 0.0) || (wi >= hi && *gi > 0.0);
                if leaves_box || gi.abs() < params.grad_clip {
                    *gi = 0.0;
                }
            }
            let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
            if norm < params.grad_norm_stop {
                break;
            }
            let largest = g.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            let scale = step / largest;
            let candidate: Vec<f64> = w
                .iter()
                .zip(&g)
                .map(|(wi, gi)| (wi + scale * gi).clamp(lo, hi))
                .collect();
            let there = self.eval(&candidate)?;
            if there > here {
                w = candidate;
                here = there;
            } else {
                step /= 2.0;
                if step < params.min_step_size {
                    break;
                }
            }
        }
        Ok(RestartTrace {
            start,
            end: w,
            log_likelihood: here,
            steps,
        })
    }
}
