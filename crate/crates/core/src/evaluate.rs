//! Solver metrics: accuracy, mean likelihood, skip-aware penalty scoring and
//! exact binomial confidence intervals.

use crate::error::{FusionError, Result};
use crate::merge::MergedForecast;
use crate::types::{argmax_choice, Distribution};

/// Default penalty for a wrong answer.
pub const DEFAULT_PENALTY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalOptions {
    pub penalty: f64,
    /// Guess only when the top probability is strictly above this.
    pub threshold: f64,
    pub confidence_level: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            penalty: DEFAULT_PENALTY,
            threshold: expected_utility_threshold(DEFAULT_PENALTY),
            confidence_level: 0.95,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub correct: usize,
    pub mean_likelihood: f64,
    pub penalty_score: f64,
    pub answered: usize,
    pub skipped: usize,
    pub ci95: (f64, f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PenaltyOutcome {
    pub score: f64,
    pub answered: usize,
    pub skipped: usize,
}

fn check_sizes(merged: &[Distribution], answers: &[usize]) -> Result<()> {
    if merged.len() != answers.len() {
        return Err(FusionError::DimensionMismatch(format!(
            "{} forecasts for {} answers",
            merged.len(),
            answers.len()
        )));
    }
    if merged.is_empty() {
        return Err(FusionError::DimensionMismatch("nothing to evaluate".into()));
    }
    Ok(())
}

fn count_correct(merged: &[Distribution], answers: &[usize]) -> usize {
    merged
        .iter()
        .zip(answers)
        .filter(|(d, &a)| argmax_choice(d) == a)
        .count()
}

/// Fraction of instances whose top choice is the answer. Never skips.
pub fn accuracy(merged: &MergedForecast, answers: &[usize]) -> Result<f64> {
    accuracy_of(merged.distributions(), answers)
}

pub fn accuracy_of(merged: &[Distribution], answers: &[usize]) -> Result<f64> {
    check_sizes(merged, answers)?;
    Ok(count_correct(merged, answers) as f64 / answers.len() as f64)
}

/// Geometric mean of the probability given to each correct answer.
pub fn mean_likelihood_of(merged: &[Distribution], answers: &[usize]) -> Result<f64> {
    check_sizes(merged, answers)?;
    let total: f64 = merged
        .iter()
        .zip(answers)
        .map(|(d, &a)| d.probs()[a].ln())
        .sum();
    Ok((total / answers.len() as f64).exp())
}

/// Top probability at which guessing and skipping have equal expected
/// utility: `penalty / (1 + penalty)`.
pub fn expected_utility_threshold(penalty: f64) -> f64 {
    penalty / (1.0 + penalty)
}

/// +1 per correct guess, `-penalty` per wrong guess, 0 per skip. An instance
/// is answered only when its top probability is strictly above `threshold`.
pub fn penalty_score(merged: &MergedForecast, answers: &[usize], penalty: f64, threshold: f64) -> Result<PenaltyOutcome> {
    penalty_score_of(merged.distributions(), answers, penalty, threshold)
}

pub fn penalty_score_of(
    merged: &[Distribution],
    answers: &[usize],
    penalty: f64,
    threshold: f64,
) -> Result<PenaltyOutcome> {
    check_sizes(merged, answers)?;
    if penalty.is_nan() || penalty < 0.0 {
        return Err(FusionError::InvalidParameter {
            name: "penalty",
            reason: format!("must be non-negative, got {penalty}"),
        });
    }
    let mut out = PenaltyOutcome {
        score: 0.0,
        answered: 0,
        skipped: 0,
    };
    for (d, &a) in merged.iter().zip(answers) {
        if d.max_prob() > threshold {
            out.answered += 1;
            out.score += if argmax_choice(d) == a { 1.0 } else { -penalty };
        } else {
            out.skipped += 1;
        }
    }
    Ok(out)
}

/// Aggregates every metric for a merged forecast.
pub fn evaluate(merged: &MergedForecast, answers: &[usize], options: &EvalOptions) -> Result<EvaluationReport> {
    evaluate_distributions(merged.distributions(), answers, options)
}

pub fn evaluate_distributions(
    merged: &[Distribution],
    answers: &[usize],
    options: &EvalOptions,
) -> Result<EvaluationReport> {
    check_sizes(merged, answers)?;
    let correct = count_correct(merged, answers);
    let m = answers.len();
    let penalty = penalty_score_of(merged, answers, options.penalty, options.threshold)?;
    Ok(EvaluationReport {
        accuracy: correct as f64 / m as f64,
        correct,
        mean_likelihood: mean_likelihood_of(merged, answers)?,
        penalty_score: penalty.score,
        answered: penalty.answered,
        skipped: penalty.skipped,
        ci95: clopper_pearson(correct, m, options.confidence_level)?,
    })
}

/// Exact (Clopper-Pearson) two-sided binomial interval for `correct`
/// successes out of `total` at the given confidence level.
pub fn clopper_pearson(correct: usize, total: usize, level: f64) -> Result<(f64, f64)> {
    if total == 0 || correct > total {
        return Err(FusionError::InvalidParameter {
            name: "counts",
            reason: format!("need 0 <= correct <= total and total >= 1, got {correct}/{total}"),
        });
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(FusionError::InvalidParameter {
            name: "level",
            reason: format!("must lie in (0, 1), got {level}"),
        });
    }
    let alpha = 1.0 - level;
    let x = correct as f64;
    let n = total as f64;
    let low = if correct == 0 {
        0.0
    } else {
        beta_quantile(alpha / 2.0, x, n - x + 1.0)
    };
    let high = if correct == total {
        1.0
    } else {
        beta_quantile(1.0 - alpha / 2.0, x + 1.0, n - x)
    };
    Ok((low, high))
}

/// Inverse of the regularized incomplete Beta function by bisection.
fn beta_quantile(p: f64, a: f64, b: f64) -> f64 {
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > 1e-12 {
        let mid = 0.5 * (lo + hi);
        if regularized_incomplete_beta(mid, a, b) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// `I_x(a, b)` via the Lentz continued fraction.
pub fn regularized_incomplete_beta(x: f64, a: f64, b: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front = ln_gamma(a + b) - ln_gamma(a) - ln_gamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    // the fraction converges fast for x < (a + 1) / (a + b + 2)
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_continued_fraction(x, a, b) / a
    } else {
        1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b
    }
}

fn beta_continued_fraction(x: f64, a: f64, b: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-15;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=1000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Lanczos approximation (g = 7, n = 9).
fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 9] = [
        0.999_999_999_999_809_9,
        676.520_368_121_885_1,
        -1_259.139_216_722_402_8,
        771.323_428_777_653_1,
        -176.615_029_162_140_6,
        12.507_343_278_686_905,
        -0.138_571_095_265_720_12,
        9.984_369_578_019_572e-6,
        1.505_632_735_149_311_6e-7,
    ];
    if x < 0.5 {
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = COEFFS[0];
    for (i, &c) in COEFFS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}
