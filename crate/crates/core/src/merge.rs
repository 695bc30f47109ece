//! The mixture, logarithmic and product merging rules.
//!
//! Every rule maps `n` module distributions and `n` weights to one merged
//! distribution. Modules with weight zero are skipped outright, so a
//! zero-weight module cannot influence the result even numerically. When no
//! module carries positive weight the merged output is uniform.

use crate::error::{FusionError, Result};
use crate::types::{Distribution, ForecastSet, Rule, WeightVector};

/// Merged distributions for every instance of a forecast set.
#[derive(Debug, Clone, PartialEq)]
pub struct MergedForecast {
    distributions: Vec<Distribution>,
    weights: WeightVector,
}

impl MergedForecast {
    pub fn distributions(&self) -> &[Distribution] {
        &self.distributions
    }

    pub fn rule(&self) -> Rule {
        self.weights.rule()
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.distributions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.distributions.is_empty()
    }

    /// Wraps per-instance distributions that did not come from a merge, such
    /// as a single module's raw output.
    pub fn from_distributions(distributions: Vec<Distribution>, weights: WeightVector) -> Self {
        Self {
            distributions,
            weights,
        }
    }
}

/// Weighted arithmetic pooling: `D_j ∝ Σ_i w_i p_ij`.
pub fn mixture_merge(forecasts: &[Distribution], weights: &[f64]) -> Result<Distribution> {
    merge_with(Rule::Mixture, forecasts, weights)
}

/// Weighted geometric pooling: `D_j ∝ Π_i p_ij^{w_i}`.
///
/// Inputs are not smoothed here. A zero probability under a positive weight
/// is a [`FusionError::ZeroProbability`].
pub fn logarithmic_merge(forecasts: &[Distribution], weights: &[f64]) -> Result<Distribution> {
    merge_with(Rule::Logarithmic, forecasts, weights)
}

/// Product of uniform-blended forecasts: `D_j ∝ Π_i (w_i p_ij + (1 - w_i)/k)`.
pub fn product_merge(forecasts: &[Distribution], weights: &[f64]) -> Result<Distribution> {
    merge_with(Rule::Product, forecasts, weights)
}

/// Dispatches to the rule named by `rule`, which must match the weights.
pub fn merge(rule: Rule, forecasts: &[Distribution], w: &WeightVector) -> Result<Distribution> {
    if rule != w.rule() {
        return Err(FusionError::RuleMismatch {
            requested: rule.to_string(),
            found: w.rule().to_string(),
        });
    }
    merge_with(rule, forecasts, w.weights())
}

/// Merges every instance of `forecasts`. The weights are matched to the
/// forecast modules by id.
pub fn merge_all(forecasts: &ForecastSet, w: &WeightVector) -> Result<MergedForecast> {
    let w = w.aligned_to(forecasts.module_ids())?;
    let mut scratch = vec![0.0; forecasts.k()];
    let distributions = (0..forecasts.n_instances())
        .map(|h| {
            merge_into(w.rule(), forecasts.instance(h), w.weights(), &mut scratch)?;
            Ok(Distribution::from_normalized(scratch.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(MergedForecast {
        distributions,
        weights: w,
    })
}

pub fn merge_with(rule: Rule, forecasts: &[Distribution], weights: &[f64]) -> Result<Distribution> {
    let k = forecasts
        .first()
        .map(Distribution::k)
        .ok_or_else(|| FusionError::DimensionMismatch("no forecasts to merge".into()))?;
    let mut out = vec![0.0; k];
    merge_into(rule, forecasts, weights, &mut out)?;
    Ok(Distribution::from_normalized(out))
}

/// Writes the merged distribution into `out`, which must have length `k`.
pub(crate) fn merge_into(
    rule: Rule,
    forecasts: &[Distribution],
    weights: &[f64],
    out: &mut [f64],
) -> Result<()> {
    check_inputs(rule, forecasts, weights, out.len())?;
    let k = out.len();
    let active = || {
        forecasts
            .iter()
            .zip(weights)
            .enumerate()
            .filter(|(_, (_, &w))| w > 0.0)
    };
    match rule {
        Rule::Mixture => {
            out.fill(0.0);
            for (_, (d, &w)) in active() {
                for (o, &p) in out.iter_mut().zip(d.probs()) {
                    *o += w * p;
                }
            }
            let total: f64 = out.iter().sum();
            if total > 0.0 {
                out.iter_mut().for_each(|o| *o /= total);
            } else {
                out.fill(1.0 / k as f64);
            }
        }
        Rule::Logarithmic => {
            out.fill(0.0);
            for (i, (d, &w)) in active() {
                for (j, (o, &p)) in out.iter_mut().zip(d.probs()).enumerate() {
                    if p == 0.0 {
                        return Err(FusionError::ZeroProbability {
                            module: i,
                            choice: j,
                        });
                    }
                    *o += w * p.ln();
                }
            }
            normalize_log_scores(out);
        }
        Rule::Product => {
            out.fill(0.0);
            let prior = 1.0 / k as f64;
            for (_, (d, &w)) in active() {
                let floor = (1.0 - w) * prior;
                for (o, &p) in out.iter_mut().zip(d.probs()) {
                    *o += (w * p + floor).ln();
                }
            }
            normalize_log_scores(out);
        }
    }
    Ok(())
}

/// Exponentiates log scores after a max shift and normalizes in place. A row
/// of all negative infinities (every choice ruled out) becomes uniform.
fn normalize_log_scores(scores: &mut [f64]) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        let u = 1.0 / scores.len() as f64;
        scores.fill(u);
        return;
    }
    let mut total = 0.0;
    for s in scores.iter_mut() {
        *s = (*s - max).exp();
        total += *s;
    }
    scores.iter_mut().for_each(|s| *s /= total);
}

fn check_inputs(rule: Rule, forecasts: &[Distribution], weights: &[f64], k: usize) -> Result<()> {
    if forecasts.is_empty() {
        return Err(FusionError::DimensionMismatch("no forecasts to merge".into()));
    }
    if forecasts.len() != weights.len() {
        return Err(FusionError::DimensionMismatch(format!(
            "{} forecasts for {} weights",
            forecasts.len(),
            weights.len()
        )));
    }
    if let Some(d) = forecasts.iter().find(|d| d.k() != k) {
        return Err(FusionError::DimensionMismatch(format!(
            "forecast has {} choices, expected {k}",
            d.k()
        )));
    }
    let upper = match rule {
        Rule::Mixture | Rule::Product => 1.0,
        Rule::Logarithmic => f64::INFINITY,
    };
    for &w in weights {
        if !(0.0..=upper).contains(&w) || w.is_nan() || w.is_infinite() {
            return Err(FusionError::InvalidParameter {
                name: "weights",
                reason: format!("{rule} weight {w} out of range"),
            });
        }
    }
    Ok(())
}
