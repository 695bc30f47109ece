//! Synthetic forecasters with known calibration and conditional independence,
//! and the exact Bayes posterior they induce.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{FusionError, Result};
use crate::types::{Distribution, ForecastSet, Instance, QuestionSet, WordTuple};

/// What a simulated module emits for its guess.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OutputMode {
    /// Mass `a` on the guess and `(1 - a)/(k - 1)` on every other choice.
    #[default]
    Calibrated,
    /// Probability one on the guess.
    OneHot,
}

impl OutputMode {
    pub fn as_str(self) -> &'static str {
        match self {
            OutputMode::Calibrated => "calibrated",
            OutputMode::OneHot => "one-hot",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GenerativeSpec {
    pub k: usize,
    pub module_accuracies: Vec<f64>,
    pub m: usize,
    pub seed: u64,
    pub mode: OutputMode,
}

impl GenerativeSpec {
    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(FusionError::InvalidParameter {
                name: "k",
                reason: format!("need at least 2 choices, got {}", self.k),
            });
        }
        if self.m == 0 {
            return Err(FusionError::InvalidParameter {
                name: "m",
                reason: "need at least one instance".into(),
            });
        }
        let chance = 1.0 / self.k as f64;
        for &a in &self.module_accuracies {
            if !(a > chance && a <= 1.0) {
                return Err(FusionError::InvalidParameter {
                    name: "module_accuracies",
                    reason: format!("accuracy {a} outside ({chance}, 1]"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticDataset {
    pub forecasts: ForecastSet,
    pub answers: Vec<usize>,
    /// `guesses[h][i]`: the choice module `i` picked on instance `h`.
    pub guesses: Vec<Vec<usize>>,
    pub spec: GenerativeSpec,
}

impl SyntheticDataset {
    /// Placeholder question set matching the dataset's ids and answers.
    pub fn questions(&self) -> QuestionSet {
        let instances = self
            .answers
            .iter()
            .enumerate()
            .map(|(h, &a)| {
                let stem = WordTuple::new([format!("stem{h}")]).unwrap();
                let choices = (0..self.spec.k)
                    .map(|j| WordTuple::new([format!("choice{h}x{j}")]).unwrap())
                    .collect();
                Instance::new(instance_id(h), stem, choices, a).unwrap()
            })
            .collect();
        QuestionSet::new(instances).expect("synthetic questions are well formed")
    }
}

pub fn instance_id(h: usize) -> String {
    format!("syn-{h:06}")
}

pub fn module_id(i: usize) -> String {
    format!("sim{i}")
}

fn emitted(mode: OutputMode, k: usize, accuracy: f64, guess: usize) -> Distribution {
    let (hit, miss) = match mode {
        OutputMode::Calibrated => (accuracy, (1.0 - accuracy) / (k - 1) as f64),
        OutputMode::OneHot => (1.0, 0.0),
    };
    let probs = (0..k).map(|j| if j == guess { hit } else { miss }).collect();
    Distribution::ingest(probs).expect("emitted vector is a distribution")
}

/// Draws answers uniformly and, independently per module, a guess that is
/// correct with probability `a_i` and otherwise uniform over the wrong choices.
pub fn gen_calibrated_independent(spec: &GenerativeSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    if spec.module_accuracies.is_empty() {
        return Err(FusionError::InvalidParameter {
            name: "module_accuracies",
            reason: "need at least one module".into(),
        });
    }
    let k = spec.k;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut answers = Vec::with_capacity(spec.m);
    let mut guesses = Vec::with_capacity(spec.m);
    let mut rows = Vec::with_capacity(spec.m);
    for _ in 0..spec.m {
        let answer = rng.random_range(0..k);
        let mut row_guesses = Vec::with_capacity(spec.module_accuracies.len());
        let mut row = Vec::with_capacity(spec.module_accuracies.len());
        for &a in &spec.module_accuracies {
            let guess = if rng.random_bool(a) {
                answer
            } else {
                let wrong = rng.random_range(0..k - 1);
                if wrong >= answer { wrong + 1 } else { wrong }
            };
            row_guesses.push(guess);
            row.push(emitted(spec.mode, k, a, guess));
        }
        answers.push(answer);
        guesses.push(row_guesses);
        rows.push(row);
    }
    let ids = (0..spec.module_accuracies.len()).map(module_id).collect::<Vec<_>>();
    let forecasts = ForecastSet::new(ids, rows)?;
    Ok(SyntheticDataset {
        forecasts,
        answers,
        guesses,
        spec: spec.clone(),
    })
}

/// Exact posterior over the answer given each module's guess, enumerating
/// the generative model under a uniform prior.
pub fn bayes_posterior(spec: &GenerativeSpec, module_guesses: &[usize]) -> Result<Distribution> {
    spec.validate()?;
    let k = spec.k;
    if module_guesses.len() > spec.module_accuracies.len() {
        return Err(FusionError::DimensionMismatch(format!(
            "{} guesses for {} modules",
            module_guesses.len(),
            spec.module_accuracies.len()
        )));
    }
    if let Some(&g) = module_guesses.iter().find(|&&g| g >= k) {
        return Err(FusionError::DimensionMismatch(format!(
            "guess {g} out of range for k = {k}"
        )));
    }
    let prior = 1.0 / k as f64;
    let joint: Vec<f64> = (0..k)
        .map(|answer| {
            module_guesses
                .iter()
                .zip(&spec.module_accuracies)
                .map(|(&g, &a)| {
                    if g == answer {
                        a
                    } else {
                        (1.0 - a) / (k - 1) as f64
                    }
                })
                .product::<f64>()
                * prior
        })
        .collect();
    let evidence: f64 = joint.iter().sum();
    Ok(Distribution::from_normalized(
        joint.into_iter().map(|p| p / evidence).collect(),
    ))
}

/// Appends an exact copy of module `i`.
pub fn duplicate_module(ds: &SyntheticDataset, i: usize) -> Result<SyntheticDataset> {
    if i >= ds.forecasts.n_modules() {
        return Err(FusionError::DimensionMismatch(format!(
            "module {i} out of range"
        )));
    }
    let id = format!("{}-copy{}", ds.forecasts.module_ids()[i], ds.forecasts.n_modules());
    let forecasts = ds.forecasts.with_module(id, ds.forecasts.column(i))?;
    let mut spec = ds.spec.clone();
    spec.module_accuracies.push(ds.spec.module_accuracies[i]);
    let guesses = ds
        .guesses
        .iter()
        .map(|g| {
            let mut g = g.clone();
            g.push(g[i]);
            g
        })
        .collect();
    Ok(SyntheticDataset {
        forecasts,
        answers: ds.answers.clone(),
        guesses,
        spec,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::merge::product_merge;

    fn spec(acc: Vec<f64>, m: usize, seed: u64) -> GenerativeSpec {
        GenerativeSpec {
            k: 4,
            module_accuracies: acc,
            m,
            seed,
            mode: OutputMode::Calibrated,
        }
    }

    #[test]
    fn perfect_module_is_one_hot_on_answer() {
        let ds = gen_calibrated_independent(&spec(vec![1.0], 50, 1)).unwrap();
        for h in 0..50 {
            let p = ds.forecasts.get(h, 0).probs();
            assert_eq!(p[ds.answers[h]], 1.0);
            assert_eq!(p.iter().sum::<f64>(), 1.0);
        }
    }

    #[test]
    fn rejects_uninformative_accuracy() {
        assert!(gen_calibrated_independent(&spec(vec![0.25], 10, 0)).is_err());
        assert!(gen_calibrated_independent(&spec(vec![1.1], 10, 0)).is_err());
        let mut s = spec(vec![0.9], 10, 0);
        s.k = 1;
        assert!(gen_calibrated_independent(&s).is_err());
    }

    #[test]
    fn emitted_probabilities_are_calibrated() {
        let ds = gen_calibrated_independent(&spec(vec![0.85], 10_000, 3)).unwrap();
        let (mut emitted, mut correct) = (0usize, 0usize);
        for h in 0..10_000 {
            for (j, &p) in ds.forecasts.get(h, 0).probs().iter().enumerate() {
                if (p - 0.85).abs() < 1e-12 {
                    emitted += 1;
                    correct += usize::from(j == ds.answers[h]);
                }
            }
        }
        let freq = correct as f64 / emitted as f64;
        assert!((freq - 0.85).abs() < 0.02, "{freq}");
    }

    #[test]
    fn generation_is_reproducible() {
        let a = gen_calibrated_independent(&spec(vec![0.6, 0.7], 200, 9)).unwrap();
        let b = gen_calibrated_independent(&spec(vec![0.6, 0.7], 200, 9)).unwrap();
        assert_eq!(a, b);
        let c = gen_calibrated_independent(&spec(vec![0.6, 0.7], 200, 10)).unwrap();
        assert_ne!(a.answers, c.answers);
    }

    #[test]
    fn posterior_examples() {
        let s = spec(vec![0.85], 1, 0);
        let p = bayes_posterior(&s, &[2]).unwrap();
        let expected = [0.05, 0.05, 0.85, 0.05];
        assert!(p.probs().iter().zip(expected).all(|(a, b)| (a - b).abs() < 1e-12));

        let s = spec(vec![0.85, 0.85], 1, 0);
        let p = bayes_posterior(&s, &[1, 1]).unwrap();
        let top = 0.85f64.powi(2) / (0.85f64.powi(2) + 3.0 * 0.05f64.powi(2));
        assert!((p.probs()[1] - top).abs() < 1e-12);
        assert!((p.probs()[1] - 0.9897).abs() < 1e-4);

        let p = bayes_posterior(&s, &[]).unwrap();
        assert_eq!(p.probs(), &[0.25; 4]);
    }

    #[test]
    fn unit_product_matches_posterior() {
        let s = spec(vec![0.4, 0.55, 0.7, 0.9, 0.6], 300, 21);
        let ds = gen_calibrated_independent(&s).unwrap();
        for h in 0..300 {
            let merged = product_merge(ds.forecasts.instance(h), &[1.0; 5]).unwrap();
            let post = bayes_posterior(&s, &ds.guesses[h]).unwrap();
            for (a, b) in merged.probs().iter().zip(post.probs()) {
                assert!((a - b).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn duplication_double_counts_under_unit_product() {
        let ds = gen_calibrated_independent(&GenerativeSpec {
            mode: OutputMode::Calibrated,
            ..spec(vec![0.85], 20, 4)
        })
        .unwrap();
        let dup = duplicate_module(&ds, 0).unwrap();
        assert_eq!(dup.forecasts.n_modules(), 2);
        assert_eq!(dup.forecasts.column(0), dup.forecasts.column(1));
        for h in 0..20 {
            let single = product_merge(ds.forecasts.instance(h), &[0.6]).unwrap();
            let padded = product_merge(dup.forecasts.instance(h), &[0.6, 0.0]).unwrap();
            assert_eq!(single, padded);
            let doubled = product_merge(dup.forecasts.instance(h), &[1.0, 1.0]).unwrap();
            assert!(doubled.max_prob() > 0.85);
        }
        assert!(duplicate_module(&ds, 3).is_err());
    }

    #[test]
    fn one_hot_mode_emits_certainty() {
        let ds = gen_calibrated_independent(&GenerativeSpec {
            mode: OutputMode::OneHot,
            ..spec(vec![0.7], 30, 2)
        })
        .unwrap();
        for h in 0..30 {
            let p = ds.forecasts.get(h, 0);
            assert_eq!(p.max_prob(), 1.0);
            assert_eq!(crate::types::argmax_choice(p), ds.guesses[h][0]);
        }
    }

    #[test]
    fn questions_mirror_answers() {
        let ds = gen_calibrated_independent(&spec(vec![0.7], 5, 2)).unwrap();
        let qs = ds.questions();
        assert_eq!(qs.answers(), ds.answers);
        assert_eq!(qs.instances()[3].id, "syn-000003");
    }
}
