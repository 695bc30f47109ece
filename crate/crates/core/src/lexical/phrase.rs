//! Relation signatures built from the log frequencies of joining phrases.

use std::collections::HashMap;
use std::path::Path;

use super::{cosine, data_lines, parse_error, read_resource};
use crate::error::{FusionError, Result};
use crate::types::{normalize, Distribution, Instance};

pub const PATTERN_COUNT: usize = 128;
pub const SLOT_X: &str = "{X}";
pub const SLOT_Y: &str = "{Y}";

const DEFAULT_PATTERNS: &str = include_str!("../../data/patterns.txt");

/// Ordered two-slot phrase templates.
#[derive(Debug, Clone, PartialEq)]
pub struct PhrasePatternSet {
    templates: Vec<String>,
}

impl PhrasePatternSet {
    pub fn new(templates: Vec<String>) -> Result<Self> {
        if templates.len() != PATTERN_COUNT {
            return Err(FusionError::Resource(format!(
                "pattern set needs {PATTERN_COUNT} templates, got {}",
                templates.len()
            )));
        }
        for t in &templates {
            if t.matches(SLOT_X).count() != 1 || t.matches(SLOT_Y).count() != 1 {
                return Err(FusionError::Resource(format!(
                    "template `{t}` must hold {SLOT_X} and {SLOT_Y} exactly once"
                )));
            }
        }
        Ok(Self { templates })
    }

    /// One template per line.
    pub fn parse(text: &str) -> Result<Self> {
        Self::new(data_lines(text).map(|(_, l)| l.trim().to_string()).collect())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?)
    }

    /// The shipped set: 64 base templates followed by their X/Y reversals.
    pub fn default_patterns() -> Self {
        Self::parse(DEFAULT_PATTERNS).expect("bundled pattern file is valid")
    }

    pub fn templates(&self) -> &[String] {
        &self.templates
    }

    pub fn instantiate(template: &str, x: &str, y: &str) -> String {
        template.replace(SLOT_X, x).replace(SLOT_Y, y)
    }
}

fn phrase_key(phrase: &str) -> String {
    phrase.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase()
}

/// Hit counts for instantiated phrases.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PhraseFrequencies {
    counts: HashMap<String, f64>,
}

impl PhraseFrequencies {
    pub fn insert(&mut self, phrase: &str, count: f64) {
        self.counts.insert(phrase_key(phrase), count);
    }

    /// `phrase  count` per line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut freqs = Self::default();
        for (line, l) in data_lines(text) {
            let (phrase, count) = l
                .rsplit_once('\t')
                .ok_or_else(|| parse_error(source, line, "expected phrase and count"))?;
            let count: f64 = count.trim().parse().map_err(|e| parse_error(source, line, e))?;
            if !count.is_finite() || count < 0.0 {
                return Err(parse_error(source, line, "count must be non-negative"));
            }
            freqs.insert(phrase, count);
        }
        Ok(freqs)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?, &path.display().to_string())
    }

    pub fn get(&self, phrase: &str) -> f64 {
        self.counts.get(&phrase_key(phrase)).copied().unwrap_or(0.0)
    }
}

/// Component `t` is `ln(1 + freq)` of template `t` filled with `x` and `y`.
pub fn phrase_vector(patterns: &PhrasePatternSet, freqs: &PhraseFrequencies, x: &str, y: &str) -> Vec<f64> {
    patterns
        .templates()
        .iter()
        .map(|t| freqs.get(&PhrasePatternSet::instantiate(t, x, y)).ln_1p())
        .collect()
}

/// Cosine of two relation signatures; zero if either is the zero vector.
pub fn relation_similarity(r1: &[f64], r2: &[f64]) -> f64 {
    cosine(r1, r2)
}

pub(crate) fn analogy_phrase_score(
    patterns: &PhrasePatternSet,
    freqs: &PhraseFrequencies,
    inst: &Instance,
) -> Distribution {
    let pair = |t: &crate::types::WordTuple| (t.first().to_string(), t.second().unwrap_or_default().to_string());
    let (a, b) = pair(&inst.stem);
    let stem_vec = phrase_vector(patterns, freqs, &a, &b);
    let raw: Vec<f64> = inst
        .choices
        .iter()
        .map(|c| {
            let (x, y) = pair(c);
            relation_similarity(&stem_vec, &phrase_vector(patterns, freqs, &x, &y))
        })
        .collect();
    normalize(&raw).unwrap_or_else(|_| Distribution::uniform(inst.k()))
}
