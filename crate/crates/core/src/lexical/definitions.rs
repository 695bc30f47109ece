use std::collections::HashMap;
use std::path::Path;

use super::{data_lines, parse_error, read_resource, sparse_cosine, tokenize};
use crate::error::Result;
use crate::types::{normalize, normalize_token, Distribution, Instance};

/// Bag-of-words definition vectors from one dictionary source.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct DefinitionTable {
    vectors: HashMap<String, HashMap<String, f64>>,
}

impl DefinitionTable {
    /// Adds definition text for `word`; repeated calls accumulate.
    pub fn insert(&mut self, word: &str, definition: &str) {
        let v = self.vectors.entry(normalize_token(word)).or_default();
        for tok in tokenize(definition) {
            *v.entry(tok).or_default() += 1.0;
        }
    }

    /// `word  definition text` per line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut table = Self::default();
        for (line, l) in data_lines(text) {
            let (word, def) = l
                .split_once('\t')
                .ok_or_else(|| parse_error(source, line, "expected word and definition"))?;
            table.insert(word, def);
        }
        Ok(table)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?, &path.display().to_string())
    }

    pub fn vector(&self, word: &str) -> Option<&HashMap<String, f64>> {
        self.vectors.get(word)
    }

    /// Cosine of the definition vectors; 0 when either is missing.
    pub fn similarity(&self, a: &str, b: &str) -> f64 {
        match (self.vector(a), self.vector(b)) {
            (Some(x), Some(y)) => sparse_cosine(x, y),
            _ => 0.0,
        }
    }
}

/// Raw score of choice `C:D` for stem `A:B` is `cos(A, C) + cos(B, D)`.
pub fn definition_similarity(table: &DefinitionTable, inst: &Instance) -> Distribution {
    let second = |t: &crate::types::WordTuple| t.second().unwrap_or_default().to_string();
    let (a, b) = (inst.stem.first(), second(&inst.stem));
    let raw: Vec<f64> = inst
        .choices
        .iter()
        .map(|c| table.similarity(a, c.first()) + table.similarity(&b, &second(c)))
        .collect();
    normalize(&raw).unwrap_or_else(|_| Distribution::uniform(inst.k()))
}
