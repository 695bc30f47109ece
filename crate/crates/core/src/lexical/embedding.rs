use std::collections::HashMap;
use std::path::Path;

use super::{cosine, data_lines, parse_error, read_resource};
use crate::error::{FusionError, Result};
use crate::types::normalize_token;

/// Word vectors of a single fixed dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    vectors: HashMap<String, Vec<f64>>,
}

impl EmbeddingTable {
    pub fn new(vectors: HashMap<String, Vec<f64>>) -> Result<Self> {
        let dim = vectors.values().next().map(Vec::len).unwrap_or(0);
        for (word, v) in &vectors {
            if v.len() != dim {
                return Err(FusionError::Resource(format!(
                    "vector for {word} has dimension {}, expected {dim}",
                    v.len()
                )));
            }
            if v.iter().all(|&x| x == 0.0) || v.iter().any(|x| !x.is_finite()) {
                return Err(FusionError::Resource(format!(
                    "vector for {word} is zero or non-finite"
                )));
            }
        }
        Ok(Self { dim, vectors })
    }

    /// One word per line followed by space-separated components.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut vectors = HashMap::new();
        for (line, l) in data_lines(text) {
            let mut fields = l.split_whitespace();
            let word = normalize_token(fields.next().unwrap_or_default());
            let v = fields
                .map(|f| f.parse::<f64>().map_err(|e| parse_error(source, line, e)))
                .collect::<Result<Vec<_>>>()?;
            if word.is_empty() || v.is_empty() {
                return Err(parse_error(source, line, "expected a word and components"));
            }
            vectors.insert(word, v);
        }
        Self::new(vectors)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?, &path.display().to_string())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn contains(&self, word: &str) -> bool {
        self.vectors.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.vectors.get(word).map(Vec::as_slice)
    }
}

/// Cosine between the vectors of `x` and `y`; `None` if either is missing.
pub fn embedding_similarity(table: &EmbeddingTable, x: &str, y: &str) -> Option<f64> {
    Some(cosine(table.get(x)?, table.get(y)?))
}
