//! Offline lexical solver modules.
//!
//! Each module turns an instance into raw per-choice scores from a local
//! resource table and normalizes them into a [`Distribution`]. Synonym
//! modules score single words; analogy modules score word pairs.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{FusionError, Result};
use crate::types::{normalize, Distribution, Instance, QuestionSet, TaskKind};

pub mod connector;
pub mod definitions;
pub mod embedding;
pub mod paths;
pub mod phrase;
pub mod pmi;
pub mod relations;
pub mod synonyms;

pub use connector::{connector_score, ConnectorWeights, SnippetStore};
pub use definitions::{definition_similarity, DefinitionTable};
pub use embedding::{embedding_similarity, EmbeddingTable};
pub use paths::{
    analogy_path_score, bfs_paths, path_similarity, Direction, LinkKind, ThesaurusGraph, ThesaurusPath,
};
pub use phrase::{phrase_vector, relation_similarity, PhraseFrequencies, PhrasePatternSet};
pub use pmi::{proximity_pmi, CooccurrenceTable};
pub use relations::{relation_filter, MatchHeuristics, Relation, RelationDatabase};
pub use synonyms::{synonym_overlap, OverlapPoints, SynonymLists};

/// Splits text into lowercase alphanumeric tokens.
pub fn tokenize(text: &str) -> Vec<String> {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
        .collect()
}

pub(crate) fn read_resource(path: &Path) -> Result<String> {
    fs::read_to_string(path)
        .map_err(|e| FusionError::Resource(format!("{}: {e}", path.display())))
}

/// Iterates over non-blank, non-comment lines with 1-based line numbers.
pub(crate) fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub(crate) fn parse_error(source: &str, line: usize, msg: impl std::fmt::Display) -> FusionError {
    FusionError::Resource(format!("{source}:{line}: {msg}"))
}

pub(crate) fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum();
    let nb: f64 = b.iter().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb).sqrt()
}

pub(crate) fn sparse_cosine(a: &HashMap<String, f64>, b: &HashMap<String, f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    let dot: f64 = small
        .iter()
        .filter_map(|(t, x)| large.get(t).map(|y| x * y))
        .sum();
    let na: f64 = a.values().map(|x| x * x).sum();
    let nb: f64 = b.values().map(|x| x * x).sum();
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na * nb).sqrt()
}

/// The scoring strategy and resources behind a module.
#[derive(Debug, Clone)]
pub enum Scorer {
    /// Cosine between word vectors; negative cosines score zero.
    Lsa(EmbeddingTable),
    PmiIr(CooccurrenceTable),
    Thesaurus {
        lists: SynonymLists,
        points: OverlapPoints,
    },
    Connector {
        store: SnippetStore,
        weights: ConnectorWeights,
    },
    PhraseVectors {
        patterns: PhrasePatternSet,
        frequencies: PhraseFrequencies,
    },
    ThesaurusPaths {
        graph: ThesaurusGraph,
        max_links: usize,
    },
    Relation {
        database: Arc<RelationDatabase>,
        relation: Relation,
        heuristics: MatchHeuristics,
    },
    Similarity(DefinitionTable),
}

impl Scorer {
    pub fn task(&self) -> TaskKind {
        match self {
            Scorer::Lsa(_) | Scorer::PmiIr(_) | Scorer::Thesaurus { .. } | Scorer::Connector { .. } => {
                TaskKind::Synonym
            }
            _ => TaskKind::Analogy,
        }
    }
}

/// A named solver module.
#[derive(Debug, Clone)]
pub struct SolverModule {
    pub id: String,
    pub scorer: Scorer,
}

impl SolverModule {
    pub fn new(id: impl Into<String>, scorer: Scorer) -> Self {
        Self {
            id: id.into(),
            scorer,
        }
    }

    pub fn task(&self) -> TaskKind {
        self.scorer.task()
    }

    /// Scores one instance. The instance's arity must match [`Self::task`].
    pub fn score(&self, inst: &Instance) -> Distribution {
        let stem = inst.stem.first();
        let per_choice = |f: &dyn Fn(&str) -> f64| -> Distribution {
            let raw: Vec<f64> = inst.choices.iter().map(|c| f(c.first())).collect();
            normalize(&raw).unwrap_or_else(|_| Distribution::uniform(inst.k()))
        };
        match &self.scorer {
            Scorer::Lsa(table) => {
                if !table.contains(stem) {
                    return Distribution::uniform(inst.k());
                }
                per_choice(&|c| {
                    embedding_similarity(table, stem, c)
                        .map(|s| s.max(0.0))
                        .unwrap_or(0.0)
                })
            }
            Scorer::PmiIr(table) => per_choice(&|c| proximity_pmi(table, stem, c)),
            Scorer::Thesaurus { lists, points } => {
                per_choice(&|c| synonym_overlap(lists, stem, c, points))
            }
            Scorer::Connector { store, weights } => {
                per_choice(&|c| connector_score(store, stem, c, weights))
            }
            Scorer::PhraseVectors {
                patterns,
                frequencies,
            } => phrase::analogy_phrase_score(patterns, frequencies, inst),
            Scorer::ThesaurusPaths { graph, max_links } => {
                paths::analogy_path_score_with(graph, inst, *max_links)
            }
            Scorer::Relation {
                database,
                relation,
                heuristics,
            } => relation_filter(database, *relation, inst, heuristics),
            Scorer::Similarity(table) => definition_similarity(table, inst),
        }
    }
}

/// Runs a module over every instance, in instance order.
pub fn run_module(module: &SolverModule, questions: &QuestionSet) -> Result<Vec<Distribution>> {
    if module.task() != questions.task() {
        return Err(FusionError::InvalidParameter {
            name: "module",
            reason: format!(
                "module {} scores {:?} questions but the set holds {:?} questions",
                module.id,
                module.task(),
                questions.task()
            ),
        });
    }
    Ok(questions
        .instances()
        .par_iter()
        .map(|inst| module.score(inst))
        .collect())
}
