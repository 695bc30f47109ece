//! Module configuration (TOML). Each `[[module]]` table names a module, its
//! kind and its resource files; relative paths resolve against the
//! configuration file's directory.
//!
//! ```toml
//! [[module]]
//! id = "pmi"
//! kind = "pmi-ir"
//! corpus = "corpus.txt"
//! window = 10
//!
//! [[module]]
//! id = "antonyms"
//! kind = "relation"
//! database = "relations.tsv"
//! relation = "antonym"
//! ```

use std::collections::{HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use lexfuse_core::lexical::paths::DEFAULT_MAX_LINKS;
use lexfuse_core::lexical::pmi::DEFAULT_WINDOW;
use lexfuse_core::lexical::{
    ConnectorWeights, CooccurrenceTable, DefinitionTable, EmbeddingTable, MatchHeuristics, OverlapPoints,
    PhraseFrequencies, PhrasePatternSet, RelationDatabase, Scorer, SnippetStore, SolverModule, SynonymLists,
    ThesaurusGraph,
};
use serde::Deserialize;

use crate::error::{CliError, CliResult};
use crate::io::read_text;

/// Config path used when neither a flag nor the environment names one.
pub const DEFAULT_CONFIG: &str = "modules.toml";
pub const CONFIG_ENV: &str = "LEXFUSE_CONFIG";

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModuleConfig {
    #[serde(rename = "module", default)]
    pub modules: Vec<ModuleEntry>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModuleEntry {
    Lsa {
        id: String,
        vectors: PathBuf,
    },
    PmiIr {
        id: String,
        /// A precomputed count table, or
        table: Option<PathBuf>,
        /// a corpus to count on load.
        corpus: Option<PathBuf>,
        window: Option<usize>,
    },
    Thesaurus {
        id: String,
        lists: PathBuf,
        membership_points: Option<f64>,
        shared_points: Option<f64>,
    },
    Connector {
        id: String,
        snippets: PathBuf,
        separator_weight: Option<f64>,
        keyword_weight: Option<f64>,
    },
    PhraseVectors {
        id: String,
        frequencies: PathBuf,
        /// Defaults to the bundled 128 templates.
        patterns: Option<PathBuf>,
    },
    ThesaurusPaths {
        id: String,
        graph: PathBuf,
        max_links: Option<usize>,
    },
    Relation {
        id: String,
        database: PathBuf,
        relation: String,
        lemmatize: Option<bool>,
        synonym_expansion: Option<bool>,
    },
    Similarity {
        id: String,
        definitions: PathBuf,
    },
}

impl ModuleEntry {
    pub fn id(&self) -> &str {
        match self {
            ModuleEntry::Lsa { id, .. }
            | ModuleEntry::PmiIr { id, .. }
            | ModuleEntry::Thesaurus { id, .. }
            | ModuleEntry::Connector { id, .. }
            | ModuleEntry::PhraseVectors { id, .. }
            | ModuleEntry::ThesaurusPaths { id, .. }
            | ModuleEntry::Relation { id, .. }
            | ModuleEntry::Similarity { id, .. } => id,
        }
    }
}

impl ModuleConfig {
    pub fn parse(text: &str, source: &str) -> CliResult<Self> {
        let config: Self = toml::from_str(text).map_err(|e| CliError::Input(format!("{source}: {e}")))?;
        if config.modules.is_empty() {
            return Err(CliError::Input(format!("{source}: no [[module]] entries")));
        }
        let mut ids = HashSet::new();
        for m in &config.modules {
            if m.id().trim().is_empty() {
                return Err(CliError::Input(format!("{source}: module with an empty id")));
            }
            if !ids.insert(m.id()) {
                return Err(CliError::Input(format!("{source}: duplicate module id `{}`", m.id())));
            }
        }
        Ok(config)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        Self::parse(&read_text(path)?, &path.display().to_string())
    }

    /// Loads every module's resources. Relation modules sharing a database
    /// file share one loaded copy.
    pub fn build(&self, base: &Path) -> CliResult<Vec<SolverModule>> {
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let mut databases: HashMap<PathBuf, Arc<RelationDatabase>> = HashMap::new();
        let mut out = Vec::with_capacity(self.modules.len());
        for entry in &self.modules {
            let scorer = match entry {
                ModuleEntry::Lsa { vectors, .. } => Scorer::Lsa(EmbeddingTable::load(&resolve(vectors))?),
                ModuleEntry::PmiIr {
                    table, corpus, window, ..
                } => match (table, corpus) {
                    (Some(t), None) => Scorer::PmiIr(CooccurrenceTable::load(&resolve(t))?),
                    (None, Some(c)) => Scorer::PmiIr(CooccurrenceTable::from_corpus(
                        &read_text(&resolve(c))?,
                        window.unwrap_or(DEFAULT_WINDOW),
                    )?),
                    _ => {
                        return Err(CliError::Input(format!(
                            "module {}: give exactly one of `table` and `corpus`",
                            entry.id()
                        )))
                    }
                },
                ModuleEntry::Thesaurus {
                    lists,
                    membership_points,
                    shared_points,
                    ..
                } => {
                    let d = OverlapPoints::default();
                    Scorer::Thesaurus {
                        lists: SynonymLists::load(&resolve(lists))?,
                        points: OverlapPoints {
                            membership: membership_points.unwrap_or(d.membership),
                            shared: shared_points.unwrap_or(d.shared),
                        },
                    }
                }
                ModuleEntry::Connector {
                    snippets,
                    separator_weight,
                    keyword_weight,
                    ..
                } => {
                    let d = ConnectorWeights::default();
                    Scorer::Connector {
                        store: SnippetStore::load(&resolve(snippets))?,
                        weights: ConnectorWeights {
                            separator: separator_weight.unwrap_or(d.separator),
                            keyword: keyword_weight.unwrap_or(d.keyword),
                        },
                    }
                }
                ModuleEntry::PhraseVectors {
                    frequencies, patterns, ..
                } => Scorer::PhraseVectors {
                    patterns: match patterns {
                        Some(p) => PhrasePatternSet::load(&resolve(p))?,
                        None => PhrasePatternSet::default_patterns(),
                    },
                    frequencies: PhraseFrequencies::load(&resolve(frequencies))?,
                },
                ModuleEntry::ThesaurusPaths { graph, max_links, .. } => Scorer::ThesaurusPaths {
                    graph: ThesaurusGraph::load(&resolve(graph))?,
                    max_links: max_links.unwrap_or(DEFAULT_MAX_LINKS),
                },
                ModuleEntry::Relation {
                    database,
                    relation,
                    lemmatize,
                    synonym_expansion,
                    ..
                } => {
                    let path = resolve(database);
                    let db = match databases.get(&path) {
                        Some(db) => Arc::clone(db),
                        None => {
                            let db = Arc::new(RelationDatabase::load(&path)?);
                            databases.insert(path, Arc::clone(&db));
                            db
                        }
                    };
                    let d = MatchHeuristics::default();
                    Scorer::Relation {
                        database: db,
                        relation: relation.parse()?,
                        heuristics: MatchHeuristics {
                            lemmatize: lemmatize.unwrap_or(d.lemmatize),
                            synonym_expansion: synonym_expansion.unwrap_or(d.synonym_expansion),
                        },
                    }
                }
                ModuleEntry::Similarity { definitions, .. } => {
                    Scorer::Similarity(DefinitionTable::load(&resolve(definitions))?)
                }
            };
            out.push(SolverModule::new(entry.id(), scorer));
        }
        Ok(out)
    }
}
