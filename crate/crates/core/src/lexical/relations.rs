//! Relation-specific filters: if the stem pair stands in a relation, keep
//! only the choice pairs that stand in it too.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{data_lines, parse_error, read_resource};
use crate::error::{FusionError, Result};
use crate::types::{normalize_token, Distribution, Instance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    Synonym,
    Antonym,
    Hypernym,
    Hyponym,
    MeronymSubstance,
    MeronymPart,
    MeronymMember,
    HolonymSubstance,
    HolonymMember,
}

impl Relation {
    pub const ALL: [Relation; 9] = [
        Relation::Synonym,
        Relation::Antonym,
        Relation::Hypernym,
        Relation::Hyponym,
        Relation::MeronymSubstance,
        Relation::MeronymPart,
        Relation::MeronymMember,
        Relation::HolonymSubstance,
        Relation::HolonymMember,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Synonym => "synonym",
            Relation::Antonym => "antonym",
            Relation::Hypernym => "hypernym",
            Relation::Hyponym => "hyponym",
            Relation::MeronymSubstance => "meronym:substance",
            Relation::MeronymPart => "meronym:part",
            Relation::MeronymMember => "meronym:member",
            Relation::HolonymSubstance => "holonym:substance",
            Relation::HolonymMember => "holonym:member",
        }
    }

    fn symmetric(self) -> bool {
        matches!(self, Relation::Synonym | Relation::Antonym)
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim().to_ascii_lowercase();
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == s)
            .ok_or_else(|| FusionError::Resource(format!("unknown relation `{s}`")))
    }
}

/// Word-pair sets for the nine relations.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RelationDatabase {
    pairs: HashMap<Relation, HashSet<(String, String)>>,
    synonyms: HashMap<String, BTreeSet<String>>,
}

impl RelationDatabase {
    pub fn insert(&mut self, relation: Relation, a: &str, b: &str) {
        let a = normalize_token(a);
        let b = normalize_token(b);
        if relation == Relation::Synonym {
            self.synonyms.entry(a.clone()).or_default().insert(b.clone());
            self.synonyms.entry(b.clone()).or_default().insert(a.clone());
        }
        self.pairs.entry(relation).or_default().insert((a, b));
    }

    /// `relation  word  word` per line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut db = Self::default();
        for (line, l) in data_lines(text) {
            let fields: Vec<&str> = l.split('\t').collect();
            let [rel, a, b] = fields.as_slice() else {
                return Err(parse_error(source, line, "expected relation, word, word"));
            };
            let rel = rel.parse().map_err(|e| parse_error(source, line, e))?;
            db.insert(rel, a, b);
        }
        Ok(db)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?, &path.display().to_string())
    }

    pub fn contains(&self, relation: Relation, a: &str, b: &str) -> bool {
        self.pairs.get(&relation).is_some_and(|set| {
            set.contains(&(a.to_string(), b.to_string()))
                || (relation.symmetric() && set.contains(&(b.to_string(), a.to_string())))
        })
    }

    /// Whether `(a, b)` stands in `relation`, trying the lemma and synonym
    /// variants enabled in `heuristics`.
    pub fn holds(&self, relation: Relation, a: &str, b: &str, heuristics: &MatchHeuristics) -> bool {
        let va = self.variants(a, heuristics);
        let vb = self.variants(b, heuristics);
        va.iter()
            .any(|x| vb.iter().any(|y| self.contains(relation, x, y)))
    }

    fn variants(&self, word: &str, heuristics: &MatchHeuristics) -> BTreeSet<String> {
        let mut out = BTreeSet::from([word.to_string()]);
        if heuristics.lemmatize {
            out.extend(lemma_candidates(word));
        }
        if heuristics.synonym_expansion {
            let expanded: Vec<String> = out
                .iter()
                .filter_map(|w| self.synonyms.get(w))
                .flatten()
                .cloned()
                .collect();
            out.extend(expanded);
        }
        out
    }
}

/// Suffix-stripped forms of a word for the suffixes s, es, ed and ing.
pub fn lemma_candidates(word: &str) -> Vec<String> {
    ["s", "es", "ed", "ing"]
        .iter()
        .filter_map(|suffix| word.strip_suffix(suffix))
        .filter(|stem| stem.chars().count() >= 2)
        .map(str::to_string)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatchHeuristics {
    pub lemmatize: bool,
    /// One hop through the synonym relation.
    pub synonym_expansion: bool,
}

impl Default for MatchHeuristics {
    fn default() -> Self {
        Self {
            lemmatize: true,
            synonym_expansion: true,
        }
    }
}

impl MatchHeuristics {
    pub fn exact() -> Self {
        Self {
            lemmatize: false,
            synonym_expansion: false,
        }
    }
}

/// Uniform when the stem pair is not in `relation` or no choice pair is;
/// otherwise uniform over the matching choices.
pub fn relation_filter(
    db: &RelationDatabase,
    relation: Relation,
    inst: &Instance,
    heuristics: &MatchHeuristics,
) -> Distribution {
    let k = inst.k();
    let holds = |t: &crate::types::WordTuple| match t.second() {
        Some(second) => db.holds(relation, t.first(), second, heuristics),
        None => false,
    };
    if !holds(&inst.stem) {
        return Distribution::uniform(k);
    }
    let matches: Vec<bool> = inst.choices.iter().map(holds).collect();
    let hits = matches.iter().filter(|&&m| m).count();
    if hits == 0 {
        return Distribution::uniform(k);
    }
    let p = 1.0 / hits as f64;
    Distribution::from_normalized(matches.iter().map(|&m| if m { p } else { 0.0 }).collect())
}
