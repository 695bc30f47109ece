use std::collections::{HashMap, HashSet};
use std::path::Path;

use super::{data_lines, parse_error, read_resource};
use crate::error::Result;
use crate::types::normalize_token;

/// Related-word lists per headword, merged across thesaurus fields.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SynonymLists {
    lists: HashMap<String, HashSet<String>>,
}

impl SynonymLists {
    pub fn insert(&mut self, head: &str, member: &str) {
        let head = normalize_token(head);
        let member = normalize_token(member);
        if head.is_empty() || member.is_empty() || head == member {
            return;
        }
        self.lists.entry(head).or_default().insert(member);
    }

    /// `head  member  member ...` per line; repeated heads merge.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut lists = Self::default();
        for (line, l) in data_lines(text) {
            let mut fields = l.split('\t');
            let head = fields.next().unwrap_or_default();
            if normalize_token(head).is_empty() {
                return Err(parse_error(source, line, "missing headword"));
            }
            lists.lists.entry(normalize_token(head)).or_default();
            for member in fields {
                lists.insert(head, member);
            }
        }
        Ok(lists)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?, &path.display().to_string())
    }

    pub fn get(&self, word: &str) -> Option<&HashSet<String>> {
        self.lists.get(word)
    }
}

/// Point scheme for [`synonym_overlap`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OverlapPoints {
    /// Awarded for each direction in which one word lists the other.
    pub membership: f64,
    /// Awarded per word both lists share.
    pub shared: f64,
}

impl Default for OverlapPoints {
    fn default() -> Self {
        Self {
            membership: 10.0,
            shared: 1.0,
        }
    }
}

pub fn synonym_overlap(lists: &SynonymLists, stem: &str, choice: &str, points: &OverlapPoints) -> f64 {
    let empty = HashSet::new();
    let of_stem = lists.get(stem).unwrap_or(&empty);
    let of_choice = lists.get(choice).unwrap_or(&empty);
    let mut score = 0.0;
    if of_stem.contains(choice) {
        score += points.membership;
    }
    if of_choice.contains(stem) {
        score += points.membership;
    }
    score + points.shared * of_stem.intersection(of_choice).count() as f64
}
