//! Scores a word pair by how often stored text snippets join the two words
//! with a connecting symbol or word.

use std::collections::HashMap;
use std::path::Path;

use super::{data_lines, parse_error, read_resource};
use crate::error::Result;
use crate::types::normalize_token;

const SEPARATOR_SYMBOLS: [char; 9] = ['[', '"', ':', ',', '=', '/', '\\', '(', ']'];
const SEPARATOR_WORDS: [&str; 5] = ["means", "defined", "equals", "synonym", "and"];
const KEYWORDS: [&str; 2] = ["dictionary", "thesaurus"];

/// Text snippets stored per unordered word pair.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SnippetStore {
    snippets: HashMap<(String, String), Vec<String>>,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl SnippetStore {
    pub fn insert(&mut self, a: &str, b: &str, snippet: impl Into<String>) {
        self.snippets
            .entry(pair_key(&normalize_token(a), &normalize_token(b)))
            .or_default()
            .push(snippet.into());
    }

    /// `word  word  snippet text` per line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut store = Self::default();
        for (line, l) in data_lines(text) {
            let mut fields = l.splitn(3, '\t');
            match (fields.next(), fields.next(), fields.next()) {
                (Some(a), Some(b), Some(s)) => store.insert(a, b, s),
                _ => return Err(parse_error(source, line, "expected word, word, snippet")),
            }
        }
        Ok(store)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?, &path.display().to_string())
    }

    pub fn get(&self, a: &str, b: &str) -> &[String] {
        self.snippets
            .get(&pair_key(a, b))
            .map(Vec::as_slice)
            .unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConnectorWeights {
    /// Per occurrence of the two words joined by a separator.
    pub separator: f64,
    /// Per occurrence of "dictionary" or "thesaurus" in the pair's snippets.
    pub keyword: f64,
}

impl Default for ConnectorWeights {
    fn default() -> Self {
        Self {
            separator: 1.0,
            keyword: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Word(String),
    Separator,
    Other,
}

fn lex(snippet: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut word = String::new();
    let flush = |word: &mut String, tokens: &mut Vec<Token>| {
        if !word.is_empty() {
            let w = word.to_lowercase();
            tokens.push(if SEPARATOR_WORDS.contains(&w.as_str()) {
                Token::Separator
            } else {
                Token::Word(w)
            });
            word.clear();
        }
    };
    for c in snippet.chars() {
        if c.is_alphanumeric() {
            word.push(c);
            continue;
        }
        flush(&mut word, &mut tokens);
        if SEPARATOR_SYMBOLS.contains(&c) {
            tokens.push(Token::Separator);
        } else if !c.is_whitespace() {
            tokens.push(Token::Other);
        }
    }
    flush(&mut word, &mut tokens);
    tokens
}

/// Counts `a <sep> b` and `b <sep> a` in the pair's snippets, where `<sep>`
/// is one separator symbol or word, or plain whitespace, plus keyword hits.
pub fn connector_score(store: &SnippetStore, stem: &str, choice: &str, weights: &ConnectorWeights) -> f64 {
    let is = |t: &Token, w: &str| matches!(t, Token::Word(x) if x == w);
    let joins = |a: &Token, b: &Token| (is(a, stem) && is(b, choice)) || (is(a, choice) && is(b, stem));
    let mut joined = 0usize;
    let mut keywords = 0usize;
    for snippet in store.get(stem, choice) {
        let tokens = lex(snippet);
        for (t, tok) in tokens.iter().enumerate() {
            if let Token::Word(w) = tok {
                if KEYWORDS.contains(&w.as_str()) {
                    keywords += 1;
                }
            }
            if let Some(next) = tokens.get(t + 1) {
                if joins(tok, next) {
                    joined += 1;
                }
            }
            if let (Some(Token::Separator), Some(after)) = (tokens.get(t + 1), tokens.get(t + 2)) {
                if joins(tok, after) {
                    joined += 1;
                }
            }
        }
    }
    weights.separator * joined as f64 + weights.keyword * keywords as f64
}
