//! Windowed co-occurrence counts and the proximity score that ignores
//! windows containing "not".

use std::collections::{BTreeSet, HashMap};
use std::io::Write;
use std::path::Path;

use super::{data_lines, parse_error, read_resource, tokenize};
use crate::error::{FusionError, Result};

pub const DEFAULT_WINDOW: usize = 10;
const NEGATION: &str = "not";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord)]
pub struct WindowCount {
    pub all: u64,
    /// Windows that do not contain "not".
    pub without_not: u64,
}

/// Counts of corpus windows containing each word and each unordered word pair.
#[derive(Debug, Clone, PartialEq)]
pub struct CooccurrenceTable {
    window_size: usize,
    windows: u64,
    unigrams: HashMap<String, WindowCount>,
    pairs: HashMap<(String, String), WindowCount>,
}

fn pair_key(a: &str, b: &str) -> (String, String) {
    if a <= b {
        (a.to_string(), b.to_string())
    } else {
        (b.to_string(), a.to_string())
    }
}

impl CooccurrenceTable {
    /// Each line of the corpus is cut into consecutive windows of
    /// `window_size` tokens; a shorter tail forms its own window.
    pub fn from_corpus(corpus: &str, window_size: usize) -> Result<Self> {
        if window_size == 0 {
            return Err(FusionError::InvalidParameter {
                name: "window_size",
                reason: "must be at least 1".into(),
            });
        }
        let mut table = Self {
            window_size,
            windows: 0,
            unigrams: HashMap::new(),
            pairs: HashMap::new(),
        };
        for line in corpus.lines() {
            let tokens = tokenize(line);
            for window in tokens.chunks(window_size) {
                let words: BTreeSet<&str> = window.iter().map(String::as_str).collect();
                let negated = words.contains(NEGATION);
                table.windows += 1;
                for &w in &words {
                    bump(table.unigrams.entry(w.to_string()).or_default(), negated);
                }
                let list: Vec<&str> = words.into_iter().collect();
                for (i, a) in list.iter().enumerate() {
                    for b in &list[i + 1..] {
                        bump(table.pairs.entry(pair_key(a, b)).or_default(), negated);
                    }
                }
            }
        }
        Ok(table)
    }

    /// Reads the tab-separated table format: `#window_size` and `#windows`
    /// header lines, unigram lines `word  all  without_not` and pair lines
    /// `word  word  all  without_not`.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut window_size = DEFAULT_WINDOW;
        let mut windows = 0;
        let mut unigrams = HashMap::new();
        let mut pairs = HashMap::new();
        for (line, l) in text.lines().enumerate().map(|(i, l)| (i + 1, l)) {
            let fields: Vec<&str> = l.split('\t').collect();
            match fields.as_slice() {
                ["#window_size", v] => {
                    window_size = v.trim().parse().map_err(|e| parse_error(source, line, e))?
                }
                ["#windows", v] => windows = v.trim().parse().map_err(|e| parse_error(source, line, e))?,
                _ => {}
            }
        }
        let count = |line: usize, a: &str, b: &str| -> Result<WindowCount> {
            let all = a.trim().parse().map_err(|e| parse_error(source, line, e))?;
            let without_not = b.trim().parse().map_err(|e| parse_error(source, line, e))?;
            if without_not > all {
                return Err(parse_error(source, line, "negation-free count exceeds total"));
            }
            Ok(WindowCount { all, without_not })
        };
        for (line, l) in data_lines(text) {
            let fields: Vec<&str> = l.split('\t').collect();
            match fields.as_slice() {
                [w, a, b] => {
                    unigrams.insert(w.to_string(), count(line, a, b)?);
                }
                [x, y, a, b] => {
                    pairs.insert(pair_key(x, y), count(line, a, b)?);
                }
                _ => return Err(parse_error(source, line, "expected 3 or 4 tab-separated fields")),
            }
        }
        let table = Self {
            window_size,
            windows,
            unigrams,
            pairs,
        };
        table.check()?;
        Ok(table)
    }

    fn check(&self) -> Result<()> {
        for ((a, b), c) in &self.pairs {
            let ua = self.unigram(a);
            let ub = self.unigram(b);
            if c.all > ua.all.min(ub.all) || c.without_not > ua.without_not.min(ub.without_not) {
                return Err(FusionError::Resource(format!(
                    "pair count for ({a}, {b}) exceeds a unigram count"
                )));
            }
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?, &path.display().to_string())
    }

    /// Writes the table in the format read by [`Self::parse`], sorted.
    pub fn write_to(&self, mut out: impl Write) -> std::io::Result<()> {
        writeln!(out, "#window_size\t{}", self.window_size)?;
        writeln!(out, "#windows\t{}", self.windows)?;
        let mut words: Vec<_> = self.unigrams.iter().collect();
        words.sort();
        for (w, c) in words {
            writeln!(out, "{w}\t{}\t{}", c.all, c.without_not)?;
        }
        let mut pairs: Vec<_> = self.pairs.iter().collect();
        pairs.sort();
        for ((a, b), c) in pairs {
            writeln!(out, "{a}\t{b}\t{}\t{}", c.all, c.without_not)?;
        }
        Ok(())
    }

    pub fn window_size(&self) -> usize {
        self.window_size
    }

    pub fn windows(&self) -> u64 {
        self.windows
    }

    pub fn unigram(&self, word: &str) -> WindowCount {
        self.unigrams.get(word).copied().unwrap_or_default()
    }

    pub fn pair(&self, a: &str, b: &str) -> WindowCount {
        self.pairs.get(&pair_key(a, b)).copied().unwrap_or_default()
    }
}

fn bump(c: &mut WindowCount, negated: bool) {
    c.all += 1;
    if !negated {
        c.without_not += 1;
    }
}

/// Fraction of negation-free windows holding `choice` that also hold `stem`.
pub fn proximity_pmi(table: &CooccurrenceTable, stem: &str, choice: &str) -> f64 {
    let denom = table.unigram(choice).without_not;
    if denom == 0 || stem == choice {
        return 0.0;
    }
    table.pair(stem, choice).without_not as f64 / denom as f64
}
