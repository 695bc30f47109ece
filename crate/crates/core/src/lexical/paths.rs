//! Typed thesaurus graph, shortest-path search between two words, and the
//! feature-overlap similarity between paths used to score analogies.

use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use super::{data_lines, parse_error, read_resource, tokenize};
use crate::error::{FusionError, Result};
use crate::types::{normalize, normalize_token, Distribution, Instance};

pub const DEFAULT_MAX_LINKS: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LinkKind {
    Hypernym,
    Hyponym,
    Synonym,
    Antonym,
    Stem,
    Gloss,
}

impl LinkKind {
    pub const ALL: [LinkKind; 6] = [
        LinkKind::Hypernym,
        LinkKind::Hyponym,
        LinkKind::Synonym,
        LinkKind::Antonym,
        LinkKind::Stem,
        LinkKind::Gloss,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LinkKind::Hypernym => "hypernym",
            LinkKind::Hyponym => "hyponym",
            LinkKind::Synonym => "synonym",
            LinkKind::Antonym => "antonym",
            LinkKind::Stem => "stem",
            LinkKind::Gloss => "gloss",
        }
    }
}

impl fmt::Display for LinkKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LinkKind {
    type Err = FusionError;

    fn from_str(s: &str) -> Result<Self> {
        LinkKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| FusionError::Resource(format!("unknown link kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
struct Edge {
    head: usize,
    kind: LinkKind,
    tail: usize,
    gloss: Vec<String>,
}

/// Directed multigraph over words with typed links. Gloss links carry the
/// words of the gloss that connects head to tail.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ThesaurusGraph {
    words: Vec<String>,
    index: HashMap<String, usize>,
    edges: Vec<Edge>,
    outgoing: Vec<Vec<usize>>,
    seen: HashSet<(usize, LinkKind, usize)>,
}

impl ThesaurusGraph {
    fn node(&mut self, word: &str) -> usize {
        if let Some(&i) = self.index.get(word) {
            return i;
        }
        let i = self.words.len();
        self.words.push(word.to_string());
        self.index.insert(word.to_string(), i);
        self.outgoing.push(Vec::new());
        i
    }

    /// Adds an edge. Self-loops are rejected; an exact repeat of an existing
    /// (head, kind, tail) edge is ignored.
    pub fn add_edge(&mut self, head: &str, kind: LinkKind, tail: &str, gloss: &[&str]) -> Result<()> {
        let head = normalize_token(head);
        let tail = normalize_token(tail);
        if head.is_empty() || tail.is_empty() {
            return Err(FusionError::Resource("edge with an empty word".into()));
        }
        if head == tail {
            return Err(FusionError::Resource(format!("self-loop on `{head}`")));
        }
        let h = self.node(&head);
        let t = self.node(&tail);
        if !self.seen.insert((h, kind, t)) {
            return Ok(());
        }
        self.outgoing[h].push(self.edges.len());
        self.edges.push(Edge {
            head: h,
            kind,
            tail: t,
            gloss: gloss.iter().flat_map(|g| tokenize(g)).collect(),
        });
        Ok(())
    }

    /// `head  kind  tail[  gloss text]` per line.
    pub fn parse(text: &str, source: &str) -> Result<Self> {
        let mut g = Self::default();
        for (line, l) in data_lines(text) {
            let fields: Vec<&str> = l.split('\t').collect();
            if fields.len() < 3 || fields.len() > 4 {
                return Err(parse_error(source, line, "expected head, kind, tail[, gloss]"));
            }
            let kind = fields[1]
                .parse::<LinkKind>()
                .map_err(|e| parse_error(source, line, e))?;
            let gloss: Vec<&str> = fields.get(3).into_iter().copied().collect();
            g.add_edge(fields[0], kind, fields[2], &gloss)
                .map_err(|e| parse_error(source, line, e))?;
        }
        Ok(g)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&read_resource(path)?, &path.display().to_string())
    }

    pub fn n_words(&self) -> usize {
        self.words.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    /// Every edge as (head, kind, tail, gloss words).
    pub fn edges(&self) -> impl Iterator<Item = (&str, LinkKind, &str, &[String])> {
        self.edges.iter().map(|e| {
            (
                self.words[e.head].as_str(),
                e.kind,
                self.words[e.tail].as_str(),
                e.gloss.as_slice(),
            )
        })
    }

    /// Edges leaving `word`, as (kind, tail, gloss words).
    pub fn out_edges(&self, word: &str) -> Vec<(LinkKind, &str, &[String])> {
        self.index
            .get(word)
            .map(|&h| {
                self.outgoing[h]
                    .iter()
                    .map(|&e| {
                        let e = &self.edges[e];
                        (e.kind, self.words[e.tail].as_str(), e.gloss.as_slice())
                    })
                    .collect()
            })
            .unwrap_or_default()
    }

    fn shortest(&self, from: &str, to: &str, max_links: usize, direction: Direction) -> Vec<ThesaurusPath> {
        let (Some(&src), Some(&dst)) = (self.index.get(from), self.index.get(to)) else {
            return Vec::new();
        };
        if src == dst || max_links == 0 {
            return Vec::new();
        }
        let mut dist = vec![usize::MAX; self.words.len()];
        dist[src] = 0;
        let mut queue = VecDeque::from([src]);
        while let Some(u) = queue.pop_front() {
            if dist[u] >= max_links || u == dst {
                continue;
            }
            for &e in &self.outgoing[u] {
                let v = self.edges[e].tail;
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if dist[dst] == usize::MAX {
            return Vec::new();
        }
        let mut out = Vec::new();
        let mut stack = Vec::new();
        self.collect(src, dst, dist[dst], &dist, &mut stack, &mut out);
        out.into_iter()
            .map(|edge_ids| self.materialize(&edge_ids, direction))
            .collect()
    }

    fn collect(
        &self,
        at: usize,
        dst: usize,
        length: usize,
        dist: &[usize],
        stack: &mut Vec<usize>,
        out: &mut Vec<Vec<usize>>,
    ) {
        if at == dst {
            out.push(stack.clone());
            return;
        }
        if stack.len() == length {
            return;
        }
        for &e in &self.outgoing[at] {
            let v = self.edges[e].tail;
            if dist[v] == stack.len() + 1 {
                stack.push(e);
                self.collect(v, dst, length, dist, stack, out);
                stack.pop();
            }
        }
    }

    fn materialize(&self, edge_ids: &[usize], direction: Direction) -> ThesaurusPath {
        let edges: Vec<&Edge> = edge_ids.iter().map(|&e| &self.edges[e]).collect();
        let mut nodes = vec![self.words[edges[0].head].clone()];
        nodes.extend(edges.iter().map(|e| self.words[e.tail].clone()));
        ThesaurusPath {
            direction,
            nodes,
            kinds: edges.iter().map(|e| e.kind).collect(),
            glosses: edges.iter().map(|e| e.gloss.clone()).collect(),
        }
    }
}

/// Whether a path runs from the first word of a pair to the second, or back.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ThesaurusPath {
    pub direction: Direction,
    /// Visited words, endpoints included.
    pub nodes: Vec<String>,
    pub kinds: Vec<LinkKind>,
    /// Gloss words per link (empty for non-gloss links).
    pub glosses: Vec<Vec<String>>,
}

impl ThesaurusPath {
    pub fn len(&self) -> usize {
        self.kinds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kinds.is_empty()
    }

    /// Intermediate words plus every gloss word along the path.
    pub fn feature_words(&self) -> BTreeSet<&str> {
        let inner = &self.nodes[1..self.nodes.len().saturating_sub(1).max(1)];
        inner
            .iter()
            .chain(self.glosses.iter().flatten())
            .map(String::as_str)
            .collect()
    }
}

/// All minimum-length paths from `x` to `y` and all minimum-length paths
/// from `y` to `x`, each at most `max_links` links long.
pub fn bfs_paths(graph: &ThesaurusGraph, x: &str, y: &str, max_links: usize) -> Vec<ThesaurusPath> {
    let mut paths = graph.shortest(x, y, max_links, Direction::Forward);
    paths.extend(graph.shortest(y, x, max_links, Direction::Backward));
    paths.sort();
    paths
}

/// Shared link kinds (as a multiset), plus one for equal direction, plus the
/// number of shared feature words.
pub fn path_similarity(p: &ThesaurusPath, q: &ThesaurusPath) -> f64 {
    let mut counts: HashMap<LinkKind, i64> = HashMap::new();
    for k in &p.kinds {
        *counts.entry(*k).or_default() += 1;
    }
    let mut shared_kinds = 0;
    for k in &q.kinds {
        if let Some(c) = counts.get_mut(k) {
            if *c > 0 {
                *c -= 1;
                shared_kinds += 1;
            }
        }
    }
    let same_direction = usize::from(p.direction == q.direction);
    let shared_words = p.feature_words().intersection(&q.feature_words()).count();
    (shared_kinds + same_direction + shared_words) as f64
}

/// Scores each choice pair by its best path similarity to any stem path.
pub fn analogy_path_score(graph: &ThesaurusGraph, inst: &Instance) -> Distribution {
    analogy_path_score_with(graph, inst, DEFAULT_MAX_LINKS)
}

pub(crate) fn analogy_path_score_with(graph: &ThesaurusGraph, inst: &Instance, max_links: usize) -> Distribution {
    let pair_paths = |t: &crate::types::WordTuple| match t.second() {
        Some(second) => bfs_paths(graph, t.first(), second, max_links),
        None => Vec::new(),
    };
    let stem_paths = pair_paths(&inst.stem);
    if stem_paths.is_empty() {
        return Distribution::uniform(inst.k());
    }
    let raw: Vec<f64> = inst
        .choices
        .iter()
        .map(|c| {
            let choice_paths = pair_paths(c);
            stem_paths
                .iter()
                .flat_map(|p| choice_paths.iter().map(move |q| path_similarity(p, q)))
                .fold(0.0, f64::max)
        })
        .collect();
    normalize(&raw).unwrap_or_else(|_| Distribution::uniform(inst.k()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::WordTuple;

    fn toy() -> ThesaurusGraph {
        ThesaurusGraph::parse(
            "evaporate\tgloss\tvapor\tchange into a vapor\n\
             petrify\tgloss\tstone\tchange into stone\n\
             a\thypernym\tb\n\
             b\thypernym\tc\n\
             a\tsynonym\td\n\
             d\tstem\te\n\
             e\tantonym\tc\n",
            "toy",
        )
        .unwrap()
    }

    #[test]
    fn parse_rejects_bad_edges() {
        assert!(ThesaurusGraph::parse("a\tcousin\tb\n", "t").is_err());
        assert!(ThesaurusGraph::parse("a\tgloss\ta\n", "t").is_err());
        assert!(ThesaurusGraph::parse("a\tgloss\n", "t").is_err());
    }

    #[test]
    fn same_word_has_no_paths() {
        assert!(bfs_paths(&toy(), "a", "a", 3).is_empty());
    }

    #[test]
    fn gloss_path_found_forward() {
        let paths = bfs_paths(&toy(), "evaporate", "vapor", 3);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].direction, Direction::Forward);
        assert_eq!(paths[0].kinds, vec![LinkKind::Gloss]);
        let back = bfs_paths(&toy(), "vapor", "evaporate", 3);
        assert_eq!(back[0].direction, Direction::Backward);
    }

    #[test]
    fn only_shortest_routes() {
        // a->b->c (2 links) beats a->d->e->c (3 links)
        let paths = bfs_paths(&toy(), "a", "c", 3);
        assert_eq!(paths.len(), 1);
        assert_eq!(paths[0].nodes, vec!["a", "b", "c"]);
        assert!(bfs_paths(&toy(), "a", "c", 1).is_empty());
    }

    #[test]
    fn similarity_examples() {
        let g = toy();
        let p = &bfs_paths(&g, "evaporate", "vapor", 3)[0];
        let q = &bfs_paths(&g, "petrify", "stone", 3)[0];
        assert_eq!(path_similarity(p, q), 4.0);
        assert_eq!(path_similarity(p, q), path_similarity(q, p));

        let fwd = ThesaurusPath {
            direction: Direction::Forward,
            nodes: vec!["x".into(), "y".into()],
            kinds: vec![LinkKind::Synonym],
            glosses: vec![vec![]],
        };
        let back = ThesaurusPath {
            direction: Direction::Backward,
            nodes: vec!["u".into(), "v".into()],
            kinds: vec![LinkKind::Antonym],
            glosses: vec![vec![]],
        };
        assert_eq!(path_similarity(&fwd, &back), 0.0);
        let fwd2 = ThesaurusPath {
            direction: Direction::Forward,
            ..back
        };
        assert_eq!(path_similarity(&fwd, &fwd2), 1.0);
    }

    fn analogy(stem: [&str; 2], choices: &[[&str; 2]]) -> Instance {
        Instance::new(
            "a",
            WordTuple::new(stem).unwrap(),
            choices.iter().map(|c| WordTuple::new(*c).unwrap()).collect(),
            0,
        )
        .unwrap()
    }

    #[test]
    fn analogy_scoring() {
        let g = toy();
        let none = analogy(["cat", "meow"], &[["dog", "bark"], ["a", "c"]]);
        assert_eq!(analogy_path_score(&g, &none).probs(), &[0.5, 0.5]);

        let inst = analogy(
            ["evaporate", "vapor"],
            &[["mouse", "scamper"], ["petrify", "stone"], ["bird", "peck"]],
        );
        assert_eq!(analogy_path_score(&g, &inst).probs(), &[0.0, 1.0, 0.0]);

        let inst = analogy(["evaporate", "vapor"], &[["a", "c"], ["petrify", "stone"]]);
        let d = analogy_path_score(&g, &inst);
        // a->b->c shares only direction (1); petrify->stone scores 4
        assert!((d.probs()[1] - 0.8).abs() < 1e-12);
    }
}
