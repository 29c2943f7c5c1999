//! Text to subgraph: tokenization, greedy span matching against KG node
//! names, and undirected k-hop neighbourhood extraction.

use std::collections::VecDeque;

use crate::kg::{KnowledgeGraph, NodeId, Triple};

/// Reserved token joining the two halves of a sentence pair.
pub const SEPARATOR: &str = "[SEP]";
/// `SEPARATOR` as it appears after tokenization.
pub const SEPARATOR_TOKEN: &str = "[sep]";

pub const DEFAULT_MAX_SPAN: usize = 3;
pub const DEFAULT_HOP_THRESHOLD: usize = 2;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenizedText {
    pub original: String,
    pub tokens: Vec<String>,
}

impl TokenizedText {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Lowercases, splits on whitespace and strips ASCII punctuation from both
/// ends of each piece. The pair separator survives as [`SEPARATOR_TOKEN`].
pub fn tokenize(text: &str) -> TokenizedText {
    let tokens = text
        .split_whitespace()
        .filter_map(|piece| {
            if piece.eq_ignore_ascii_case(SEPARATOR) {
                return Some(SEPARATOR_TOKEN.to_string());
            }
            let stripped = piece.trim_matches(|c: char| c.is_ascii_punctuation());
            (!stripped.is_empty()).then(|| stripped.to_lowercase())
        })
        .collect();
    TokenizedText {
        original: text.to_string(),
        tokens,
    }
}

/// A KG node found in the text, covering tokens `start..end`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EntityMatch {
    pub node: NodeId,
    pub start: usize,
    pub end: usize,
}

/// Greedy longest match, left to right, spans of at most `max_span` tokens
/// joined with `_`. Spans never include the pair separator.
pub fn match_entities(text: &TokenizedText, kg: &KnowledgeGraph, max_span: usize) -> Vec<EntityMatch> {
    let tokens = &text.tokens;
    let mut matches = Vec::new();
    let mut pos = 0;
    while pos < tokens.len() {
        let longest = max_span.max(1).min(tokens.len() - pos);
        let mut hit = None;
        for len in (1..=longest).rev() {
            let span = &tokens[pos..pos + len];
            if span.iter().any(|t| t == SEPARATOR_TOKEN) {
                continue;
            }
            if let Some(node) = kg.node_id(&span.join("_")) {
                hit = Some(EntityMatch {
                    node,
                    start: pos,
                    end: pos + len,
                });
                break;
            }
        }
        match hit {
            Some(m) => {
                pos = m.end;
                matches.push(m);
            }
            None => pos += 1,
        }
    }
    matches
}

/// KG neighbourhood of a set of seed entities.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Subgraph {
    /// Sorted, deduplicated.
    pub seeds: Vec<NodeId>,
    /// Sorted.
    pub nodes: Vec<NodeId>,
    /// Every KG triple with both endpoints in `nodes`, canonical order.
    pub triples: Vec<Triple>,
    pub hop_threshold: usize,
    /// Seeds that did not resolve to a node of the graph.
    pub dropped_seeds: usize,
}

impl Subgraph {
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn contains_node(&self, node: NodeId) -> bool {
        self.nodes.binary_search(&node).is_ok()
    }

    /// Triple-file text with a header naming the seeds and hop threshold.
    pub fn to_dump(&self, kg: &KnowledgeGraph) -> String {
        let seeds: Vec<&str> = self.seeds.iter().filter_map(|&s| kg.node_name(s)).collect();
        let mut out = format!(
            "# seeds: {}\n# hop_threshold: {}\n",
            seeds.join(" "),
            self.hop_threshold
        );
        for t in &self.triples {
            let (h, r, tl) = kg.named(t);
            out.push_str(&format!("{h}\t{r}\t{tl}\n"));
        }
        out
    }
}

/// All nodes within `hop_threshold` undirected hops of any seed, plus the
/// induced edges.
pub fn extract_subgraph(seeds: &[NodeId], kg: &KnowledgeGraph, hop_threshold: usize) -> Subgraph {
    let n = kg.num_nodes();
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    let mut valid = Vec::new();
    let mut dropped = 0;
    for &s in seeds {
        if s >= n {
            dropped += 1;
            continue;
        }
        valid.push(s);
        if dist[s] != 0 {
            dist[s] = 0;
            queue.push_back(s);
        }
    }
    valid.sort_unstable();
    valid.dedup();

    while let Some(u) = queue.pop_front() {
        if dist[u] == hop_threshold {
            continue;
        }
        for v in kg.neighbors(u) {
            if dist[v] == usize::MAX {
                dist[v] = dist[u] + 1;
                queue.push_back(v);
            }
        }
    }

    let nodes: Vec<NodeId> = (0..n).filter(|&i| dist[i] != usize::MAX).collect();
    let mut triples = Vec::new();
    for &u in &nodes {
        for &ti in kg.out_edges(u) {
            let t = kg.triples()[ti];
            if dist[t.tail] != usize::MAX {
                triples.push(t);
            }
        }
    }
    triples.sort_unstable();
    Subgraph {
        seeds: valid,
        nodes,
        triples,
        hop_threshold,
        dropped_seeds: dropped,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ExtractConfig {
    pub max_span: usize,
    pub hop_threshold: usize,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        ExtractConfig {
            max_span: DEFAULT_MAX_SPAN,
            hop_threshold: DEFAULT_HOP_THRESHOLD,
        }
    }
}

/// tokenize, match entities, extract.
pub fn pipeline_extract(text: &str, kg: &KnowledgeGraph, config: &ExtractConfig) -> Subgraph {
    let tokens = tokenize(text);
    extract_from_tokens(&tokens, kg, config)
}

pub fn extract_from_tokens(tokens: &TokenizedText, kg: &KnowledgeGraph, config: &ExtractConfig) -> Subgraph {
    let seeds: Vec<NodeId> = match_entities(tokens, kg, config.max_span)
        .into_iter()
        .map(|m| m.node)
        .collect();
    extract_subgraph(&seeds, kg, config.hop_threshold)
}
