//! Brute-force reference implementations shared by the integration tests.

#![allow(dead_code)]

use std::collections::BTreeSet;

use rand::Rng;
use rdr::embed::{GraphEmbeddingModel, NODES_PARAM, RELATIONS_PARAM};
use rdr::kg::{KnowledgeGraph, Triple};
use rdr::tensor::{ParamRegistry, Tensor};

pub const TEST_RELATIONS: [&str; 4] = ["IsA", "Synonym", "RelatedTo", "PartOf"];

/// Random graph over `v00..` with up to `max_nodes` nodes and at least two.
/// Isolated nodes are not representable, so the node count is whatever the
/// edges touch.
pub fn random_kg<R: Rng>(rng: &mut R, max_nodes: usize, max_edges: usize) -> KnowledgeGraph {
    let n = rng.gen_range(2..=max_nodes);
    let m = rng.gen_range(1..=max_edges);
    let triples: Vec<(String, &str, String)> = (0..m)
        .map(|k| {
            let h = rng.gen_range(0..n);
            let mut t = rng.gen_range(0..n);
            if k == 0 && t == h {
                t = (h + 1) % n;
            }
            let r = TEST_RELATIONS[rng.gen_range(0..TEST_RELATIONS.len())];
            (format!("v{h:02}"), r, format!("v{t:02}"))
        })
        .collect();
    KnowledgeGraph::from_triples(triples.iter().map(|(h, r, t)| (h.as_str(), *r, t.as_str())))
}

/// Undirected hop distances between every pair of nodes by repeated
/// relaxation over the triple list. `usize::MAX` marks unreachable.
pub fn all_pairs_hops(kg: &KnowledgeGraph) -> Vec<Vec<usize>> {
    let n = kg.num_nodes();
    let mut d = vec![vec![usize::MAX; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0;
    }
    for t in kg.triples() {
        if t.head != t.tail {
            d[t.head][t.tail] = 1;
            d[t.tail][t.head] = 1;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                if d[i][k] != usize::MAX && d[k][j] != usize::MAX && d[i][k] + d[k][j] < d[i][j] {
                    d[i][j] = d[i][k] + d[k][j];
                }
            }
        }
    }
    d
}

/// Nodes within `d` hops of any seed and every triple among them.
pub fn extraction_oracle(kg: &KnowledgeGraph, seeds: &[usize], d: usize) -> (BTreeSet<usize>, BTreeSet<Triple>) {
    let hops = all_pairs_hops(kg);
    let nodes: BTreeSet<usize> = (0..kg.num_nodes())
        .filter(|&v| seeds.iter().any(|&s| hops[s][v] <= d))
        .collect();
    let triples = kg
        .triples()
        .iter()
        .filter(|t| nodes.contains(&t.head) && nodes.contains(&t.tail))
        .copied()
        .collect();
    (nodes, triples)
}

/// Graph-embedding tables filled with values from `[-scale, scale)`.
pub fn random_model<R: Rng>(
    rng: &mut R,
    kg: &KnowledgeGraph,
    dim: usize,
    scale: f64,
) -> (GraphEmbeddingModel, ParamRegistry) {
    let mut p = ParamRegistry::new();
    p.insert(NODES_PARAM, Tensor::uniform(vec![kg.num_nodes(), dim], scale, rng))
        .unwrap();
    p.insert(
        RELATIONS_PARAM,
        Tensor::uniform(vec![kg.num_relations(), dim], scale, rng),
    )
    .unwrap();
    let m = GraphEmbeddingModel {
        dim,
        num_nodes: kg.num_nodes(),
        num_relations: kg.num_relations(),
    };
    (m, p)
}

fn row(p: &ParamRegistry, name: &str, i: usize, dim: usize) -> Vec<f64> {
    p.get(name).unwrap().data()[i * dim..(i + 1) * dim].to_vec()
}

pub fn euclid(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        s += (a[k] - b[k]) * (a[k] - b[k]);
    }
    s.sqrt()
}

pub fn oracle_score(m: &GraphEmbeddingModel, p: &ParamRegistry, h: usize, r: usize, t: usize) -> f64 {
    let hv = row(p, NODES_PARAM, h, m.dim);
    let rv = row(p, RELATIONS_PARAM, r, m.dim);
    let tv = row(p, NODES_PARAM, t, m.dim);
    let mut s = 0.0;
    for k in 0..m.dim {
        let x = hv[k] + rv[k] - tv[k];
        s += x * x;
    }
    s.sqrt()
}

/// Every unordered pair `{i, j}` of `nodes` within `tau`.
pub fn links_oracle(m: &GraphEmbeddingModel, p: &ParamRegistry, nodes: &[usize], tau: f64) -> BTreeSet<(usize, usize)> {
    let mut out = BTreeSet::new();
    for &i in nodes {
        for &j in nodes {
            if i < j && euclid(&row(p, NODES_PARAM, i, m.dim), &row(p, NODES_PARAM, j, m.dim)) <= tau {
                out.insert((i, j));
            }
        }
    }
    out
}

/// Ranks by sorting every candidate tail on `(score, id)`.
pub fn rank_oracle(m: &GraphEmbeddingModel, p: &ParamRegistry, triples: &[Triple], nodes: &[usize]) -> Vec<usize> {
    triples
        .iter()
        .map(|t| {
            let mut scored: Vec<(f64, usize)> = nodes
                .iter()
                .map(|&c| (oracle_score(m, p, t.head, t.relation, c), c))
                .collect();
            scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
            scored.iter().position(|&(_, c)| c == t.tail).unwrap() + 1
        })
        .collect()
}

/// `(mrr, hits@1, hits@3)` from ranks.
pub fn metrics_from_ranks(ranks: &[usize]) -> (f64, f64, f64) {
    let n = ranks.len() as f64;
    let mut rr = 0.0;
    for &r in ranks {
        rr += 1.0 / r as f64;
    }
    let hits = |k: usize| ranks.iter().filter(|&&r| r <= k).count() as f64 / n;
    (rr / n, hits(1), hits(3))
}

/// Whether `a` and `b` are joined by at most two Synonym/IsA edges,
/// direction ignored.
pub fn label_oracle(kg: &KnowledgeGraph, a: &str, b: &str) -> bool {
    let (Some(a), Some(b)) = (kg.node_id(a), kg.node_id(b)) else {
        return false;
    };
    let linked = |x: usize, y: usize| {
        kg.triples().iter().any(|t| {
            let rel = kg.relation_name(t.relation).unwrap();
            (rel == "Synonym" || rel == "IsA") && ((t.head == x && t.tail == y) || (t.head == y && t.tail == x))
        })
    };
    if a == b {
        return false;
    }
    linked(a, b) || (0..kg.num_nodes()).any(|c| c != a && c != b && linked(a, c) && linked(c, b))
}

/// Exactly `n` distinct triples over `nodes` nodes, as triple-file lines.
pub fn distinct_triple_lines<R: Rng>(rng: &mut R, n: usize, nodes: usize) -> Vec<String> {
    let mut set = BTreeSet::new();
    while set.len() < n {
        let h = rng.gen_range(0..nodes);
        let t = rng.gen_range(0..nodes);
        let r = TEST_RELATIONS[rng.gen_range(0..TEST_RELATIONS.len())];
        set.insert(format!("n{h:03}\t{r}\tn{t:03}"));
    }
    set.into_iter().collect()
}
