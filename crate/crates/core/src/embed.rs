//! Translation-based graph embeddings and the link-prediction machinery
//! built on them.
//!
//! A triple `(h, r, t)` scores `||h + r - t||`; lower is more plausible.
//! Training minimizes a margin ranking loss against corrupted triples drawn
//! from the same subgraph. Ranking metrics (MRR, hits@k) and the
//! distance-threshold link predictor are evaluation-only.

use std::collections::BTreeMap;

use rand::Rng;

use crate::error::{Error, Result};
use crate::kg::{KnowledgeGraph, NodeId, Triple};
use crate::subgraph::Subgraph;
use crate::tensor::{ParamRegistry, Tape, Tensor, Var};

pub const NODES_PARAM: &str = "graph.nodes";
pub const RELATIONS_PARAM: &str = "graph.relations";

pub const DEFAULT_DIM: usize = 16;
pub const DEFAULT_MARGIN: f64 = 1.0;
pub const DEFAULT_NEGATIVES: usize = 4;

/// Shape information for the node and relation tables stored in a
/// [`ParamRegistry`] under [`NODES_PARAM`] and [`RELATIONS_PARAM`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphEmbeddingModel {
    pub dim: usize,
    pub num_nodes: usize,
    pub num_relations: usize,
}

impl GraphEmbeddingModel {
    /// Registers freshly initialized tables sized for `kg`.
    pub fn init<R: Rng + ?Sized>(
        registry: &mut ParamRegistry,
        kg: &KnowledgeGraph,
        dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        let model = GraphEmbeddingModel {
            dim,
            num_nodes: kg.num_nodes(),
            num_relations: kg.num_relations(),
        };
        registry.insert_uniform(NODES_PARAM, vec![model.num_nodes, dim], rng)?;
        registry.insert_uniform(RELATIONS_PARAM, vec![model.num_relations, dim], rng)?;
        Ok(model)
    }

    pub fn node_vec<'a>(&self, params: &'a ParamRegistry, node: NodeId) -> Result<&'a [f64]> {
        if node >= self.num_nodes {
            return Err(Error::Lookup(format!("node id {node}")));
        }
        Ok(params.require(NODES_PARAM)?.row(node))
    }

    pub fn relation_vec<'a>(&self, params: &'a ParamRegistry, rel: usize) -> Result<&'a [f64]> {
        if rel >= self.num_relations {
            return Err(Error::Lookup(format!("relation id {rel}")));
        }
        Ok(params.require(RELATIONS_PARAM)?.row(rel))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkPredConfig {
    /// Closeness threshold; `None` means the median pairwise distance of the
    /// subgraph being evaluated.
    pub tau: Option<f64>,
    pub margin: f64,
    pub negatives_per_positive: usize,
    pub hits_k: Vec<usize>,
}

impl Default for LinkPredConfig {
    fn default() -> Self {
        LinkPredConfig {
            tau: None,
            margin: DEFAULT_MARGIN,
            negatives_per_positive: DEFAULT_NEGATIVES,
            hits_k: vec![1, 3, 10],
        }
    }
}

impl LinkPredConfig {
    pub fn validate(&self) -> Result<()> {
        if let Some(tau) = self.tau {
            if tau.is_nan() || tau < 0.0 {
                return Err(Error::Argument(format!("tau must be >= 0, got {tau}")));
            }
        }
        if self.margin.is_nan() || self.margin <= 0.0 {
            return Err(Error::Argument(format!("margin must be > 0, got {}", self.margin)));
        }
        if self.negatives_per_positive == 0 {
            return Err(Error::Argument("negatives_per_positive must be >= 1".into()));
        }
        Ok(())
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// `||h + r - t||_2` from the current parameter values.
pub fn transe_score(model: &GraphEmbeddingModel, params: &ParamRegistry, triple: &Triple) -> Result<f64> {
    let h = model.node_vec(params, triple.head)?;
    let r = model.relation_vec(params, triple.relation)?;
    let t = model.node_vec(params, triple.tail)?;
    Ok(h.iter()
        .zip(r)
        .zip(t)
        .map(|((h, r), t)| {
            let d = h + r - t;
            d * d
        })
        .sum::<f64>()
        .sqrt())
}

/// Differentiable scores for a batch of triples, as an `m x 1` column.
pub fn transe_scores(
    tape: &mut Tape,
    model: &GraphEmbeddingModel,
    params: &ParamRegistry,
    triples: &[Triple],
) -> Result<Var> {
    for t in triples {
        if t.head >= model.num_nodes || t.tail >= model.num_nodes {
            return Err(Error::Lookup(format!("node id in {t:?}")));
        }
        if t.relation >= model.num_relations {
            return Err(Error::Lookup(format!("relation id in {t:?}")));
        }
    }
    let nodes = tape.param(params, NODES_PARAM)?;
    let rels = tape.param(params, RELATIONS_PARAM)?;
    let heads: Vec<usize> = triples.iter().map(|t| t.head).collect();
    let rel_ix: Vec<usize> = triples.iter().map(|t| t.relation).collect();
    let tails: Vec<usize> = triples.iter().map(|t| t.tail).collect();
    let h = tape.gather(nodes, &heads)?;
    let r = tape.gather(rels, &rel_ix)?;
    let t = tape.gather(nodes, &tails)?;
    let hr = tape.add(h, r)?;
    let diff = tape.sub(hr, t)?;
    Ok(tape.row_norm(diff))
}

/// Mean node embedding of the subgraph as a `1 x D` row; zeros when empty.
pub fn aggregate(tape: &mut Tape, model: &GraphEmbeddingModel, params: &ParamRegistry, sub: &Subgraph) -> Result<Var> {
    if sub.is_empty() {
        return Ok(tape.constant(Tensor::zeros(vec![1, model.dim])));
    }
    if let Some(&bad) = sub.nodes.iter().find(|&&n| n >= model.num_nodes) {
        return Err(Error::Lookup(format!("node id {bad}")));
    }
    let nodes = tape.param(params, NODES_PARAM)?;
    let rows = tape.gather(nodes, &sub.nodes)?;
    Ok(tape.mean_rows(rows))
}

/// Unordered pairs `(i, j)`, `i < j`, of subgraph nodes whose embeddings lie
/// within `tau` of each other.
pub fn predict_links(
    model: &GraphEmbeddingModel,
    params: &ParamRegistry,
    sub: &Subgraph,
    tau: f64,
) -> Result<Vec<(NodeId, NodeId)>> {
    let mut edges = Vec::new();
    for (a, &i) in sub.nodes.iter().enumerate() {
        let vi = model.node_vec(params, i)?;
        for &j in &sub.nodes[a + 1..] {
            if distance(vi, model.node_vec(params, j)?) <= tau {
                edges.push((i, j));
            }
        }
    }
    Ok(edges)
}

/// Median of all pairwise node distances in the subgraph.
pub fn median_pairwise_distance(
    model: &GraphEmbeddingModel,
    params: &ParamRegistry,
    sub: &Subgraph,
) -> Result<Option<f64>> {
    let mut d = Vec::new();
    for (a, &i) in sub.nodes.iter().enumerate() {
        let vi = model.node_vec(params, i)?;
        for &j in &sub.nodes[a + 1..] {
            d.push(distance(vi, model.node_vec(params, j)?));
        }
    }
    if d.is_empty() {
        return Ok(None);
    }
    d.sort_by(f64::total_cmp);
    let mid = d.len() / 2;
    Ok(Some(if d.len() % 2 == 1 {
        d[mid]
    } else {
        (d[mid - 1] + d[mid]) / 2.0
    }))
}

#[derive(Clone, Debug, PartialEq)]
pub struct LinkMetrics {
    pub mrr: f64,
    pub hits_at_k: BTreeMap<usize, f64>,
    /// 1-based rank of the true tail for each subgraph triple.
    pub ranks: Vec<usize>,
    pub tau: f64,
    pub predicted_edges: Vec<(NodeId, NodeId)>,
}

/// Rank of `triple.tail` among `candidates` by ascending score, ties going
/// to the lower node id.
pub fn tail_rank(
    model: &GraphEmbeddingModel,
    params: &ParamRegistry,
    triple: &Triple,
    candidates: &[NodeId],
) -> Result<usize> {
    let true_score = transe_score(model, params, triple)?;
    let mut rank = 1;
    for &c in candidates {
        if c == triple.tail {
            continue;
        }
        let s = transe_score(model, params, &Triple { tail: c, ..*triple })?;
        if s < true_score || (s == true_score && c < triple.tail) {
            rank += 1;
        }
    }
    Ok(rank)
}

/// Tail-prediction ranking over the subgraph's own triples, plus the
/// threshold link prediction.
pub fn link_metrics(
    model: &GraphEmbeddingModel,
    params: &ParamRegistry,
    sub: &Subgraph,
    config: &LinkPredConfig,
) -> Result<LinkMetrics> {
    if sub.triples.is_empty() || sub.nodes.len() < 2 {
        return Err(Error::Metrics(format!(
            "subgraph with {} nodes and {} triples",
            sub.nodes.len(),
            sub.triples.len()
        )));
    }
    let ranks = sub
        .triples
        .iter()
        .map(|t| tail_rank(model, params, t, &sub.nodes))
        .collect::<Result<Vec<_>>>()?;
    let n = ranks.len() as f64;
    let mrr = ranks.iter().map(|&r| 1.0 / r as f64).sum::<f64>() / n;
    let hits_at_k = config
        .hits_k
        .iter()
        .map(|&k| (k, ranks.iter().filter(|&&r| r <= k).count() as f64 / n))
        .collect();
    let tau = match config.tau {
        Some(t) => t,
        None => median_pairwise_distance(model, params, sub)?.unwrap_or(0.0),
    };
    let predicted_edges = predict_links(model, params, sub, tau)?;
    Ok(LinkMetrics {
        mrr,
        hits_at_k,
        ranks,
        tau,
        predicted_edges,
    })
}

/// A true triple paired with one corruption of it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Corruption {
    pub positive: Triple,
    pub negative: Triple,
}

/// For every triple, `negatives_per_positive` corruptions replacing the head
/// or the tail (fair coin) with a different subgraph node chosen uniformly.
pub fn sample_corruptions<R: Rng + ?Sized>(sub: &Subgraph, config: &LinkPredConfig, rng: &mut R) -> Vec<Corruption> {
    let mut out = Vec::with_capacity(sub.triples.len() * config.negatives_per_positive);
    if sub.nodes.len() < 2 {
        return out;
    }
    let pick_other = |rng: &mut R, exclude: NodeId| -> NodeId {
        let n = sub.nodes.len();
        match sub.nodes.binary_search(&exclude) {
            Ok(pos) => {
                let k = rng.gen_range(0..n - 1);
                sub.nodes[if k >= pos { k + 1 } else { k }]
            }
            Err(_) => sub.nodes[rng.gen_range(0..n)],
        }
    };
    for &t in &sub.triples {
        for _ in 0..config.negatives_per_positive {
            let negative = if rng.gen_bool(0.5) {
                Triple {
                    head: pick_other(rng, t.head),
                    ..t
                }
            } else {
                Triple {
                    tail: pick_other(rng, t.tail),
                    ..t
                }
            };
            out.push(Corruption { positive: t, negative });
        }
    }
    out
}

/// Margin ranking loss `mean max(0, margin + s(pos) - s(neg))` over the given
/// pairs; zero when there are none.
pub fn margin_loss(
    tape: &mut Tape,
    model: &GraphEmbeddingModel,
    params: &ParamRegistry,
    pairs: &[Corruption],
    margin: f64,
) -> Result<Var> {
    if pairs.is_empty() {
        return Ok(tape.constant(Tensor::scalar(0.0)));
    }
    let pos: Vec<Triple> = pairs.iter().map(|c| c.positive).collect();
    let neg: Vec<Triple> = pairs.iter().map(|c| c.negative).collect();
    let sp = transe_scores(tape, model, params, &pos)?;
    let sn = transe_scores(tape, model, params, &neg)?;
    let gap = tape.sub(sp, sn)?;
    let shifted = tape.add_scalar(gap, margin);
    let hinge = tape.relu(shifted);
    Ok(tape.mean(hinge))
}

/// The graph-embedding loss for one subgraph: corruptions are drawn from
/// `rng`, then scored with [`margin_loss`].
pub fn gel_loss<R: Rng + ?Sized>(
    tape: &mut Tape,
    model: &GraphEmbeddingModel,
    params: &ParamRegistry,
    sub: &Subgraph,
    config: &LinkPredConfig,
    rng: &mut R,
) -> Result<Var> {
    let pairs = sample_corruptions(sub, config, rng);
    margin_loss(tape, model, params, &pairs, config.margin)
}

/// One parameter per node (`node:<name>`) and relation (`relation:<name>`),
/// for writing with the checkpoint format.
pub fn export_embeddings(
    model: &GraphEmbeddingModel,
    params: &ParamRegistry,
    kg: &KnowledgeGraph,
) -> Result<ParamRegistry> {
    let mut out = ParamRegistry::new();
    for (id, name) in kg.nodes().iter().enumerate() {
        let v = model.node_vec(params, id)?.to_vec();
        out.insert(format!("node:{name}"), Tensor::vector(v))?;
    }
    for (id, name) in kg.relations().iter().enumerate() {
        let v = model.relation_vec(params, id)?.to_vec();
        out.insert(format!("relation:{name}"), Tensor::vector(v))?;
    }
    Ok(out)
}
