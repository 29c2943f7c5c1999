use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::{aggregate, gel_loss, GraphEmbeddingModel};
use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::nlu::{fuse_and_classify, pl_loss, recap_forward, rl_loss, FusionHead, RecapModel, TokenVocab};
use crate::subgraph::{extract_from_tokens, tokenize, Subgraph};
use crate::tensor::{ParamRegistry, Tape, Var};

use super::config::{LossWeights, RunConfig};
use super::data::TaskExample;

/// Recap model, graph embeddings and fusion head sharing one registry,
/// together with the vocabulary and KG sample they are indexed by.
#[derive(Clone, Debug, PartialEq)]
pub struct RdrModel {
    pub vocab: TokenVocab,
    pub kg: KnowledgeGraph,
    pub recap: RecapModel,
    pub graph: GraphEmbeddingModel,
    pub head: FusionHead,
    pub params: ParamRegistry,
}

impl RdrModel {
    /// Seeded initialization; parameters are drawn recap, graph, head in that
    /// order from one stream.
    pub fn init(vocab: TokenVocab, kg: KnowledgeGraph, config: &RunConfig) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(config.model_seed);
        let mut params = ParamRegistry::new();
        let recap = RecapModel::init(&mut params, vocab.len(), config.embed_dim, config.hidden_dim, &mut rng)?;
        let graph = GraphEmbeddingModel::init(&mut params, &kg, config.graph_dim, &mut rng)?;
        let head = FusionHead::init(
            &mut params,
            config.hidden_dim,
            config.graph_dim,
            config.num_classes,
            &mut rng,
        )?;
        Ok(RdrModel {
            vocab,
            kg,
            recap,
            graph,
            head,
            params,
        })
    }

    /// Swaps in loaded parameters after checking every tensor's shape.
    pub fn with_params(mut self, params: ParamRegistry) -> Result<Self> {
        for (name, t) in self.params.iter() {
            let loaded = params.require(name)?;
            if loaded.shape() != t.shape() {
                return Err(Error::dim("checkpoint", t.shape(), loaded.shape()));
            }
        }
        if params.len() != self.params.len() {
            return Err(Error::Argument(format!(
                "checkpoint has {} parameters, model expects {}",
                params.len(),
                self.params.len()
            )));
        }
        self.params = params;
        Ok(self)
    }
}

/// An example prepared for repeated forward passes.
#[derive(Clone, Debug, PartialEq)]
pub struct Prepared {
    pub ids: Vec<usize>,
    pub subgraph: Subgraph,
    pub label: usize,
}

pub fn prepare(model: &RdrModel, example: &TaskExample, config: &RunConfig) -> Result<Prepared> {
    if example.label >= config.num_classes {
        return Err(Error::Target {
            target: example.label,
            classes: config.num_classes,
        });
    }
    let tokens = tokenize(&example.text);
    Ok(Prepared {
        ids: model.vocab.encode(&tokens),
        subgraph: extract_from_tokens(&tokens, &model.kg, &config.extract()),
        label: example.label,
    })
}

/// Extracts context from `context_kg` and maps it onto the model's own node
/// ids by name. Nodes and triples the model has no embedding for are dropped.
pub fn prepare_with_context(
    model: &RdrModel,
    example: &TaskExample,
    config: &RunConfig,
    context_kg: &KnowledgeGraph,
) -> Result<Prepared> {
    let mut p = prepare(model, example, config)?;
    let tokens = tokenize(&example.text);
    let sub = extract_from_tokens(&tokens, context_kg, &config.extract());
    let map_node = |n: usize| context_kg.node_name(n).and_then(|s| model.kg.node_id(s));
    let mut nodes: Vec<usize> = sub.nodes.iter().filter_map(|&n| map_node(n)).collect();
    nodes.sort_unstable();
    let mut seeds: Vec<usize> = sub.seeds.iter().filter_map(|&n| map_node(n)).collect();
    seeds.sort_unstable();
    let mut triples: Vec<_> = sub
        .triples
        .iter()
        .filter_map(|t| {
            let head = map_node(t.head)?;
            let tail = map_node(t.tail)?;
            let relation = model.kg.relation_id(context_kg.relation_name(t.relation)?)?;
            Some(crate::kg::Triple { head, relation, tail })
        })
        .collect();
    triples.sort_unstable();
    p.subgraph = Subgraph {
        dropped_seeds: sub.seeds.len() - seeds.len(),
        seeds,
        nodes,
        triples,
        hop_threshold: sub.hop_threshold,
    };
    Ok(p)
}

/// Recorded outputs of one forward pass.
#[derive(Clone, Copy, Debug)]
pub struct Forward {
    /// `1 x C` logits.
    pub z: Var,
    pub pl: Var,
    pub gel: Var,
    pub rl: Var,
    /// Objective handed to the optimizer.
    pub objective: Var,
}

/// The per-example computation shared by both modes. `rng` drives the GEL
/// corruptions; it is consumed identically whatever the loss weights are.
fn forward_components<R: Rng + ?Sized>(
    tape: &mut Tape,
    model: &RdrModel,
    params: &ParamRegistry,
    example: &Prepared,
    config: &RunConfig,
    rng: &mut R,
) -> Result<(Var, Var, Var, Var)> {
    let recap = recap_forward(tape, &model.recap, params, &example.ids)?;
    let pl = pl_loss(tape, recap.logits, &example.ids)?;
    let e_x = aggregate(tape, &model.graph, params, &example.subgraph)?;
    let gel = gel_loss(tape, &model.graph, params, &example.subgraph, &config.link, rng)?;
    let z = fuse_and_classify(tape, &model.head, params, recap.pooled, e_x)?;
    let rl = rl_loss(tape, z, example.label)?;
    Ok((z, pl, gel, rl))
}

/// `w_pl*PL + w_gel*GEL + w_rl*RL` on the tape, left to right.
pub fn weighted_total(tape: &mut Tape, weights: &LossWeights, pl: Var, gel: Var, rl: Var) -> Result<Var> {
    let a = tape.scale(pl, weights.pl);
    let b = tape.scale(gel, weights.gel);
    let ab = tape.add(a, b)?;
    let c = tape.scale(rl, weights.rl);
    tape.add(ab, c)
}

/// All three losses, weighted by `config.weights`.
pub fn forward_rdr<R: Rng + ?Sized>(
    tape: &mut Tape,
    model: &RdrModel,
    example: &Prepared,
    config: &RunConfig,
    rng: &mut R,
) -> Result<Forward> {
    let (z, pl, gel, rl) = forward_components(tape, model, &model.params, example, config, rng)?;
    let objective = weighted_total(tape, &config.weights, pl, gel, rl)?;
    Ok(Forward {
        z,
        pl,
        gel,
        rl,
        objective,
    })
}

/// Same graph as [`forward_rdr`], but PL and GEL carry zero weight.
pub fn forward_baseline<R: Rng + ?Sized>(
    tape: &mut Tape,
    model: &RdrModel,
    example: &Prepared,
    config: &RunConfig,
    rng: &mut R,
) -> Result<Forward> {
    let (z, pl, gel, rl) = forward_components(tape, model, &model.params, example, config, rng)?;
    let weights = LossWeights {
        pl: 0.0,
        gel: 0.0,
        rl: config.weights.rl,
    };
    let objective = weighted_total(tape, &weights, pl, gel, rl)?;
    Ok(Forward {
        z,
        pl,
        gel,
        rl,
        objective,
    })
}

/// Batch means of each component and the weighted objective.
#[derive(Clone, Copy, Debug)]
pub struct BatchForward {
    pub pl: Var,
    pub gel: Var,
    pub rl: Var,
    pub objective: Var,
}

/// Runs the configured mode over a batch and reduces every component by its
/// mean over examples.
pub fn forward_batch<R: Rng + ?Sized>(
    tape: &mut Tape,
    model: &RdrModel,
    batch: &[&Prepared],
    config: &RunConfig,
    rng: &mut R,
) -> Result<BatchForward> {
    forward_batch_with(tape, model, &model.params, batch, config, rng)
}

/// [`forward_batch`] reading parameter values from `params` instead of the
/// model's own registry.
pub fn forward_batch_with<R: Rng + ?Sized>(
    tape: &mut Tape,
    model: &RdrModel,
    params: &ParamRegistry,
    batch: &[&Prepared],
    config: &RunConfig,
    rng: &mut R,
) -> Result<BatchForward> {
    if batch.is_empty() {
        return Err(Error::Argument("empty batch".into()));
    }
    let mut sums: Option<(Var, Var, Var)> = None;
    for ex in batch {
        let (_, pl, gel, rl) = forward_components(tape, model, params, ex, config, rng)?;
        sums = Some(match sums {
            None => (pl, gel, rl),
            Some((a, b, c)) => (tape.add(a, pl)?, tape.add(b, gel)?, tape.add(c, rl)?),
        });
    }
    let (pl, gel, rl) = sums.expect("batch is non-empty");
    let inv = 1.0 / batch.len() as f64;
    let pl = tape.scale(pl, inv);
    let gel = tape.scale(gel, inv);
    let rl = tape.scale(rl, inv);
    let objective = weighted_total(tape, &config.effective_weights(), pl, gel, rl)?;
    Ok(BatchForward { pl, gel, rl, objective })
}

/// Logits for one example with no loss bookkeeping beyond the tape.
pub fn predict(model: &RdrModel, example: &Prepared) -> Result<Vec<f64>> {
    let mut tape = Tape::new();
    let recap = recap_forward(&mut tape, &model.recap, &model.params, &example.ids)?;
    let e_x = aggregate(&mut tape, &model.graph, &model.params, &example.subgraph)?;
    let z = fuse_and_classify(&mut tape, &model.head, &model.params, recap.pooled, e_x)?;
    Ok(tape.value(z).data().to_vec())
}
