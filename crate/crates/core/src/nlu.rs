//! The text side of the pipeline: a per-position reconstruction model whose
//! pooled hidden state is the text embedding, and the fusion head that
//! classifies from text and graph embeddings together.

use std::collections::{BTreeSet, HashMap};

use rand::Rng;

use crate::error::{Error, Result};
use crate::subgraph::TokenizedText;
use crate::tensor::{ParamRegistry, Tape, Targets, Var};

pub const UNKNOWN_TOKEN: &str = "<unk>";

pub const EMBED_PARAM: &str = "recap.embed";
pub const HIDDEN_W_PARAM: &str = "recap.hidden_w";
pub const HIDDEN_B_PARAM: &str = "recap.hidden_b";
pub const OUT_W_PARAM: &str = "recap.out_w";
pub const OUT_B_PARAM: &str = "recap.out_b";
pub const HEAD_W_PARAM: &str = "head.weight";
pub const HEAD_B_PARAM: &str = "head.bias";

/// Token strings to ids. Id 0 is always [`UNKNOWN_TOKEN`]; the rest follow
/// sorted order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenVocab {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
}

impl TokenVocab {
    pub fn build<'a>(texts: impl IntoIterator<Item = &'a TokenizedText>) -> Self {
        let set: BTreeSet<&str> = texts
            .into_iter()
            .flat_map(|t| t.tokens.iter().map(String::as_str))
            .filter(|t| *t != UNKNOWN_TOKEN)
            .collect();
        Self::from_tokens(set.into_iter().map(str::to_string))
    }

    /// From the token list after id 0, in id order.
    pub fn from_tokens(tokens: impl IntoIterator<Item = String>) -> Self {
        let mut all = vec![UNKNOWN_TOKEN.to_string()];
        all.extend(tokens.into_iter().filter(|t| t != UNKNOWN_TOKEN));
        let index = all.iter().enumerate().map(|(i, t)| (t.clone(), i)).collect();
        TokenVocab { tokens: all, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    /// Unknown tokens map to id 0.
    pub fn encode(&self, text: &TokenizedText) -> Vec<usize> {
        text.tokens.iter().map(|t| self.id(t).unwrap_or(0)).collect()
    }

    /// One token per line, skipping the implicit unknown token.
    pub fn to_lines(&self) -> String {
        self.tokens[1..].iter().map(|t| format!("{t}\n")).collect()
    }

    pub fn from_lines(text: &str) -> Self {
        Self::from_tokens(text.lines().filter(|l| !l.is_empty()).map(str::to_string))
    }
}

/// Embedding -> tanh hidden layer -> vocabulary logits, applied per position.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RecapModel {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub hidden_dim: usize,
}

pub struct RecapOutput {
    /// `n x V`
    pub logits: Var,
    /// `1 x H` mean of the hidden states.
    pub pooled: Var,
}

impl RecapModel {
    pub fn init<R: Rng + ?Sized>(
        registry: &mut ParamRegistry,
        vocab_size: usize,
        embed_dim: usize,
        hidden_dim: usize,
        rng: &mut R,
    ) -> Result<Self> {
        registry.insert_uniform(EMBED_PARAM, vec![vocab_size, embed_dim], rng)?;
        registry.insert_uniform(HIDDEN_W_PARAM, vec![embed_dim, hidden_dim], rng)?;
        registry.insert_uniform(HIDDEN_B_PARAM, vec![hidden_dim], rng)?;
        registry.insert_uniform(OUT_W_PARAM, vec![hidden_dim, vocab_size], rng)?;
        registry.insert_uniform(OUT_B_PARAM, vec![vocab_size], rng)?;
        Ok(RecapModel {
            vocab_size,
            embed_dim,
            hidden_dim,
        })
    }
}

pub fn recap_forward(
    tape: &mut Tape,
    model: &RecapModel,
    params: &ParamRegistry,
    ids: &[usize],
) -> Result<RecapOutput> {
    if let Some(&id) = ids.iter().find(|&&id| id >= model.vocab_size) {
        return Err(Error::Vocabulary {
            id,
            size: model.vocab_size,
        });
    }
    let embed = tape.param(params, EMBED_PARAM)?;
    let w1 = tape.param(params, HIDDEN_W_PARAM)?;
    let b1 = tape.param(params, HIDDEN_B_PARAM)?;
    let w2 = tape.param(params, OUT_W_PARAM)?;
    let b2 = tape.param(params, OUT_B_PARAM)?;
    let x = tape.gather(embed, ids)?;
    let pre = tape.matmul(x, w1)?;
    let pre = tape.add_row(pre, b1)?;
    let hidden = tape.tanh(pre);
    let pooled = tape.mean_rows(hidden);
    let logits = tape.matmul(hidden, w2)?;
    let logits = tape.add_row(logits, b2)?;
    Ok(RecapOutput { logits, pooled })
}

/// Mean per-position cross-entropy of the logits against the input's own
/// tokens. Zero for an empty input.
pub fn pl_loss(tape: &mut Tape, logits: Var, ids: &[usize]) -> Result<Var> {
    let (rows, _) = tape.value(logits).dims2();
    if rows != ids.len() {
        return Err(Error::dim("pl_loss", tape.shape(logits), &[ids.len()]));
    }
    if ids.is_empty() {
        return Ok(tape.constant(crate::tensor::Tensor::scalar(0.0)));
    }
    tape.softmax_cross_entropy(logits, &Targets::Indices(ids.to_vec()))
}

/// Affine classifier over `concat(text embedding, graph embedding)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FusionHead {
    pub text_dim: usize,
    pub graph_dim: usize,
    pub classes: usize,
}

impl FusionHead {
    pub fn init<R: Rng + ?Sized>(
        registry: &mut ParamRegistry,
        text_dim: usize,
        graph_dim: usize,
        classes: usize,
        rng: &mut R,
    ) -> Result<Self> {
        registry.insert_uniform(HEAD_W_PARAM, vec![text_dim + graph_dim, classes], rng)?;
        registry.insert_uniform(HEAD_B_PARAM, vec![classes], rng)?;
        Ok(FusionHead {
            text_dim,
            graph_dim,
            classes,
        })
    }

    pub fn input_dim(&self) -> usize {
        self.text_dim + self.graph_dim
    }
}

/// `z = concat(pooled, e_x) W + b`, a `1 x C` row.
pub fn fuse_and_classify(
    tape: &mut Tape,
    head: &FusionHead,
    params: &ParamRegistry,
    pooled: Var,
    graph: Var,
) -> Result<Var> {
    let h = tape.value(pooled).len();
    let d = tape.value(graph).len();
    if h != head.text_dim || d != head.graph_dim {
        return Err(Error::Dimension {
            op: "fuse_and_classify (text, graph) vs head (text, graph, input)",
            left: vec![h, d],
            right: vec![head.text_dim, head.graph_dim, head.input_dim()],
        });
    }
    let w = tape.param(params, HEAD_W_PARAM)?;
    let b = tape.param(params, HEAD_B_PARAM)?;
    let joined = tape.concat_cols(pooled, graph)?;
    let z = tape.matmul(joined, w)?;
    tape.add_row(z, b)
}

/// Cross-entropy of logits `z` against class `y`.
pub fn rl_loss(tape: &mut Tape, z: Var, y: usize) -> Result<Var> {
    tape.softmax_cross_entropy(z, &Targets::Indices(vec![y]))
}
