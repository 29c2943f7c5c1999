use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::export_embeddings;
use crate::error::{Error, Result};
use crate::kg::{load_triples, KnowledgeGraph};
use crate::nlu::TokenVocab;
use crate::tensor::{grad_check, read_checkpoint, to_checkpoint_string, GradCheckReport, DEFAULT_EPSILON};

use super::config::RunConfig;
use super::data::TaskExample;
use super::model::{forward_batch_with, prepare, Prepared, RdrModel};
use super::train::{build_vocab, TrainOutcome};

pub const CHECKPOINT_FILE: &str = "checkpoint.tsv";
pub const VOCAB_FILE: &str = "vocab.txt";
pub const KG_SAMPLE_FILE: &str = "kg_sample.tsv";
pub const CONFIG_FILE: &str = "config.txt";
pub const LOSSES_FILE: &str = "losses.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const EMBEDDINGS_FILE: &str = "embeddings.tsv";

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

/// Writes everything needed to reload the model plus the loss reports.
pub fn save_run(dir: impl AsRef<Path>, outcome: &TrainOutcome, config: &RunConfig) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let model = &outcome.model;
    write(dir, CHECKPOINT_FILE, &to_checkpoint_string(&model.params))?;
    write(dir, VOCAB_FILE, &model.vocab.to_lines())?;
    write(dir, KG_SAMPLE_FILE, &model.kg.to_tsv())?;
    write(dir, CONFIG_FILE, &config.to_kv())?;
    write(dir, LOSSES_FILE, &outcome.report.to_csv())?;
    write(dir, REPORT_FILE, &outcome.report.to_kv())?;
    let emb = export_embeddings(&model.graph, &model.params, &model.kg)?;
    write(dir, EMBEDDINGS_FILE, &to_checkpoint_string(&emb))
}

/// Rebuilds a model saved by [`save_run`].
pub fn load_run(dir: impl AsRef<Path>) -> Result<(RdrModel, RunConfig)> {
    let dir = dir.as_ref();
    let config = RunConfig::load(dir.join(CONFIG_FILE))?;
    let vocab_path = dir.join(VOCAB_FILE);
    let vocab_text = fs::read_to_string(&vocab_path).map_err(|e| Error::io(&vocab_path, e))?;
    let vocab = TokenVocab::from_lines(&vocab_text);
    let (kg, _) = load_triples(dir.join(KG_SAMPLE_FILE), false)?;
    let params = read_checkpoint(dir.join(CHECKPOINT_FILE))?;
    let model = RdrModel::init(vocab, kg, &config)?.with_params(params)?;
    Ok((model, config))
}

/// Finite-difference check of the configured batch objective over every
/// parameter of a freshly initialized model. The KG is sampled as in
/// training and GEL corruptions are redrawn from `config.model_seed` on
/// every evaluation.
pub fn gradcheck_pipeline(batch: &[TaskExample], kg: &KnowledgeGraph, config: &RunConfig) -> Result<GradCheckReport> {
    config.validate()?;
    let sample = kg.sample_fraction(config.kg_fraction, config.kg_seed)?;
    let model = RdrModel::init(build_vocab(batch, &[]), sample, config)?;
    let prepared = batch
        .iter()
        .map(|e| prepare(&model, e, config))
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&Prepared> = prepared.iter().collect();
    grad_check(
        |tape, params| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.model_seed);
            Ok(forward_batch_with(tape, &model, params, &refs, config, &mut rng)?.objective)
        },
        &model.params,
        DEFAULT_EPSILON,
    )
}
