use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::embed::link_metrics;
use crate::error::{Error, Result};
use crate::kg::KnowledgeGraph;
use crate::nlu::TokenVocab;
use crate::subgraph::tokenize;
use crate::tensor::{sgd_step, Tape};

use super::config::{EvalKg, RunConfig};
use super::data::TaskExample;
use super::model::{forward_batch, predict, prepare, prepare_with_context, Prepared, RdrModel};
use super::report::{BatchReport, ClassCounts, Comparison, EpochReport, Evaluation, LossReport, SeedResult};

const SHUFFLE_STREAM: u64 = 0x9e37_79b9_7f4a_7c15;
const CORRUPTION_STREAM: u64 = 0xc2b2_ae3d_27d4_eb4f;

pub struct TrainOutcome {
    pub model: RdrModel,
    pub report: LossReport,
}

/// Vocabulary over every text the run will see.
pub fn build_vocab(train: &[TaskExample], eval: &[TaskExample]) -> TokenVocab {
    let tokens: Vec<_> = train.iter().chain(eval).map(|e| tokenize(&e.text)).collect();
    TokenVocab::build(tokens.iter())
}

pub fn train(
    train_set: &[TaskExample],
    eval_set: &[TaskExample],
    kg: &KnowledgeGraph,
    config: &RunConfig,
) -> Result<TrainOutcome> {
    train_with(train_set, eval_set, kg, config, |_, _| {})
}

/// [`train`] with a callback after every epoch (1-based epoch index).
pub fn train_with<F>(
    train_set: &[TaskExample],
    eval_set: &[TaskExample],
    kg: &KnowledgeGraph,
    config: &RunConfig,
    mut on_epoch: F,
) -> Result<TrainOutcome>
where
    F: FnMut(usize, &RdrModel),
{
    config.validate()?;
    if train_set.is_empty() {
        return Err(Error::Argument("training set is empty".into()));
    }
    let sample = kg.sample_fraction(config.kg_fraction, config.kg_seed)?;
    let vocab = build_vocab(train_set, eval_set);
    let mut model = RdrModel::init(vocab, sample, config)?;
    let prepared = train_set
        .iter()
        .map(|e| prepare(&model, e, config))
        .collect::<Result<Vec<_>>>()?;

    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(config.model_seed ^ SHUFFLE_STREAM);
    let mut corrupt_rng = ChaCha8Rng::seed_from_u64(config.model_seed ^ CORRUPTION_STREAM);
    let mut report = LossReport {
        model_seed: config.model_seed,
        kg_seed: config.kg_seed,
        ..LossReport::default()
    };
    let mut order: Vec<usize> = (0..prepared.len()).collect();
    let mut batch_index = 0;

    for epoch in 1..=config.epochs {
        order.shuffle(&mut shuffle_rng);
        let mut sums = [0.0f64; 4];
        let mut n_batches = 0usize;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch: Vec<&Prepared> = chunk.iter().map(|&i| &prepared[i]).collect();
            let mut tape = Tape::new();
            let out = forward_batch(&mut tape, &model, &batch, config, &mut corrupt_rng)?;
            let (pl, gel, rl) = (tape.item(out.pl), tape.item(out.gel), tape.item(out.rl));
            let objective = tape.item(out.objective);
            for (name, v) in [("PL", pl), ("GEL", gel), ("RL", rl), ("L", objective)] {
                if !v.is_finite() {
                    return Err(Error::NonFinite(format!("{name} at batch {batch_index}")));
                }
            }
            tape.backward_into(out.objective, &mut model.params)?;
            sgd_step(&mut model.params, config.learning_rate)?;

            let total = config.weights.combine(pl, gel, rl);
            for (s, v) in sums.iter_mut().zip([pl, gel, rl, total]) {
                *s += v;
            }
            n_batches += 1;
            report.batches.push(BatchReport {
                epoch,
                batch: b,
                pl,
                gel,
                rl,
                objective,
                total,
            });
            batch_index += 1;
        }
        let n = n_batches as f64;
        let accuracy = if eval_set.is_empty() {
            evaluate(&model, train_set, config, None)?.accuracy
        } else {
            evaluate(&model, eval_set, config, None)?.accuracy
        };
        let (mrr, hits_at_k) = mean_link_metrics(&model, &prepared, config)?;
        report.epochs.push(EpochReport {
            epoch,
            pl: sums[0] / n,
            gel: sums[1] / n,
            rl: sums[2] / n,
            total: sums[3] / n,
            accuracy,
            mrr,
            hits_at_k,
        });
        on_epoch(epoch, &model);
    }
    Ok(TrainOutcome { model, report })
}

/// Link metrics averaged over every example subgraph that has at least one
/// triple and two nodes.
fn mean_link_metrics(
    model: &RdrModel,
    prepared: &[Prepared],
    config: &RunConfig,
) -> Result<(Option<f64>, BTreeMap<usize, f64>)> {
    let mut mrr = 0.0;
    let mut hits: BTreeMap<usize, f64> = BTreeMap::new();
    let mut count = 0usize;
    for p in prepared {
        if p.subgraph.triples.is_empty() || p.subgraph.nodes.len() < 2 {
            continue;
        }
        let m = link_metrics(&model.graph, &model.params, &p.subgraph, &config.link)?;
        mrr += m.mrr;
        for (k, v) in m.hits_at_k {
            *hits.entry(k).or_default() += v;
        }
        count += 1;
    }
    if count == 0 {
        return Ok((None, BTreeMap::new()));
    }
    let n = count as f64;
    hits.values_mut().for_each(|v| *v /= n);
    Ok((Some(mrr / n), hits))
}

fn argmax(z: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in z.iter().enumerate() {
        if *v > z[best] {
            best = i;
        }
    }
    best
}

/// Accuracy of `argmax z` against the labels. Context comes from `context`
/// when given, otherwise from the model's own KG sample.
pub fn evaluate(
    model: &RdrModel,
    dataset: &[TaskExample],
    config: &RunConfig,
    context: Option<&KnowledgeGraph>,
) -> Result<Evaluation> {
    if dataset.is_empty() {
        return Err(Error::Argument("evaluation set is empty".into()));
    }
    let mut per_class = vec![
        ClassCounts {
            total: 0,
            correct: 0,
            predicted: 0
        };
        config.num_classes
    ];
    let mut correct = 0;
    for ex in dataset {
        let p = match context {
            Some(kg) => prepare_with_context(model, ex, config, kg)?,
            None => prepare(model, ex, config)?,
        };
        let guess = argmax(&predict(model, &p)?);
        per_class[p.label].total += 1;
        per_class[guess].predicted += 1;
        if guess == p.label {
            correct += 1;
            per_class[p.label].correct += 1;
        }
    }
    Ok(Evaluation {
        accuracy: correct as f64 / dataset.len() as f64,
        correct,
        total: dataset.len(),
        per_class,
    })
}

/// Evaluates with the context graph selected by `config.eval_kg`.
pub fn evaluate_configured(
    model: &RdrModel,
    dataset: &[TaskExample],
    config: &RunConfig,
    full_kg: &KnowledgeGraph,
) -> Result<Evaluation> {
    match config.eval_kg {
        EvalKg::Sampled => evaluate(model, dataset, config, None),
        EvalKg::Full => evaluate(model, dataset, config, Some(full_kg)),
    }
}

/// Trains and evaluates both configs under each seed (used for both the
/// model and KG sampling seeds). Runs execute on separate threads.
pub fn compare_runs(
    train_set: &[TaskExample],
    eval_set: &[TaskExample],
    kg: &KnowledgeGraph,
    config_a: &RunConfig,
    config_b: &RunConfig,
    seeds: [u64; 2],
) -> Result<Comparison> {
    let eval_on = if eval_set.is_empty() { train_set } else { eval_set };
    let run = |base: &RunConfig, seed: u64| -> Result<f64> {
        let mut cfg = base.clone();
        cfg.model_seed = seed;
        cfg.kg_seed = seed;
        let out = train(train_set, eval_set, kg, &cfg)?;
        Ok(evaluate_configured(&out.model, eval_on, &cfg, kg)?.accuracy)
    };
    let results: Vec<(Result<f64>, Result<f64>)> = std::thread::scope(|s| {
        let handles: Vec<_> = seeds
            .iter()
            .map(|&seed| {
                let ha = s.spawn(move || run(config_a, seed));
                let hb = s.spawn(move || run(config_b, seed));
                (ha, hb)
            })
            .collect();
        handles
            .into_iter()
            .map(|(ha, hb)| {
                (
                    ha.join().expect("training thread panicked"),
                    hb.join().expect("training thread panicked"),
                )
            })
            .collect()
    });
    let mut per_seed = Vec::with_capacity(seeds.len());
    for (&seed, (a, b)) in seeds.iter().zip(results) {
        per_seed.push(SeedResult {
            seed,
            accuracy_a: a?,
            accuracy_b: b?,
        });
    }
    let n = per_seed.len() as f64;
    let mean_a = per_seed.iter().map(|s| s.accuracy_a).sum::<f64>() / n;
    let mean_b = per_seed.iter().map(|s| s.accuracy_b).sum::<f64>() / n;
    Ok(Comparison {
        per_seed,
        mean_a,
        mean_b,
        difference: mean_a - mean_b,
    })
}
