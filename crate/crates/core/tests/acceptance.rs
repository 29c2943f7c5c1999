//! One line per acceptance criterion; exits non-zero if any fails.

mod common;

use std::collections::BTreeSet;
use std::fs;
use std::process::Command;
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdr::embed::{gel_loss, link_metrics, predict_links, GraphEmbeddingModel, LinkPredConfig};
use rdr::kg::{parse_triples, KnowledgeGraph};
use rdr::pipeline::*;
use rdr::subgraph::extract_subgraph;
use rdr::tensor::{sgd_step, to_checkpoint_string, ParamRegistry, Tape, Targets, Tensor};

use common::*;

type Check = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn timed(limit: Duration, pass: bool, elapsed: Duration) -> bool {
    pass && elapsed <= limit
}

fn gradient_check() -> Outcome {
    let start = Instant::now();
    let (data, kg) = generate_synthetic_task(8, 16, 0).unwrap();
    let cfg = RunConfig {
        embed_dim: 8,
        hidden_dim: 8,
        graph_dim: 8,
        kg_fraction: 1.0,
        ..RunConfig::default()
    };
    let batch = &data[..2];
    let vocab = build_vocab(batch, &[]).len();
    let report = gradcheck_pipeline(batch, &kg, &cfg).unwrap();
    let t = start.elapsed();
    outcome(
        timed(
            Duration::from_secs(60),
            vocab <= 60 && report.max_relative_error <= 1e-4,
            t,
        ),
        format!(
            "V={vocab}, {} elements, max rel err {:.3e} (limit 1e-4), {t:.2?}",
            report.checked, report.max_relative_error
        ),
    )
}

fn ce(logits: &[f64], target: usize) -> f64 {
    let mut tape = Tape::new();
    let z = tape.constant(Tensor::new(vec![1, logits.len()], logits.to_vec()).unwrap());
    let l = tape.softmax_cross_entropy(z, &Targets::Indices(vec![target])).unwrap();
    tape.item(l)
}

fn analytic_losses() -> Outcome {
    let mut worst_uniform: f64 = 0.0;
    for c in [2usize, 4, 50] {
        for (k, v) in [0.0, 3.7, -12.0].into_iter().enumerate() {
            worst_uniform = worst_uniform.max((ce(&vec![v; c], k % c) - (c as f64).ln()).abs());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst_shift: f64 = 0.0;
    for _ in 0..500 {
        let c = rng.gen_range(2..20);
        let z: Vec<f64> = (0..c).map(|_| rng.gen_range(-15.0..15.0)).collect();
        let shift = rng.gen_range(-100.0..100.0);
        let zs: Vec<f64> = z.iter().map(|x| x + shift).collect();
        let t = rng.gen_range(0..c);
        worst_shift = worst_shift.max((ce(&z, t) - ce(&zs, t)).abs());
    }
    outcome(
        worst_uniform <= 1e-9 && worst_shift <= 1e-9,
        format!("|CE - ln C| max {worst_uniform:.1e}, shift max {worst_shift:.1e} (limit 1e-9)"),
    )
}

fn extraction_oracle_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1003);
    let mut mismatches = 0;
    for _ in 0..200 {
        let kg = random_kg(&mut rng, 30, 45);
        let n_seeds = rng.gen_range(1..=3);
        let seeds: Vec<usize> = (0..n_seeds).map(|_| rng.gen_range(0..kg.num_nodes())).collect();
        let d = rng.gen_range(0..=3);
        let sub = extract_subgraph(&seeds, &kg, d);
        let (nodes, triples) = extraction_oracle(&kg, &seeds, d);
        let got_nodes: BTreeSet<_> = sub.nodes.iter().copied().collect();
        let got_triples: BTreeSet<_> = sub.triples.iter().copied().collect();
        if got_nodes != nodes || got_triples != triples {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        timed(Duration::from_secs(10), mismatches == 0, t),
        format!("200 instances, {mismatches} mismatches, {t:.2?}"),
    )
}

fn link_oracle_check() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1004);
    let mut mismatches = 0;
    let config = LinkPredConfig::default();
    for _ in 0..100 {
        let kg = random_kg(&mut rng, 15, 25);
        let dim = rng.gen_range(1..8);
        let (m, p) = random_model(&mut rng, &kg, dim, 1.0);
        let all: Vec<usize> = (0..kg.num_nodes()).collect();
        let sub = extract_subgraph(&all, &kg, 0);
        let tau = rng.gen_range(0.0..3.0);
        let links: BTreeSet<_> = predict_links(&m, &p, &sub, tau).unwrap().into_iter().collect();
        let metrics = link_metrics(&m, &p, &sub, &config).unwrap();
        let (mrr, h1, h3) = metrics_from_ranks(&rank_oracle(&m, &p, &sub.triples, &sub.nodes));
        let auto_links: BTreeSet<_> = metrics.predicted_edges.iter().copied().collect();
        if links != links_oracle(&m, &p, &sub.nodes, tau)
            || auto_links != links_oracle(&m, &p, &sub.nodes, metrics.tau)
            || metrics.mrr != mrr
            || metrics.hits_at_k[&1] != h1
            || metrics.hits_at_k[&3] != h3
        {
            mismatches += 1;
        }
    }
    let t = start.elapsed();
    outcome(
        timed(Duration::from_secs(10), mismatches == 0, t),
        format!("100 instances, {mismatches} mismatches, {t:.2?}"),
    )
}

fn sampling_contract() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(1005);
    let lines = distinct_triple_lines(&mut rng, 1000, 120);
    let (kg, _) = parse_triples(&lines.join("\n"), true).unwrap();
    let mut shuffled = lines.clone();
    shuffled.shuffle(&mut rng);
    let (kg_shuffled, _) = parse_triples(&shuffled.join("\n"), true).unwrap();
    let full: BTreeSet<String> = kg.to_tsv().lines().map(str::to_string).collect();
    let mut failures = Vec::new();
    for f in [0.1, 0.5, 1.0] {
        let a = kg.sample_fraction(f, 42).unwrap();
        let expected = (f * 1000.0_f64).round() as usize;
        if a.num_triples() != expected {
            failures.push(format!("f={f}: {} triples, expected {expected}", a.num_triples()));
        }
        if !a.to_tsv().lines().all(|l| full.contains(l)) {
            failures.push(format!("f={f}: not a subset"));
        }
        if a != kg.sample_fraction(f, 42).unwrap() {
            failures.push(format!("f={f}: not repeatable"));
        }
        if a.to_tsv() != kg_shuffled.sample_fraction(f, 42).unwrap().to_tsv() {
            failures.push(format!("f={f}: depends on line order"));
        }
    }
    let pass = failures.is_empty() && kg.num_triples() == 1000;
    outcome(
        pass,
        if pass {
            "1000 triples, f in {0.1, 0.5, 1.0}: sizes 100/500/1000, subset, repeatable, order-free".to_string()
        } else {
            failures.join("; ")
        },
    )
}

/// Two 6-node `next` chains joined node by node by `mirror`.
fn ladder_kg() -> KnowledgeGraph {
    let mut t = Vec::new();
    for i in 0..5 {
        t.push((format!("a{i}"), "next", format!("a{}", i + 1)));
        t.push((format!("b{i}"), "next", format!("b{}", i + 1)));
    }
    for i in 0..6 {
        t.push((format!("a{i}"), "mirror", format!("b{i}")));
    }
    KnowledgeGraph::from_triples(t.iter().map(|(h, r, tl)| (h.as_str(), *r, tl.as_str())))
}

fn transe_learnability() -> Outcome {
    let start = Instant::now();
    let kg = ladder_kg();
    let all: Vec<usize> = (0..kg.num_nodes()).collect();
    let sub = extract_subgraph(&all, &kg, 0);
    let config = LinkPredConfig::default();
    let mut pass = kg.num_nodes() == 12 && kg.num_relations() == 2;
    let mut parts = Vec::new();
    for seed in [1u64, 2] {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params = ParamRegistry::new();
        let model = GraphEmbeddingModel::init(&mut params, &kg, 16, &mut rng).unwrap();
        let fixed_loss = |p: &ParamRegistry| {
            let mut tape = Tape::new();
            let l = gel_loss(&mut tape, &model, p, &sub, &config, &mut ChaCha8Rng::seed_from_u64(999)).unwrap();
            tape.item(l)
        };
        let before = fixed_loss(&params);
        for _ in 0..200 {
            let mut tape = Tape::new();
            let l = gel_loss(&mut tape, &model, &params, &sub, &config, &mut rng).unwrap();
            tape.backward_into(l, &mut params).unwrap();
            sgd_step(&mut params, 0.3).unwrap();
        }
        let after = fixed_loss(&params);
        let hits1 = link_metrics(&model, &params, &sub, &config).unwrap().hits_at_k[&1];
        let reduction = 1.0 - after / before;
        pass &= reduction >= 0.5 && hits1 >= 0.8;
        parts.push(format!(
            "seed {seed}: loss {before:.3} -> {after:.3} (-{:.0}%), hits@1 {hits1:.3}",
            100.0 * reduction
        ));
    }
    let t = start.elapsed();
    outcome(
        timed(Duration::from_secs(30), pass, t),
        format!("{}, {t:.2?}", parts.join("; ")),
    )
}

fn joint_training_beats_baseline() -> Outcome {
    let start = Instant::now();
    let (data, kg) = generate_synthetic_task(40, 400, 1).unwrap();
    let (train_set, test_set) = split_dataset(&data, 0.25, 1).unwrap();
    let rdr = RunConfig {
        epochs: 5,
        batch_size: 8,
        kg_fraction: 1.0,
        hop_threshold: 1,
        learning_rate: 0.3,
        ..RunConfig::default()
    };
    let baseline = RunConfig {
        mode: Mode::Baseline,
        ..rdr.clone()
    };
    let c = compare_runs(&train_set, &test_set, &kg, &rdr, &baseline, [1, 2]).unwrap();
    let t = start.elapsed();
    outcome(
        timed(Duration::from_secs(300), c.mean_a >= 0.75 && c.difference >= 0.10, t),
        format!(
            "held-out accuracy rdr {:.3} vs baseline {:.3}, margin {:+.3} (need >= 0.75 and >= +0.10), {t:.2?}",
            c.mean_a, c.mean_b, c.difference
        ),
    )
}

fn sum_identity_and_degeneracy() -> Outcome {
    let (data, kg) = generate_synthetic_task(40, 400, 1).unwrap();
    let (train_set, _) = split_dataset(&data, 0.25, 1).unwrap();
    let base = RunConfig {
        epochs: 3,
        kg_fraction: 1.0,
        hop_threshold: 1,
        ..RunConfig::default()
    };
    let mut exact = 0;
    let mut total = 0;
    for weights in [
        LossWeights::default(),
        LossWeights {
            pl: 0.25,
            gel: 1.5,
            rl: 0.75,
        },
    ] {
        let cfg = RunConfig {
            weights,
            ..base.clone()
        };
        let out = train(&train_set[..120], &[], &kg, &cfg).unwrap();
        for b in &out.report.batches {
            total += 1;
            if b.objective.to_bits() == weights.combine(b.pl, b.gel, b.rl).to_bits() {
                exact += 1;
            }
        }
    }

    let degenerate = RunConfig {
        weights: LossWeights {
            pl: 0.0,
            gel: 0.0,
            rl: 1.0,
        },
        ..base.clone()
    };
    let baseline = RunConfig {
        mode: Mode::Baseline,
        ..base
    };
    let checkpoints = |cfg: &RunConfig| {
        let mut out = Vec::new();
        train_with(&train_set[..120], &[], &kg, cfg, |_, m| {
            out.push(to_checkpoint_string(&m.params))
        })
        .unwrap();
        out
    };
    let a = checkpoints(&degenerate);
    let b = checkpoints(&baseline);
    let identical = a.len() == 3 && a == b;
    outcome(
        exact == total && identical,
        format!(
            "{exact}/{total} batches bit-exact; weights (0,0,1) vs baseline checkpoints identical over {} epochs: {identical}",
            a.len()
        ),
    )
}

fn cli_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data");
    let bin = env!("CARGO_BIN_EXE_rdr");
    let run = |args: &[&str]| Command::new(bin).args(args).output().unwrap().status.success();
    let d = data.to_str().unwrap();
    if !run(&["generate", "--entities", "20", "--examples", "80", "--out", d]) {
        return outcome(false, "generate failed");
    }
    let cfg = dir.path().join("cfg.txt");
    fs::write(&cfg, "epochs = 2\nkg_fraction = 0.5\nkg_seed = 3\nmodel_seed = 4\n").unwrap();
    let mut runs = Vec::new();
    for name in ["r1", "r2"] {
        let out = dir.path().join(name);
        let ok = run(&[
            "train",
            "--train",
            &format!("{d}/train.tsv"),
            "--eval",
            &format!("{d}/test.tsv"),
            "--kg",
            &format!("{d}/kg.tsv"),
            "--config",
            cfg.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ]);
        if !ok {
            return outcome(false, "train failed");
        }
        runs.push(out);
    }
    let same = |f: &str| fs::read(runs[0].join(f)).unwrap() == fs::read(runs[1].join(f)).unwrap();
    let files = [CHECKPOINT_FILE, LOSSES_FILE, REPORT_FILE, EMBEDDINGS_FILE];
    let pass = files.iter().all(|f| same(f));
    outcome(
        pass,
        format!("two `train` runs, byte-identical {}: {pass}", files.join(", ")),
    )
}

fn main() {
    let criteria: [Check; 9] = [
        ("end-to-end gradient check", gradient_check),
        ("analytic cross-entropy values", analytic_losses),
        ("extraction vs BFS oracle", extraction_oracle_check),
        ("link prediction vs brute force", link_oracle_check),
        ("KG sampling contract", sampling_contract),
        ("TransE learnability", transe_learnability),
        ("rdr beats baseline on KG-dependent task", joint_training_beats_baseline),
        ("loss sum identity and weight degeneracy", sum_identity_and_degeneracy),
        ("train determinism", cli_determinism),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "criterion {} {}: {name}: {}",
            i + 1,
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
