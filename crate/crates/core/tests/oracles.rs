mod common;

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdr::embed::{
    gel_loss, link_metrics, margin_loss, predict_links, sample_corruptions, transe_score, Corruption, LinkPredConfig,
};
use rdr::kg::Triple;
use rdr::pipeline::{generate_synthetic_task, RunConfig};
use rdr::subgraph::{extract_subgraph, pipeline_extract, tokenize, SEPARATOR_TOKEN};
use rdr::tensor::Tape;

use common::*;

#[test]
fn extraction_matches_floyd_warshall() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..300 {
        let kg = random_kg(&mut rng, 30, 45);
        let n_seeds = rng.gen_range(0..=3);
        let seeds: Vec<usize> = (0..n_seeds).map(|_| rng.gen_range(0..kg.num_nodes())).collect();
        let d = rng.gen_range(0..=3);
        let sub = extract_subgraph(&seeds, &kg, d);
        let (nodes, triples) = extraction_oracle(&kg, &seeds, d);
        assert_eq!(sub.nodes.iter().copied().collect::<BTreeSet<_>>(), nodes);
        assert_eq!(sub.triples.iter().copied().collect::<BTreeSet<_>>(), triples);
        assert_eq!(sub.hop_threshold, d);
    }
}

#[test]
fn links_and_ranks_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..150 {
        let kg = random_kg(&mut rng, 15, 25);
        let dim = rng.gen_range(1..6);
        let (m, p) = random_model(&mut rng, &kg, dim, 1.0);
        let all: Vec<usize> = (0..kg.num_nodes()).collect();
        let sub = extract_subgraph(&all, &kg, 0);
        let tau = rng.gen_range(0.0..2.5);
        let got: BTreeSet<_> = predict_links(&m, &p, &sub, tau).unwrap().into_iter().collect();
        assert_eq!(got, links_oracle(&m, &p, &sub.nodes, tau));

        let config = LinkPredConfig::default();
        let metrics = link_metrics(&m, &p, &sub, &config).unwrap();
        let ranks = rank_oracle(&m, &p, &sub.triples, &sub.nodes);
        assert_eq!(metrics.ranks, ranks);
        let (mrr, h1, h3) = metrics_from_ranks(&ranks);
        assert_eq!(metrics.mrr, mrr);
        assert_eq!(metrics.hits_at_k[&1], h1);
        assert_eq!(metrics.hits_at_k[&3], h3);
    }
}

#[test]
fn ties_rank_by_node_id() {
    let kg = rdr::kg::KnowledgeGraph::from_triples([("a", "IsA", "c"), ("b", "IsA", "a")]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (m, mut p) = random_model(&mut rng, &kg, 3, 1.0);
    p.get_mut(rdr::embed::NODES_PARAM).unwrap().data_mut().fill(0.0);
    let all: Vec<usize> = (0..3).collect();
    let sub = extract_subgraph(&all, &kg, 0);
    let metrics = link_metrics(&m, &p, &sub, &LinkPredConfig::default()).unwrap();
    // All tails tie; the true tail's id is its rank.
    let expected: Vec<usize> = sub.triples.iter().map(|t| t.tail + 1).collect();
    assert_eq!(metrics.ranks, expected);
}

#[test]
fn transe_score_by_hand() {
    let kg = rdr::kg::KnowledgeGraph::from_triples([("a", "IsA", "b")]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (m, mut p) = random_model(&mut rng, &kg, 2, 1.0);
    p.get_mut(rdr::embed::NODES_PARAM)
        .unwrap()
        .data_mut()
        .copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
    p.get_mut(rdr::embed::RELATIONS_PARAM)
        .unwrap()
        .data_mut()
        .copy_from_slice(&[2.0, 4.0]);
    let t = Triple {
        head: 0,
        relation: 0,
        tail: 1,
    };
    // (1+2-0, 0+4-0) = (3, 4)
    assert_eq!(transe_score(&m, &p, &t).unwrap(), 5.0);
}

#[test]
fn gel_equals_hinge_mean_of_drawn_corruptions() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let kg = random_kg(&mut rng, 10, 15);
        let (m, p) = random_model(&mut rng, &kg, 4, 0.5);
        let all: Vec<usize> = (0..kg.num_nodes()).collect();
        let sub = extract_subgraph(&all, &kg, 0);
        let config = LinkPredConfig {
            margin: rng.gen_range(0.1..2.0),
            negatives_per_positive: rng.gen_range(1..4),
            ..LinkPredConfig::default()
        };
        let seed = rng.gen();
        let pairs = sample_corruptions(&sub, &config, &mut ChaCha8Rng::seed_from_u64(seed));
        assert_eq!(pairs.len(), sub.triples.len() * config.negatives_per_positive);
        let mut expected = 0.0;
        for Corruption {
            positive: a,
            negative: b,
        } in &pairs
        {
            assert!(sub.contains_node(b.head) && sub.contains_node(b.tail));
            assert_eq!(a.relation, b.relation);
            let head_changed = a.head != b.head;
            let tail_changed = a.tail != b.tail;
            assert!(head_changed ^ tail_changed, "{a:?} -> {b:?}");
            let sp = oracle_score(&m, &p, a.head, a.relation, a.tail);
            let sn = oracle_score(&m, &p, b.head, b.relation, b.tail);
            expected += (config.margin + sp - sn).max(0.0);
        }
        expected /= pairs.len() as f64;

        let mut tape = Tape::new();
        let gel = gel_loss(&mut tape, &m, &p, &sub, &config, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
        assert!((tape.item(gel) - expected).abs() < 1e-12);
    }
}

#[test]
fn margin_loss_worked_value() {
    let kg = rdr::kg::KnowledgeGraph::from_triples([("a", "IsA", "b"), ("b", "IsA", "c")]);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let (m, mut p) = random_model(&mut rng, &kg, 1, 1.0);
    p.get_mut(rdr::embed::NODES_PARAM)
        .unwrap()
        .data_mut()
        .copy_from_slice(&[0.0, 1.0, 3.0]);
    p.get_mut(rdr::embed::RELATIONS_PARAM)
        .unwrap()
        .data_mut()
        .copy_from_slice(&[1.0]);
    let t = |h, tl| Triple {
        head: h,
        relation: 0,
        tail: tl,
    };
    // s(a,b)=0, s(a,c)=2, s(b,c)=1, s(b,a)=2
    let pairs = [
        Corruption {
            positive: t(0, 1),
            negative: t(0, 2),
        },
        Corruption {
            positive: t(1, 2),
            negative: t(1, 0),
        },
    ];
    let mut tape = Tape::new();
    let l = margin_loss(&mut tape, &m, &p, &pairs, 1.5).unwrap();
    // max(0, 1.5 + 0 - 2) = 0 and max(0, 1.5 + 1 - 2) = 0.5
    assert_eq!(tape.item(l), 0.25);
}

#[test]
fn synthetic_labels_match_reachability() {
    for seed in 0..5 {
        let (data, kg) = generate_synthetic_task(40, 400, seed).unwrap();
        assert_eq!(data.len(), 400);
        assert_eq!(data.iter().filter(|e| e.label == 1).count(), 200);
        for ex in &data {
            let tokens = tokenize(&ex.text);
            assert_eq!(tokens.tokens.len(), 3);
            assert_eq!(tokens.tokens[1], SEPARATOR_TOKEN);
            let positive = label_oracle(&kg, &tokens.tokens[0], &tokens.tokens[2]);
            assert_eq!(positive, ex.label == 1, "{}", ex.text);
            assert_eq!(ex.relation.is_some(), positive);
        }
    }
}

#[test]
fn synthetic_text_resolves_both_entities() {
    let (data, kg) = generate_synthetic_task(40, 100, 3).unwrap();
    let cfg = RunConfig::default().extract();
    for ex in &data {
        let sub = pipeline_extract(&ex.text, &kg, &cfg);
        assert_eq!(sub.seeds.len(), 2, "{}", ex.text);
        assert_eq!(sub.dropped_seeds, 0);
    }
}
