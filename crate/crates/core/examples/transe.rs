//! TransE on two parallel chains joined by a mirror relation: margin
//! training, ranking metrics and thresholded link prediction.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdr::embed::{gel_loss, link_metrics, predict_links, GraphEmbeddingModel, LinkPredConfig};
use rdr::kg::KnowledgeGraph;
use rdr::subgraph::extract_subgraph;
use rdr::tensor::{sgd_step, ParamRegistry, Tape};

fn main() -> rdr::Result<()> {
    let mut triples = Vec::new();
    for i in 0..5 {
        triples.push((format!("a{i}"), "next", format!("a{}", i + 1)));
        triples.push((format!("b{i}"), "next", format!("b{}", i + 1)));
    }
    for i in 0..6 {
        triples.push((format!("a{i}"), "mirror", format!("b{i}")));
    }
    let kg = KnowledgeGraph::from_triples(triples.iter().map(|(h, r, t)| (h.as_str(), *r, t.as_str())));
    let all: Vec<usize> = (0..kg.num_nodes()).collect();
    let sub = extract_subgraph(&all, &kg, 0);

    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut params = ParamRegistry::new();
    let model = GraphEmbeddingModel::init(&mut params, &kg, 16, &mut rng)?;
    let config = LinkPredConfig::default();

    for epoch in 0..=200 {
        let mut tape = Tape::new();
        let loss = gel_loss(&mut tape, &model, &params, &sub, &config, &mut rng)?;
        if epoch % 40 == 0 {
            let m = link_metrics(&model, &params, &sub, &config)?;
            println!(
                "epoch {epoch:>3}  loss {:.4}  mrr {:.3}  hits@1 {:.3}",
                tape.item(loss),
                m.mrr,
                m.hits_at_k[&1]
            );
        }
        tape.backward_into(loss, &mut params)?;
        sgd_step(&mut params, 0.3)?;
    }

    let m = link_metrics(&model, &params, &sub, &config)?;
    println!("\ntau (median distance) = {:.4}", m.tau);
    let links = predict_links(&model, &params, &sub, m.tau)?;
    println!(
        "{} of {} node pairs predicted close",
        links.len(),
        all.len() * (all.len() - 1) / 2
    );
    for (i, j) in links.iter().take(5) {
        println!("  {} ~ {}", kg.node_name(*i).unwrap(), kg.node_name(*j).unwrap());
    }
    Ok(())
}
