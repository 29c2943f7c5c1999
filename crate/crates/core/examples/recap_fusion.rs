//! One forward pass through the three losses for a single sentence pair,
//! computed module by module.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rdr::embed::{aggregate, gel_loss, GraphEmbeddingModel, LinkPredConfig};
use rdr::kg::KnowledgeGraph;
use rdr::nlu::{fuse_and_classify, pl_loss, recap_forward, rl_loss, FusionHead, RecapModel, TokenVocab};
use rdr::subgraph::{extract_from_tokens, tokenize, ExtractConfig};
use rdr::tensor::{ParamRegistry, Tape};

fn main() -> rdr::Result<()> {
    let kg = KnowledgeGraph::from_triples([
        ("puppy", "IsA", "dog"),
        ("dog", "IsA", "animal"),
        ("kitten", "IsA", "cat"),
        ("cat", "IsA", "animal"),
    ]);
    let tokens = tokenize("A puppy played outside [SEP] an animal played");
    let vocab = TokenVocab::build([&tokens]);
    let ids = vocab.encode(&tokens);
    let sub = extract_from_tokens(&tokens, &kg, &ExtractConfig::default());
    println!(
        "tokens {:?}\nids {ids:?}\ncontext nodes {}",
        tokens.tokens,
        sub.nodes.len()
    );

    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut params = ParamRegistry::new();
    let recap = RecapModel::init(&mut params, vocab.len(), 8, 8, &mut rng)?;
    let graph = GraphEmbeddingModel::init(&mut params, &kg, 8, &mut rng)?;
    let head = FusionHead::init(&mut params, 8, 8, 2, &mut rng)?;

    let mut tape = Tape::new();
    let out = recap_forward(&mut tape, &recap, &params, &ids)?;
    let pl = pl_loss(&mut tape, out.logits, &ids)?;
    let e_x = aggregate(&mut tape, &graph, &params, &sub)?;
    let gel = gel_loss(&mut tape, &graph, &params, &sub, &LinkPredConfig::default(), &mut rng)?;
    let z = fuse_and_classify(&mut tape, &head, &params, out.pooled, e_x)?;
    let rl = rl_loss(&mut tape, z, 1)?;
    let total = tape.add(pl, gel)?;
    let total = tape.add(total, rl)?;

    println!("z = {:?}", tape.value(z).data());
    println!("PL  = {:.6}  (ln V = {:.6})", tape.item(pl), (vocab.len() as f64).ln());
    println!("GEL = {:.6}", tape.item(gel));
    println!("RL  = {:.6}  (ln 2 = {:.6})", tape.item(rl), 2f64.ln());
    println!("L   = {:.6}", tape.item(total));
    Ok(())
}
