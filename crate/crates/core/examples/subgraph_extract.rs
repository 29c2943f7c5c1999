//! Entity matching and k-hop context extraction for a sentence pair.

use rdr::kg::KnowledgeGraph;
use rdr::subgraph::{match_entities, pipeline_extract, tokenize, ExtractConfig};

fn main() {
    let kg = KnowledgeGraph::from_triples([
        ("new_york", "IsA", "city"),
        ("city", "RelatedTo", "street"),
        ("street", "HasA", "traffic"),
        ("york", "IsA", "town"),
        ("town", "Synonym", "village"),
        ("apple", "RelatedTo", "new_york"),
    ]);
    let text = "I moved to New York. [SEP] The town was small.";
    let tokens = tokenize(text);
    println!("tokens: {:?}", tokens.tokens);
    for m in match_entities(&tokens, &kg, 3) {
        println!(
            "match {:?} -> {}",
            &tokens.tokens[m.start..m.end],
            kg.node_name(m.node).unwrap()
        );
    }
    for hop_threshold in 0..=3 {
        let sub = pipeline_extract(
            text,
            &kg,
            &ExtractConfig {
                max_span: 3,
                hop_threshold,
            },
        );
        println!("\n{} nodes, {} triples", sub.nodes.len(), sub.triples.len());
        print!("{}", sub.to_dump(&kg));
    }
}
