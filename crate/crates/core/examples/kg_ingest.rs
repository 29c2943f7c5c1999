//! Parse a small triple file, inspect the load report and draw run samples.

use rdr::kg::parse_triples;

const TRIPLES: &str = "\
# head\trelation\ttail
Dog\tIsA\tAnimal
cat\tisa\tanimal
dog\tAntonym\tcat
hot dog\tIsA\tfood
dog\tIsA\tanimal
food\tRelatedTo\teating
puppy\tSynonym\tDog
animal\tLivesNear\tforest
";

fn main() -> rdr::Result<()> {
    let (kg, report) = parse_triples(TRIPLES, false)?;
    print!("{report}");
    println!();
    print!("{}", kg.to_tsv());

    if let Err(e) = parse_triples(TRIPLES, true) {
        println!("\nstrict mode: {e}");
    }

    for (fraction, seed) in [(0.5, 7), (0.5, 7), (0.5, 8), (1.0, 0)] {
        let sample = kg.sample_fraction(fraction, seed)?;
        println!("\nfraction {fraction}, seed {seed}: {} triples", sample.num_triples());
        print!("{}", sample.to_tsv());
    }
    Ok(())
}
