//! Finite-difference check of the full weighted objective on a two-example
//! batch.

use rdr::pipeline::{generate_synthetic_task, gradcheck_pipeline, RunConfig};

fn main() -> rdr::Result<()> {
    let (data, kg) = generate_synthetic_task(8, 16, 0)?;
    let config = RunConfig {
        embed_dim: 8,
        hidden_dim: 8,
        graph_dim: 8,
        kg_fraction: 1.0,
        ..RunConfig::default()
    };
    for ex in &data[..2] {
        println!("{}\t{}", ex.label, ex.text);
    }
    let report = gradcheck_pipeline(&data[..2], &kg, &config)?;
    println!(
        "{} parameter elements, max relative error {:.3e} at {:?}",
        report.checked, report.max_relative_error, report.worst
    );
    Ok(())
}
