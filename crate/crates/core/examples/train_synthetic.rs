//! Train on the synthetic KG-dependent task, save the run, reload it and
//! evaluate on the held-out split.

use rdr::pipeline::{evaluate, generate_synthetic_task, load_run, save_run, split_dataset, train_with, RunConfig};

fn main() -> rdr::Result<()> {
    let (data, kg) = generate_synthetic_task(40, 400, 1)?;
    let (train_set, test_set) = split_dataset(&data, 0.25, 1)?;
    println!(
        "{} train / {} test examples, {} triples",
        train_set.len(),
        test_set.len(),
        kg.num_triples()
    );

    let config = RunConfig {
        epochs: 5,
        kg_fraction: 1.0,
        hop_threshold: 1,
        learning_rate: 0.3,
        ..RunConfig::default()
    };
    let outcome = train_with(&train_set, &test_set, &kg, &config, |epoch, _| {
        eprintln!("finished epoch {epoch}");
    })?;
    print!("{}", outcome.report.to_csv());

    let dir = std::env::temp_dir().join("rdr-train-synthetic");
    save_run(&dir, &outcome, &config)?;
    let (model, loaded) = load_run(&dir)?;
    let eval = evaluate(&model, &test_set, &loaded, None)?;
    println!("\nreloaded from {}", dir.display());
    print!("{}", eval.to_kv());
    Ok(())
}
