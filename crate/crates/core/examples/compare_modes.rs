//! Joint training against classification-only training, averaged over two
//! seeds.

use rdr::pipeline::{compare_runs, generate_synthetic_task, split_dataset, Mode, RunConfig};

fn main() -> rdr::Result<()> {
    let (data, kg) = generate_synthetic_task(40, 400, 1)?;
    let (train_set, test_set) = split_dataset(&data, 0.25, 1)?;
    let rdr = RunConfig {
        epochs: 5,
        kg_fraction: 1.0,
        hop_threshold: 1,
        learning_rate: 0.3,
        ..RunConfig::default()
    };
    let baseline = RunConfig {
        mode: Mode::Baseline,
        ..rdr.clone()
    };
    let c = compare_runs(&train_set, &test_set, &kg, &rdr, &baseline, [1, 2])?;
    println!("seed  rdr    baseline");
    for s in &c.per_seed {
        println!("{:<5} {:.3}  {:.3}", s.seed, s.accuracy_a, s.accuracy_b);
    }
    println!(
        "mean  {:.3}  {:.3}  (difference {:+.3})",
        c.mean_a, c.mean_b, c.difference
    );
    Ok(())
}
