use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rdr::kg::{load_triples, KnowledgeGraph};
use rdr::pipeline::{
    compare_runs, evaluate_configured, generate_synthetic_task, gradcheck_pipeline, load_run, read_dataset, save_run,
    split_dataset, train, write_dataset, EvalKg, RunConfig, LOSSES_FILE, REPORT_FILE,
};
use rdr::subgraph::{pipeline_extract, ExtractConfig};

#[derive(Parser)]
#[command(name = "rdr", version, about = "Recap-Deliberate-Respond training toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct ConfigArgs {
    /// `key = value` config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides applied after the config file, e.g. `--set epochs=5`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl ConfigArgs {
    fn resolve(&self, base: RunConfig) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
                let mut cfg = base;
                cfg.apply_kv(&text).with_context(|| format!("in {}", path.display()))?;
                cfg
            }
            None => base,
        };
        for kv in &self.overrides {
            let Some((k, v)) = kv.split_once('=') else {
                bail!("override `{kv}` is not KEY=VALUE");
            };
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Subcommand)]
enum Command {
    /// Load a triple file and print the load report.
    Ingest {
        path: PathBuf,
        /// Reject relations outside the 35-name vocabulary.
        #[arg(long)]
        strict: bool,
        /// Write the normalized, deduplicated triples here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the context subgraph of a text.
    Extract {
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        text: String,
        #[arg(long, default_value_t = rdr::subgraph::DEFAULT_HOP_THRESHOLD)]
        hop_threshold: usize,
        #[arg(long, default_value_t = rdr::subgraph::DEFAULT_MAX_SPAN)]
        max_span: usize,
    },
    /// Write a synthetic sentence-pair task: train.tsv, test.tsv and kg.tsv.
    Generate {
        #[arg(long, default_value_t = 40)]
        entities: usize,
        #[arg(long, default_value_t = 400)]
        examples: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 0.25)]
        test_fraction: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train one run and write its checkpoint and reports to a directory.
    Train {
        #[arg(long)]
        train: PathBuf,
        /// Held-out set used for the per-epoch accuracy.
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long)]
        kg: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        config: ConfigArgs,
    },
    /// Accuracy of a trained run on a dataset.
    Eval {
        /// Directory written by `train`.
        #[arg(long)]
        run: PathBuf,
        #[arg(long)]
        data: PathBuf,
        /// Full KG, required when the run uses `eval_kg = full`.
        #[arg(long)]
        kg: Option<PathBuf>,
    },
    /// Train and evaluate two configs under two seeds.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        eval: Option<PathBuf>,
        #[arg(long)]
        kg: PathBuf,
        #[arg(long, num_args = 2, default_values_t = [1u64, 2])]
        seeds: Vec<u64>,
    },
    /// Finite-difference check of the full training objective.
    Gradcheck {
        /// Dataset to take the batch from; a small synthetic task otherwise.
        #[arg(long, requires = "kg")]
        data: Option<PathBuf>,
        #[arg(long)]
        kg: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        batch: usize,
        /// Maximum tolerated relative error.
        #[arg(long, default_value_t = 1e-4)]
        tolerance: f64,
        #[command(flatten)]
        config: ConfigArgs,
    },
}

fn kg_from(path: &Path) -> Result<KnowledgeGraph> {
    let (kg, _) = load_triples(path, false).with_context(|| format!("loading {}", path.display()))?;
    Ok(kg)
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Ingest { path, strict, out } => {
            let (kg, report) = load_triples(&path, strict)?;
            print!("{report}");
            if let Some(out) = out {
                fs::write(&out, kg.to_tsv()).with_context(|| format!("writing {}", out.display()))?;
            }
        }
        Command::Extract {
            kg,
            text,
            hop_threshold,
            max_span,
        } => {
            let kg = kg_from(&kg)?;
            let config = ExtractConfig {
                max_span,
                hop_threshold,
            };
            print!("{}", pipeline_extract(&text, &kg, &config).to_dump(&kg));
        }
        Command::Generate {
            entities,
            examples,
            seed,
            test_fraction,
            out,
        } => {
            let (data, kg) = generate_synthetic_task(entities, examples, seed)?;
            let (train_set, test_set) = split_dataset(&data, test_fraction, seed)?;
            fs::create_dir_all(&out)?;
            write_dataset(&train_set, out.join("train.tsv"))?;
            write_dataset(&test_set, out.join("test.tsv"))?;
            fs::write(out.join("kg.tsv"), kg.to_tsv())?;
            println!("train = {}", train_set.len());
            println!("test = {}", test_set.len());
            println!("triples = {}", kg.num_triples());
            println!("nodes = {}", kg.num_nodes());
        }
        Command::Train {
            train: train_path,
            eval,
            kg,
            out,
            config,
        } => {
            let cfg = config.resolve(RunConfig::default())?;
            let train_set = read_dataset(&train_path)?;
            let eval_set = match eval {
                Some(p) => read_dataset(p)?,
                None => Vec::new(),
            };
            let kg = kg_from(&kg)?;
            let outcome = train(&train_set, &eval_set, &kg, &cfg)?;
            save_run(&out, &outcome, &cfg)?;
            print!("{}", outcome.report.to_kv());
            eprintln!("wrote {} and {} in {}", LOSSES_FILE, REPORT_FILE, out.display());
        }
        Command::Eval { run, data, kg } => {
            let (model, cfg) = load_run(&run)?;
            let dataset = read_dataset(&data)?;
            let full = match (&kg, cfg.eval_kg) {
                (Some(p), _) => kg_from(p)?,
                (None, EvalKg::Full) => bail!("eval_kg = full needs --kg"),
                (None, EvalKg::Sampled) => model.kg.clone(),
            };
            print!("{}", evaluate_configured(&model, &dataset, &cfg, &full)?.to_kv());
        }
        Command::Compare {
            a,
            b,
            train: train_path,
            eval,
            kg,
            seeds,
        } => {
            let cfg_a = RunConfig::load(&a)?;
            let cfg_b = RunConfig::load(&b)?;
            let train_set = read_dataset(&train_path)?;
            let eval_set = match eval {
                Some(p) => read_dataset(p)?,
                None => Vec::new(),
            };
            let kg = kg_from(&kg)?;
            let comparison = compare_runs(&train_set, &eval_set, &kg, &cfg_a, &cfg_b, [seeds[0], seeds[1]])?;
            print!("{}", comparison.to_kv());
        }
        Command::Gradcheck {
            data,
            kg,
            batch,
            tolerance,
            config,
        } => {
            let small = RunConfig {
                embed_dim: 8,
                hidden_dim: 8,
                graph_dim: 8,
                kg_fraction: 1.0,
                ..RunConfig::default()
            };
            let cfg = config.resolve(small)?;
            let (examples, kg) = match (data, kg) {
                (Some(d), Some(k)) => (read_dataset(d)?, kg_from(&k)?),
                _ => generate_synthetic_task(8, 16, cfg.model_seed)?,
            };
            if examples.len() < batch {
                bail!("need {batch} examples, dataset has {}", examples.len());
            }
            let report = gradcheck_pipeline(&examples[..batch], &kg, &cfg)?;
            println!("checked = {}", report.checked);
            println!("max_relative_error = {:e}", report.max_relative_error);
            if let Some((name, i)) = &report.worst {
                println!("worst = {name}[{i}]");
            }
            let pass = report.max_relative_error <= tolerance;
            println!("pass = {pass}");
            if !pass {
                std::process::exit(1);
            }
        }
    }
    Ok(())
}
