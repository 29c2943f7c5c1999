//! End-to-end assembly: run configuration, the synthetic task, forward
//! passes for both training modes, the trainer and the comparison harness.

mod config;
mod data;
mod model;
mod report;
mod run;
mod synthetic;
mod train;

pub use config::{EvalKg, LossWeights, Mode, RunConfig};
pub use data::{dataset_to_tsv, parse_dataset, read_dataset, split_dataset, write_dataset, TaskExample};
pub use model::{
    forward_baseline, forward_batch, forward_batch_with, forward_rdr, predict, prepare, prepare_with_context,
    weighted_total, BatchForward, Forward, Prepared, RdrModel,
};
pub use report::{BatchReport, ClassCounts, Comparison, EpochReport, Evaluation, LossReport, SeedResult};
pub use run::{
    gradcheck_pipeline, load_run, save_run, CHECKPOINT_FILE, CONFIG_FILE, EMBEDDINGS_FILE, KG_SAMPLE_FILE, LOSSES_FILE,
    REPORT_FILE, VOCAB_FILE,
};
pub use synthetic::{generate_synthetic_task, LABEL_HOPS, LABEL_RELATIONS, MIN_ENTITIES, MIN_EXAMPLES};
pub use train::{build_vocab, compare_runs, evaluate, evaluate_configured, train, train_with, TrainOutcome};
