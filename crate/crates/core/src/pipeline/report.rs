use std::collections::BTreeMap;
use std::fmt::Write as _;

/// One optimizer step.
#[derive(Clone, Debug, PartialEq)]
pub struct BatchReport {
    pub epoch: usize,
    pub batch: usize,
    pub pl: f64,
    pub gel: f64,
    pub rl: f64,
    /// The scalar that was differentiated.
    pub objective: f64,
    /// `w_pl*pl + w_gel*gel + w_rl*rl` with the configured (not effective)
    /// weights.
    pub total: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpochReport {
    pub epoch: usize,
    pub pl: f64,
    pub gel: f64,
    pub rl: f64,
    pub total: f64,
    pub accuracy: f64,
    pub mrr: Option<f64>,
    pub hits_at_k: BTreeMap<usize, f64>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct LossReport {
    pub model_seed: u64,
    pub kg_seed: u64,
    pub batches: Vec<BatchReport>,
    pub epochs: Vec<EpochReport>,
}

impl LossReport {
    /// `epoch,PL,GEL,RL,L,accuracy`
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,PL,GEL,RL,L,accuracy\n");
        for e in &self.epochs {
            let _ = writeln!(
                out,
                "{},{:?},{:?},{:?},{:?},{:?}",
                e.epoch, e.pl, e.gel, e.rl, e.total, e.accuracy
            );
        }
        out
    }

    /// Key-value summary of the final epoch.
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "model_seed = {}", self.model_seed);
        let _ = writeln!(out, "kg_seed = {}", self.kg_seed);
        let _ = writeln!(out, "epochs = {}", self.epochs.len());
        let _ = writeln!(out, "batches = {}", self.batches.len());
        if let Some(e) = self.epochs.last() {
            let _ = writeln!(out, "final.PL = {:?}", e.pl);
            let _ = writeln!(out, "final.GEL = {:?}", e.gel);
            let _ = writeln!(out, "final.RL = {:?}", e.rl);
            let _ = writeln!(out, "final.L = {:?}", e.total);
            let _ = writeln!(out, "final.accuracy = {:?}", e.accuracy);
            if let Some(m) = e.mrr {
                let _ = writeln!(out, "final.mrr = {m:?}");
            }
            for (k, v) in &e.hits_at_k {
                let _ = writeln!(out, "final.hits@{k} = {v:?}");
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ClassCounts {
    pub total: usize,
    pub correct: usize,
    pub predicted: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    pub per_class: Vec<ClassCounts>,
}

impl Evaluation {
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "accuracy = {:?}", self.accuracy);
        let _ = writeln!(out, "correct = {}", self.correct);
        let _ = writeln!(out, "total = {}", self.total);
        for (c, counts) in self.per_class.iter().enumerate() {
            let _ = writeln!(out, "class.{c}.total = {}", counts.total);
            let _ = writeln!(out, "class.{c}.correct = {}", counts.correct);
            let _ = writeln!(out, "class.{c}.predicted = {}", counts.predicted);
        }
        out
    }
}

/// Accuracy of one config under one seed.
#[derive(Clone, Debug, PartialEq)]
pub struct SeedResult {
    pub seed: u64,
    pub accuracy_a: f64,
    pub accuracy_b: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Comparison {
    pub per_seed: Vec<SeedResult>,
    pub mean_a: f64,
    pub mean_b: f64,
    /// `mean_a - mean_b`
    pub difference: f64,
}

impl Comparison {
    pub fn to_kv(&self) -> String {
        let mut out = String::new();
        for s in &self.per_seed {
            let _ = writeln!(out, "seed.{}.accuracy_a = {:?}", s.seed, s.accuracy_a);
            let _ = writeln!(out, "seed.{}.accuracy_b = {:?}", s.seed, s.accuracy_b);
        }
        let _ = writeln!(out, "mean_a = {:?}", self.mean_a);
        let _ = writeln!(out, "mean_b = {:?}", self.mean_b);
        let _ = writeln!(out, "difference = {:?}", self.difference);
        out
    }
}
