use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::subgraph::SEPARATOR;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TaskExample {
    pub text: String,
    pub label: usize,
    /// Relation behind a positive synthetic pair.
    pub relation: Option<String>,
}

impl TaskExample {
    pub fn new(text: impl Into<String>, label: usize) -> Self {
        TaskExample {
            text: text.into(),
            label,
            relation: None,
        }
    }

    /// `premise [SEP] hypothesis`
    pub fn pair(premise: &str, hypothesis: &str, label: usize) -> Self {
        Self::new(format!("{premise} {SEPARATOR} {hypothesis}"), label)
    }
}

/// `label<TAB>text` lines.
pub fn dataset_to_tsv(examples: &[TaskExample]) -> String {
    examples.iter().map(|e| format!("{}\t{}\n", e.label, e.text)).collect()
}

pub fn parse_dataset(text: &str) -> Result<Vec<TaskExample>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let Some((label, body)) = line.split_once('\t') else {
            return Err(Error::Parse {
                line: i + 1,
                message: "expected `label<TAB>text`".into(),
            });
        };
        let label = label.trim().parse().map_err(|e| Error::Parse {
            line: i + 1,
            message: format!("bad label: {e}"),
        })?;
        out.push(TaskExample::new(body, label));
    }
    Ok(out)
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Vec<TaskExample>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

pub fn write_dataset(examples: &[TaskExample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, dataset_to_tsv(examples)).map_err(|e| Error::io(path, e))
}

/// Seeded shuffle, then the first `round(test_fraction * n)` examples become
/// the held-out set. Returns `(train, test)`.
pub fn split_dataset(
    examples: &[TaskExample],
    test_fraction: f64,
    seed: u64,
) -> Result<(Vec<TaskExample>, Vec<TaskExample>)> {
    if !(0.0..1.0).contains(&test_fraction) {
        return Err(Error::Argument(format!(
            "test fraction must lie in [0, 1), got {test_fraction}"
        )));
    }
    let mut shuffled = examples.to_vec();
    shuffled.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_test = (test_fraction * examples.len() as f64).round() as usize;
    let train = shuffled.split_off(n_test);
    Ok((train, shuffled))
}
