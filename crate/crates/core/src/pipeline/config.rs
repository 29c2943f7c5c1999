use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use crate::embed::{LinkPredConfig, DEFAULT_DIM};
use crate::error::{Error, Result};
use crate::subgraph::{ExtractConfig, DEFAULT_HOP_THRESHOLD, DEFAULT_MAX_SPAN};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// All three losses are optimized.
    Rdr,
    /// Only the classification loss is optimized; the other two are logged.
    Baseline,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rdr" => Ok(Mode::Rdr),
            "baseline" => Ok(Mode::Baseline),
            other => Err(Error::Argument(format!("unknown mode `{other}`"))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Rdr => "rdr",
            Mode::Baseline => "baseline",
        })
    }
}

/// Which graph supplies context at evaluation time.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EvalKg {
    Sampled,
    Full,
}

impl FromStr for EvalKg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sampled" => Ok(EvalKg::Sampled),
            "full" => Ok(EvalKg::Full),
            other => Err(Error::Argument(format!("unknown eval_kg `{other}`"))),
        }
    }
}

impl fmt::Display for EvalKg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EvalKg::Sampled => "sampled",
            EvalKg::Full => "full",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LossWeights {
    pub pl: f64,
    pub gel: f64,
    pub rl: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        LossWeights {
            pl: 1.0,
            gel: 1.0,
            rl: 1.0,
        }
    }
}

impl LossWeights {
    /// `pl*PL + gel*GEL + rl*RL`, always summed in this order.
    pub fn combine(&self, pl: f64, gel: f64, rl: f64) -> f64 {
        self.pl * pl + self.gel * gel + self.rl * rl
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub mode: Mode,
    pub batch_size: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub kg_fraction: f64,
    pub kg_seed: u64,
    pub model_seed: u64,
    pub embed_dim: usize,
    pub hidden_dim: usize,
    pub graph_dim: usize,
    pub hop_threshold: usize,
    pub max_span: usize,
    pub num_classes: usize,
    pub link: LinkPredConfig,
    pub weights: LossWeights,
    pub eval_kg: EvalKg,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Rdr,
            batch_size: 8,
            epochs: 1,
            learning_rate: 0.1,
            kg_fraction: 0.10,
            kg_seed: 0,
            model_seed: 0,
            embed_dim: 16,
            hidden_dim: 16,
            graph_dim: DEFAULT_DIM,
            hop_threshold: DEFAULT_HOP_THRESHOLD,
            max_span: DEFAULT_MAX_SPAN,
            num_classes: 2,
            link: LinkPredConfig::default(),
            weights: LossWeights::default(),
            eval_kg: EvalKg::Sampled,
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> Result<T>
where
    T::Err: fmt::Display,
{
    value
        .trim()
        .parse()
        .map_err(|e| Error::Argument(format!("{key} = {value}: {e}")))
}

impl RunConfig {
    /// Weights actually applied to the optimized objective.
    pub fn effective_weights(&self) -> LossWeights {
        match self.mode {
            Mode::Rdr => self.weights,
            Mode::Baseline => LossWeights {
                pl: 0.0,
                gel: 0.0,
                rl: self.weights.rl,
            },
        }
    }

    pub fn extract(&self) -> ExtractConfig {
        ExtractConfig {
            max_span: self.max_span,
            hop_threshold: self.hop_threshold,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 {
            return Err(Error::Argument("batch_size must be >= 1".into()));
        }
        if !(self.kg_fraction > 0.0 && self.kg_fraction <= 1.0) {
            return Err(Error::Argument(format!(
                "kg_fraction must lie in (0, 1], got {}",
                self.kg_fraction
            )));
        }
        let w = self.weights;
        if !(w.pl >= 0.0 && w.gel >= 0.0 && w.rl >= 0.0) {
            return Err(Error::Argument(format!("loss weights must be >= 0, got {w:?}")));
        }
        if self.learning_rate.is_nan() || self.learning_rate < 0.0 {
            return Err(Error::Argument("learning_rate must be >= 0".into()));
        }
        if self.num_classes < 2 {
            return Err(Error::Argument("num_classes must be >= 2".into()));
        }
        if self.max_span == 0 {
            return Err(Error::Argument("max_span must be >= 1".into()));
        }
        self.link.validate()
    }

    /// Applies one `key = value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let key = key.trim();
        match key {
            "mode" => self.mode = parse(key, value)?,
            "batch_size" => self.batch_size = parse(key, value)?,
            "epochs" => self.epochs = parse(key, value)?,
            "learning_rate" => self.learning_rate = parse(key, value)?,
            "kg_fraction" => self.kg_fraction = parse(key, value)?,
            "kg_seed" => self.kg_seed = parse(key, value)?,
            "model_seed" => self.model_seed = parse(key, value)?,
            "embed_dim" => self.embed_dim = parse(key, value)?,
            "hidden_dim" => self.hidden_dim = parse(key, value)?,
            "graph_dim" => self.graph_dim = parse(key, value)?,
            "hop_threshold" => self.hop_threshold = parse(key, value)?,
            "max_span" => self.max_span = parse(key, value)?,
            "num_classes" => self.num_classes = parse(key, value)?,
            "tau" => {
                self.link.tau = match value.trim() {
                    "auto" => None,
                    v => Some(parse(key, v)?),
                }
            }
            "margin" => self.link.margin = parse(key, value)?,
            "negatives_per_positive" => self.link.negatives_per_positive = parse(key, value)?,
            "hits_k" => {
                self.link.hits_k = value
                    .split(',')
                    .filter(|s| !s.trim().is_empty())
                    .map(|s| parse(key, s))
                    .collect::<Result<_>>()?
            }
            "w_pl" => self.weights.pl = parse(key, value)?,
            "w_gel" => self.weights.gel = parse(key, value)?,
            "w_rl" => self.weights.rl = parse(key, value)?,
            "eval_kg" => self.eval_kg = parse(key, value)?,
            other => return Err(Error::Argument(format!("unknown config key `{other}`"))),
        }
        Ok(())
    }

    /// Parses `key = value` lines over the defaults; `#` starts a comment.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.apply_kv(text)?;
        Ok(cfg)
    }

    pub fn apply_kv(&mut self, text: &str) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((k, v)) = line.split_once('=') else {
                return Err(Error::Parse {
                    line: i + 1,
                    message: format!("expected `key = value`, got `{line}`"),
                });
            };
            self.set(k, v).map_err(|e| Error::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
        }
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse_kv(&text)
    }

    pub fn to_kv(&self) -> String {
        let tau = self.link.tau.map_or_else(|| "auto".to_string(), |t| format!("{t:?}"));
        let hits: Vec<String> = self.link.hits_k.iter().map(usize::to_string).collect();
        let mut out = String::new();
        let mut kv = |k: &str, v: String| out.push_str(&format!("{k} = {v}\n"));
        kv("mode", self.mode.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("epochs", self.epochs.to_string());
        kv("learning_rate", format!("{:?}", self.learning_rate));
        kv("kg_fraction", format!("{:?}", self.kg_fraction));
        kv("kg_seed", self.kg_seed.to_string());
        kv("model_seed", self.model_seed.to_string());
        kv("embed_dim", self.embed_dim.to_string());
        kv("hidden_dim", self.hidden_dim.to_string());
        kv("graph_dim", self.graph_dim.to_string());
        kv("hop_threshold", self.hop_threshold.to_string());
        kv("max_span", self.max_span.to_string());
        kv("num_classes", self.num_classes.to_string());
        kv("tau", tau);
        kv("margin", format!("{:?}", self.link.margin));
        kv("negatives_per_positive", self.link.negatives_per_positive.to_string());
        kv("hits_k", hits.join(","));
        kv("w_pl", format!("{:?}", self.weights.pl));
        kv("w_gel", format!("{:?}", self.weights.gel));
        kv("w_rl", format!("{:?}", self.weights.rl));
        kv("eval_kg", self.eval_kg.to_string());
        out
    }
}
