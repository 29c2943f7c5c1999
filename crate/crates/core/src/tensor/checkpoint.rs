//! Flat text checkpoints: `name<TAB>d0,d1,..<TAB>v0 v1 ..`, one parameter per
//! line. Values use Rust's shortest round-trip formatting so a write/read
//! cycle reproduces every bit.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::{ParamRegistry, Tensor};

pub fn to_checkpoint_string(params: &ParamRegistry) -> String {
    let mut out = String::new();
    for (name, t) in params.iter() {
        out.push_str(name);
        out.push('\t');
        let shape: Vec<String> = t.shape().iter().map(usize::to_string).collect();
        out.push_str(&shape.join(","));
        out.push('\t');
        for (i, v) in t.data().iter().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{v:?}");
        }
        out.push('\n');
    }
    out
}

pub fn parse_checkpoint(text: &str) -> Result<ParamRegistry> {
    let mut params = ParamRegistry::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        let [name, shape, values] = fields[..] else {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected 3 tab-separated fields, found {}", fields.len()),
            });
        };
        let shape: Vec<usize> = if shape.is_empty() {
            Vec::new()
        } else {
            shape
                .split(',')
                .map(|d| d.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse {
                    line: line_no,
                    message: format!("bad shape: {e}"),
                })?
        };
        let data: Vec<f64> = values
            .split_ascii_whitespace()
            .map(str::parse::<f64>)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse {
                line: line_no,
                message: format!("bad value: {e}"),
            })?;
        let tensor = Tensor::new(shape, data).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        params.insert(name, tensor).map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
    }
    Ok(params)
}

pub fn write_checkpoint(params: &ParamRegistry, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, to_checkpoint_string(params)).map_err(|e| Error::io(path, e))
}

pub fn read_checkpoint(path: impl AsRef<Path>) -> Result<ParamRegistry> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_checkpoint(&text)
}
