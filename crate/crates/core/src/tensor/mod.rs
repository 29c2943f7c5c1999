//! Dense `f64` tensors, named parameter storage and reverse-mode gradients.
//!
//! All numeric work in the crate goes through [`Tape`]: a forward pass
//! records every operation, and [`Tape::backward`] replays the record in
//! reverse to produce gradients. Parameters live in a [`ParamRegistry`]
//! and are bound into a tape by name, so one registry can feed any number
//! of independent forward passes.

mod checkpoint;
mod gradcheck;
mod optim;
mod tape;

use std::fmt;

use indexmap::IndexMap;
use rand::Rng;

use crate::error::{Error, Result};

pub use checkpoint::{parse_checkpoint, read_checkpoint, to_checkpoint_string, write_checkpoint};
pub use gradcheck::{grad_check, relative_error, GradCheckReport, DEFAULT_EPSILON};
pub use optim::sgd_step;
pub use tape::{Gradients, Tape, Targets, Var};

/// Half-width of the uniform interval used for parameter initialization.
pub const INIT_SCALE: f64 = 0.1;

/// Row-major dense array of `f64`.
///
/// Shapes of length 0 are scalars, length 1 are treated as a single row and
/// length 2 as a matrix. Higher ranks are stored but only flattened to
/// `(shape[0], rest)` by the matrix operations.
#[derive(Clone, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    data: Vec<f64>,
    grad: Option<Vec<f64>>,
}

impl Tensor {
    pub fn new(shape: impl Into<Vec<usize>>, data: Vec<f64>) -> Result<Self> {
        let shape = shape.into();
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(Error::dim("Tensor::new", &shape, &[data.len()]));
        }
        Ok(Tensor {
            shape,
            data,
            grad: None,
        })
    }

    pub fn zeros(shape: impl Into<Vec<usize>>) -> Self {
        let shape = shape.into();
        let n = shape.iter().product();
        Tensor {
            shape,
            data: vec![0.0; n],
            grad: None,
        }
    }

    pub fn scalar(value: f64) -> Self {
        Tensor {
            shape: Vec::new(),
            data: vec![value],
            grad: None,
        }
    }

    pub fn vector(data: Vec<f64>) -> Self {
        Tensor {
            shape: vec![data.len()],
            data,
            grad: None,
        }
    }

    /// Builds a matrix from equally sized rows.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        let mut data = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            if row.len() != cols {
                return Err(Error::dim("Tensor::from_rows", &[cols], &[row.len()]));
            }
            data.extend_from_slice(row);
        }
        Tensor::new(vec![rows.len(), cols], data)
    }

    pub fn uniform<R: Rng + ?Sized>(shape: impl Into<Vec<usize>>, scale: f64, rng: &mut R) -> Self {
        let shape = shape.into();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
        Tensor {
            shape,
            data,
            grad: None,
        }
    }

    /// Attaches a zeroed gradient buffer.
    pub fn with_grad(mut self) -> Self {
        self.grad = Some(vec![0.0; self.data.len()]);
        self
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn grad(&self) -> Option<&[f64]> {
        self.grad.as_deref()
    }

    pub fn grad_mut(&mut self) -> Option<&mut [f64]> {
        self.grad.as_deref_mut()
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// `(rows, cols)` view used by the matrix operations.
    pub fn dims2(&self) -> (usize, usize) {
        match self.shape.len() {
            0 => (1, 1),
            1 => (1, self.shape[0]),
            _ => (self.shape[0], self.shape[1..].iter().product()),
        }
    }

    pub fn at(&self, row: usize, col: usize) -> f64 {
        let (_, cols) = self.dims2();
        self.data[row * cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let (_, cols) = self.dims2();
        &self.data[row * cols..(row + 1) * cols]
    }

    pub fn item(&self) -> f64 {
        self.data[0]
    }

    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (m, k) = self.dims2();
        let (k2, n) = other.dims2();
        if k != k2 {
            return Err(Error::dim("matmul", &self.shape, &other.shape));
        }
        let mut out = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let a = self.data[i * k + p];
                if a == 0.0 {
                    continue;
                }
                let brow = &other.data[p * n..(p + 1) * n];
                let orow = &mut out[i * n..(i + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        Tensor::new(vec![m, n], out)
    }
}

impl fmt::Debug for Tensor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.shape)
            .field("data", &self.data)
            .finish_non_exhaustive()
    }
}

/// Named parameter tensors in insertion order.
///
/// Every tensor stored here carries a gradient buffer.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamRegistry {
    params: IndexMap<String, Tensor>,
}

impl ParamRegistry {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, tensor: Tensor) -> Result<()> {
        let name = name.into();
        if name.is_empty() || name.contains(['\t', '\n']) {
            return Err(Error::Argument(format!("invalid parameter name {name:?}")));
        }
        if self.params.contains_key(&name) {
            return Err(Error::Argument(format!("duplicate parameter `{name}`")));
        }
        let tensor = if tensor.grad.is_some() {
            tensor
        } else {
            tensor.with_grad()
        };
        self.params.insert(name, tensor);
        Ok(())
    }

    /// Registers a parameter drawn uniformly from `[-INIT_SCALE, INIT_SCALE]`.
    pub fn insert_uniform<R: Rng + ?Sized>(
        &mut self,
        name: impl Into<String>,
        shape: impl Into<Vec<usize>>,
        rng: &mut R,
    ) -> Result<()> {
        self.insert(name, Tensor::uniform(shape, INIT_SCALE, rng))
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.params.get(name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.params.get_mut(name)
    }

    pub fn require(&self, name: &str) -> Result<&Tensor> {
        self.get(name)
            .ok_or_else(|| Error::Lookup(format!("parameter `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.params.contains_key(name)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn num_elements(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    pub fn zero_grad(&mut self) {
        for t in self.params.values_mut() {
            if let Some(g) = t.grad.as_mut() {
                g.iter_mut().for_each(|x| *x = 0.0);
            }
        }
    }

    /// Adds `grad` into the gradient buffer of `name`.
    pub fn accumulate_grad(&mut self, name: &str, grad: &[f64]) -> Result<()> {
        let t = self
            .params
            .get_mut(name)
            .ok_or_else(|| Error::Lookup(format!("parameter `{name}`")))?;
        if grad.len() != t.data.len() {
            return Err(Error::dim("accumulate_grad", &t.shape, &[grad.len()]));
        }
        let buf = t.grad.get_or_insert_with(|| vec![0.0; grad.len()]);
        for (b, g) in buf.iter_mut().zip(grad) {
            *b += g;
        }
        Ok(())
    }
}
