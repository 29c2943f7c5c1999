use indexmap::IndexMap;

use crate::error::{Error, Result};

use super::{ParamRegistry, Tensor};

/// Handle to a value recorded on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

/// Cross-entropy targets: one class index or one probability row per logit row.
#[derive(Clone, Debug, PartialEq)]
pub enum Targets {
    Indices(Vec<usize>),
    Distributions(Vec<Vec<f64>>),
}

#[derive(Debug)]
enum Op {
    Leaf,
    MatMul(Var, Var),
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    AddRow(Var, Var),
    Scale(Var, f64),
    AddScalar(Var),
    Tanh(Var),
    Relu(Var),
    MeanRows(Var),
    ConcatCols(Var, Var),
    Gather(Var, Vec<usize>),
    RowNorm(Var),
    Sum(Var),
    Mean(Var),
    /// Cached softmax probabilities and target distributions, both row-major.
    SoftmaxCe {
        logits: Var,
        probs: Vec<f64>,
        targets: Vec<f64>,
    },
}

#[derive(Debug)]
struct Node {
    value: Tensor,
    op: Op,
}

/// Records a forward computation for reverse-mode differentiation.
///
/// A tape is single-use: build the graph, call [`Tape::backward`] once per
/// scalar of interest, then drop it.
#[derive(Debug, Default)]
pub struct Tape {
    nodes: Vec<Node>,
    params: IndexMap<String, Var>,
}

/// Gradients of one scalar with respect to every recorded value.
#[derive(Debug)]
pub struct Gradients {
    grads: Vec<Option<Vec<f64>>>,
}

impl Gradients {
    pub fn get(&self, var: Var) -> Option<&[f64]> {
        self.grads.get(var.0).and_then(|g| g.as_deref())
    }
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor, op: Op) -> Var {
        let value = Tensor { grad: None, ..value };
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn item(&self, var: Var) -> f64 {
        self.nodes[var.0].value.item()
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    /// Records a value that receives no gradient bookkeeping beyond the tape.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Binds a registry parameter into the tape. Repeated calls with the same
    /// name return the same handle.
    pub fn param(&mut self, registry: &ParamRegistry, name: &str) -> Result<Var> {
        if let Some(&v) = self.params.get(name) {
            return Ok(v);
        }
        let value = registry.require(name)?.clone();
        let v = self.push(value, Op::Leaf);
        self.params.insert(name.to_string(), v);
        Ok(v)
    }

    /// Parameter names bound so far, with their handles.
    pub fn bound_params(&self) -> impl Iterator<Item = (&str, Var)> {
        self.params.iter().map(|(k, &v)| (k.as_str(), v))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        let out = self.value(a).matmul(self.value(b))?;
        Ok(self.push(out, Op::MatMul(a, b)))
    }

    fn same_shape(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.shape(a) != self.shape(b) {
            return Err(Error::dim(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let x = self.value(a);
        let y = self.value(b);
        let data = x.data().iter().zip(y.data()).map(|(p, q)| f(*p, *q)).collect();
        Tensor {
            shape: x.shape().to_vec(),
            data,
            grad: None,
        }
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let x = self.value(a);
        Tensor {
            shape: x.shape().to_vec(),
            data: x.data().iter().map(|p| f(*p)).collect(),
            grad: None,
        }
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("add", a, b)?;
        let out = self.zip_with(a, b, |p, q| p + q);
        Ok(self.push(out, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("sub", a, b)?;
        let out = self.zip_with(a, b, |p, q| p - q);
        Ok(self.push(out, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_shape("mul", a, b)?;
        let out = self.zip_with(a, b, |p, q| p * q);
        Ok(self.push(out, Op::Mul(a, b)))
    }

    /// Adds a length-`n` row to every row of an `m x n` matrix.
    pub fn add_row(&mut self, a: Var, row: Var) -> Result<Var> {
        let (m, n) = self.value(a).dims2();
        if self.value(row).len() != n {
            return Err(Error::dim("add_row", self.shape(a), self.shape(row)));
        }
        let x = self.value(a);
        let r = self.value(row).data();
        let mut data = x.data().to_vec();
        for i in 0..m {
            for (d, b) in data[i * n..(i + 1) * n].iter_mut().zip(r) {
                *d += b;
            }
        }
        let out = Tensor {
            shape: x.shape().to_vec(),
            data,
            grad: None,
        };
        Ok(self.push(out, Op::AddRow(a, row)))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let out = self.map(a, |p| p * c);
        self.push(out, Op::Scale(a, c))
    }

    pub fn add_scalar(&mut self, a: Var, c: f64) -> Var {
        let out = self.map(a, |p| p + c);
        self.push(out, Op::AddScalar(a))
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let out = self.map(a, f64::tanh);
        self.push(out, Op::Tanh(a))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let out = self.map(a, |p| if p > 0.0 { p } else { 0.0 });
        self.push(out, Op::Relu(a))
    }

    /// Column means of an `m x n` matrix as a `1 x n` row; zeros when `m == 0`.
    pub fn mean_rows(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let (m, n) = x.dims2();
        let mut data = vec![0.0; n];
        if m > 0 {
            for i in 0..m {
                for (d, v) in data.iter_mut().zip(x.row(i)) {
                    *d += v;
                }
            }
            let inv = m as f64;
            data.iter_mut().for_each(|d| *d /= inv);
        }
        let out = Tensor {
            shape: vec![1, n],
            data,
            grad: None,
        };
        self.push(out, Op::MeanRows(a))
    }

    pub fn concat_cols(&mut self, a: Var, b: Var) -> Result<Var> {
        let (m, p) = self.value(a).dims2();
        let (m2, q) = self.value(b).dims2();
        if m != m2 {
            return Err(Error::dim("concat_cols", self.shape(a), self.shape(b)));
        }
        let x = self.value(a);
        let y = self.value(b);
        let mut data = Vec::with_capacity(m * (p + q));
        for i in 0..m {
            data.extend_from_slice(x.row(i));
            data.extend_from_slice(y.row(i));
        }
        let out = Tensor {
            shape: vec![m, p + q],
            data,
            grad: None,
        };
        Ok(self.push(out, Op::ConcatCols(a, b)))
    }

    /// Selects rows of a matrix, with repetition allowed.
    pub fn gather(&mut self, a: Var, rows: &[usize]) -> Result<Var> {
        let x = self.value(a);
        let (m, n) = x.dims2();
        let mut data = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            if r >= m {
                return Err(Error::Lookup(format!("row {r} of {m}-row tensor")));
            }
            data.extend_from_slice(x.row(r));
        }
        let out = Tensor {
            shape: vec![rows.len(), n],
            data,
            grad: None,
        };
        Ok(self.push(out, Op::Gather(a, rows.to_vec())))
    }

    /// Euclidean norm of each row, as an `m x 1` column.
    pub fn row_norm(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let (m, _) = x.dims2();
        let data = (0..m)
            .map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
            .collect();
        let out = Tensor {
            shape: vec![m, 1],
            data,
            grad: None,
        };
        self.push(out, Op::RowNorm(a))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.value(a).data().iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    /// Mean of all elements; zero for an empty tensor.
    pub fn mean(&mut self, a: Var) -> Var {
        let x = self.value(a);
        let s = if x.is_empty() {
            0.0
        } else {
            x.data().iter().sum::<f64>() / x.len() as f64
        };
        self.push(Tensor::scalar(s), Op::Mean(a))
    }

    /// Mean over rows of `-sum_c p_c log softmax(logits)_c`.
    ///
    /// Zero rows yield a zero loss.
    pub fn softmax_cross_entropy(&mut self, logits: Var, targets: &Targets) -> Result<Var> {
        let x = self.value(logits);
        let (n, c) = x.dims2();
        if c < 2 {
            return Err(Error::Argument(format!(
                "cross-entropy needs at least 2 classes, got {c}"
            )));
        }
        let target_rows = match targets {
            Targets::Indices(ix) => ix.len(),
            Targets::Distributions(ds) => ds.len(),
        };
        if target_rows != n {
            return Err(Error::dim("softmax_cross_entropy", x.shape(), &[target_rows]));
        }
        let mut dense = vec![0.0; n * c];
        match targets {
            Targets::Indices(ix) => {
                for (i, &t) in ix.iter().enumerate() {
                    if t >= c {
                        return Err(Error::Target { target: t, classes: c });
                    }
                    dense[i * c + t] = 1.0;
                }
            }
            Targets::Distributions(ds) => {
                for (i, d) in ds.iter().enumerate() {
                    if d.len() != c {
                        return Err(Error::dim("softmax_cross_entropy", &[c], &[d.len()]));
                    }
                    dense[i * c..(i + 1) * c].copy_from_slice(d);
                }
            }
        }
        let mut probs = vec![0.0; n * c];
        let mut total = 0.0;
        for i in 0..n {
            let row = x.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
            for j in 0..c {
                let log_p = row[j] - lse;
                probs[i * c + j] = log_p.exp();
                let p = dense[i * c + j];
                if p != 0.0 {
                    total -= p * log_p;
                }
            }
        }
        let loss = if n == 0 { 0.0 } else { total / n as f64 };
        Ok(self.push(
            Tensor::scalar(loss),
            Op::SoftmaxCe {
                logits,
                probs,
                targets: dense,
            },
        ))
    }

    /// Reverse pass from a single-element `loss`.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        if self.value(loss).len() != 1 {
            return Err(Error::dim("backward", self.shape(loss), &[]));
        }
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);

        fn acc(grads: &mut [Option<Vec<f64>>], v: Var, len: usize) -> &mut Vec<f64> {
            grads[v.0].get_or_insert_with(|| vec![0.0; len])
        }

        for i in (0..=loss.0).rev() {
            let Some(g) = grads[i].take() else { continue };
            let node = &self.nodes[i];
            match &node.op {
                Op::Leaf => {}
                Op::MatMul(a, b) => {
                    let av = self.value(*a);
                    let bv = self.value(*b);
                    let (m, k) = av.dims2();
                    let (_, n) = bv.dims2();
                    let ga = acc(&mut grads, *a, m * k);
                    for r in 0..m {
                        for p in 0..k {
                            let mut s = 0.0;
                            for c in 0..n {
                                s += g[r * n + c] * bv.data()[p * n + c];
                            }
                            ga[r * k + p] += s;
                        }
                    }
                    let gb = acc(&mut grads, *b, k * n);
                    for r in 0..m {
                        for p in 0..k {
                            let a_rp = av.data()[r * k + p];
                            if a_rp == 0.0 {
                                continue;
                            }
                            for c in 0..n {
                                gb[p * n + c] += a_rp * g[r * n + c];
                            }
                        }
                    }
                }
                Op::Add(a, b) => {
                    let ga = acc(&mut grads, *a, g.len());
                    ga.iter_mut().zip(&g).for_each(|(x, y)| *x += y);
                    let gb = acc(&mut grads, *b, g.len());
                    gb.iter_mut().zip(&g).for_each(|(x, y)| *x += y);
                }
                Op::Sub(a, b) => {
                    let ga = acc(&mut grads, *a, g.len());
                    ga.iter_mut().zip(&g).for_each(|(x, y)| *x += y);
                    let gb = acc(&mut grads, *b, g.len());
                    gb.iter_mut().zip(&g).for_each(|(x, y)| *x -= y);
                }
                Op::Mul(a, b) => {
                    let av = self.value(*a).data();
                    let bv = self.value(*b).data();
                    let ga = acc(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        ga[j] += g[j] * bv[j];
                    }
                    let gb = acc(&mut grads, *b, g.len());
                    for j in 0..g.len() {
                        gb[j] += g[j] * av[j];
                    }
                }
                Op::AddRow(a, row) => {
                    let n = self.value(*row).len();
                    let ga = acc(&mut grads, *a, g.len());
                    ga.iter_mut().zip(&g).for_each(|(x, y)| *x += y);
                    let gr = acc(&mut grads, *row, n);
                    for chunk in g.chunks(n.max(1)) {
                        gr.iter_mut().zip(chunk).for_each(|(x, y)| *x += y);
                    }
                }
                Op::Scale(a, c) => {
                    let ga = acc(&mut grads, *a, g.len());
                    ga.iter_mut().zip(&g).for_each(|(x, y)| *x += y * c);
                }
                Op::AddScalar(a) => {
                    let ga = acc(&mut grads, *a, g.len());
                    ga.iter_mut().zip(&g).for_each(|(x, y)| *x += y);
                }
                Op::Tanh(a) => {
                    let out = node.value.data();
                    let ga = acc(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        ga[j] += g[j] * (1.0 - out[j] * out[j]);
                    }
                }
                Op::Relu(a) => {
                    let inp = self.value(*a).data();
                    let ga = acc(&mut grads, *a, g.len());
                    for j in 0..g.len() {
                        if inp[j] > 0.0 {
                            ga[j] += g[j];
                        }
                    }
                }
                Op::MeanRows(a) => {
                    let (m, n) = self.value(*a).dims2();
                    let ga = acc(&mut grads, *a, m * n);
                    if m > 0 {
                        let inv = 1.0 / m as f64;
                        for r in 0..m {
                            for c in 0..n {
                                ga[r * n + c] += g[c] * inv;
                            }
                        }
                    }
                }
                Op::ConcatCols(a, b) => {
                    let (m, p) = self.value(*a).dims2();
                    let (_, q) = self.value(*b).dims2();
                    let w = p + q;
                    let ga = acc(&mut grads, *a, m * p);
                    for r in 0..m {
                        for c in 0..p {
                            ga[r * p + c] += g[r * w + c];
                        }
                    }
                    let gb = acc(&mut grads, *b, m * q);
                    for r in 0..m {
                        for c in 0..q {
                            gb[r * q + c] += g[r * w + p + c];
                        }
                    }
                }
                Op::Gather(a, rows) => {
                    let (m, n) = self.value(*a).dims2();
                    let ga = acc(&mut grads, *a, m * n);
                    for (k, &r) in rows.iter().enumerate() {
                        for c in 0..n {
                            ga[r * n + c] += g[k * n + c];
                        }
                    }
                }
                Op::RowNorm(a) => {
                    let x = self.value(*a);
                    let (m, n) = x.dims2();
                    let norms = node.value.data();
                    let ga = acc(&mut grads, *a, m * n);
                    for r in 0..m {
                        if norms[r] == 0.0 {
                            continue;
                        }
                        let s = g[r] / norms[r];
                        for c in 0..n {
                            ga[r * n + c] += s * x.data()[r * n + c];
                        }
                    }
                }
                Op::Sum(a) => {
                    let len = self.value(*a).len();
                    let ga = acc(&mut grads, *a, len);
                    ga.iter_mut().for_each(|x| *x += g[0]);
                }
                Op::Mean(a) => {
                    let len = self.value(*a).len();
                    let ga = acc(&mut grads, *a, len);
                    if len > 0 {
                        let s = g[0] / len as f64;
                        ga.iter_mut().for_each(|x| *x += s);
                    }
                }
                Op::SoftmaxCe { logits, probs, targets } => {
                    let (n, _) = self.value(*logits).dims2();
                    let ga = acc(&mut grads, *logits, probs.len());
                    if n > 0 {
                        let s = g[0] / n as f64;
                        for j in 0..probs.len() {
                            ga[j] += s * (probs[j] - targets[j]);
                        }
                    }
                }
            }
            // Keep the gradient around so callers can inspect intermediates.
            grads[i] = Some(g);
        }
        Ok(Gradients { grads })
    }

    /// Adds the gradients of every bound parameter into `registry`.
    pub fn accumulate(&self, grads: &Gradients, registry: &mut ParamRegistry) -> Result<()> {
        for (name, var) in &self.params {
            if let Some(g) = grads.get(*var) {
                registry.accumulate_grad(name, g)?;
            }
        }
        Ok(())
    }

    /// `backward` followed by `accumulate`.
    pub fn backward_into(&self, loss: Var, registry: &mut ParamRegistry) -> Result<()> {
        let grads = self.backward(loss)?;
        self.accumulate(&grads, registry)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn uniform_logits_give_log_classes() {
        for c in [2usize, 4, 50] {
            let mut tape = Tape::new();
            let z = tape.constant(Tensor::zeros(vec![3, c]));
            let loss = tape
                .softmax_cross_entropy(z, &Targets::Indices(vec![0, 1, c - 1]))
                .unwrap();
            assert!(close(tape.item(loss), (c as f64).ln(), 1e-9));
        }
    }

    #[test]
    fn cross_entropy_scalar_value() {
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::from_rows(&[&[1.0, 2.0, 3.0]]).unwrap());
        let loss = tape.softmax_cross_entropy(z, &Targets::Indices(vec![2])).unwrap();
        let e = std::f64::consts::E;
        let oracle = -(e.powi(3) / (e + e * e + e.powi(3))).ln();
        assert!(close(tape.item(loss), oracle, 1e-12));
        assert!(close(tape.item(loss), 0.40761, 1e-5));
    }

    #[test]
    fn cross_entropy_confident_and_errors() {
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::from_rows(&[&[0.0, 1000.0, 0.0, 0.0]]).unwrap());
        let loss = tape.softmax_cross_entropy(z, &Targets::Indices(vec![1])).unwrap();
        assert!(tape.item(loss) < 1e-6);
        assert!(matches!(
            tape.softmax_cross_entropy(z, &Targets::Indices(vec![4])),
            Err(Error::Target { target: 4, classes: 4 })
        ));
        let one = tape.constant(Tensor::zeros(vec![1, 1]));
        assert!(tape.softmax_cross_entropy(one, &Targets::Indices(vec![0])).is_err());
    }

    #[test]
    fn distribution_targets_match_indices() {
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::from_rows(&[&[0.3, -1.0, 2.0]]).unwrap());
        let a = tape.softmax_cross_entropy(z, &Targets::Indices(vec![1])).unwrap();
        let b = tape
            .softmax_cross_entropy(z, &Targets::Distributions(vec![vec![0.0, 1.0, 0.0]]))
            .unwrap();
        assert_eq!(tape.item(a), tape.item(b));
    }

    #[test]
    fn cross_entropy_gradient_is_softmax_minus_target() {
        let mut tape = Tape::new();
        let z = tape.constant(Tensor::from_rows(&[&[0.0, 0.0], &[0.0, 0.0]]).unwrap());
        let loss = tape.softmax_cross_entropy(z, &Targets::Indices(vec![0, 1])).unwrap();
        let g = tape.backward(loss).unwrap();
        assert_eq!(g.get(z).unwrap(), &[-0.25, 0.25, 0.25, -0.25]);
    }

    #[test]
    fn matmul_backward_rules() {
        let mut tape = Tape::new();
        let a = tape.constant(Tensor::from_rows(&[&[1.0, 2.0]]).unwrap());
        let b = tape.constant(Tensor::from_rows(&[&[3.0], &[4.0]]).unwrap());
        let z = tape.matmul(a, b).unwrap();
        let loss = tape.sum(z);
        let g = tape.backward(loss).unwrap();
        // dL/da = g * b^T, dL/db = a^T * g
        assert_eq!(g.get(a).unwrap(), &[3.0, 4.0]);
        assert_eq!(g.get(b).unwrap(), &[1.0, 2.0]);
    }

    #[test]
    fn param_binding_is_cached() {
        let mut reg = ParamRegistry::new();
        reg.insert("w", Tensor::scalar(3.0)).unwrap();
        let mut tape = Tape::new();
        let a = tape.param(&reg, "w").unwrap();
        let b = tape.param(&reg, "w").unwrap();
        assert_eq!(a, b);
        let sq = tape.mul(a, b).unwrap();
        tape.backward_into(sq, &mut reg).unwrap();
        assert_eq!(reg.get("w").unwrap().grad(), Some(&[6.0][..]));
        assert!(tape.param(&reg, "missing").is_err());
    }

    #[test]
    fn empty_mean_rows_is_zero() {
        let mut tape = Tape::new();
        let x = tape.constant(Tensor::zeros(vec![0, 4]));
        let m = tape.mean_rows(x);
        assert_eq!(tape.value(m).data(), &[0.0; 4]);
        let s = tape.sum(m);
        assert!(tape.backward(s).is_ok());
    }
}
