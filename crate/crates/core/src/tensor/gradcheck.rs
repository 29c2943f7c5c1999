use crate::error::{Error, Result};

use super::{ParamRegistry, Tape, Var};

pub const DEFAULT_EPSILON: f64 = 1e-5;

/// `|a - n| / max(|a|, |n|, 1e-8)`
pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

#[derive(Clone, Debug, PartialEq)]
pub struct GradCheckReport {
    pub max_relative_error: f64,
    /// Parameter name and flat index of the worst element.
    pub worst: Option<(String, usize)>,
    pub checked: usize,
}

fn evaluate<F>(f: &F, params: &ParamRegistry) -> Result<f64>
where
    F: Fn(&mut Tape, &ParamRegistry) -> Result<Var>,
{
    let mut tape = Tape::new();
    let loss = f(&mut tape, params)?;
    let v = tape.item(loss);
    if !v.is_finite() {
        return Err(Error::NonFinite("grad_check objective".into()));
    }
    Ok(v)
}

/// Compares reverse-mode gradients of `f` against central differences for
/// every element of every parameter in `params`.
///
/// `f` must build a scalar on the given tape and be deterministic.
pub fn grad_check<F>(f: F, params: &ParamRegistry, epsilon: f64) -> Result<GradCheckReport>
where
    F: Fn(&mut Tape, &ParamRegistry) -> Result<Var>,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(Error::Argument(format!("epsilon must be positive, got {epsilon}")));
    }
    let mut tape = Tape::new();
    let loss = f(&mut tape, params)?;
    if !tape.item(loss).is_finite() {
        return Err(Error::NonFinite("grad_check objective".into()));
    }
    let grads = tape.backward(loss)?;
    let bound: Vec<(String, Var)> = tape.bound_params().map(|(n, v)| (n.to_string(), v)).collect();

    let mut work = params.clone();
    let mut report = GradCheckReport {
        max_relative_error: 0.0,
        worst: None,
        checked: 0,
    };
    let names: Vec<String> = params.names().map(str::to_string).collect();
    for name in names {
        let len = params.require(&name)?.len();
        let analytic: Vec<f64> = bound
            .iter()
            .find(|(n, _)| *n == name)
            .and_then(|(_, v)| grads.get(*v))
            .map(<[f64]>::to_vec)
            .unwrap_or_else(|| vec![0.0; len]);
        for (j, &a) in analytic.iter().enumerate() {
            let orig = params.require(&name)?.data()[j];
            set(&mut work, &name, j, orig + epsilon);
            let plus = evaluate(&f, &work)?;
            set(&mut work, &name, j, orig - epsilon);
            let minus = evaluate(&f, &work)?;
            set(&mut work, &name, j, orig);
            let numeric = (plus - minus) / (2.0 * epsilon);
            let err = relative_error(a, numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_relative_error {
                report.max_relative_error = err;
                report.worst = Some((name.clone(), j));
            }
        }
    }
    Ok(report)
}

fn set(params: &mut ParamRegistry, name: &str, index: usize, value: f64) {
    if let Some(t) = params.get_mut(name) {
        t.data_mut()[index] = value;
    }
}
