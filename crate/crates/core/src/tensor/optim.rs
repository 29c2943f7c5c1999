use crate::error::{Error, Result};

use super::ParamRegistry;

/// Plain SGD: `w <- w - lr * grad`, then zeroes every gradient.
///
/// All gradients are validated before any parameter is touched.
pub fn sgd_step(params: &mut ParamRegistry, learning_rate: f64) -> Result<()> {
    if !learning_rate.is_finite() || learning_rate < 0.0 {
        return Err(Error::Argument(format!(
            "learning rate must be finite and non-negative, got {learning_rate}"
        )));
    }
    for (name, t) in params.iter() {
        if t.grad().is_some_and(|g| g.iter().any(|x| !x.is_finite())) {
            return Err(Error::NonFinite(format!("gradient of `{name}`")));
        }
    }
    for (_, t) in params.iter_mut() {
        let grad = match t.grad() {
            Some(g) => g.to_vec(),
            None => continue,
        };
        for (w, g) in t.data_mut().iter_mut().zip(&grad) {
            *w -= learning_rate * g;
        }
    }
    params.zero_grad();
    Ok(())
}
