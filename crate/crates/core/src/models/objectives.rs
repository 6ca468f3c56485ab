//! Analytic objectives with closed-form gradients.

use crate::error::{check_finite, check_len, Error, Result};
use crate::vecmath::{dot_unchecked, norm};

/// `½‖w‖²` and its gradient `w`.
pub fn quadratic_objective(w: &[f64]) -> (f64, Vec<f64>) {
    (0.5 * dot_unchecked(w, w), w.to_vec())
}

/// Negative cosine between `w` and a fixed direction `x`:
/// `f(w) = −⟨w, x⟩ / (‖w‖·‖x‖)`.
///
/// `f(c·w) = f(w)` for every `c > 0`, so the gradient is orthogonal to `w`.
pub fn scale_invariant_objective(w: &[f64], x: &[f64]) -> Result<(f64, Vec<f64>)> {
    check_len(w.len(), x.len())?;
    check_finite(w, "scale-invariant objective weights")?;
    let wn = norm(w);
    let xn = norm(x);
    if wn == 0.0 || xn == 0.0 {
        return Err(Error::Config(
            "scale-invariant objective is undefined at zero".into(),
        ));
    }
    let cos = dot_unchecked(w, x) / (wn * xn);
    // ∇f = −(x̂ − cos·ŵ)/‖w‖
    let grad = w
        .iter()
        .zip(x)
        .map(|(wi, xi)| -(xi / xn - cos * wi / wn) / wn)
        .collect();
    Ok((-cos, grad))
}
