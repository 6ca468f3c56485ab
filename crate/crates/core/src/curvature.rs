//! Gradient-difference curvature proxy and the radial learning rate derived
//! from it.
//!
//! `κ_t = ‖g_t − g_{t−1}‖²` is smoothed into `τ_t` by an exponential moving
//! average, and the radial step is scaled by `1/√(τ_t/τ_target + ε)`.

use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_len, Error, Result};
use crate::vecmath::dist2;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvatureState {
    pub tau: f64,
    pub g_prev: Vec<f64>,
}

impl CurvatureState {
    pub fn new(numel: usize, tau_target: f64) -> Self {
        Self {
            tau: tau_target,
            g_prev: vec![0.0; numel],
        }
    }

    /// Folds `g` into the EMA and returns this step's `κ`.
    pub fn update(&mut self, g: &[f64], beta_tau: f64) -> Result<f64> {
        check_len(self.g_prev.len(), g.len())?;
        check_finite(g, "gradient passed to curvature update")?;
        let kappa = dist2(g, &self.g_prev)?;
        self.tau = beta_tau * self.tau + (1.0 - beta_tau) * kappa;
        self.g_prev.copy_from_slice(g);
        Ok(kappa)
    }
}

/// `η_ρ / √(τ/τ_target + ε)`, uncapped.
pub fn radial_lr(tau: f64, eta_rho: f64, tau_target: f64, eps: f64) -> Result<f64> {
    if !(tau_target > 0.0) {
        return Err(Error::Config(format!(
            "tau_target must be positive, got {tau_target}"
        )));
    }
    if !(tau >= 0.0) {
        return Err(Error::NonFinite(format!("curvature EMA tau = {tau}")));
    }
    Ok(eta_rho / (tau / tau_target + eps).sqrt())
}

/// Applies the optional ceiling `cap · η_ρ` to a radial learning rate.
/// Returns the effective rate and whether the ceiling was hit.
pub fn apply_cap(lr: f64, eta_rho: f64, cap: Option<f64>) -> (f64, bool) {
    match cap {
        Some(c) if lr > c * eta_rho => (c * eta_rho, true),
        _ => (lr, false),
    }
}
