//! Adam, AdamW and an AdamP-style projected variant.
//!
//! All three use `eta_theta` as their learning rate. They also keep the
//! curvature EMA up to date so the same diagnostics can be logged for every
//! optimizer; it never influences their updates.

use crate::error::Result;
use crate::vecmath::norm;

use super::{
    check_step_inputs, split_update, BlockState, OptimizerConfig, ParamBlock, StepOutcome, StepPath,
};

/// Updates the plain Adam moments and returns `lr · m̂/(√v̂ + ε)`.
/// `state.t` must already count the current step.
pub(crate) fn adam_direction(
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
    lr: f64,
) -> Vec<f64> {
    let (b1, b2) = (cfg.beta1_theta, cfg.beta2_theta);
    let t = state.t as i32;
    let bc1 = 1.0 - b1.powi(t);
    let bc2 = 1.0 - b2.powi(t);
    let mut out = Vec::with_capacity(grad.len());
    for (i, &g) in grad.iter().enumerate() {
        let m = b1 * state.m_plain[i] + (1.0 - b1) * g;
        let v = b2 * state.v_plain[i] + (1.0 - b2) * (g * g);
        state.m_plain[i] = m;
        state.v_plain[i] = v;
        let m_hat = m / bc1;
        let v_hat = v / bc2;
        out.push(lr * (m_hat / (v_hat.sqrt() + cfg.eps)));
    }
    out
}

fn begin(
    block: &ParamBlock,
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
) -> Result<f64> {
    check_step_inputs(block, grad, state)?;
    state.t += 1;
    state.curvature.update(grad, cfg.beta_tau)
}

#[allow(clippy::too_many_arguments)]
fn finish(
    path: StepPath,
    block: &mut ParamBlock,
    grad: &[f64],
    delta: Vec<f64>,
    decay: f64,
    state: &BlockState,
    cfg: &OptimizerConfig,
    kappa: f64,
) -> StepOutcome {
    let (delta_radial, delta_tangential) = split_update(&delta, &block.values, cfg.eps_norm);
    for (w, d) in block.values.iter_mut().zip(&delta) {
        *w = decay * *w - d;
    }
    StepOutcome {
        path,
        delta_radial,
        delta_tangential,
        decay_factor: decay,
        grad_norm: norm(grad),
        kappa,
        tau: state.curvature.tau,
        eta_rho_t: cfg.eta_theta,
        lr_capped: false,
    }
}

pub fn adam_step(
    block: &mut ParamBlock,
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
) -> Result<StepOutcome> {
    let kappa = begin(block, grad, state, cfg)?;
    let delta = adam_direction(grad, state, cfg, cfg.eta_theta);
    Ok(finish(
        StepPath::Adam,
        block,
        grad,
        delta,
        1.0,
        state,
        cfg,
        kappa,
    ))
}

/// Adam with decoupled decay `w ← (1 − η·λ)·w` ahead of the Adam step.
pub fn adamw_step(
    block: &mut ParamBlock,
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
) -> Result<StepOutcome> {
    let kappa = begin(block, grad, state, cfg)?;
    let decay = 1.0 - cfg.eta_theta * cfg.lambda;
    let delta = adam_direction(grad, state, cfg, cfg.eta_theta);
    Ok(finish(
        StepPath::AdamW,
        block,
        grad,
        delta,
        decay,
        state,
        cfg,
        kappa,
    ))
}

/// AdamW whose update is projected orthogonally to `w` when the gradient is
/// nearly orthogonal to `w`, in which case the decay is scaled by
/// `adamp_wd_ratio`.
///
/// The block is treated as a single view: the test is
/// `|cos(g, w)| < adamp_delta / √numel`. Cosines use `ε` in the denominator.
pub fn adamp_step(
    block: &mut ParamBlock,
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
) -> Result<StepOutcome> {
    let kappa = begin(block, grad, state, cfg)?;
    let mut delta = adam_direction(grad, state, cfg, cfg.eta_theta);
    let w = &block.values;
    let cos = crate::vecmath::dot_unchecked(grad, w).abs() / (norm(grad) * norm(w) + cfg.eps);
    let projected = cos < cfg.adamp_delta / (block.numel() as f64).sqrt();
    let mut wd_ratio = 1.0;
    if projected {
        crate::geometry::project_tangential_inplace(&mut delta, w, cfg.eps_norm);
        wd_ratio = cfg.adamp_wd_ratio;
    }
    let decay = 1.0 - cfg.eta_theta * cfg.lambda * wd_ratio;
    Ok(finish(
        StepPath::AdamP { projected },
        block,
        grad,
        delta,
        decay,
        state,
        cfg,
        kappa,
    ))
}
