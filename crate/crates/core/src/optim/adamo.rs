use crate::curvature::{apply_cap, radial_lr};
use crate::error::{Error, Result};
use crate::geometry::{project_radial_inplace, project_tangential_inplace, split_into};
use crate::vecmath::norm;

use super::{
    check_step_inputs, low_dim_predicate, split_update, BlockState, DecayMode, OptimizerConfig,
    ParamBlock, StepOutcome, StepPath,
};

/// `(1 − η_ρ,t·λ)·w`. The factor must stay positive so the direction of `w`
/// is preserved.
pub fn radial_decay(w: &[f64], eta_rho_t: f64, lambda: f64) -> Result<Vec<f64>> {
    let f = decay_factor(eta_rho_t, lambda)?;
    Ok(w.iter().map(|x| f * x).collect())
}

fn decay_factor(lr: f64, lambda: f64) -> Result<f64> {
    let shrink = lr * lambda;
    if shrink >= 1.0 {
        return Err(Error::Config(format!(
            "decay step lr·lambda = {shrink} would flip the sign of the weights"
        )));
    }
    Ok(1.0 - shrink)
}

/// Curvature bookkeeping shared by both AdamO paths: advances `t`, folds the
/// gradient into `τ` and returns `(κ, η_ρ,t, capped)`.
fn advance(
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
) -> Result<(f64, f64, bool)> {
    state.t += 1;
    let kappa = state.curvature.update(grad, cfg.beta_tau)?;
    if !cfg.enable_curvature {
        return Ok((kappa, cfg.eta_rho, false));
    }
    let raw = radial_lr(state.curvature.tau, cfg.eta_rho, cfg.tau_target, cfg.eps)?;
    let (lr, capped) = apply_cap(raw, cfg.eta_rho, cfg.radial_lr_cap);
    Ok((kappa, lr, capped))
}

/// One AdamO step on `block`.
///
/// Order: curvature update, adaptive radial rate, low-dimensional early exit,
/// gradient split, re-projected first moments, unprojected tangential second
/// moment, bias correction, radial and tangential updates (the latter
/// re-projected after preconditioning), optional tangential-only selection for
/// scale-invariant blocks, then `w ← decay·w − Δ`.
pub fn adamo_step(
    block: &mut ParamBlock,
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
) -> Result<StepOutcome> {
    check_step_inputs(block, grad, state)?;
    let (kappa, eta_rho_t, lr_capped) = advance(grad, state, cfg)?;

    if cfg.enable_dimension && low_dim_predicate(block, cfg) {
        return Ok(plain_adam_update(
            block, grad, state, cfg, kappa, eta_rho_t, lr_capped,
        ));
    }

    let n = grad.len();
    let eps_norm = cfg.eps_norm;
    let t = state.t as i32;
    let w = &block.values;

    let mut g_rho = vec![0.0; n];
    let mut g_theta = vec![0.0; n];
    split_into(grad, w, eps_norm, &mut g_rho, &mut g_theta);

    let (b1r, b1t, b2t) = (cfg.beta1_rho, cfg.beta1_theta, cfg.beta2_theta);
    project_radial_inplace(&mut state.m_rho, w, eps_norm);
    project_tangential_inplace(&mut state.m_theta, w, eps_norm);
    for i in 0..n {
        state.m_rho[i] = b1r * state.m_rho[i] + (1.0 - b1r) * g_rho[i];
        state.m_theta[i] = b1t * state.m_theta[i] + (1.0 - b1t) * g_theta[i];
        state.v_theta[i] = b2t * state.v_theta[i] + (1.0 - b2t) * (g_theta[i] * g_theta[i]);
    }

    let bc1r = 1.0 - b1r.powi(t);
    let bc1t = 1.0 - b1t.powi(t);
    let bc2t = 1.0 - b2t.powi(t);

    // g_rho and g_theta are dead; reuse them for the two update components.
    let mut delta_rho = g_rho;
    let mut delta_theta = g_theta;
    for i in 0..n {
        delta_rho[i] = state.m_rho[i] / bc1r;
        let v_hat = state.v_theta[i] / bc2t;
        delta_theta[i] = (state.m_theta[i] / bc1t) / (v_hat.sqrt() + cfg.eps);
    }
    project_radial_inplace(&mut delta_rho, w, eps_norm);
    project_tangential_inplace(&mut delta_theta, w, eps_norm);
    for d in delta_rho.iter_mut() {
        *d *= eta_rho_t;
    }
    for d in delta_theta.iter_mut() {
        *d *= cfg.eta_theta;
    }

    if cfg.enable_projection && block.scale_invariant {
        delta_rho.fill(0.0);
    }

    let decay = match cfg.decay_mode {
        DecayMode::Radial => decay_factor(eta_rho_t, cfg.lambda)?,
        DecayMode::Isotropic => decay_factor(cfg.eta_theta, cfg.lambda)?,
    };
    for i in 0..n {
        block.values[i] = decay * block.values[i] - (delta_rho[i] + delta_theta[i]);
    }

    Ok(StepOutcome {
        path: StepPath::Decoupled,
        delta_radial: delta_rho,
        delta_tangential: delta_theta,
        decay_factor: decay,
        grad_norm: norm(grad),
        kappa,
        tau: state.curvature.tau,
        eta_rho_t,
        lr_capped,
    })
}

/// AdamO's fast path for low-dimensional blocks: plain Adam scaled by `α`,
/// without weight decay or projection.
///
/// Also advances the step counter and curvature state, exactly as
/// [`adamo_step`] does before it branches.
pub fn lowdim_step(
    block: &mut ParamBlock,
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
) -> Result<StepOutcome> {
    check_step_inputs(block, grad, state)?;
    let (kappa, eta_rho_t, lr_capped) = advance(grad, state, cfg)?;
    Ok(plain_adam_update(
        block, grad, state, cfg, kappa, eta_rho_t, lr_capped,
    ))
}

fn plain_adam_update(
    block: &mut ParamBlock,
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
    kappa: f64,
    eta_rho_t: f64,
    lr_capped: bool,
) -> StepOutcome {
    let delta = super::baselines::adam_direction(grad, state, cfg, cfg.alpha * cfg.eta_theta);
    let (delta_radial, delta_tangential) = split_update(&delta, &block.values, cfg.eps_norm);
    for (w, d) in block.values.iter_mut().zip(&delta) {
        *w -= d;
    }
    StepOutcome {
        path: StepPath::LowDim,
        delta_radial,
        delta_tangential,
        decay_factor: 1.0,
        grad_norm: norm(grad),
        kappa,
        tau: state.curvature.tau,
        eta_rho_t,
        lr_capped,
    }
}
