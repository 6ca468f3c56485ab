//! Optimizers operating on tagged, flattened parameter blocks.
//!
//! [`OptimizerKind::AdamO`] splits every update into a radial part (along the
//! current weights) and a tangential part (orthogonal to them). The radial part
//! is a plain momentum step whose learning rate shrinks when consecutive
//! gradients change a lot; the tangential part carries Adam's per-coordinate
//! preconditioning. Weight decay rescales the block without rotating it.
//! Small blocks (biases, affine terms) take an ordinary Adam step, and blocks
//! tagged scale-invariant drop the radial step entirely.
//!
//! Adam, AdamW and an AdamP-style projected variant are provided as baselines
//! with the same block/state interface.

mod adamo;
mod baselines;

use serde::{Deserialize, Serialize};

use crate::curvature::CurvatureState;
use crate::error::{check_finite, check_len, Error, Result};
use crate::geometry::{self, DEFAULT_EPS_NORM};
use crate::vecmath::norm;

pub use adamo::{adamo_step, lowdim_step, radial_decay};
pub use baselines::{adam_step, adamp_step, adamw_step};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum OptimizerKind {
    Adam,
    AdamW,
    AdamP,
    AdamO,
}

impl std::fmt::Display for OptimizerKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            OptimizerKind::Adam => "adam",
            OptimizerKind::AdamW => "adamw",
            OptimizerKind::AdamP => "adamp",
            OptimizerKind::AdamO => "adamo",
        })
    }
}

impl std::str::FromStr for OptimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "adam" => Ok(OptimizerKind::Adam),
            "adamw" => Ok(OptimizerKind::AdamW),
            "adamp" => Ok(OptimizerKind::AdamP),
            "adamo" => Ok(OptimizerKind::AdamO),
            other => Err(Error::Config(format!("unknown optimizer `{other}`"))),
        }
    }
}

/// How AdamO shrinks the weights.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecayMode {
    /// `(1 − η_ρ,t·λ)·w`, tied to the adaptive radial learning rate.
    Radial,
    /// `(1 − η_θ·λ)·w`, the AdamW-style coupling used by the isotropic ablation.
    Isotropic,
}

/// Scalar hyperparameters shared by every optimizer in this module.
///
/// Baselines read `eta_theta` as their learning rate, `beta1_theta` and
/// `beta2_theta` as their moment rates and `lambda` as their decay.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizerConfig {
    pub eta_theta: f64,
    pub eta_rho: f64,
    pub lambda: f64,
    pub beta1_theta: f64,
    pub beta2_theta: f64,
    pub beta1_rho: f64,
    pub beta_tau: f64,
    pub tau_target: f64,
    pub eps: f64,
    pub alpha: f64,
    pub dim_threshold: usize,
    pub decay_mode: DecayMode,
    pub enable_curvature: bool,
    pub enable_projection: bool,
    pub enable_dimension: bool,
    pub adamp_delta: f64,
    pub adamp_wd_ratio: f64,
    /// Ceiling on the adaptive radial rate as a multiple of `eta_rho`.
    pub radial_lr_cap: Option<f64>,
    /// `‖w‖²` below which a block has no usable direction.
    pub eps_norm: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            eta_theta: 8e-4,
            eta_rho: 5e-3,
            lambda: 2e-4,
            beta1_theta: 0.9,
            beta2_theta: 0.999,
            beta1_rho: 0.9,
            beta_tau: 0.99,
            tau_target: 1.0,
            eps: 1e-8,
            alpha: 1.0,
            dim_threshold: 8192,
            decay_mode: DecayMode::Radial,
            enable_curvature: true,
            enable_projection: true,
            enable_dimension: true,
            adamp_delta: 0.1,
            adamp_wd_ratio: 0.5,
            radial_lr_cap: Some(10.0),
            eps_norm: DEFAULT_EPS_NORM,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        let rates = [
            ("beta1_theta", self.beta1_theta),
            ("beta2_theta", self.beta2_theta),
            ("beta1_rho", self.beta1_rho),
            ("beta_tau", self.beta_tau),
        ];
        for (name, r) in rates {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::Config(format!("{name} must lie in [0, 1), got {r}")));
            }
        }
        for (name, lr) in [("eta_theta", self.eta_theta), ("eta_rho", self.eta_rho)] {
            if !(lr > 0.0 && lr.is_finite()) {
                return Err(Error::Config(format!("{name} must be positive, got {lr}")));
            }
        }
        if !(self.eps > 0.0) {
            return Err(Error::Config(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if !(self.lambda >= 0.0 && self.lambda.is_finite()) {
            return Err(Error::Config(format!(
                "lambda must be non-negative, got {}",
                self.lambda
            )));
        }
        if !(self.alpha > 0.0 && self.alpha <= 1.0) {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if !(self.tau_target > 0.0 && self.tau_target.is_finite()) {
            return Err(Error::Config(format!(
                "tau_target must be positive, got {}",
                self.tau_target
            )));
        }
        if self.dim_threshold == 0 {
            return Err(Error::Config("dim_threshold must be at least 1".into()));
        }
        if let Some(cap) = self.radial_lr_cap {
            if !(cap > 0.0) {
                return Err(Error::Config(format!(
                    "radial_lr_cap must be positive, got {cap}"
                )));
            }
        }
        if !(self.adamp_delta >= 0.0) || !(self.adamp_wd_ratio >= 0.0) {
            return Err(Error::Config(
                "adamp_delta and adamp_wd_ratio must be non-negative".into(),
            ));
        }
        if !(self.eps_norm >= 0.0) {
            return Err(Error::Config("eps_norm must be non-negative".into()));
        }
        Ok(())
    }
}

/// One named parameter tensor, flattened, plus the architecture tags the
/// optimizer dispatches on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub values: Vec<f64>,
    /// Rank of the tensor before flattening.
    pub logical_dim: usize,
    pub scale_invariant: bool,
}

impl ParamBlock {
    pub fn new(name: impl Into<String>, values: Vec<f64>, logical_dim: usize) -> Self {
        Self {
            name: name.into(),
            values,
            logical_dim,
            scale_invariant: false,
        }
    }

    pub fn scale_invariant(mut self, tag: bool) -> Self {
        self.scale_invariant = tag;
        self
    }

    pub fn numel(&self) -> usize {
        self.values.len()
    }
}

/// Biases, affine terms and anything smaller than `dim_threshold` elements.
pub fn low_dim_predicate(block: &ParamBlock, cfg: &OptimizerConfig) -> bool {
    block.logical_dim <= 1 || block.numel() < cfg.dim_threshold
}

/// Per-block optimizer state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockState {
    pub m_rho: Vec<f64>,
    pub m_theta: Vec<f64>,
    pub v_theta: Vec<f64>,
    pub m_plain: Vec<f64>,
    pub v_plain: Vec<f64>,
    pub curvature: CurvatureState,
    pub t: u64,
}

impl BlockState {
    pub fn new(numel: usize, cfg: &OptimizerConfig) -> Self {
        Self {
            m_rho: vec![0.0; numel],
            m_theta: vec![0.0; numel],
            v_theta: vec![0.0; numel],
            m_plain: vec![0.0; numel],
            v_plain: vec![0.0; numel],
            curvature: CurvatureState::new(numel, cfg.tau_target),
            t: 0,
        }
    }

    pub fn numel(&self) -> usize {
        self.m_rho.len()
    }

    pub fn tau(&self) -> f64 {
        self.curvature.tau
    }

    pub fn g_prev(&self) -> &[f64] {
        &self.curvature.g_prev
    }
}

/// Which code path a step took.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StepPath {
    /// Full radial/tangential AdamO update.
    Decoupled,
    /// AdamO's plain-Adam path for low-dimensional blocks.
    LowDim,
    Adam,
    AdamW,
    /// AdamP, with whether the update was projected tangentially.
    AdamP {
        projected: bool,
    },
}

/// What one block step did. `delta_radial + delta_tangential` is the update
/// that was subtracted from the (decayed) weights; both are expressed with
/// respect to the pre-step weights `w_pre`.
#[derive(Debug, Clone)]
pub struct StepOutcome {
    pub path: StepPath,
    pub delta_radial: Vec<f64>,
    pub delta_tangential: Vec<f64>,
    /// Multiplier applied to `w_pre` before subtracting the update.
    pub decay_factor: f64,
    pub grad_norm: f64,
    pub kappa: f64,
    pub tau: f64,
    /// Radial learning rate used this step (the plain learning rate for
    /// baselines).
    pub eta_rho_t: f64,
    pub lr_capped: bool,
}

impl StepOutcome {
    pub fn radial_norm(&self) -> f64 {
        norm(&self.delta_radial)
    }

    pub fn tangential_norm(&self) -> f64 {
        norm(&self.delta_tangential)
    }

    /// `‖Δ^ρ + Δ^θ‖`.
    pub fn update_norm(&self) -> f64 {
        let mut acc = 0.0;
        for (r, t) in self.delta_radial.iter().zip(&self.delta_tangential) {
            let d = r + t;
            acc += d * d;
        }
        acc.sqrt()
    }
}

pub(crate) fn check_step_inputs(
    block: &ParamBlock,
    grad: &[f64],
    state: &BlockState,
) -> Result<()> {
    check_len(block.numel(), grad.len())?;
    check_len(block.numel(), state.numel())?;
    check_finite(grad, &format!("gradient of block `{}`", block.name))?;
    check_finite(&block.values, &format!("values of block `{}`", block.name))
}

/// Splits an update vector into its components along and across `w`.
pub(crate) fn split_update(delta: &[f64], w: &[f64], eps_norm: f64) -> (Vec<f64>, Vec<f64>) {
    let mut r = vec![0.0; delta.len()];
    let mut t = vec![0.0; delta.len()];
    geometry::split_into(delta, w, eps_norm, &mut r, &mut t);
    (r, t)
}

/// An optimizer instance owning one state per parameter block.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Optimizer {
    pub kind: OptimizerKind,
    pub config: OptimizerConfig,
    pub states: Vec<BlockState>,
}

impl Optimizer {
    pub fn new(
        kind: OptimizerKind,
        config: OptimizerConfig,
        blocks: &[ParamBlock],
    ) -> Result<Self> {
        config.validate()?;
        let states = blocks
            .iter()
            .map(|b| BlockState::new(b.numel(), &config))
            .collect();
        Ok(Self {
            kind,
            config,
            states,
        })
    }

    /// Steps every block with its gradient. `grads[i]` belongs to `blocks[i]`.
    pub fn step(
        &mut self,
        blocks: &mut [ParamBlock],
        grads: &[Vec<f64>],
    ) -> Result<Vec<StepOutcome>> {
        check_len(self.states.len(), blocks.len())?;
        check_len(blocks.len(), grads.len())?;
        blocks
            .iter_mut()
            .zip(grads)
            .zip(self.states.iter_mut())
            .map(|((block, grad), state)| step_block(self.kind, block, grad, state, &self.config))
            .collect()
    }
}

/// Dispatches a single block step to the rule for `kind`.
pub fn step_block(
    kind: OptimizerKind,
    block: &mut ParamBlock,
    grad: &[f64],
    state: &mut BlockState,
    cfg: &OptimizerConfig,
) -> Result<StepOutcome> {
    match kind {
        OptimizerKind::Adam => adam_step(block, grad, state, cfg),
        OptimizerKind::AdamW => adamw_step(block, grad, state, cfg),
        OptimizerKind::AdamP => adamp_step(block, grad, state, cfg),
        OptimizerKind::AdamO => adamo_step(block, grad, state, cfg),
    }
}
