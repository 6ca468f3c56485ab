//! On a loss that depends only on w/‖w‖, AdamO with the projection rule drops
//! every radial step, so the norm changes only through the tangential steps
//! (by Pythagoras) and the decay factor.
//!
//!     cargo run --release --example scale_invariant

use adamo::models::scale_invariant_objective;
use adamo::optim::{Optimizer, OptimizerConfig, OptimizerKind, ParamBlock};
use adamo::vecmath::norm;

fn run(projection: bool, lambda: f64) -> adamo::Result<()> {
    let d = 16384;
    let x: Vec<f64> = (0..d)
        .map(|i| ((i * 7919 % 1000) as f64 / 500.0) - 1.0)
        .collect();
    let w0: Vec<f64> = (0..d)
        .map(|i| ((i * 104_729 % 997) as f64 / 498.5) - 1.0)
        .collect();
    let cfg = OptimizerConfig {
        lambda,
        enable_projection: projection,
        ..Default::default()
    };
    let mut blocks = vec![ParamBlock::new("w", w0.clone(), 2).scale_invariant(true)];
    let mut opt = Optimizer::new(OptimizerKind::AdamO, cfg, &blocks)?;
    let (mut radial, mut tangential_sq) = (0.0, 0.0);
    let mut loss = 0.0;
    for _ in 0..500 {
        let (l, g) = scale_invariant_objective(&blocks[0].values, &x)?;
        loss = l;
        let o = &opt.step(&mut blocks, &[g])?[0];
        radial += o.radial_norm();
        tangential_sq += o.tangential_norm().powi(2);
    }
    let (n0, n1) = (norm(&w0), norm(&blocks[0].values));
    println!(
        "projection {projection:<5} λ={lambda:<6} loss {loss:.4}  ‖w‖ {n0:.4} -> {n1:.4} (rel {:+.2e})  Σ‖Δρ‖ {radial:.2e}  Σ‖Δθ‖²/2‖w‖² {:.2e}",
        (n1 - n0) / n0,
        tangential_sq / (2.0 * n0 * n0)
    );
    Ok(())
}

fn main() -> adamo::Result<()> {
    run(true, 0.0)?;
    run(false, 0.0)?;
    run(true, 1e-2)?;
    Ok(())
}
