//! Drive AdamO by hand on a small two-block problem and watch the radial and
//! tangential parts of each update.
//!
//!     cargo run --release --example quickstart

use adamo::optim::{Optimizer, OptimizerConfig, OptimizerKind, ParamBlock};
use adamo::vecmath::norm;

fn main() -> adamo::Result<()> {
    // A weight matrix large enough for the decoupled path, plus a bias that
    // takes the low-dimensional Adam path.
    let n = 96 * 96;
    let w: Vec<f64> = (0..n)
        .map(|i| ((i * 37 % 101) as f64 / 50.0) - 1.0)
        .collect();
    let mut blocks = vec![
        ParamBlock::new("weight", w, 2),
        ParamBlock::new("bias", vec![0.5; 96], 1),
    ];
    let cfg = OptimizerConfig {
        eta_theta: 1e-2,
        eta_rho: 1e-2,
        lambda: 1e-2,
        ..Default::default()
    };
    let mut opt = Optimizer::new(OptimizerKind::AdamO, cfg, &blocks)?;

    println!(
        "{:>4} {:>10} {:>10} {:>10} {:>10} {:>9}",
        "step", "loss", "|w|", "|d_rho|", "|d_theta|", "eta_rho"
    );
    for step in 1..=200 {
        // Minimize ½‖p − c‖² for every block, with c = 0.3 everywhere.
        let grads: Vec<Vec<f64>> = blocks
            .iter()
            .map(|b| b.values.iter().map(|v| v - 0.3).collect())
            .collect();
        let loss: f64 = grads.iter().flatten().map(|g| 0.5 * g * g).sum();
        let out = opt.step(&mut blocks, &grads)?;
        if step % 20 == 0 || step == 1 {
            let o = &out[0];
            println!(
                "{step:>4} {loss:>10.4} {:>10.4} {:>10.2e} {:>10.2e} {:>9.2e}",
                norm(&blocks[0].values),
                o.radial_norm(),
                o.tangential_norm(),
                o.eta_rho_t
            );
        }
    }
    println!(
        "target norm {:.4}, bias mean {:.4}",
        0.3 * (n as f64).sqrt(),
        blocks[1].values.iter().sum::<f64>() / 96.0
    );
    Ok(())
}
