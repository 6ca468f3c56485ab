//! AdamO and its ablations (isotropic decay, no curvature, no projection, no
//! dimension rule) against AdamW on a reduced modular-addition task
//! (p = 23, 70 % train, width 256). AdamW keeps λ = 1; the AdamO variants use
//! λ = 1e-3, since with the radial step size near its cap a larger λ shrinks
//! the weights to zero. The dimension threshold is lowered to 1024 so the
//! weight matrices take the decoupled path.
//!
//!     cargo run --release --example ablations -- [epochs]

use adamo::harness::{train, ExperimentConfig};
use adamo::optim::{DecayMode, OptimizerKind};

fn main() -> adamo::Result<()> {
    let epochs = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(1500);
    let base = |kind| {
        let mut cfg = ExperimentConfig::grokking(kind, 0);
        cfg.task.modulus = 23;
        cfg.task.split_fraction = 0.7;
        cfg.task.hidden = 256;
        cfg.experiment.batch_size = 64;
        cfg.experiment.epochs = epochs;
        cfg.experiment.eval_every = 10;
        cfg.optimizer.eta_theta = 3e-3;
        cfg.optimizer.eta_rho = 3e-3;
        cfg.optimizer.lambda = if kind == OptimizerKind::AdamW {
            1.0
        } else {
            1e-3
        };
        cfg.optimizer.dim_threshold = 1024;
        cfg
    };
    let mut variants: Vec<(&str, ExperimentConfig)> = vec![
        ("AdamW", base(OptimizerKind::AdamW)),
        ("AdamO", base(OptimizerKind::AdamO)),
    ];
    let mut iso = base(OptimizerKind::AdamO);
    iso.optimizer.decay_mode = DecayMode::Isotropic;
    variants.push(("AdamO-Isotropic", iso));
    let mut c = base(OptimizerKind::AdamO);
    c.optimizer.enable_curvature = false;
    variants.push(("AdamO w/o curvature", c));
    let mut p = base(OptimizerKind::AdamO);
    p.optimizer.enable_projection = false;
    variants.push(("AdamO w/o projection", p));
    let mut d = base(OptimizerKind::AdamO);
    d.optimizer.enable_dimension = false;
    variants.push(("AdamO w/o dimension", d));

    println!(
        "{:<22} {:>9} {:>9} {:>8} {:>8}",
        "variant", "test acc", "grok ep", "|θ|", "cap hits"
    );
    for (name, cfg) in variants {
        let s = train(&cfg)?.summary;
        println!(
            "{name:<22} {:>9.4} {:>9} {:>8.2} {:>8}",
            s.final_test_acc,
            s.grokking_epoch.map_or("-".into(), |e| e.to_string()),
            s.final_total_norm,
            s.radial_lr_cap_hits
        );
    }
    Ok(())
}
