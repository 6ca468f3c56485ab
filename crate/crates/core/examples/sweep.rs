//! A (η_θ, η_ρ) sensitivity grid for AdamO on a reduced modular-addition
//! task (p = 23, 70 % train, width 256), printed as a table of final test
//! accuracy. The dimension threshold is lowered to 1024 so that both weight
//! matrices take the decoupled path at this width.
//!
//!     cargo run --release --example sweep

use adamo::harness::sweep::{parse_grid, sensitivity_sweep_with};
use adamo::harness::ExperimentConfig;
use adamo::optim::OptimizerKind;

fn main() -> adamo::Result<()> {
    let mut base = ExperimentConfig::grokking(OptimizerKind::AdamO, 0);
    base.task.modulus = 23;
    base.task.split_fraction = 0.7;
    base.task.hidden = 256;
    base.experiment.batch_size = 64;
    base.experiment.epochs = 1000;
    base.experiment.eval_every = 100;
    base.optimizer.lambda = 1e-3;
    base.optimizer.dim_threshold = 1024;

    let axes = parse_grid("eta_theta=1e-3,3e-3,1e-2;eta_rho=3e-4,3e-3,3e-2")?;
    let result = sensitivity_sweep_with(&base, &axes, |i, cell| {
        eprintln!(
            "cell {i}: {} -> {:.3}",
            cell.values.join(", "),
            cell.summary.final_test_acc
        );
    })?;

    print!("{:>10}", "θ \\ ρ");
    for v in &axes[1].values {
        print!("{v:>8}");
    }
    println!();
    for (row, chunk) in result.cells.chunks(axes[1].values.len()).enumerate() {
        print!("{:>10}", axes[0].values[row]);
        for c in chunk {
            let mark = if c.summary.diverged {
                "  div".to_string()
            } else {
                format!("{:.3}", c.summary.final_test_acc)
            };
            print!("{mark:>8}");
        }
        println!();
    }
    println!(
        "cells within 1 point of the best: {}",
        result.near_best(0.01)
    );
    std::fs::create_dir_all("runs").map_err(|e| adamo::Error::io("runs", e))?;
    result.save(std::path::Path::new("runs/sweep.csv"))
}
