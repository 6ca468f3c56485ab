//! Two-moons classification with AdamO and the baselines: compares final
//! parameter norms and draws each decision boundary as text.
//!
//!     cargo run --release --example toy2d_norms -- [seed]

use adamo::harness::{ExperimentConfig, Trainer};
use adamo::models::{Features, Matrix, MlpModel};
use adamo::optim::OptimizerKind;

fn boundary(model: &MlpModel) -> adamo::Result<Vec<String>> {
    let (cols, rows) = (60, 20);
    let mut points = Vec::with_capacity(cols * rows * 2);
    for r in 0..rows {
        let y = 1.5 - 2.5 * r as f64 / (rows - 1) as f64;
        for c in 0..cols {
            points.extend([-1.5 + 4.0 * c as f64 / (cols - 1) as f64, y]);
        }
    }
    let preds = model.predict(&Features::Dense(Matrix::new(rows * cols, 2, points)?))?;
    Ok(preds
        .chunks(cols)
        .map(|row| {
            row.iter()
                .map(|&p| if p == 0 { '.' } else { '#' })
                .collect()
        })
        .collect())
}

fn main() -> adamo::Result<()> {
    let seed = std::env::args()
        .nth(1)
        .and_then(|s| s.parse().ok())
        .unwrap_or(0);
    for kind in [
        OptimizerKind::AdamW,
        OptimizerKind::AdamO,
        OptimizerKind::Adam,
    ] {
        let mut cfg = ExperimentConfig::toy2d(kind, seed);
        if kind == OptimizerKind::Adam {
            cfg.optimizer.lambda = 0.0;
        }
        let mut trainer = Trainer::new(cfg.clone())?;
        let result = trainer.run()?;
        let s = &result.summary;
        println!(
            "{kind:>5}: |θ| = {:.3}  (W1 {:.3}, W2 {:.3})  train acc {:.3}  test acc {:.3}",
            s.final_total_norm,
            s.final_norms["W1"],
            s.final_norms["W2"],
            s.final_train_acc,
            s.final_test_acc
        );
        let model = MlpModel::from_blocks(2, cfg.task.hidden, 2, result.blocks)?;
        for line in boundary(&model)? {
            println!("    {line}");
        }
    }
    Ok(())
}
