//! Trains the two-moons model briefly, then evaluates the training loss on a
//! filter-normalized 2-D slice around the final weights.
//!
//!     cargo run --release --example landscape -- [adamo|adamw] [grid_n] [span]
//!
//! Writes runs/landscape-<optimizer>.csv with columns a, b, loss.

use adamo::harness::landscape::{filter_normalized_direction, landscape_slice};
use adamo::harness::{ExperimentConfig, Trainer};
use adamo::optim::OptimizerKind;

fn main() -> adamo::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: OptimizerKind = args
        .first()
        .map_or(Ok(OptimizerKind::AdamO), |s| s.parse())?;
    let grid_n = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(21);
    let span = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(1.0);

    let mut cfg = ExperimentConfig::toy2d(kind, 0);
    cfg.experiment.epochs = 300;
    cfg.task.hidden = 256;
    let mut trainer = Trainer::new(cfg)?;
    trainer.run()?;

    let center: Vec<f64> = trainer
        .blocks()
        .iter()
        .flat_map(|b| b.values.iter().copied())
        .collect();
    let d1 = filter_normalized_direction(trainer.blocks(), 1);
    let d2 = filter_normalized_direction(trainer.blocks(), 2);
    let grid = landscape_slice(&center, &d1, &d2, grid_n, span, |w| trainer.loss_at(w))?;

    std::fs::create_dir_all("runs").map_err(|e| adamo::Error::io("runs", e))?;
    let path = std::path::PathBuf::from(format!("runs/landscape-{kind}.csv"));
    grid.save(&path)?;

    let mid = grid_n / 2;
    let (lo, hi) = grid
        .losses
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| {
            (lo.min(x), hi.max(x))
        });
    println!(
        "{kind}: centre loss {:.4}, range [{lo:.4}, {hi:.4}]",
        grid.at(mid, mid)
    );
    let shades = [' ', '.', ':', '-', '=', '+', '*', '#', '%', '@'];
    for i in 0..grid_n {
        let row: String = (0..grid_n)
            .map(|j| {
                let t = ((grid.at(i, j) - lo) / (hi - lo).max(1e-300)).sqrt();
                shades[((t * 9.0).round() as usize).min(9)]
            })
            .collect();
        println!("    {row}");
    }
    println!("wrote {}", path.display());
    Ok(())
}
