//! Modular addition (p = 97, 30 % of pairs for training) with a width-128
//! MLP, trained for 5000 epochs at lr 1e-3 and weight decay 1.0.
//!
//!     cargo run --release --example grokking -- [adam|adamw|adamp|adamo] [epochs] [seed]
//!
//! Writes metrics.csv and summary.json to runs/grokking-<optimizer>-s<seed>.

use std::path::PathBuf;
use std::time::Instant;

use adamo::harness::{run_to_dir, ExperimentConfig, Trainer};
use adamo::optim::OptimizerKind;

fn main() -> adamo::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let kind: OptimizerKind = args
        .first()
        .map_or(Ok(OptimizerKind::AdamW), |s| s.parse())?;
    let mut cfg = ExperimentConfig::grokking(kind, 0);
    if let Some(e) = args.get(1) {
        cfg.experiment.epochs = e
            .parse()
            .map_err(|_| adamo::Error::Config(format!("bad epoch count `{e}`")))?;
    }
    if let Some(s) = args.get(2) {
        cfg.experiment.seed = s
            .parse()
            .map_err(|_| adamo::Error::Config(format!("bad seed `{s}`")))?;
    }
    let dir = PathBuf::from(format!("runs/grokking-{kind}-s{}", cfg.experiment.seed));

    let start = Instant::now();
    let mut trainer = Trainer::new(cfg)?;
    let init = trainer.initial_eval().clone();
    println!(
        "initial: train loss {:.4}, test acc {:.4}",
        init.train_loss, init.test_acc
    );
    let (result, artifacts) = run_to_dir(&mut trainer, &dir)?;
    for r in result.records.iter().filter(|r| r.epoch % 250 == 0) {
        println!(
            "epoch {:>5}  train {:.4}/{:.3}  test {:.4}/{:.3}  |θ| {:.2}",
            r.epoch,
            r.train_loss,
            r.train_acc,
            r.test_loss,
            r.test_acc,
            r.total_w_norm()
        );
    }
    let s = &result.summary;
    println!(
        "{kind}: final test acc {:.4}, grokking epoch {}, {:.0} s",
        s.final_test_acc,
        s.grokking_epoch.map_or("none".into(), |e| e.to_string()),
        start.elapsed().as_secs_f64()
    );
    println!("metrics in {}", artifacts.metrics.display());
    Ok(())
}
