//! Per-epoch metrics and their CSV layout.
//!
//! `metrics.csv` columns, in order:
//!
//! | column | meaning |
//! |---|---|
//! | `epoch` | 1-based epoch index |
//! | `train_loss`, `train_acc` | mean over the epoch's mini-batches, measured before each step |
//! | `test_loss`, `test_acc` | full held-out evaluation after the epoch |
//! | `grad_norm` | epoch mean of the global gradient norm `√Σ_blocks ‖g‖²` |
//!
//! followed, for every parameter block `<b>` in model order, by
//!
//! | column | meaning |
//! |---|---|
//! | `<b>.w_norm` | `‖w‖` after the epoch |
//! | `<b>.g_norm` | epoch mean of `‖g‖` |
//! | `<b>.dr_norm`, `<b>.dt_norm`, `<b>.d_norm` | `‖Δ^ρ‖`, `‖Δ^θ‖`, `‖Δ^ρ + Δ^θ‖` of the epoch's last step |
//! | `<b>.eta_rho` | radial learning rate of the last step (the plain rate for baselines) |
//! | `<b>.tau` | curvature EMA after the last step |
//!
//! Numbers use Rust's shortest round-trip formatting with `.` as decimal
//! separator; every line, including the last, ends with `\n`.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockMetrics {
    pub w_norm: f64,
    pub g_norm: f64,
    pub dr_norm: f64,
    pub dt_norm: f64,
    pub d_norm: f64,
    pub eta_rho: f64,
    pub tau: f64,
}

impl BlockMetrics {
    fn values(&self) -> [f64; 7] {
        [
            self.w_norm,
            self.g_norm,
            self.dr_norm,
            self.dt_norm,
            self.d_norm,
            self.eta_rho,
            self.tau,
        ]
    }
}

const BLOCK_COLUMNS: [&str; 7] = [
    "w_norm", "g_norm", "dr_norm", "dt_norm", "d_norm", "eta_rho", "tau",
];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub train_acc: f64,
    pub test_loss: f64,
    pub test_acc: f64,
    pub grad_norm: f64,
    pub blocks: Vec<BlockMetrics>,
}

impl MetricsRecord {
    pub fn is_finite(&self) -> bool {
        [
            self.train_loss,
            self.train_acc,
            self.test_loss,
            self.test_acc,
            self.grad_norm,
        ]
        .iter()
        .chain(
            self.blocks
                .iter()
                .flat_map(|b| b.values())
                .collect::<Vec<_>>()
                .iter(),
        )
        .all(|x| x.is_finite())
    }

    /// Sum of squared parameter norms over all blocks, square-rooted.
    pub fn total_w_norm(&self) -> f64 {
        self.blocks
            .iter()
            .map(|b| b.w_norm * b.w_norm)
            .sum::<f64>()
            .sqrt()
    }
}

pub fn csv_header(block_names: &[String]) -> Vec<String> {
    let mut cols: Vec<String> = [
        "epoch",
        "train_loss",
        "train_acc",
        "test_loss",
        "test_acc",
        "grad_norm",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for name in block_names {
        cols.extend(BLOCK_COLUMNS.iter().map(|c| format!("{name}.{c}")));
    }
    cols
}

fn csv_row(r: &MetricsRecord) -> Vec<String> {
    let mut row = vec![r.epoch.to_string()];
    row.extend(
        [
            r.train_loss,
            r.train_acc,
            r.test_loss,
            r.test_acc,
            r.grad_norm,
        ]
        .iter()
        .map(|x| x.to_string()),
    );
    for b in &r.blocks {
        row.extend(b.values().iter().map(|x| x.to_string()));
    }
    row
}

/// Streams records to CSV.
pub struct MetricsWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> MetricsWriter<W> {
    pub fn new(out: W, block_names: &[String]) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        inner.write_record(csv_header(block_names))?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, record: &MetricsRecord) -> Result<()> {
        self.inner.write_record(csv_row(record))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<W> {
        self.inner
            .flush()
            .map_err(|e| Error::io("<metrics csv>", e))?;
        self.inner
            .into_inner()
            .map_err(|e| Error::io("<metrics csv>", e.into_error()))
    }
}

/// Renders records to a CSV string.
pub fn to_csv_string(block_names: &[String], records: &[MetricsRecord]) -> Result<String> {
    let mut w = MetricsWriter::new(Vec::new(), block_names)?;
    for r in records {
        w.write(r)?;
    }
    let bytes = w.finish()?;
    String::from_utf8(bytes).map_err(|e| Error::Config(e.to_string()))
}

/// First epoch whose accuracy strictly exceeds `threshold`.
pub fn grokking_epoch(series: &[(usize, f64)], threshold: f64) -> Option<usize> {
    series
        .iter()
        .find(|(_, acc)| *acc > threshold)
        .map(|(e, _)| *e)
}

/// Population standard deviation of the records' `grad_norm` over epochs in
/// `[from, to]`; `None` if fewer than two records fall in the window.
pub fn grad_norm_std(records: &[MetricsRecord], from: usize, to: usize) -> Option<f64> {
    let xs: Vec<f64> = records
        .iter()
        .filter(|r| r.epoch >= from && r.epoch <= to)
        .map(|r| r.grad_norm)
        .collect();
    if xs.len() < 2 {
        return None;
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    Some((xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(epoch: usize, g: f64) -> MetricsRecord {
        MetricsRecord {
            epoch,
            train_loss: 0.5,
            train_acc: 0.25,
            test_loss: 1.5,
            test_acc: 0.125,
            grad_norm: g,
            blocks: vec![BlockMetrics {
                w_norm: 3.0,
                g_norm: 0.1,
                dr_norm: 0.3,
                dt_norm: 0.4,
                d_norm: 0.5,
                eta_rho: 1e-3,
                tau: 2.0,
            }],
        }
    }

    #[test]
    fn grokking_epoch_examples() {
        assert_eq!(grokking_epoch(&[(1, 0.1), (2, 0.96)], 0.95), Some(2));
        assert_eq!(grokking_epoch(&[(1, 0.1), (2, 0.5)], 0.95), None);
        assert_eq!(grokking_epoch(&[(1, 0.95), (2, 0.95)], 0.95), None);
        assert_eq!(grokking_epoch(&[], 0.95), None);
    }

    #[test]
    fn csv_layout() {
        let names = vec!["W".to_string()];
        let text = to_csv_string(&names, &[record(1, 0.25)]).unwrap();
        let mut lines = text.lines();
        assert_eq!(
            lines.next().unwrap(),
            "epoch,train_loss,train_acc,test_loss,test_acc,grad_norm,W.w_norm,W.g_norm,W.dr_norm,W.dt_norm,W.d_norm,W.eta_rho,W.tau"
        );
        assert_eq!(
            lines.next().unwrap(),
            "1,0.5,0.25,1.5,0.125,0.25,3,0.1,0.3,0.4,0.5,0.001,2"
        );
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn empty_body_keeps_header() {
        let text = to_csv_string(&["a".into()], &[]).unwrap();
        assert_eq!(text.lines().count(), 1);
        assert!(text.ends_with('\n'));
    }

    #[test]
    fn grad_norm_window() {
        let rs: Vec<_> = (1..=10)
            .map(|e| record(e, if e % 2 == 0 { 1.0 } else { 3.0 }))
            .collect();
        assert_eq!(grad_norm_std(&rs, 1, 10), Some(1.0));
        assert_eq!(grad_norm_std(&rs, 4, 4), None);
    }

    #[test]
    fn finiteness() {
        let mut r = record(1, 0.1);
        assert!(r.is_finite());
        r.blocks[0].tau = f64::NAN;
        assert!(!r.is_finite());
    }
}
