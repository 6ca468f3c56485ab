//! Two-dimensional loss slices `L(w + a·d₁ + b·d₂)`.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_distr::{Distribution, StandardNormal};
use rand_xoshiro::Xoshiro256PlusPlus;

use crate::error::{check_len, Error, Result};
use crate::optim::ParamBlock;
use crate::vecmath::norm;

/// Losses on a `grid_n × grid_n` lattice over `[−span, span]²`.
#[derive(Debug, Clone, PartialEq)]
pub struct LandscapeGrid {
    /// Offsets along each direction, ascending. The middle entry of an odd
    /// grid is exactly zero.
    pub coords: Vec<f64>,
    /// Row-major: `losses[i * grid_n + j]` is the loss at `(coords[i], coords[j])`.
    pub losses: Vec<f64>,
}

impl LandscapeGrid {
    pub fn grid_n(&self) -> usize {
        self.coords.len()
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.losses[i * self.grid_n() + j]
    }

    /// Writes `a,b,loss` rows.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        w.write_record(["a", "b", "loss"])?;
        for (i, a) in self.coords.iter().enumerate() {
            for (j, b) in self.coords.iter().enumerate() {
                w.write_record([a.to_string(), b.to_string(), self.at(i, j).to_string()])?;
            }
        }
        w.flush().map_err(|e| Error::io("<landscape csv>", e))?;
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Grid offsets `span·(2i − (n−1))/(n−1)`; a single point sits at zero.
pub fn grid_coords(grid_n: usize, span: f64) -> Vec<f64> {
    if grid_n == 1 {
        return vec![0.0];
    }
    let half = (grid_n - 1) as f64;
    (0..grid_n)
        .map(|i| span * (2.0 * i as f64 - half) / half)
        .collect()
}

/// Evaluates `loss_fn(center + a·d1 + b·d2)` over the grid.
pub fn landscape_slice<F>(
    center: &[f64],
    d1: &[f64],
    d2: &[f64],
    grid_n: usize,
    span: f64,
    mut loss_fn: F,
) -> Result<LandscapeGrid>
where
    F: FnMut(&[f64]) -> Result<f64>,
{
    check_len(center.len(), d1.len())?;
    check_len(center.len(), d2.len())?;
    if grid_n == 0 {
        return Err(Error::Config("grid_n must be at least 1".into()));
    }
    if !(span.is_finite() && span >= 0.0) {
        return Err(Error::Config(format!(
            "span must be finite and non-negative, got {span}"
        )));
    }
    let coords = grid_coords(grid_n, span);
    let mut losses = Vec::with_capacity(grid_n * grid_n);
    let mut probe = vec![0.0; center.len()];
    for &a in &coords {
        for &b in &coords {
            for (((p, &w), &x), &y) in probe.iter_mut().zip(center).zip(d1).zip(d2) {
                *p = w + a * x + b * y;
            }
            losses.push(loss_fn(&probe)?);
        }
    }
    Ok(LandscapeGrid { coords, losses })
}

/// A seeded Gaussian direction rescaled block by block so that each block's
/// part has the norm of the corresponding parameters. Blocks of logical
/// dimension ≤ 1 (biases) get a zero direction.
pub fn filter_normalized_direction(blocks: &[ParamBlock], seed: u64) -> Vec<f64> {
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    let mut out = Vec::with_capacity(blocks.iter().map(|b| b.numel()).sum());
    for b in blocks {
        let mut d: Vec<f64> = (0..b.numel())
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        let (dn, wn) = (norm(&d), norm(&b.values));
        let factor = if b.logical_dim <= 1 || dn == 0.0 {
            0.0
        } else {
            wn / dn
        };
        d.iter_mut().for_each(|x| *x *= factor);
        out.extend(d);
    }
    out
}
