//! Deterministic dataset generators.
//!
//! All randomness comes from `Xoshiro256PlusPlus` seeded with
//! `seed_from_u64`, so a seed pins the data on every platform.

use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_distr::{Distribution, Normal};
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::models::{Batch, Features, Matrix};

/// One `(a, b)` example of `(a + b) mod p`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct ModularPair {
    pub a: usize,
    pub b: usize,
    pub label: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModularDataset {
    pub p: usize,
    pub split_fraction: f64,
    pub seed: u64,
    pub train: Vec<ModularPair>,
    pub test: Vec<ModularPair>,
}

/// All `p²` ordered pairs, shuffled and split so that the training part holds
/// `round(split_fraction · p²)` of them.
pub fn gen_modular_addition(p: usize, split_fraction: f64, seed: u64) -> Result<ModularDataset> {
    if p < 2 {
        return Err(Error::Config(format!(
            "modulus must be at least 2, got {p}"
        )));
    }
    if !(split_fraction > 0.0 && split_fraction < 1.0) {
        return Err(Error::Config(format!(
            "split fraction must lie in (0, 1), got {split_fraction}"
        )));
    }
    let mut pairs: Vec<ModularPair> = (0..p)
        .flat_map(|a| {
            (0..p).map(move |b| ModularPair {
                a,
                b,
                label: (a + b) % p,
            })
        })
        .collect();
    let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
    pairs.shuffle(&mut rng);
    let n_train = (split_fraction * (p * p) as f64).round() as usize;
    let test = pairs.split_off(n_train);
    Ok(ModularDataset {
        p,
        split_fraction,
        seed,
        train: pairs,
        test,
    })
}

impl ModularDataset {
    /// Input width of the concatenated one-hot encoding.
    pub fn input_width(&self) -> usize {
        2 * self.p
    }

    /// Encodes pairs as `onehot(a) ‖ onehot(b)`.
    pub fn batch(&self, pairs: &[ModularPair]) -> Batch {
        let indices = pairs.iter().flat_map(|q| [q.a, self.p + q.b]).collect();
        Batch {
            features: Features::Binary {
                width: self.input_width(),
                per_row: 2,
                indices,
            },
            targets: pairs.iter().map(|q| q.label).collect(),
        }
    }

    pub fn train_batch(&self) -> Batch {
        self.batch(&self.train)
    }

    pub fn test_batch(&self) -> Batch {
        self.batch(&self.test)
    }

    /// Writes `a,b,label,split` rows, training pairs first.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["a", "b", "label", "split"])?;
        for (split, pairs) in [("train", &self.train), ("test", &self.test)] {
            for q in pairs.iter() {
                w.write_record([
                    q.a.to_string(),
                    q.b.to_string(),
                    q.label.to_string(),
                    split.to_string(),
                ])?;
            }
        }
        w.flush().map_err(|e| Error::io("<dataset csv>", e))?;
        Ok(())
    }

    pub fn export(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// Binary 2-D classification points.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    pub points: Vec<[f64; 2]>,
    pub labels: Vec<usize>,
}

impl PointSet {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn batch(&self) -> Batch {
        let data = self.points.iter().flat_map(|p| p.iter().copied()).collect();
        Batch {
            features: Features::Dense(Matrix {
                rows: self.len(),
                cols: 2,
                data,
            }),
            targets: self.labels.clone(),
        }
    }
}

/// Two interleaved half-moons. Class 0 lies on the upper unit arc, class 1 on
/// the lower arc shifted by `(1, 0.5)`; arc positions are evenly spaced and
/// perturbed by isotropic Gaussian noise of standard deviation `noise`.
pub fn gen_two_clusters_2d(n: usize, noise: f64, seed: u64) -> Result<PointSet> {
    if n < 4 {
        return Err(Error::Config(format!("need at least 4 points, got {n}")));
    }
    if !(noise >= 0.0 && noise.is_finite()) {
        return Err(Error::Config(format!(
            "noise must be non-negative, got {noise}"
        )));
    }
    let n0 = n.div_ceil(2);
    let n1 = n - n0;
    let arc = |count: usize, i: usize| std::f64::consts::PI * i as f64 / (count - 1) as f64;
    let mut points = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    for i in 0..n0 {
        let t = arc(n0, i);
        points.push([t.cos(), t.sin()]);
        labels.push(0);
    }
    for i in 0..n1 {
        let t = arc(n1, i);
        points.push([1.0 - t.cos(), 0.5 - t.sin()]);
        labels.push(1);
    }
    if noise > 0.0 {
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let dist = Normal::new(0.0, noise).map_err(|e| Error::Config(e.to_string()))?;
        for p in points.iter_mut() {
            p[0] += dist.sample(&mut rng);
            p[1] += dist.sample(&mut rng);
        }
    }
    Ok(PointSet { points, labels })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::HashSet;

    #[test]
    fn p97_split_sizes() {
        let d = gen_modular_addition(97, 0.3, 0).unwrap();
        assert_eq!(d.train.len(), 2823);
        assert_eq!(d.test.len(), 6586);
    }

    #[test]
    fn tiny_modulus() {
        let d = gen_modular_addition(2, 0.5, 9).unwrap();
        assert_eq!((d.train.len(), d.test.len()), (2, 2));
        assert!(d.train.iter().chain(&d.test).all(|q| q.label < 2));
    }

    #[test]
    fn partition_and_labels_are_exact() {
        let p = 23;
        let d = gen_modular_addition(p, 0.37, 5).unwrap();
        let mut seen = HashSet::new();
        for q in d.train.iter().chain(&d.test) {
            assert_eq!(q.label, (q.a + q.b) % p);
            assert!(seen.insert((q.a, q.b)));
        }
        assert_eq!(seen.len(), p * p);
    }

    #[test]
    fn seeded_split_is_reproducible() {
        assert_eq!(
            gen_modular_addition(31, 0.3, 4).unwrap(),
            gen_modular_addition(31, 0.3, 4).unwrap()
        );
        assert_ne!(
            gen_modular_addition(31, 0.3, 4).unwrap().train,
            gen_modular_addition(31, 0.3, 5).unwrap().train
        );
    }

    #[test]
    fn invalid_modular_config() {
        assert!(gen_modular_addition(1, 0.3, 0).is_err());
        assert!(gen_modular_addition(5, 0.0, 0).is_err());
        assert!(gen_modular_addition(5, 1.0, 0).is_err());
    }

    #[test]
    fn one_hot_batch() {
        let d = gen_modular_addition(5, 0.4, 1).unwrap();
        let b = d.train_batch();
        let dense = b.features.to_dense();
        assert_eq!(dense.cols, 10);
        for (i, q) in d.train.iter().enumerate() {
            assert_eq!(dense.row(i)[q.a], 1.0);
            assert_eq!(dense.row(i)[5 + q.b], 1.0);
            assert_eq!(dense.row(i).iter().sum::<f64>(), 2.0);
        }
    }

    #[test]
    fn csv_export_rows() {
        let d = gen_modular_addition(3, 0.5, 2).unwrap();
        let mut buf = Vec::new();
        d.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "a,b,label,split");
        assert_eq!(lines.len(), 10);
        assert_eq!(lines.iter().filter(|l| l.ends_with(",train")).count(), 5);
    }

    #[test]
    fn noiseless_moons_skeleton() {
        let s = gen_two_clusters_2d(4, 0.0, 0).unwrap();
        let expected = [[1.0, 0.0], [-1.0, 0.0], [0.0, 0.5], [2.0, 0.5]];
        for (p, e) in s.points.iter().zip(expected) {
            assert!((p[0] - e[0]).abs() < 1e-15 && (p[1] - e[1]).abs() < 1e-15);
        }
        assert_eq!(s.labels, vec![0, 0, 1, 1]);
    }

    #[test]
    fn moons_balance_and_seed() {
        for n in [4, 5, 101, 200] {
            let s = gen_two_clusters_2d(n, 0.1, 3).unwrap();
            let ones = s.labels.iter().filter(|&&l| l == 1).count();
            assert!((n - ones).abs_diff(ones) <= 1);
            assert_eq!(s, gen_two_clusters_2d(n, 0.1, 3).unwrap());
        }
        assert!(gen_two_clusters_2d(3, 0.1, 0).is_err());
    }
}
