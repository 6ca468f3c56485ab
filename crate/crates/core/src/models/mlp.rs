//! Two-layer ReLU perceptron, `logits = W2·relu(W1·x + b1) + b2`, with
//! manual backpropagation.
//!
//! Parameters live in four [`ParamBlock`]s named `W1`, `b1`, `W2`, `b2`.
//! `W1` is `hidden × input` and `W2` is `output × hidden`, both row-major.

use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

use super::loss::{argmax, cross_entropy_with_grad};
use super::{Batch, Features};
use crate::error::{check_finite, check_len, Error, Result};
use crate::optim::ParamBlock;

const W1: usize = 0;
const B1: usize = 1;
const W2: usize = 2;
const B2: usize = 3;

/// Activations saved by [`MlpModel::forward`] for the backward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache {
    pub rows: usize,
    /// `rows × hidden` pre-activations.
    pub pre: Vec<f64>,
    /// `rows × hidden` ReLU outputs.
    pub hidden: Vec<f64>,
    /// `rows × output` logits.
    pub logits: Vec<f64>,
    generation: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel {
    input: usize,
    hidden: usize,
    output: usize,
    blocks: Vec<ParamBlock>,
    generation: u64,
}

/// Weight initialization; biases always start at zero.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitScheme {
    /// Kaiming-uniform with the ReLU gain: `U(−√(6/fan_in), √(6/fan_in))`.
    #[default]
    Kaiming,
    /// The weight init of PyTorch's `nn.Linear`: `U(−1/√fan_in, 1/√fan_in)`.
    TorchLinear,
}

impl InitScheme {
    pub fn bound(self, fan_in: usize) -> f64 {
        match self {
            InitScheme::Kaiming => (6.0 / fan_in as f64).sqrt(),
            InitScheme::TorchLinear => (1.0 / fan_in as f64).sqrt(),
        }
    }
}

impl MlpModel {
    /// Kaiming-uniform weights, zero biases.
    pub fn new(input: usize, hidden: usize, output: usize, seed: u64) -> Result<Self> {
        Self::with_init(input, hidden, output, seed, InitScheme::Kaiming)
    }

    pub fn with_init(
        input: usize,
        hidden: usize,
        output: usize,
        seed: u64,
        init: InitScheme,
    ) -> Result<Self> {
        if input == 0 || hidden == 0 || output == 0 {
            return Err(Error::Config("MLP layer widths must be positive".into()));
        }
        let mut rng = Xoshiro256PlusPlus::seed_from_u64(seed);
        let mut uniform = |fan_in: usize, len: usize| -> Vec<f64> {
            let bound = init.bound(fan_in);
            let dist = Uniform::new_inclusive(-bound, bound);
            (0..len).map(|_| dist.sample(&mut rng)).collect()
        };
        let w1 = uniform(input, hidden * input);
        let w2 = uniform(hidden, output * hidden);
        Self::from_parts(
            input,
            hidden,
            output,
            w1,
            vec![0.0; hidden],
            w2,
            vec![0.0; output],
        )
    }

    pub fn from_parts(
        input: usize,
        hidden: usize,
        output: usize,
        w1: Vec<f64>,
        b1: Vec<f64>,
        w2: Vec<f64>,
        b2: Vec<f64>,
    ) -> Result<Self> {
        check_len(hidden * input, w1.len())?;
        check_len(hidden, b1.len())?;
        check_len(output * hidden, w2.len())?;
        check_len(output, b2.len())?;
        Ok(Self {
            input,
            hidden,
            output,
            blocks: vec![
                ParamBlock::new("W1", w1, 2),
                ParamBlock::new("b1", b1, 1),
                ParamBlock::new("W2", w2, 2),
                ParamBlock::new("b2", b2, 1),
            ],
            generation: 0,
        })
    }

    /// Rebuilds a model from blocks in `W1, b1, W2, b2` order.
    pub fn from_blocks(
        input: usize,
        hidden: usize,
        output: usize,
        blocks: Vec<ParamBlock>,
    ) -> Result<Self> {
        let names: Vec<&str> = blocks.iter().map(|b| b.name.as_str()).collect();
        if names != ["W1", "b1", "W2", "b2"] {
            return Err(Error::Config(format!("unexpected MLP blocks {names:?}")));
        }
        let mut model = Self::from_parts(
            input,
            hidden,
            output,
            blocks[W1].values.clone(),
            blocks[B1].values.clone(),
            blocks[W2].values.clone(),
            blocks[B2].values.clone(),
        )?;
        for (dst, src) in model.blocks.iter_mut().zip(&blocks) {
            dst.scale_invariant = src.scale_invariant;
        }
        Ok(model)
    }

    pub fn dims(&self) -> (usize, usize, usize) {
        (self.input, self.hidden, self.output)
    }

    pub fn blocks(&self) -> &[ParamBlock] {
        &self.blocks
    }

    /// Mutable access to the parameters. Invalidates every outstanding
    /// [`ForwardCache`].
    pub fn blocks_mut(&mut self) -> &mut [ParamBlock] {
        self.generation += 1;
        &mut self.blocks
    }

    /// Concatenation of all block values.
    pub fn flat_params(&self) -> Vec<f64> {
        self.blocks
            .iter()
            .flat_map(|b| b.values.iter().copied())
            .collect()
    }

    pub fn set_flat_params(&mut self, flat: &[f64]) -> Result<()> {
        let total: usize = self.blocks.iter().map(|b| b.numel()).sum();
        check_len(total, flat.len())?;
        let mut offset = 0;
        for b in self.blocks_mut() {
            let n = b.numel();
            b.values.copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        }
        Ok(())
    }

    fn transposed_w1(&self) -> Vec<f64> {
        transpose(&self.blocks[W1].values, self.hidden, self.input)
    }

    fn transposed_w2(&self) -> Vec<f64> {
        transpose(&self.blocks[W2].values, self.output, self.hidden)
    }

    fn check_features(&self, x: &Features) -> Result<()> {
        x.validate()?;
        check_len(self.input, x.width())
    }

    pub fn forward(&self, x: &Features) -> Result<ForwardCache> {
        self.check_features(x)?;
        let rows = x.rows();
        let mut cache = ForwardCache {
            rows,
            pre: vec![0.0; rows * self.hidden],
            hidden: vec![0.0; rows * self.hidden],
            logits: vec![0.0; rows * self.output],
            generation: self.generation,
        };
        let w1t = self.transposed_w1();
        let w2t = self.transposed_w2();
        self.forward_rows(
            x,
            0,
            rows,
            &w1t,
            &w2t,
            &mut cache.pre,
            &mut cache.hidden,
            &mut cache.logits,
        );
        Ok(cache)
    }

    /// Forward pass for rows `start..start + count` into caller-provided
    /// buffers sized for `count` rows.
    #[allow(clippy::too_many_arguments)]
    fn forward_rows(
        &self,
        x: &Features,
        start: usize,
        count: usize,
        w1t: &[f64],
        w2t: &[f64],
        pre: &mut [f64],
        hidden: &mut [f64],
        logits: &mut [f64],
    ) {
        let (h, o) = (self.hidden, self.output);
        let b1 = &self.blocks[B1].values;
        let b2 = &self.blocks[B2].values;
        for r in 0..count {
            let i = start + r;
            let pre_row = &mut pre[r * h..(r + 1) * h];
            pre_row.copy_from_slice(b1);
            match x {
                Features::Dense(m) => {
                    for (k, &xv) in m.row(i).iter().enumerate() {
                        if xv != 0.0 {
                            axpy(xv, &w1t[k * h..(k + 1) * h], pre_row);
                        }
                    }
                }
                Features::Binary {
                    per_row, indices, ..
                } => {
                    for &k in &indices[i * per_row..(i + 1) * per_row] {
                        for (p, w) in pre_row.iter_mut().zip(&w1t[k * h..(k + 1) * h]) {
                            *p += w;
                        }
                    }
                }
            }
            let hid_row = &mut hidden[r * h..(r + 1) * h];
            for (a, &z) in hid_row.iter_mut().zip(pre_row.iter()) {
                *a = if z > 0.0 { z } else { 0.0 };
            }
            let out_row = &mut logits[r * o..(r + 1) * o];
            out_row.copy_from_slice(b2);
            for (j, &a) in hid_row.iter().enumerate() {
                if a != 0.0 {
                    axpy(a, &w2t[j * o..(j + 1) * o], out_row);
                }
            }
        }
    }

    /// Gradients of the loss with respect to every block, given the loss
    /// gradient `dlogits` for the rows of `cache`. Returned in block order.
    pub fn backward(
        &self,
        x: &Features,
        cache: &ForwardCache,
        dlogits: &[f64],
    ) -> Result<Vec<Vec<f64>>> {
        if cache.generation != self.generation {
            return Err(Error::Config(
                "stale forward cache: parameters changed since the forward pass".into(),
            ));
        }
        self.check_features(x)?;
        check_len(cache.rows, x.rows())?;
        check_len(cache.rows * self.output, dlogits.len())?;
        check_finite(dlogits, "logit gradient")?;
        let (n_in, h, o) = (self.input, self.hidden, self.output);
        let w2 = &self.blocks[W2].values;

        let mut dw1t = vec![0.0; n_in * h];
        let mut db1 = vec![0.0; h];
        let mut dw2t = vec![0.0; h * o];
        let mut db2 = vec![0.0; o];
        let mut dpre = vec![0.0; h];

        for i in 0..cache.rows {
            let dl = &dlogits[i * o..(i + 1) * o];
            let hid = &cache.hidden[i * h..(i + 1) * h];
            let pre = &cache.pre[i * h..(i + 1) * h];

            for (d, g) in db2.iter_mut().zip(dl) {
                *d += g;
            }
            for (j, &a) in hid.iter().enumerate() {
                if a != 0.0 {
                    axpy(a, dl, &mut dw2t[j * o..(j + 1) * o]);
                }
            }

            dpre.fill(0.0);
            for (k, &g) in dl.iter().enumerate() {
                if g != 0.0 {
                    axpy(g, &w2[k * h..(k + 1) * h], &mut dpre);
                }
            }
            for (d, &z) in dpre.iter_mut().zip(pre) {
                if z <= 0.0 {
                    *d = 0.0;
                }
            }

            for (d, g) in db1.iter_mut().zip(&dpre) {
                *d += g;
            }
            match x {
                Features::Dense(m) => {
                    for (k, &xv) in m.row(i).iter().enumerate() {
                        if xv != 0.0 {
                            axpy(xv, &dpre, &mut dw1t[k * h..(k + 1) * h]);
                        }
                    }
                }
                Features::Binary {
                    per_row, indices, ..
                } => {
                    for &k in &indices[i * per_row..(i + 1) * per_row] {
                        for (d, g) in dw1t[k * h..(k + 1) * h].iter_mut().zip(&dpre) {
                            *d += g;
                        }
                    }
                }
            }
        }

        Ok(vec![
            transpose(&dw1t, n_in, h),
            db1,
            transpose(&dw2t, h, o),
            db2,
        ])
    }

    /// Mean cross-entropy loss and per-block gradients on `batch`, plus the
    /// batch accuracy.
    pub fn loss_and_grad(&self, batch: &Batch) -> Result<(f64, f64, Vec<Vec<f64>>)> {
        let cache = self.forward(&batch.features)?;
        let (loss, dlogits) = cross_entropy_with_grad(&cache.logits, self.output, &batch.targets)?;
        let acc = super::accuracy(&cache.logits, self.output, &batch.targets)?;
        let grads = self.backward(&batch.features, &cache, &dlogits)?;
        Ok((loss, acc, grads))
    }

    /// Mean loss and accuracy over `batch`, computed in fixed-size row chunks
    /// without retaining activations.
    pub fn evaluate(&self, batch: &Batch) -> Result<(f64, f64)> {
        const CHUNK: usize = 512;
        self.check_features(&batch.features)?;
        let n = batch.len();
        if n == 0 {
            return Ok((0.0, 0.0));
        }
        let (h, o) = (self.hidden, self.output);
        let w1t = self.transposed_w1();
        let w2t = self.transposed_w2();
        let mut pre = vec![0.0; CHUNK * h];
        let mut hid = vec![0.0; CHUNK * h];
        let mut logits = vec![0.0; CHUNK * o];
        let mut total = 0.0;
        let mut correct = 0usize;
        let mut start = 0;
        while start < n {
            let count = CHUNK.min(n - start);
            self.forward_rows(
                &batch.features,
                start,
                count,
                &w1t,
                &w2t,
                &mut pre,
                &mut hid,
                &mut logits,
            );
            for r in 0..count {
                let row = &logits[r * o..(r + 1) * o];
                let target = batch.targets[start + r];
                if target >= o {
                    return Err(Error::Config(format!(
                        "target {target} out of range for {o} classes"
                    )));
                }
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
                total += sum.ln() + max - row[target];
                if argmax(row) == target {
                    correct += 1;
                }
            }
            start += count;
        }
        Ok((total / n as f64, correct as f64 / n as f64))
    }

    /// Predicted class per row.
    pub fn predict(&self, x: &Features) -> Result<Vec<usize>> {
        let cache = self.forward(x)?;
        Ok(cache.logits.chunks(self.output).map(argmax).collect())
    }
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn transpose(m: &[f64], rows: usize, cols: usize) -> Vec<f64> {
    let mut t = vec![0.0; m.len()];
    for r in 0..rows {
        for c in 0..cols {
            t[c * rows + r] = m[r * cols + c];
        }
    }
    t
}
