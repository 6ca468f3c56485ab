use crate::error::{check_finite, check_len, Error, Result};

fn check_targets(targets: &[usize], classes: usize) -> Result<()> {
    match targets.iter().find(|&&t| t >= classes) {
        Some(t) => Err(Error::Config(format!(
            "target {t} out of range for {classes} classes"
        ))),
        None => Ok(()),
    }
}

/// Mean softmax cross-entropy over `n = targets.len()` rows of `classes`
/// logits, and its gradient `(softmax − onehot)/n`.
pub fn cross_entropy_with_grad(
    logits: &[f64],
    classes: usize,
    targets: &[usize],
) -> Result<(f64, Vec<f64>)> {
    let n = targets.len();
    check_len(n * classes, logits.len())?;
    check_finite(logits, "logits")?;
    check_targets(targets, classes)?;
    if n == 0 {
        return Ok((0.0, Vec::new()));
    }
    let inv_n = 1.0 / n as f64;
    let mut grad = vec![0.0; logits.len()];
    let mut total = 0.0;
    for (i, &target) in targets.iter().enumerate() {
        let row = &logits[i * classes..(i + 1) * classes];
        let g = &mut grad[i * classes..(i + 1) * classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for (gj, &z) in g.iter_mut().zip(row) {
            let e = (z - max).exp();
            *gj = e;
            sum += e;
        }
        total += sum.ln() + max - row[target];
        for gj in g.iter_mut() {
            *gj = *gj / sum * inv_n;
        }
        g[target] -= inv_n;
    }
    Ok((total * inv_n, grad))
}

/// Loss only; same value as [`cross_entropy_with_grad`].
pub fn mean_cross_entropy(logits: &[f64], classes: usize, targets: &[usize]) -> Result<f64> {
    let n = targets.len();
    check_len(n * classes, logits.len())?;
    check_targets(targets, classes)?;
    if n == 0 {
        return Ok(0.0);
    }
    let mut total = 0.0;
    for (i, &target) in targets.iter().enumerate() {
        let row = &logits[i * classes..(i + 1) * classes];
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum: f64 = row.iter().map(|z| (z - max).exp()).sum();
        total += sum.ln() + max - row[target];
    }
    Ok(total / n as f64)
}

/// Fraction of rows whose arg-max logit equals the target. Ties resolve to
/// the lowest index.
pub fn accuracy(logits: &[f64], classes: usize, targets: &[usize]) -> Result<f64> {
    let n = targets.len();
    check_len(n * classes, logits.len())?;
    if n == 0 {
        return Ok(0.0);
    }
    let correct = targets
        .iter()
        .enumerate()
        .filter(|(i, &t)| argmax(&logits[i * classes..(i + 1) * classes]) == t)
        .count();
    Ok(correct as f64 / n as f64)
}

pub(crate) fn argmax(row: &[f64]) -> usize {
    let mut best = 0;
    for (j, &z) in row.iter().enumerate().skip(1) {
        if z > row[best] {
            best = j;
        }
    }
    best
}
