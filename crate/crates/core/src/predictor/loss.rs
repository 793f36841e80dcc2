//! Class weighting and the averaged weighted cross-entropy over an action block.

use crate::action::{ActionBlock, ActionId};
use crate::error::{Error, Result};

pub const NUM_CLASSES: usize = ActionId::COUNT;

pub type Logits = [f64; NUM_CLASSES];

/// `w_c = n / (K * n_c)`, with empty classes counted as one.
pub fn balanced_weights(counts: [u64; NUM_CLASSES]) -> Result<[f64; NUM_CLASSES]> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::AllZeroCounts);
    }
    Ok(counts.map(|c| total as f64 / (NUM_CLASSES as f64 * c.max(1) as f64)))
}

pub fn softmax(z: &Logits) -> Logits {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e = z.map(|v| (v - m).exp());
    let s: f64 = e.iter().sum();
    e.map(|v| v / s)
}

fn log_softmax(z: &Logits, k: usize) -> f64 {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = m + z.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
    z[k] - lse
}

/// Mean over block positions of `w[y_i] * -log softmax(logits_i)[y_i]`.
pub fn chunk_loss(logits: &[Logits], target: &ActionBlock, weights: &[f64; NUM_CLASSES]) -> Result<f64> {
    Ok(chunk_loss_and_grad(logits, target, weights)?.0)
}

/// Loss together with its gradient with respect to every logit.
pub fn chunk_loss_and_grad(
    logits: &[Logits],
    target: &ActionBlock,
    weights: &[f64; NUM_CLASSES],
) -> Result<(f64, Vec<Logits>)> {
    if logits.len() != target.len() {
        return Err(Error::DimensionMismatch { expected: target.len(), got: logits.len() });
    }
    if logits.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteLogits);
    }
    let scale = 1.0 / logits.len() as f64;
    let mut loss = 0.0;
    let mut grad = Vec::with_capacity(logits.len());
    for (z, &y) in logits.iter().zip(target.actions()) {
        let y = y.index();
        let w = weights[y];
        loss += -w * log_softmax(z, y);
        let mut g = softmax(z);
        g[y] -= 1.0;
        grad.push(g.map(|v| v * w * scale));
    }
    Ok((loss * scale, grad))
}

/// Per-row argmax; ties go to the smallest action id.
pub fn argmax(z: &Logits) -> usize {
    let mut best = 0;
    for c in 1..NUM_CLASSES {
        if z[c] > z[best] {
            best = c;
        }
    }
    best
}
