//! Parallel linear classification heads and their checkpoint container.

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::featurize::{Featurizer, SparseVec};
use super::loss::{argmax, chunk_loss_and_grad, Logits, NUM_CLASSES};
use crate::action::{ActionBlock, ActionId};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"SOLNAVHM";
pub const CHECKPOINT_VERSION: u32 = 1;

/// `n_a` heads of `dimension x 4` weights plus a bias row each.
///
/// Weights are stored feature-major: the `n_a * 4` values touched by one
/// feature are contiguous, which keeps sparse dot products cache friendly.
/// The effective weights are the stored ones times `scale`, so that weight
/// decay during training costs one multiplication instead of a pass over
/// every weight.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadModel {
    featurizer: Featurizer,
    n_a: usize,
    weights: Vec<f64>,
    pub(crate) biases: Vec<Logits>,
    scale: f64,
    class_weights: [f64; NUM_CLASSES],
}

/// Gradient of one sample's loss: dense bias part plus per-feature rows.
#[derive(Debug, Clone)]
pub struct SampleGradient {
    pub loss: f64,
    pub dlogits: Vec<Logits>,
}

impl HeadModel {
    pub fn zeros(featurizer: Featurizer, n_a: usize, class_weights: [f64; NUM_CLASSES]) -> Self {
        let stride = n_a * NUM_CLASSES;
        Self {
            weights: vec![0.0; featurizer.dimension() * stride],
            biases: vec![[0.0; NUM_CLASSES]; n_a],
            scale: 1.0,
            featurizer,
            n_a,
            class_weights,
        }
    }

    pub fn featurizer(&self) -> &Featurizer {
        &self.featurizer
    }

    pub fn n_a(&self) -> usize {
        self.n_a
    }

    pub fn class_weights(&self) -> &[f64; NUM_CLASSES] {
        &self.class_weights
    }

    fn stride(&self) -> usize {
        self.n_a * NUM_CLASSES
    }

    /// Flat position of weight (feature, head, class).
    pub fn weight_index(&self, feature: usize, head: usize, class: usize) -> usize {
        feature * self.stride() + head * NUM_CLASSES + class
    }

    pub fn weight(&self, feature: usize, head: usize, class: usize) -> f64 {
        self.scale * self.weights[self.weight_index(feature, head, class)]
    }

    pub fn set_weight(&mut self, feature: usize, head: usize, class: usize, v: f64) {
        let i = self.weight_index(feature, head, class);
        self.weights[i] = v / self.scale;
    }

    /// Multiplies every weight (not the biases) by `factor`.
    pub(crate) fn shrink_weights(&mut self, factor: f64) {
        self.scale *= factor;
        if self.scale < 1e-6 {
            self.fold_scale();
        }
    }

    /// Writes the pending scale into the stored weights.
    pub(crate) fn fold_scale(&mut self) {
        if self.scale != 1.0 {
            let s = self.scale;
            self.weights.iter_mut().for_each(|w| *w *= s);
            self.scale = 1.0;
        }
    }

    /// `self = (1 - t) * self + t * other`, parameters only. Both models must
    /// come from the same training run.
    pub(crate) fn blend_toward(&mut self, other: &HeadModel, t: f64) {
        self.fold_scale();
        let s = other.scale;
        for (w, o) in self.weights.iter_mut().zip(&other.weights) {
            *w += t * (s * o - *w);
        }
        for (b, o) in self.biases.iter_mut().flatten().zip(other.biases.iter().flatten()) {
            *b += t * (o - *b);
        }
    }

    pub fn logits(&self, x: &SparseVec) -> Vec<Logits> {
        let stride = self.stride();
        let mut flat = vec![0.0; stride];
        for (i, v) in x.iter() {
            let row = &self.weights[i * stride..(i + 1) * stride];
            for (acc, w) in flat.iter_mut().zip(row) {
                *acc += v * w;
            }
        }
        (0..self.n_a)
            .map(|h| std::array::from_fn(|c| self.scale * flat[h * NUM_CLASSES + c] + self.biases[h][c]))
            .collect()
    }

    /// Loss of one sample and the gradient with respect to its logits. The
    /// weight gradient is `x_i * dlogits[h][c]`, the bias gradient `dlogits`.
    pub fn sample_gradient(&self, x: &SparseVec, target: &ActionBlock) -> Result<SampleGradient> {
        let (loss, dlogits) = chunk_loss_and_grad(&self.logits(x), target, &self.class_weights)?;
        Ok(SampleGradient { loss, dlogits })
    }

    pub fn loss(&self, x: &SparseVec, target: &ActionBlock) -> Result<f64> {
        Ok(self.sample_gradient(x, target)?.loss)
    }

    pub(crate) fn apply_gradient(&mut self, x: &SparseVec, g: &SampleGradient, step: f64) {
        let stride = self.stride();
        for (h, d) in g.dlogits.iter().enumerate() {
            for c in 0..NUM_CLASSES {
                self.biases[h][c] -= step * d[c];
            }
        }
        let weight_step = step / self.scale;
        for (i, v) in x.iter() {
            let row = &mut self.weights[i * stride..(i + 1) * stride];
            for (h, d) in g.dlogits.iter().enumerate() {
                for c in 0..NUM_CLASSES {
                    row[h * NUM_CLASSES + c] -= weight_step * v * d[c];
                }
            }
        }
    }

    pub fn predict(&self, prompt: &str, f: &Featurizer) -> Result<ActionBlock> {
        if f.dimension() != self.featurizer.dimension() {
            return Err(Error::DimensionMismatch { expected: self.featurizer.dimension(), got: f.dimension() });
        }
        if f != &self.featurizer {
            return Err(Error::Checkpoint("featurizer parameters differ from the trained model".into()));
        }
        block_from_logits(&self.logits(&f.featurize(prompt)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let header = CheckpointHeader {
            dimension: self.featurizer.dimension(),
            ngram_orders: self.featurizer.ngram_orders().to_vec(),
            hash_seed: self.featurizer.hash_seed(),
            n_a: self.n_a,
            class_weights: self.class_weights,
        };
        let header = serde_json::to_vec(&header)?;
        let mut out = Vec::with_capacity(16 + header.len() + 8 * (self.weights.len() + self.stride()));
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for v in self.biases.iter().flatten() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        for v in &self.weights {
            out.extend_from_slice(&(self.scale * v).to_le_bytes());
        }
        fs::File::create(path)?.write_all(&out)?;
        Ok(())
    }

    /// Reads a checkpoint; when `expected` is given, its featurizer must match.
    pub fn load(path: &Path, expected: Option<&Featurizer>) -> Result<Self> {
        let mut bytes = Vec::new();
        fs::File::open(path)?.read_to_end(&mut bytes)?;
        let bad = |m: &str| Error::Checkpoint(format!("{}: {m}", path.display()));
        if bytes.len() < 16 || &bytes[..8] != MAGIC {
            return Err(bad("not a head-model checkpoint"));
        }
        let version = u32::from_le_bytes(bytes[8..12].try_into().unwrap());
        if version != CHECKPOINT_VERSION {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let hlen = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let body = bytes.get(16..16 + hlen).ok_or_else(|| bad("truncated header"))?;
        let header: CheckpointHeader = serde_json::from_slice(body)?;
        let featurizer = Featurizer::new(header.dimension, header.ngram_orders, header.hash_seed)?;
        if let Some(want) = expected {
            if want != &featurizer {
                return Err(bad(&format!("featurizer mismatch: checkpoint has {featurizer:?}, expected {want:?}")));
            }
        }
        if header.n_a == 0 || header.class_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(bad("invalid head count or class weights"));
        }
        let mut model = Self::zeros(featurizer, header.n_a, header.class_weights);
        let floats = &bytes[16 + hlen..];
        if floats.len() != 8 * (model.stride() + model.weights.len()) {
            return Err(bad("parameter block has the wrong size"));
        }
        let mut vals = floats.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap()));
        for b in model.biases.iter_mut().flatten() {
            *b = vals.next().unwrap();
        }
        for w in model.weights.iter_mut() {
            *w = vals.next().unwrap();
        }
        Ok(model)
    }
}

#[derive(Serialize, Deserialize)]
struct CheckpointHeader {
    dimension: usize,
    ngram_orders: Vec<usize>,
    hash_seed: u64,
    n_a: usize,
    class_weights: [f64; NUM_CLASSES],
}

/// Per-head argmax followed by the stop-suffix rule.
pub fn block_from_logits(logits: &[Logits]) -> Result<ActionBlock> {
    let raw = logits.iter().map(|z| ActionId::from_index(argmax(z))).collect::<Result<Vec<_>>>()?;
    Ok(ActionBlock::from_raw(raw))
}
