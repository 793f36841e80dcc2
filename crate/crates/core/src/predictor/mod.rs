//! Desk-scale action predictor: hashed n-gram prompt features feeding one
//! linear 4-way classifier per block position.

mod featurize;
mod loss;
mod model;
mod train;

pub use featurize::{tokenize, Featurizer, SparseVec};
pub use loss::{argmax, balanced_weights, chunk_loss, chunk_loss_and_grad, softmax, Logits, NUM_CLASSES};
pub use model::{block_from_logits, HeadModel, SampleGradient, CHECKPOINT_VERSION};
pub use train::{class_counts, train, train_with_report, EpochStats, TrainConfig, TrainReport};

use crate::action::ActionBlock;
use crate::error::Result;

/// Featurize, run every head, argmax, apply the stop-suffix rule.
pub fn predict(prompt: &str, model: &HeadModel, f: &Featurizer) -> Result<ActionBlock> {
    model.predict(prompt, f)
}
