//! Structured observation language for vision-language navigation.
//!
//! RGB-D frames with semantic segmentation become grids of short text cells,
//! the current view at fine resolution and older views at coarser ones. The
//! resulting prompt drives an action-chunk predictor that emits several
//! discrete actions per call. A small raycast gridworld supplies episodes and
//! closed-loop evaluation with the usual navigation metrics.

pub mod action;
pub mod bridge;
pub mod commands;
pub mod config;
pub mod dataset;
pub mod encoder;
pub mod episode;
pub mod error;
pub mod experiment;
pub mod frame;
pub mod history;
pub mod metrics;
pub mod pose;
pub mod predictor;
pub mod prompt;
pub mod rollout;
pub mod sim;

pub use action::{action_display, ActionBlock, ActionId};
pub use config::GridConfig;
pub use error::{Error, Result};
pub use frame::Frame;
pub use pose::Pose;
