use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Grid resolutions, history capacities and ablation switches for observation encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GridConfig {
    /// Grid side for the current frame.
    pub n_curr: usize,
    /// Grid side for short-term history frames.
    pub n_short: usize,
    /// Grid side for long-term history frames.
    pub n_long: usize,
    /// Number of most recent past frames kept as short-term memory.
    pub count_short: usize,
    /// Maximum number of older frames kept as long-term memory.
    pub count_long: usize,
    pub use_depth: bool,
    pub use_history: bool,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n_curr: 6,
            n_short: 4,
            n_long: 2,
            count_short: 2,
            count_long: 16,
            use_depth: true,
            use_history: true,
        }
    }
}

impl GridConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_long == 0 {
            return Err(Error::InvalidGridConfig("grid sides must be at least 1".into()));
        }
        if !(self.n_curr >= self.n_short && self.n_short >= self.n_long) {
            return Err(Error::InvalidGridConfig(format!(
                "expected n_curr >= n_short >= n_long, got {} / {} / {}",
                self.n_curr, self.n_short, self.n_long
            )));
        }
        Ok(())
    }

    /// Total number of past frames that can appear in a prompt.
    pub fn history_capacity(&self) -> usize {
        self.count_short + self.count_long
    }
}
