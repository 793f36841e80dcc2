//! Short/long-term observation history and the time-ordered observation sequence.

use std::sync::Arc;

use crate::config::GridConfig;
use crate::encoder::{encode_frame, StructuredObservation};
use crate::error::{Error, Result};
use crate::frame::Frame;

/// Past frames of one episode, oldest first, with strictly increasing timesteps.
#[derive(Debug, Clone)]
pub struct HistoryBuffer {
    frames: Vec<(i64, Arc<Frame>)>,
    config: GridConfig,
}

impl HistoryBuffer {
    pub fn new(config: GridConfig) -> Self {
        Self { frames: Vec::new(), config }
    }

    pub fn from_frames(config: GridConfig, frames: Vec<(i64, Arc<Frame>)>) -> Result<Self> {
        if frames.windows(2).any(|w| w[0].0 >= w[1].0) {
            return Err(Error::InvalidEpisode("history timesteps must strictly increase".into()));
        }
        Ok(Self { frames, config })
    }

    /// Appends a frame; its timestep must exceed the last one.
    pub fn push(&mut self, timestep: i64, frame: Arc<Frame>) -> Result<()> {
        if let Some((last, _)) = self.frames.last() {
            if timestep <= *last {
                return Err(Error::InvalidEpisode(format!(
                    "timestep {timestep} does not follow {last}"
                )));
            }
        }
        self.frames.push((timestep, frame));
        Ok(())
    }

    pub fn config(&self) -> &GridConfig {
        &self.config
    }

    pub fn frames(&self) -> &[(i64, Arc<Frame>)] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    /// Timestep the next (current) frame takes: one past the newest entry.
    pub fn current_timestep(&self) -> i64 {
        self.frames.last().map_or(0, |(t, _)| t + 1)
    }
}

/// Indices (into a history of `len` frames, oldest first) of the long-term and
/// short-term selections.
///
/// The `count_short` newest frames are short-term. The rest are long-term,
/// uniformly subsampled with both endpoints kept when they exceed `count_long`.
pub fn select_history_indices(len: usize, count_short: usize, count_long: usize) -> (Vec<usize>, Vec<usize>) {
    let n_short = count_short.min(len);
    let older = len - n_short;
    let short = (older..len).collect();
    let long = if older <= count_long {
        (0..older).collect()
    } else if count_long == 0 {
        Vec::new()
    } else if count_long == 1 {
        vec![0]
    } else {
        let span = (older - 1) as f64;
        let steps = (count_long - 1) as f64;
        (0..count_long).map(|m| (m as f64 * span / steps).round() as usize).collect()
    };
    (long, short)
}

/// Splits the buffer into (long-term, short-term) frames, both in chronological order.
pub fn select_history(buffer: &HistoryBuffer) -> (Vec<(i64, Arc<Frame>)>, Vec<(i64, Arc<Frame>)>) {
    let c = buffer.config();
    let (long, short) = select_history_indices(buffer.len(), c.count_short, c.count_long);
    let pick = |ix: Vec<usize>| ix.into_iter().map(|i| buffer.frames[i].clone()).collect();
    (pick(long), pick(short))
}

/// Encoded observations from the earliest selected history frame to the current frame.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ObservationSequence {
    pub entries: Vec<StructuredObservation>,
}

impl ObservationSequence {
    pub fn current(&self) -> Option<&StructuredObservation> {
        self.entries.last()
    }

    pub fn cell_line_count(&self) -> usize {
        self.entries.iter().map(|e| e.cells.len()).sum()
    }
}

/// Encodes long-term frames at `n_long`, short-term at `n_short` and the current
/// frame at `n_curr`. Timesteps become offsets relative to the current frame.
pub fn build_sequence(buffer: &HistoryBuffer, current: &Frame) -> Result<ObservationSequence> {
    let c = buffer.config();
    c.validate()?;
    let now = buffer.current_timestep();
    let mut entries = Vec::new();
    if c.use_history {
        let (long, short) = select_history(buffer);
        for (t, f) in &long {
            entries.push(encode_frame(f, c.n_long, t - now, c.use_depth)?);
        }
        for (t, f) in &short {
            entries.push(encode_frame(f, c.n_short, t - now, c.use_depth)?);
        }
    }
    entries.push(encode_frame(current, c.n_curr, 0, c.use_depth)?);
    Ok(ObservationSequence { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Brute force: for each slot pick the integer nearest to its ideal evenly
    /// spaced position by scanning every candidate.
    fn even_spacing_oracle(older: usize, k: usize) -> Vec<usize> {
        (0..k)
            .map(|m| {
                let ideal = m as f64 * (older - 1) as f64 / (k - 1) as f64;
                (0..older)
                    .min_by(|&a, &b| {
                        let da = (a as f64 - ideal).abs();
                        let db = (b as f64 - ideal).abs();
                        // prefer the larger index on exact ties (half away from zero)
                        da.partial_cmp(&db).unwrap().then(b.cmp(&a))
                    })
                    .unwrap()
            })
            .collect()
    }

    #[test]
    fn thirty_frames() {
        let (long, short) = select_history_indices(30, 2, 16);
        // 1-based frames 29 and 30
        assert_eq!(short, vec![28, 29]);
        assert_eq!(long.len(), 16);
        assert_eq!(long, even_spacing_oracle(28, 16));
        assert_eq!((long[0], long[15]), (0, 27));
        // frozen: idx_m = round((m-1)*27/15) + 1 for m = 1..16
        let one_based: Vec<usize> = long.iter().map(|i| i + 1).collect();
        assert_eq!(one_based, vec![1, 3, 5, 6, 8, 10, 12, 14, 15, 17, 19, 21, 23, 24, 26, 28]);
    }

    #[test]
    fn few_frames_take_all() {
        assert_eq!(select_history_indices(5, 2, 16), (vec![0, 1, 2], vec![3, 4]));
        assert_eq!(select_history_indices(1, 2, 16), (vec![], vec![0]));
        assert_eq!(select_history_indices(0, 2, 16), (vec![], vec![]));
    }

    fn frame(v: u8) -> Arc<Frame> {
        Arc::new(Frame::uniform(12, 12, [v, v, v], 1.0 + v as f32 / 100.0, (1, "wall")))
    }

    fn buffer(n: usize, cfg: GridConfig) -> HistoryBuffer {
        let mut b = HistoryBuffer::new(cfg);
        for t in 0..n {
            b.push(t as i64, frame(t as u8 * 5)).unwrap();
        }
        b
    }

    #[test]
    fn full_buffer_sequence_shape() {
        let b = buffer(25, GridConfig::default());
        let seq = build_sequence(&b, &frame(200)).unwrap();
        assert_eq!(seq.entries.len(), 19);
        let grids: Vec<usize> = seq.entries.iter().map(|e| e.grid_n).collect();
        assert_eq!(&grids[..16], &[2; 16]);
        assert_eq!(&grids[16..], &[4, 4, 6]);
        assert_eq!(seq.cell_line_count(), 16 * 4 + 2 * 16 + 36);
        assert_eq!(seq.entries.last().unwrap().timestep, 0);
        assert_eq!(seq.entries[17].timestep, -1);
        assert_eq!(seq.entries[0].timestep, -25);
    }

    #[test]
    fn history_ablation_and_episode_start() {
        let cfg = GridConfig { use_history: false, ..Default::default() };
        let seq = build_sequence(&buffer(10, cfg), &frame(1)).unwrap();
        assert_eq!(seq.entries.len(), 1);
        assert_eq!(seq.entries[0].grid_n, 6);

        let seq = build_sequence(&HistoryBuffer::new(GridConfig::default()), &frame(1)).unwrap();
        assert_eq!(seq.entries.len(), 1);
        assert_eq!(seq.entries[0].timestep, 0);
    }

    #[test]
    fn rejects_non_increasing() {
        let mut b = buffer(3, GridConfig::default());
        assert!(b.push(2, frame(0)).is_err());
    }

    proptest! {
        #[test]
        fn sequence_invariants(len in 0usize..60, cs in 0usize..4, cl in 0usize..20) {
            let (long, short) = select_history_indices(len, cs, cl);
            prop_assert!(short.len() <= cs && long.len() <= cl);
            let all: Vec<usize> = long.iter().chain(short.iter()).copied().collect();
            prop_assert!(all.windows(2).all(|w| w[0] < w[1]));
            if len.saturating_sub(cs) <= cl {
                prop_assert_eq!(all.len(), len.min(cs + len.saturating_sub(cs)));
                prop_assert_eq!(all, (0..len).collect::<Vec<_>>());
            }
        }

        #[test]
        fn sequence_chronology(len in 0usize..30) {
            let b = buffer(len, GridConfig::default());
            let cur = frame(250);
            let seq = build_sequence(&b, &cur).unwrap();
            prop_assert!(seq.entries.windows(2).all(|w| w[0].timestep < w[1].timestep));
            prop_assert_eq!(seq.entries.last().unwrap().timestep, 0);
            prop_assert_eq!(seq.clone(), build_sequence(&b, &cur).unwrap());
        }
    }
}
