//! Training samples: (prompt, action block) pairs cut from oracle episodes.

use std::fs;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{ActionBlock, ActionId};
use crate::config::GridConfig;
use crate::episode::Episode;
use crate::error::{Error, Result};
use crate::history::{build_sequence, HistoryBuffer};
use crate::prompt::{build_prompt, default_system_text, PromptParts};

/// Suffix marking an episode derived from another by left-right reflection.
/// Joins a derived episode's id to its source's, as in `rooms-000012+mirror`.
pub const DERIVED_SEPARATOR: char = '+';

/// Id for an episode derived from `source`, such as its reflection.
pub fn derived_id(source: &str, tag: &str) -> String {
    format!("{source}{DERIVED_SEPARATOR}{tag}")
}

/// The episode a trajectory was derived from. Held-out splits group samples
/// by this, so a scene and its variants never land on different sides.
pub fn source_episode_id(id: &str) -> &str {
    id.split(DERIVED_SEPARATOR).next().unwrap_or(id)
}

/// Splits a trajectory into blocks of `n_a`, padding the last block with stop.
pub fn chunk_actions(actions: &[ActionId], n_a: usize) -> Result<Vec<ActionBlock>> {
    if actions.is_empty() {
        return Err(Error::EmptyTrajectory);
    }
    if n_a == 0 {
        return Err(Error::BlockLength { expected: 1, got: 0 });
    }
    actions
        .chunks(n_a)
        .map(|c| {
            let mut block = c.to_vec();
            block.resize(n_a, ActionId::Stop);
            ActionBlock::with_len(block, n_a)
        })
        .collect()
}

/// Inverse of [`chunk_actions`] for trajectories that end at their first
/// stop: concatenates the blocks and drops the padding after that stop.
pub fn unchunk_actions(blocks: &[ActionBlock]) -> Vec<ActionId> {
    let mut flat: Vec<ActionId> = blocks.iter().flat_map(|b| b.actions().iter().copied()).collect();
    if let Some(stop) = flat.iter().position(|&a| a == ActionId::Stop) {
        flat.truncate(stop + 1);
    }
    flat
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingSample {
    pub prompt: String,
    pub target: ActionBlock,
    pub episode_id: String,
    pub step_index: usize,
}

/// Prompt for the decision taken at `step` of an episode: all earlier frames
/// as history, frame `step` as the current observation.
pub fn prompt_at(ep: &Episode, step: usize, cfg: &GridConfig, n_a: usize) -> Result<String> {
    let history = HistoryBuffer::from_frames(
        *cfg,
        ep.frames[..step].iter().enumerate().map(|(t, f)| (t as i64, f.clone())).collect(),
    )?;
    let sequence = build_sequence(&history, &ep.frames[step])?;
    build_prompt(&PromptParts {
        system_text: default_system_text(n_a),
        sequence,
        instruction: ep.instruction.clone(),
        n_a,
    })
}

/// One sample per action block; sample k sees frames [0, k*n_a) as history.
pub fn build_samples(ep: &Episode, cfg: &GridConfig, n_a: usize) -> Result<Vec<TrainingSample>> {
    build_samples_strided(ep, cfg, n_a, n_a)
}

/// Samples starting every `stride` steps. Each target is the next `n_a`
/// ground-truth actions, stop-padded past the end of the trajectory, so
/// `stride == n_a` reproduces [`build_samples`] and smaller strides add
/// overlapping windows that start mid-block.
pub fn build_samples_strided(ep: &Episode, cfg: &GridConfig, n_a: usize, stride: usize) -> Result<Vec<TrainingSample>> {
    build_samples_from(ep, cfg, n_a, stride, 0)
}

/// Like [`build_samples_strided`], but windows start at `first_step`. Used
/// for trajectories whose early actions are not meant as targets.
pub fn build_samples_from(
    ep: &Episode,
    cfg: &GridConfig,
    n_a: usize,
    stride: usize,
    first_step: usize,
) -> Result<Vec<TrainingSample>> {
    ep.validate()?;
    if stride == 0 {
        return Err(Error::InvalidConfig("sample stride must be positive".into()));
    }
    let blocks = chunk_actions(&ep.actions, n_a)?;
    (first_step..ep.actions.len())
        .step_by(stride)
        .map(|step| {
            let target = if step % n_a == 0 {
                blocks[step / n_a].clone()
            } else {
                chunk_actions(&ep.actions[step..], n_a)?.swap_remove(0)
            };
            Ok(TrainingSample { prompt: prompt_at(ep, step, cfg, n_a)?, target, episode_id: ep.id.clone(), step_index: step })
        })
        .collect()
}

/// Samples for many episodes, built in parallel, in episode order.
pub fn build_dataset(episodes: &[Episode], cfg: &GridConfig, n_a: usize) -> Result<Vec<TrainingSample>> {
    build_dataset_strided(episodes, cfg, n_a, n_a)
}

pub fn build_dataset_strided(episodes: &[Episode], cfg: &GridConfig, n_a: usize, stride: usize) -> Result<Vec<TrainingSample>> {
    let per: Vec<Vec<TrainingSample>> = episodes
        .par_iter()
        .map(|ep| build_samples_strided(ep, cfg, n_a, stride))
        .collect::<Result<_>>()?;
    Ok(per.into_iter().flatten().collect())
}

pub fn write_samples(samples: &[TrainingSample], path: &Path) -> Result<()> {
    let mut w = BufWriter::new(fs::File::create(path)?);
    for s in samples {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_samples(path: &Path) -> Result<Vec<TrainingSample>> {
    let r = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: TrainingSample = serde_json::from_str(&line).map_err(|e| Error::MalformedRecord {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?;
        out.push(s);
    }
    Ok(out)
}
