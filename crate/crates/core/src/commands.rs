//! Workflows behind the `solnav` command line. Each one returns what it
//! produced rather than printing it, so the binary is left with flag parsing
//! and output.

use std::env;
use std::fs;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GridConfig;
use crate::dataset::{build_dataset_strided, prompt_at, read_samples, write_samples};
use crate::encoder::encode_frame;
use crate::episode::{load_episodes, Episode};
use crate::error::{Error, Result};
use crate::experiment::with_pool;
use crate::frame::Frame;
use crate::metrics::{read_metrics, write_metrics, EpisodeRecord, MetricSummary};
use crate::predictor::{train_with_report, Featurizer, HeadModel, TrainConfig, TrainReport};
use crate::rollout::{evaluate, EvalTask, LinePolicy, ModelPolicy, OraclePolicy, Policy, RolloutConfig, StopPolicy};
use crate::sim::{generate_episode, CameraModel, Difficulty};

/// Environment variable naming the directory that `fixtures/...` paths resolve to.
pub const FIXTURES_ENV: &str = "SOLNAV_FIXTURES";

/// The fixture directory: `$SOLNAV_FIXTURES` when set, else the one shipped
/// with the crate.
pub fn fixtures_dir() -> PathBuf {
    env::var_os(FIXTURES_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures"))
}

/// Relative paths under `fixtures/` are looked up in [`fixtures_dir`] when
/// the override is set or the path does not exist relative to the working
/// directory. Everything else is returned unchanged.
pub fn resolve_fixture_path(p: &Path) -> PathBuf {
    let Ok(rest) = p.strip_prefix("fixtures") else {
        return p.to_path_buf();
    };
    if env::var_os(FIXTURES_ENV).is_some() || !p.exists() {
        fixtures_dir().join(rest)
    } else {
        p.to_path_buf()
    }
}

/// Cell lines of one frame directory at an `n`x`n` grid.
pub fn encode_observation(frame_dir: &Path, n: usize, timestep: i64, use_depth: bool) -> Result<String> {
    let frame = Frame::load_dir(&resolve_fixture_path(frame_dir))?;
    Ok(encode_frame(&frame, n, timestep, use_depth)?.to_text())
}

/// Full prompt for the decision at `step` of a saved episode.
pub fn episode_prompt(episode_dir: &Path, step: usize, grid: &GridConfig, n_a: usize) -> Result<String> {
    grid.validate()?;
    let ep = Episode::load_dir(&resolve_fixture_path(episode_dir))?;
    if step >= ep.frames.len() {
        return Err(Error::InvalidEpisode(format!("{}: step {step} past the last frame {}", ep.id, ep.frames.len() - 1)));
    }
    prompt_at(&ep, step, grid, n_a)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulateSummary {
    pub written: Vec<String>,
    /// Seeds that failed, with the reason.
    pub failures: Vec<(u64, String)>,
}

/// Generates `count` episodes from consecutive seeds and writes one
/// directory per episode under `out`. A failing seed is recorded and skipped.
pub fn simulate(
    first_seed: u64,
    count: u64,
    difficulty: Difficulty,
    cam: &CameraModel,
    out: &Path,
    jobs: usize,
) -> Result<SimulateSummary> {
    fs::create_dir_all(out)?;
    let generated: Vec<(u64, Result<Episode>)> = with_pool(jobs, || {
        (first_seed..first_seed + count).into_par_iter().map(|s| (s, generate_episode(s, difficulty, cam))).collect()
    })?;
    let mut summary = SimulateSummary { written: Vec::new(), failures: Vec::new() };
    for (seed, ep) in generated {
        match ep {
            Ok(ep) => {
                ep.save_dir(&out.join(&ep.id))?;
                summary.written.push(ep.id);
            }
            Err(e) => summary.failures.push((seed, e.to_string())),
        }
    }
    Ok(summary)
}

/// Writes training samples for every episode under `episodes` and returns
/// how many were written.
pub fn build_dataset_file(
    episodes: &Path,
    grid: &GridConfig,
    n_a: usize,
    stride: usize,
    out: &Path,
    jobs: usize,
) -> Result<usize> {
    grid.validate()?;
    let eps = load_episodes(episodes)?;
    if eps.is_empty() {
        return Err(Error::EmptyEpisodeSet);
    }
    let samples = with_pool(jobs, || build_dataset_strided(&eps, grid, n_a, stride))??;
    write_samples(&samples, out)?;
    Ok(samples.len())
}

pub fn train_file(
    dataset: &Path,
    cfg: &TrainConfig,
    featurizer: &Featurizer,
    model_out: &Path,
    jobs: usize,
) -> Result<TrainReport> {
    let samples = read_samples(dataset)?;
    let (model, report) = with_pool(jobs, || train_with_report(&samples, cfg, featurizer))??;
    model.save(model_out)?;
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PolicyChoice {
    /// A trained checkpoint.
    Model(PathBuf),
    /// Replans with the simulator's planner from the current pose.
    Oracle,
    /// Stops immediately.
    Stop,
    /// Line-delimited JSON requests on stdout, replies on stdin.
    Stdio,
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub summary: MetricSummary,
    pub records: Vec<EpisodeRecord>,
}

/// Rolls the chosen policy on every saved episode and writes the metrics
/// file. Episodes need their scene file to be simulated.
pub fn eval_episodes(
    episodes: &Path,
    policy: &PolicyChoice,
    cfg: &RolloutConfig,
    jobs: usize,
    out: &Path,
) -> Result<EvalOutcome> {
    cfg.grid.validate()?;
    let eps = if episodes.exists() { load_episodes(episodes)? } else { Vec::new() };
    if eps.is_empty() {
        return Err(Error::EmptyEpisodeSet);
    }
    let tasks = eps.iter().map(EvalTask::from_episode).collect::<Result<Vec<_>>>()?;
    let runs = match policy {
        PolicyChoice::Model(path) => {
            let model = HeadModel::load(path, None)?;
            let featurizer = model.featurizer().clone();
            evaluate(&tasks, &ModelPolicy { model: Arc::new(model), featurizer }, cfg, jobs)?
        }
        PolicyChoice::Oracle => evaluate(&tasks, &OraclePolicy, cfg, jobs)?,
        PolicyChoice::Stop => evaluate(&tasks, &StopPolicy, cfg, jobs)?,
        PolicyChoice::Stdio => {
            let stdio = LinePolicy::new(BufReader::new(std::io::stdin()), std::io::stdout());
            evaluate(&tasks, &stdio as &dyn Policy, cfg, 1)?
        }
    };
    let records =
        runs.iter().map(|r| EpisodeRecord::from_result(&r.result, cfg.radius)).collect::<Result<Vec<_>>>()?;
    let summary = write_metrics(out, &records, cfg.radius)?;
    Ok(EvalOutcome { summary, records })
}

/// Validates each metrics file and returns one table row per file, labeled
/// by file stem.
pub fn report_rows(paths: &[PathBuf]) -> Result<Vec<(String, MetricSummary)>> {
    if paths.is_empty() {
        return Err(Error::InvalidConfig("no metrics files given".into()));
    }
    paths
        .iter()
        .map(|p| {
            let file = read_metrics(p)?;
            let label = p.file_stem().map_or_else(|| p.display().to_string(), |s| s.to_string_lossy().into_owned());
            Ok((label, file.summary))
        })
        .collect()
}

/// Writes `text` to `path`, or to standard output when no path is given.
pub fn emit(text: &str, path: Option<&Path>) -> Result<()> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
