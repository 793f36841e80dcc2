//! Train-then-evaluate runs on simulated suites, and the four-way
//! observation ablation built on top of them.
//!
//! Every run generates its episodes from explicit seed ranges, so two runs
//! with the same [`ExperimentConfig`] produce identical models and metrics.

use std::sync::Arc;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{ActionId, DEFAULT_BLOCK_LEN};
use crate::config::GridConfig;
use crate::dataset::build_samples_from;
use crate::episode::Episode;
use crate::error::{Error, Result};
use crate::metrics::{aggregate, format_table, EpisodeRecord, MetricSummary, DESK_SUCCESS_RADIUS};
use crate::predictor::{train_with_report, Featurizer, HeadModel, TrainConfig, TrainReport};
use crate::rollout::{evaluate, EvalTask, ModelPolicy, RolloutConfig, DEFAULT_STEP_CAP};
use crate::sim::{generate_episode, mirror_episode, recovery_episode, CameraModel, Difficulty};

/// A contiguous seed range. Seed `s` uses `difficulties[s % len]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Suite {
    pub first_seed: u64,
    pub count: u64,
    pub difficulties: Vec<Difficulty>,
}

impl Suite {
    pub fn new(first_seed: u64, count: u64, difficulties: Vec<Difficulty>) -> Self {
        Self { first_seed, count, difficulties }
    }

    pub fn seeds(&self) -> std::ops::Range<u64> {
        self.first_seed..self.first_seed + self.count
    }

    pub fn difficulty_of(&self, seed: u64) -> Difficulty {
        self.difficulties[(seed % self.difficulties.len() as u64) as usize]
    }

    /// Episodes in seed order.
    pub fn generate(&self, cam: &CameraModel, jobs: usize) -> Result<Vec<Episode>> {
        if self.difficulties.is_empty() {
            return Err(Error::InvalidConfig("suite lists no difficulty".into()));
        }
        with_pool(jobs, || {
            self.seeds()
                .into_par_iter()
                .map(|s| generate_episode(s, self.difficulty_of(s), cam))
                .collect()
        })?
    }
}

/// Runs `f` on a rayon pool of `jobs` threads.
pub fn with_pool<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}

pub fn default_jobs() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub train_suite: Suite,
    pub eval_suite: Suite,
    pub grid: GridConfig,
    pub n_a: usize,
    /// Steps between consecutive training windows.
    pub stride: usize,
    /// Add the left-right reflection of every training episode.
    pub mirror: bool,
    /// Detours per training episode, each followed by the planner's way back.
    pub recoveries: usize,
    pub featurizer: Featurizer,
    pub training: TrainConfig,
    pub radius: f64,
    pub step_cap: usize,
    pub camera: CameraModel,
    #[serde(skip)]
    pub jobs: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mix = vec![Difficulty::Corridor, Difficulty::Rooms];
        Self {
            train_suite: Suite::new(0, 400, mix.clone()),
            eval_suite: Suite::new(100_000, 50, mix),
            grid: GridConfig::default(),
            n_a: DEFAULT_BLOCK_LEN,
            stride: 1,
            mirror: true,
            recoveries: 0,
            featurizer: Featurizer::default(),
            training: TrainConfig::default(),
            radius: DESK_SUCCESS_RADIUS,
            step_cap: DEFAULT_STEP_CAP,
            camera: CameraModel::default(),
            jobs: default_jobs(),
        }
    }
}

impl ExperimentConfig {
    pub fn rollout_config(&self, grid: GridConfig) -> RolloutConfig {
        RolloutConfig { grid, n_a: self.n_a, step_cap: self.step_cap, radius: self.radius, camera: self.camera }
    }

    /// Training trajectories (originals, detours, then reflections of both)
    /// and evaluation tasks.
    pub fn prepare(&self) -> Result<(Vec<TrainingEpisode>, Vec<EvalTask>)> {
        let overlap = self.train_suite.seeds().any(|s| self.eval_suite.seeds().contains(&s));
        if overlap {
            return Err(Error::InvalidConfig("training and evaluation seeds overlap".into()));
        }
        let base = self.train_suite.generate(&self.camera, self.jobs)?;
        let detours: Vec<Vec<TrainingEpisode>> = with_pool(self.jobs, || {
            base.par_iter()
                .enumerate()
                .map(|(i, ep)| self.detours(ep, self.train_suite.first_seed + i as u64))
                .collect::<Result<Vec<_>>>()
        })??;
        let mut train: Vec<TrainingEpisode> =
            base.into_iter().map(|episode| TrainingEpisode { episode, first_target: 0 }).collect();
        train.extend(detours.into_iter().flatten());
        if self.mirror {
            let mirrored = with_pool(self.jobs, || {
                train
                    .par_iter()
                    .map(|t| Ok(TrainingEpisode { episode: mirror_episode(&t.episode)?, first_target: t.first_target }))
                    .collect::<Result<Vec<_>>>()
            })??;
            train.extend(mirrored);
        }
        // Sorted by id, which is the order `load_episodes` gives once saved,
        // so that `eval` on the saved suite aggregates in the same order.
        let mut eval = self.eval_suite.generate(&self.camera, self.jobs)?;
        eval.sort_by(|a, b| a.id.cmp(&b.id));
        let tasks = eval.iter().map(EvalTask::from_episode).collect::<Result<_>>()?;
        Ok((train, tasks))
    }

    /// Random detours off the oracle path of the episode generated from
    /// `seed`: one to three turns the same way, then up to two moves forward.
    fn detours(&self, ep: &Episode, seed: u64) -> Result<Vec<TrainingEpisode>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(self.training.rng_seed);
        let mut out = Vec::with_capacity(self.recoveries);
        if ep.actions.len() < 2 {
            return Ok(out);
        }
        for j in 0..self.recoveries {
            let at = rng.gen_range(0..ep.actions.len() - 1);
            let turn = if rng.gen_bool(0.5) { ActionId::TurnLeft } else { ActionId::TurnRight };
            let mut detour = vec![turn; rng.gen_range(1..=3)];
            detour.extend(std::iter::repeat(ActionId::Forward).take(rng.gen_range(0..=2)));
            let (episode, first_target) = recovery_episode(ep, at, &detour, &format!("recover{j}"), &self.camera)?;
            out.push(TrainingEpisode { episode, first_target });
        }
        Ok(out)
    }
}

/// A training trajectory and the first step whose actions serve as targets.
#[derive(Debug, Clone)]
pub struct TrainingEpisode {
    pub episode: Episode,
    pub first_target: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub summary: MetricSummary,
    pub records: Vec<EpisodeRecord>,
    pub report: TrainReport,
    pub train_samples: usize,
    pub seconds: f64,
}

/// Builds samples under `grid`, trains, and evaluates closed loop on `tasks`.
pub fn train_and_evaluate(
    cfg: &ExperimentConfig,
    grid: GridConfig,
    train: &[TrainingEpisode],
    tasks: &[EvalTask],
) -> Result<(HeadModel, ExperimentOutcome)> {
    let t0 = Instant::now();
    let samples: Vec<_> = with_pool(cfg.jobs, || {
        train
            .par_iter()
            .map(|t| build_samples_from(&t.episode, &grid, cfg.n_a, cfg.stride, t.first_target))
            .collect::<Result<Vec<_>>>()
    })??
    .into_iter()
    .flatten()
    .collect();
    let (model, report) = with_pool(cfg.jobs, || train_with_report(&samples, &cfg.training, &cfg.featurizer))??;
    let model = Arc::new(model);
    let policy = ModelPolicy { model: model.clone(), featurizer: cfg.featurizer.clone() };
    let runs = evaluate(tasks, &policy, &cfg.rollout_config(grid), cfg.jobs)?;
    let results: Vec<_> = runs.into_iter().map(|r| r.result).collect();
    let records = results.iter().map(|r| EpisodeRecord::from_result(r, cfg.radius)).collect::<Result<_>>()?;
    let outcome = ExperimentOutcome {
        summary: aggregate(&results, cfg.radius)?,
        records,
        report,
        train_samples: samples.len(),
        seconds: t0.elapsed().as_secs_f64(),
    };
    let model = Arc::try_unwrap(model).unwrap_or_else(|m| (*m).clone());
    Ok((model, outcome))
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<(HeadModel, ExperimentOutcome)> {
    let (train, tasks) = cfg.prepare()?;
    train_and_evaluate(cfg, cfg.grid, &train, &tasks)
}

/// One observation setting compared by the ablation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Current view at 4x4 instead of 6x6.
    LowerRes,
    NoHistory,
    NoDepth,
    /// Nothing removed.
    AllInfo,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Self::LowerRes, Self::NoHistory, Self::NoDepth, Self::AllInfo];

    pub fn label(self) -> &'static str {
        match self {
            Self::LowerRes => "Lower Res.",
            Self::NoHistory => "No His.",
            Self::NoDepth => "No Depth",
            Self::AllInfo => "All Info.",
        }
    }

    /// Name used on the command line.
    pub fn flag(self) -> &'static str {
        match self {
            Self::LowerRes => "lower-res",
            Self::NoHistory => "no-history",
            Self::NoDepth => "no-depth",
            Self::AllInfo => "all-info",
        }
    }

    pub fn from_flag(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|v| v.flag() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown ablation {s:?}")))
    }

    pub fn apply(self, base: GridConfig) -> GridConfig {
        match self {
            Self::LowerRes => GridConfig { n_curr: 4, n_short: base.n_short.min(4), n_long: base.n_long.min(4), ..base },
            Self::NoHistory => GridConfig { use_history: false, ..base },
            Self::NoDepth => GridConfig { use_depth: false, ..base },
            Self::AllInfo => base,
        }
    }
}

#[derive(Debug, Clone)]
pub struct AblationRow {
    pub variant: Variant,
    pub model: HeadModel,
    pub outcome: ExperimentOutcome,
}

/// Trains and evaluates every variant on the same generated episodes.
pub fn run_ablation(cfg: &ExperimentConfig) -> Result<Vec<AblationRow>> {
    let (train, tasks) = cfg.prepare()?;
    Variant::ALL
        .into_iter()
        .map(|variant| {
            let (model, outcome) = train_and_evaluate(cfg, variant.apply(cfg.grid), &train, &tasks)?;
            Ok(AblationRow { variant, model, outcome })
        })
        .collect()
}

pub fn ablation_table(rows: &[AblationRow]) -> String {
    let rows: Vec<_> = rows.iter().map(|r| (r.variant.label().to_string(), r.outcome.summary)).collect();
    format_table(&rows)
}
