//! Closed-loop evaluation: render, encode, prompt, predict a block, execute
//! it, and re-prompt after every block until stop or the step cap.

use std::io::{BufRead, Write};
use std::sync::{Arc, Mutex};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::action::{ActionBlock, ActionId, DEFAULT_BLOCK_LEN};
use crate::config::GridConfig;
use crate::episode::Episode;
use crate::error::{Error, Result};
use crate::history::{build_sequence, HistoryBuffer};
use crate::metrics::{EpisodeResult, DEFAULT_SUCCESS_RADIUS};
use crate::pose::Pose;
use crate::predictor::{Featurizer, HeadModel};
use crate::prompt::{build_prompt, default_system_text, PromptParts};
use crate::sim::{oracle_actions, render, step, CameraModel, World};

pub const DEFAULT_STEP_CAP: usize = 200;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RolloutConfig {
    pub grid: GridConfig,
    pub n_a: usize,
    pub step_cap: usize,
    pub radius: f64,
    pub camera: CameraModel,
}

impl Default for RolloutConfig {
    fn default() -> Self {
        Self {
            grid: GridConfig::default(),
            n_a: DEFAULT_BLOCK_LEN,
            step_cap: DEFAULT_STEP_CAP,
            radius: DEFAULT_SUCCESS_RADIUS,
            camera: CameraModel::default(),
        }
    }
}

/// What a policy sees when asked for the next block.
pub struct Decision<'a> {
    pub task: &'a EvalTask,
    pub pose: Pose,
    pub steps_taken: usize,
    /// Present only for policies that asked for one.
    pub prompt: Option<&'a str>,
    pub n_a: usize,
}

pub trait Policy: Sync {
    fn needs_prompt(&self) -> bool;
    fn act(&self, d: &Decision<'_>) -> Result<ActionBlock>;
}

pub struct ModelPolicy {
    pub model: Arc<HeadModel>,
    pub featurizer: Featurizer,
}

impl Policy for ModelPolicy {
    fn needs_prompt(&self) -> bool {
        true
    }

    fn act(&self, d: &Decision<'_>) -> Result<ActionBlock> {
        let block = self.model.predict(d.prompt.unwrap_or_default(), &self.featurizer)?;
        if block.len() != d.n_a {
            return Err(Error::BlockLength { expected: d.n_a, got: block.len() });
        }
        Ok(block)
    }
}

/// Replans from the current pose and returns the first block of the plan.
pub struct OraclePolicy;

impl Policy for OraclePolicy {
    fn needs_prompt(&self) -> bool {
        false
    }

    fn act(&self, d: &Decision<'_>) -> Result<ActionBlock> {
        let mut plan = oracle_actions(&d.task.world, d.pose, d.task.goal)?;
        plan.truncate(d.n_a);
        plan.resize(d.n_a, ActionId::Stop);
        Ok(ActionBlock::from_raw(plan))
    }
}

pub struct StopPolicy;

impl Policy for StopPolicy {
    fn needs_prompt(&self) -> bool {
        false
    }

    fn act(&self, d: &Decision<'_>) -> Result<ActionBlock> {
        Ok(ActionBlock::stop(d.n_a))
    }
}

/// Request line written by [`LinePolicy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockRequest {
    pub episode_id: String,
    pub step: usize,
    pub n_a: usize,
    pub prompt: String,
}

/// Reply line expected by [`LinePolicy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockReply {
    pub actions: Vec<u8>,
}

/// Delegates every decision to an external process over line-delimited
/// JSON: one [`BlockRequest`] out, one [`BlockReply`] back. Requests are
/// serialized, so callers should evaluate with a single job.
pub struct LinePolicy<R, W> {
    io: Mutex<(R, W)>,
}

impl<R: BufRead + Send, W: Write + Send> LinePolicy<R, W> {
    pub fn new(reader: R, writer: W) -> Self {
        Self { io: Mutex::new((reader, writer)) }
    }
}

impl<R: BufRead + Send, W: Write + Send> Policy for LinePolicy<R, W> {
    fn needs_prompt(&self) -> bool {
        true
    }

    fn act(&self, d: &Decision<'_>) -> Result<ActionBlock> {
        let mut io = self.io.lock().map_err(|_| Error::Policy("io lock poisoned".into()))?;
        let req = BlockRequest {
            episode_id: d.task.id.clone(),
            step: d.steps_taken,
            n_a: d.n_a,
            prompt: d.prompt.unwrap_or_default().to_string(),
        };
        serde_json::to_writer(&mut io.1, &req)?;
        io.1.write_all(b"\n")?;
        io.1.flush()?;
        let mut line = String::new();
        if io.0.read_line(&mut line)? == 0 {
            return Err(Error::Policy("policy process closed its output".into()));
        }
        let reply: BlockReply = serde_json::from_str(line.trim())?;
        let actions = reply
            .actions
            .iter()
            .map(|&i| ActionId::from_index(i as usize))
            .collect::<Result<Vec<_>>>()?;
        if actions.len() != d.n_a {
            return Err(Error::BlockLength { expected: d.n_a, got: actions.len() });
        }
        Ok(ActionBlock::from_raw(actions))
    }
}

/// Everything needed to run a policy on one episode.
#[derive(Debug, Clone)]
pub struct EvalTask {
    pub id: String,
    pub world: World,
    pub start: Pose,
    pub goal: (f64, f64),
    pub instruction: String,
    pub shortest_path_length: f64,
}

impl EvalTask {
    pub fn from_episode(ep: &Episode) -> Result<Self> {
        let world = ep
            .world
            .clone()
            .ok_or_else(|| Error::InvalidEpisode(format!("{}: no scene description, cannot simulate", ep.id)))?;
        Ok(Self {
            id: ep.id.clone(),
            world,
            start: ep.start,
            goal: ep.goal,
            instruction: ep.instruction.clone(),
            shortest_path_length: ep.shortest_path_length,
        })
    }
}

#[derive(Debug, Clone)]
pub struct Rollout {
    pub result: EpisodeResult,
    pub actions: Vec<ActionId>,
    pub blocks_requested: usize,
}

pub fn rollout(task: &EvalTask, policy: &dyn Policy, cfg: &RolloutConfig) -> Result<Rollout> {
    cfg.grid.validate()?;
    let with_prompt = policy.needs_prompt();
    let system_text = default_system_text(cfg.n_a);
    let observe = |p: &Pose| -> Result<Option<Arc<crate::frame::Frame>>> {
        Ok(if with_prompt { Some(Arc::new(render(&task.world, p, &cfg.camera)?)) } else { None })
    };

    let mut history = HistoryBuffer::new(cfg.grid);
    let mut pose = task.start;
    let mut trajectory = vec![pose.position()];
    let mut actions = Vec::new();
    let mut frame = observe(&pose)?;
    let mut blocks = 0;
    let mut stopped = false;

    'episode: while actions.len() < cfg.step_cap {
        let prompt = match &frame {
            Some(f) => Some(build_prompt(&PromptParts {
                system_text: system_text.clone(),
                sequence: build_sequence(&history, f)?,
                instruction: task.instruction.clone(),
                n_a: cfg.n_a,
            })?),
            None => None,
        };
        let block = policy.act(&Decision {
            task,
            pose,
            steps_taken: actions.len(),
            prompt: prompt.as_deref(),
            n_a: cfg.n_a,
        })?;
        blocks += 1;
        for &a in block.actions() {
            if a == ActionId::Stop {
                stopped = true;
                break 'episode;
            }
            if actions.len() >= cfg.step_cap {
                break 'episode;
            }
            if let Some(f) = frame.take() {
                history.push(actions.len() as i64, f)?;
            }
            pose = step(&task.world, &pose, a);
            actions.push(a);
            trajectory.push(pose.position());
            frame = observe(&pose)?;
        }
    }

    let result = EpisodeResult::from_trajectory(task.id.clone(), trajectory, task.goal, task.shortest_path_length, stopped)?;
    Ok(Rollout { result, actions, blocks_requested: blocks })
}

/// Runs every task, `jobs` at a time, returning results in task order.
pub fn evaluate(tasks: &[EvalTask], policy: &dyn Policy, cfg: &RolloutConfig, jobs: usize) -> Result<Vec<Rollout>> {
    if tasks.is_empty() {
        return Err(Error::EmptyEpisodeSet);
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Policy(e.to_string()))?;
    pool.install(|| tasks.par_iter().map(|t| rollout(t, policy, cfg)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::{navigation_error, success};
    use crate::sim::{generate_world, shortest_path_length, Difficulty};

    fn task(seed: u64, d: Difficulty) -> EvalTask {
        let world = generate_world(seed, d).unwrap();
        let plan = oracle_actions(&world, world.start, world.goal).unwrap();
        let l = shortest_path_length(&world, world.start, world.goal, &plan).unwrap();
        EvalTask { id: format!("t{seed}"), start: world.start, goal: world.goal, instruction: "go".into(), shortest_path_length: l, world }
    }

    #[test]
    fn oracle_reaches_goal() {
        let cfg = RolloutConfig { radius: 1.0, ..Default::default() };
        for seed in 0..4 {
            let t = task(seed, Difficulty::Rooms);
            let r = rollout(&t, &OraclePolicy, &cfg).unwrap();
            assert!(r.result.stopped);
            assert!(success(&r.result, 0.25));
        }
    }

    #[test]
    fn stop_policy_stays_put() {
        let t = task(3, Difficulty::Corridor);
        let r = rollout(&t, &StopPolicy, &RolloutConfig::default()).unwrap();
        assert_eq!(r.result.trajectory.len(), 1);
        assert_eq!(r.result.path_length, 0.0);
        assert!((navigation_error(&r.result) - t.start.distance_to(t.goal)).abs() < 1e-12);
    }

    struct Spin;
    impl Policy for Spin {
        fn needs_prompt(&self) -> bool {
            true
        }
        fn act(&self, d: &Decision<'_>) -> Result<ActionBlock> {
            assert!(d.prompt.unwrap().contains("Instruction: go"));
            Ok(ActionBlock::from_raw(vec![ActionId::TurnLeft; d.n_a]))
        }
    }

    #[test]
    fn cap_ends_without_stop() {
        let t = task(1, Difficulty::Corridor);
        let cfg = RolloutConfig { step_cap: 10, ..Default::default() };
        let r = rollout(&t, &Spin, &cfg).unwrap();
        assert_eq!(r.actions.len(), 10);
        assert!(!r.result.stopped);
        assert_eq!(r.blocks_requested, 3);
    }

    #[test]
    fn line_policy_protocol() {
        let t = task(2, Difficulty::Corridor);
        let replies = "{\"actions\":[1,1,0,3]}\n";
        let mut out = Vec::new();
        {
            let p = LinePolicy::new(std::io::Cursor::new(replies), &mut out);
            let r = rollout(&t, &p, &RolloutConfig::default()).unwrap();
            assert_eq!(r.actions, vec![ActionId::TurnLeft, ActionId::TurnLeft]);
        }
        let req: BlockRequest = serde_json::from_str(std::str::from_utf8(&out).unwrap().lines().next().unwrap()).unwrap();
        assert_eq!((req.step, req.n_a, req.episode_id.as_str()), (0, 4, "t2"));
        assert!(req.prompt.ends_with("Predict the next 4 actions:\n"));
    }

    #[test]
    fn evaluate_keeps_order_and_rejects_empty() {
        let tasks: Vec<_> = (0..4).map(|s| task(s, Difficulty::Corridor)).collect();
        let rs = evaluate(&tasks, &OraclePolicy, &RolloutConfig::default(), 3).unwrap();
        let ids: Vec<_> = rs.iter().map(|r| r.result.episode_id.clone()).collect();
        assert_eq!(ids, ["t0", "t1", "t2", "t3"]);
        assert!(matches!(evaluate(&[], &OraclePolicy, &RolloutConfig::default(), 1), Err(Error::EmptyEpisodeSet)));
    }
}
