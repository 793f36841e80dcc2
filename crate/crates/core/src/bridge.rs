//! Interfaces for letting an external language model act as the policy.
//!
//! Each decision posts the prompt, unchanged, as the single user message of
//! a chat-completions request. The reply text is scanned for the first
//! bracketed list of exactly `n_a` action indices. A model that never
//! produces one (after the configured retries) gets a stop block, and the
//! episode records a parse failure instead of aborting the run.
//!
//! The transport is a trait so that evaluation logic can be exercised
//! against in-process mock endpoints; this crate ships no HTTP client.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Mutex;
use std::time::Duration;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::action::{ActionBlock, ActionId};
use crate::episode::load_episodes;
use crate::error::{Error, Result};
use crate::metrics::{write_metrics, EpisodeRecord, MetricSummary};
use crate::rollout::{rollout, Decision, EvalTask, Policy, RolloutConfig};

/// Upper bound on `max_retries`, so a misconfigured run cannot hammer an endpoint.
pub const MAX_RETRIES_LIMIT: u32 = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EndpointConfig {
    pub base_url: String,
    pub model_name: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
    pub temperature: f64,
    pub max_tokens: u32,
    /// Read from the environment only, and never echoed.
    #[serde(skip)]
    pub api_key: Option<String>,
}

impl Default for EndpointConfig {
    fn default() -> Self {
        Self {
            base_url: "http://127.0.0.1:8000/v1".into(),
            model_name: String::new(),
            timeout_secs: 30.0,
            max_retries: 2,
            temperature: 0.0,
            max_tokens: 64,
            api_key: None,
        }
    }
}

impl EndpointConfig {
    /// Defaults overridden by `SOLNAV_PLM_URL`, `SOLNAV_PLM_MODEL` and
    /// `SOLNAV_PLM_API_KEY` where set.
    pub fn from_env() -> Self {
        let mut cfg = Self::default();
        if let Ok(url) = std::env::var("SOLNAV_PLM_URL") {
            cfg.base_url = url;
        }
        if let Ok(model) = std::env::var("SOLNAV_PLM_MODEL") {
            cfg.model_name = model;
        }
        cfg.api_key = std::env::var("SOLNAV_PLM_API_KEY").ok();
        cfg
    }

    pub fn validate(&self) -> Result<()> {
        let ok = !self.base_url.is_empty()
            && self.timeout_secs > 0.0
            && self.timeout_secs.is_finite()
            && self.max_retries <= MAX_RETRIES_LIMIT
            && self.temperature >= 0.0
            && self.temperature.is_finite()
            && self.max_tokens > 0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidConfig(format!("invalid endpoint configuration {self:?}")))
        }
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

/// Sends one chat-completions request body and returns the response body.
pub trait CompletionClient: Sync {
    fn complete(&self, cfg: &EndpointConfig, request: &Value) -> Result<Value>;
}

pub fn chat_request(prompt: &str, cfg: &EndpointConfig) -> Value {
    json!({
        "model": cfg.model_name,
        "messages": [{ "role": "user", "content": prompt }],
        "temperature": cfg.temperature,
        "max_tokens": cfg.max_tokens,
    })
}

/// `choices[0].message.content` of a chat-completions response.
pub fn completion_text(response: &Value) -> Option<&str> {
    response.pointer("/choices/0/message/content")?.as_str()
}

/// The first `[...]` list holding exactly `n_a` integers in 0..=3, with
/// the stop-suffix rule applied. Lists of another length or with other
/// contents are skipped.
pub fn parse_action_block(text: &str, n_a: usize) -> Option<ActionBlock> {
    let mut rest = text;
    while let Some(open) = rest.find('[') {
        let after = &rest[open + 1..];
        let Some(close) = after.find(']') else { break };
        let body = &after[..close];
        let parsed: Option<Vec<ActionId>> = body
            .split(',')
            .map(|t| t.trim().parse::<usize>().ok().and_then(|i| ActionId::from_index(i).ok()))
            .collect();
        if let Some(actions) = parsed.filter(|a| a.len() == n_a) {
            return Some(ActionBlock::from_raw(actions));
        }
        rest = &after[close + 1..];
    }
    None
}

#[derive(Debug, Clone, PartialEq)]
pub struct BlockQuery {
    pub block: ActionBlock,
    /// No attempt produced a usable block; `block` is the stop fallback.
    pub parse_failed: bool,
    pub attempts: u32,
    /// Why the last failed attempt failed, if any did.
    pub last_error: Option<String>,
}

/// Queries the endpoint until a reply parses, at most `1 + max_retries`
/// times. Transport errors and unusable replies are both retried. Only an
/// invalid configuration is reported as an error.
pub fn query_action_block(
    prompt: &str,
    n_a: usize,
    cfg: &EndpointConfig,
    client: &dyn CompletionClient,
) -> Result<BlockQuery> {
    cfg.validate()?;
    if n_a == 0 {
        return Err(Error::BlockLength { expected: 1, got: 0 });
    }
    let request = chat_request(prompt, cfg);
    let mut last_error = None;
    for attempt in 1..=cfg.max_retries + 1 {
        let reason = match client.complete(cfg, &request) {
            Ok(response) => match completion_text(&response) {
                Some(text) => match parse_action_block(text, n_a) {
                    Some(block) => return Ok(BlockQuery { block, parse_failed: false, attempts: attempt, last_error }),
                    None => format!("no list of {n_a} action indices in {text:?}"),
                },
                None => "response has no completion text".to_string(),
            },
            Err(e) => e.to_string(),
        };
        last_error = Some(reason);
    }
    Ok(BlockQuery { block: ActionBlock::stop(n_a), parse_failed: true, attempts: cfg.max_retries + 1, last_error })
}

/// A [`Policy`] backed by a completion endpoint. Parse failures are
/// counted per episode.
pub struct PlmPolicy<'a> {
    client: &'a dyn CompletionClient,
    cfg: EndpointConfig,
    parse_failures: Mutex<BTreeMap<String, usize>>,
}

impl<'a> PlmPolicy<'a> {
    pub fn new(client: &'a dyn CompletionClient, cfg: EndpointConfig) -> Result<Self> {
        cfg.validate()?;
        Ok(Self { client, cfg, parse_failures: Mutex::new(BTreeMap::new()) })
    }

    /// Episodes with at least one fallback block, and how many each had.
    pub fn parse_failures(&self) -> BTreeMap<String, usize> {
        self.parse_failures.lock().map(|m| m.clone()).unwrap_or_default()
    }
}

impl Policy for PlmPolicy<'_> {
    fn needs_prompt(&self) -> bool {
        true
    }

    fn act(&self, d: &Decision<'_>) -> Result<ActionBlock> {
        let q = query_action_block(d.prompt.unwrap_or_default(), d.n_a, &self.cfg, self.client)?;
        if q.parse_failed {
            let mut m = self.parse_failures.lock().map_err(|_| Error::Policy("failure log poisoned".into()))?;
            *m.entry(d.task.id.clone()).or_default() += 1;
        }
        Ok(q.block)
    }
}

#[derive(Debug, Clone)]
pub struct BridgeRun {
    pub summary: MetricSummary,
    /// In episode-id order, failed episodes left out.
    pub records: Vec<EpisodeRecord>,
    pub parse_failures: BTreeMap<String, usize>,
    /// Episodes whose rollout raised an error, with the message.
    pub failed_episodes: Vec<(String, String)>,
}

/// Closed-loop evaluation of the endpoint on every saved episode under
/// `episode_dir`, writing the standard metrics file to `out`. Up to `jobs`
/// episodes are in flight at once. An episode that errors is listed in
/// `failed_episodes` and the rest still run.
pub fn run_eval(
    episode_dir: &Path,
    endpoint: &EndpointConfig,
    client: &dyn CompletionClient,
    cfg: &RolloutConfig,
    jobs: usize,
    out: &Path,
) -> Result<BridgeRun> {
    let episodes = if episode_dir.exists() { load_episodes(episode_dir)? } else { Vec::new() };
    if episodes.is_empty() {
        return Err(Error::EmptyEpisodeSet);
    }
    let tasks = episodes.iter().map(EvalTask::from_episode).collect::<Result<Vec<_>>>()?;
    let policy = PlmPolicy::new(client, endpoint.clone())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| Error::Policy(e.to_string()))?;
    let runs: Vec<_> = pool.install(|| tasks.par_iter().map(|t| rollout(t, &policy, cfg)).collect());

    let mut records = Vec::new();
    let mut failed_episodes = Vec::new();
    for (task, run) in tasks.iter().zip(runs) {
        match run.and_then(|r| EpisodeRecord::from_result(&r.result, cfg.radius)) {
            Ok(rec) => records.push(rec),
            Err(e) => failed_episodes.push((task.id.clone(), e.to_string())),
        }
    }
    if records.is_empty() {
        return Err(Error::Policy(format!("all {} episodes failed", failed_episodes.len())));
    }
    let summary = write_metrics(out, &records, cfg.radius)?;
    Ok(BridgeRun { summary, records, parse_failures: policy.parse_failures(), failed_episodes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::action::ActionId::*;
    use crate::commands::simulate;
    use crate::metrics::read_metrics;
    use crate::sim::{CameraModel, Difficulty};
    use std::sync::atomic::{AtomicUsize, Ordering};

    fn reply(text: &str) -> Value {
        json!({ "choices": [{ "message": { "role": "assistant", "content": text } }] })
    }

    struct Fixed(&'static str);

    impl CompletionClient for Fixed {
        fn complete(&self, _: &EndpointConfig, _: &Value) -> Result<Value> {
            Ok(reply(self.0))
        }
    }

    /// Fails with a transport error `fail_first` times, then answers.
    struct Flaky {
        fail_first: usize,
        calls: AtomicUsize,
    }

    impl CompletionClient for Flaky {
        fn complete(&self, _: &EndpointConfig, _: &Value) -> Result<Value> {
            if self.calls.fetch_add(1, Ordering::SeqCst) < self.fail_first {
                Err(Error::Policy("timed out".into()))
            } else {
                Ok(reply("[3, 3, 2, 0]"))
            }
        }
    }

    /// Replays each episode's recorded actions. The step count comes from
    /// the prompt itself: the oldest history frame is always kept, so the
    /// largest `t-k` header equals the number of actions taken.
    struct Replay(BTreeMap<String, Vec<ActionId>>);

    impl CompletionClient for Replay {
        fn complete(&self, _: &EndpointConfig, request: &Value) -> Result<Value> {
            let prompt = request.pointer("/messages/0/content").and_then(Value::as_str).unwrap_or_default();
            let instruction = prompt.lines().find_map(|l| l.strip_prefix("Instruction: ")).unwrap_or_default();
            let steps = prompt
                .lines()
                .filter_map(|l| l.strip_prefix("Observation t-")?.split(' ').next()?.parse::<usize>().ok())
                .max()
                .unwrap_or(0);
            let actions = &self.0[instruction];
            let block: Vec<String> =
                (steps..steps + 4).map(|i| actions.get(i).copied().unwrap_or(Stop).index().to_string()).collect();
            Ok(reply(&format!("Actions: [{}]", block.join(", "))))
        }
    }

    fn fast() -> EndpointConfig {
        EndpointConfig { model_name: "mock".into(), ..Default::default() }
    }

    #[test]
    fn parses_first_matching_list() {
        let b = |v: Vec<ActionId>| Some(ActionBlock::from_raw(v));
        assert_eq!(parse_action_block("Actions: [3, 3, 1, 0]", 4), b(vec![Forward, Forward, TurnLeft, Stop]));
        assert_eq!(parse_action_block("[1, 2] then [3,0,2,1]", 4), b(vec![Forward, Stop, Stop, Stop]));
        assert_eq!(parse_action_block("[4, 1, 1, 1] or [2,2,2,2]", 4), b(vec![TurnRight; 4]));
        assert_eq!(parse_action_block("go forward", 4), None);
        assert_eq!(parse_action_block("[3, 3, 3", 4), None);
        assert_eq!(parse_action_block("[-1, 3, 3, 3]", 4), None);
    }

    #[test]
    fn unparsable_reply_falls_back_to_stop() {
        let q = query_action_block("p", 4, &fast(), &Fixed("go forward")).unwrap();
        assert!(q.parse_failed);
        assert_eq!(q.block, ActionBlock::stop(4));
        assert_eq!(q.attempts, 3);
        assert!(q.last_error.unwrap().contains("go forward"));
    }

    #[test]
    fn transport_errors_are_retried() {
        let client = Flaky { fail_first: 2, calls: AtomicUsize::new(0) };
        let q = query_action_block("p", 4, &fast(), &client).unwrap();
        assert!(!q.parse_failed);
        assert_eq!(q.attempts, 3);
        assert_eq!(q.block.indices(), vec![3, 3, 2, 0]);

        let client = Flaky { fail_first: 3, calls: AtomicUsize::new(0) };
        assert!(query_action_block("p", 4, &fast(), &client).unwrap().parse_failed);
    }

    #[test]
    fn request_carries_the_prompt_verbatim() {
        let prompt = "line one\nObservation t-0 (6x6 grid):\n[1,1]: depth=1.0\n";
        let r = chat_request(prompt, &fast());
        assert_eq!(r["messages"].as_array().unwrap().len(), 1);
        assert_eq!(r["messages"][0]["role"], "user");
        assert_eq!(r["messages"][0]["content"].as_str(), Some(prompt));
        assert_eq!(r["temperature"], 0.0);
        assert_eq!(completion_text(&reply("x")), Some("x"));
        assert_eq!(completion_text(&json!({ "choices": [] })), None);
    }

    #[test]
    fn config_bounds() {
        let cfg = EndpointConfig::default();
        assert_eq!(cfg.temperature, 0.0);
        cfg.validate().unwrap();
        for bad in [
            EndpointConfig { max_retries: MAX_RETRIES_LIMIT + 1, ..Default::default() },
            EndpointConfig { timeout_secs: 0.0, ..Default::default() },
            EndpointConfig { temperature: f64::NAN, ..Default::default() },
        ] {
            assert!(bad.validate().is_err());
        }
        let with_key = EndpointConfig { api_key: Some("secret".into()), ..Default::default() };
        assert!(!serde_json::to_string(&with_key).unwrap().contains("secret"));
    }

    fn corridor_suite(dir: &Path, count: u64) {
        let summary = simulate(40, count, Difficulty::Corridor, &CameraModel::default(), dir, 1).unwrap();
        assert!(summary.failures.is_empty());
    }

    #[test]
    fn stop_only_endpoint_scores_start_distance() {
        let tmp = tempfile::tempdir().unwrap();
        let eps = tmp.path().join("eps");
        corridor_suite(&eps, 3);
        let cfg = RolloutConfig { radius: 1.0, ..Default::default() };
        let out = tmp.path().join("m.jsonl");
        let run = run_eval(&eps, &fast(), &Fixed("[0, 0, 0, 0]"), &cfg, 2, &out).unwrap();
        let episodes = load_episodes(&eps).unwrap();
        assert_eq!(run.records.len(), 3);
        for (rec, ep) in run.records.iter().zip(&episodes) {
            assert_eq!(rec.episode_id, ep.id);
            assert!((rec.ne - ep.start.distance_to(ep.goal)).abs() < 1e-12);
        }
        assert!(run.parse_failures.is_empty() && run.failed_episodes.is_empty());
        assert_eq!(read_metrics(&out).unwrap().records, run.records);
    }

    #[test]
    fn fixed_reply_runs_are_reproducible() {
        let tmp = tempfile::tempdir().unwrap();
        let eps = tmp.path().join("eps");
        corridor_suite(&eps, 2);
        let cfg = RolloutConfig { radius: 1.0, step_cap: 40, ..Default::default() };
        let files: Vec<String> = (0..2)
            .map(|i| {
                let out = tmp.path().join(format!("m{i}.jsonl"));
                let run = run_eval(&eps, &fast(), &Fixed("Sure. [3, 3, 1, 3]"), &cfg, 1 + i, &out).unwrap();
                assert!(run.parse_failures.is_empty());
                std::fs::read_to_string(out).unwrap()
            })
            .collect();
        assert_eq!(files[0], files[1]);

        let out = tmp.path().join("garbled.jsonl");
        let run = run_eval(&eps, &fast(), &Fixed("I would walk ahead."), &cfg, 1, &out).unwrap();
        assert_eq!(run.parse_failures.values().sum::<usize>(), 2);
        assert_eq!(run.summary.sr, 0.0);
    }

    #[test]
    fn replaying_recorded_actions_succeeds() {
        // Templated instructions repeat across seeds, so each episode gets
        // its own directory and its own replay table.
        let tmp = tempfile::tempdir().unwrap();
        let cfg = RolloutConfig { radius: 1.0, ..Default::default() };
        for seed in 40..44 {
            let eps = tmp.path().join(format!("eps{seed}"));
            simulate(seed, 1, Difficulty::Corridor, &CameraModel::default(), &eps, 1).unwrap();
            let ep = load_episodes(&eps).unwrap().remove(0);
            let client = Replay([(ep.instruction.clone(), ep.actions.clone())].into());
            let run = run_eval(&eps, &fast(), &client, &cfg, 1, &tmp.path().join(format!("m{seed}.jsonl"))).unwrap();
            assert_eq!(run.summary.sr, 1.0, "{}", ep.id);
            assert!(run.parse_failures.is_empty());
        }
    }

    #[test]
    fn empty_directory() {
        let tmp = tempfile::tempdir().unwrap();
        let r = run_eval(tmp.path(), &fast(), &Fixed("[0,0,0,0]"), &RolloutConfig::default(), 1, &tmp.path().join("m"));
        assert!(matches!(r, Err(Error::EmptyEpisodeSet)));
    }
}
