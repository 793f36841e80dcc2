//! Closed-loop rollouts with two reference policies on every difficulty: the
//! planner replanning at each block, and a policy that stops at once. These
//! bracket what a learned policy can score.
//!
//!     cargo run --release --example oracle_rollout [episodes_per_difficulty]

use solnav::metrics::{aggregate, format_table};
use solnav::rollout::{evaluate, EvalTask, OraclePolicy, Policy, RolloutConfig, StopPolicy};
use solnav::sim::{generate_episode, Difficulty};

fn main() -> solnav::Result<()> {
    let count: u64 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(20);
    let cfg = RolloutConfig { radius: 1.0, ..Default::default() };
    let mut rows = Vec::new();
    for difficulty in [Difficulty::Corridor, Difficulty::Rooms, Difficulty::Cluttered] {
        let tasks = (0..count)
            .map(|s| EvalTask::from_episode(&generate_episode(500 + s, difficulty, &cfg.camera)?))
            .collect::<solnav::Result<Vec<_>>>()?;
        let policies: [(&str, &dyn Policy); 2] = [("oracle", &OraclePolicy), ("stop", &StopPolicy)];
        for (name, policy) in policies {
            let runs = evaluate(&tasks, policy, &cfg, 1)?;
            let results: Vec<_> = runs.into_iter().map(|r| r.result).collect();
            rows.push((format!("{name} / {difficulty}"), aggregate(&results, cfg.radius)?));
        }
    }
    print!("{}", format_table(&rows));
    Ok(())
}
