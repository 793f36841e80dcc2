//! Rewrites the frozen fixtures under `fixtures/`. Run this only after a
//! deliberate change to rendering, encoding or prompt layout, then review
//! the diff of the golden files.
//!
//!     cargo run --release --example regenerate_fixtures

use std::fs;
use std::path::Path;

use solnav::commands::{encode_observation, episode_prompt};
use solnav::dataset::{build_samples, write_samples};
use solnav::metrics::{write_metrics, EpisodeRecord};
use solnav::rollout::{evaluate, EvalTask, OraclePolicy, RolloutConfig};
use solnav::sim::{generate_episode, CameraModel, Difficulty};
use solnav::GridConfig;

fn main() -> solnav::Result<()> {
    let root = Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures");
    let golden = root.join("golden");
    fs::create_dir_all(&golden)?;
    let cam = CameraModel::default();

    let frames = [
        ("frame_seed7_start", Difficulty::Corridor),
        ("frame_seed7_rooms_start", Difficulty::Rooms),
        ("frame_seed7_cluttered_start", Difficulty::Cluttered),
    ];
    for (name, difficulty) in frames {
        let ep = generate_episode(7, difficulty, &cam)?;
        let dir = root.join(name);
        ep.frames[0].save_dir(&dir)?;
        for n in [6, 4, 2] {
            fs::write(golden.join(format!("{name}.n{n}.txt")), encode_observation(&dir, n, 0, true)?)?;
        }
        fs::write(golden.join(format!("{name}.n6.nodepth.txt")), encode_observation(&dir, 6, 0, false)?)?;
    }

    let ep = generate_episode(7, Difficulty::Corridor, &cam)?;
    let ep_dir = root.join("episode_seed7_corridor");
    if ep_dir.exists() {
        fs::remove_dir_all(&ep_dir)?;
    }
    ep.save_dir(&ep_dir)?;
    let grid = GridConfig::default();
    let last = ep.actions.len() - 1;
    fs::write(golden.join("prompt_seed7_step0.txt"), episode_prompt(&ep_dir, 0, &grid, 4)?)?;
    fs::write(golden.join(format!("prompt_seed7_step{last}.txt")), episode_prompt(&ep_dir, last, &grid, 4)?)?;
    write_samples(&build_samples(&ep, &grid, 4)?, &golden.join("samples_seed7.jsonl"))?;

    let tasks = (0..4)
        .map(|s| EvalTask::from_episode(&generate_episode(s, Difficulty::Corridor, &cam)?))
        .collect::<solnav::Result<Vec<_>>>()?;
    let cfg = RolloutConfig { radius: 1.0, ..Default::default() };
    let records = evaluate(&tasks, &OraclePolicy, &cfg, 1)?
        .iter()
        .map(|r| EpisodeRecord::from_result(&r.result, cfg.radius))
        .collect::<solnav::Result<Vec<_>>>()?;
    write_metrics(&root.join("metrics_oracle_corridor.jsonl"), &records, cfg.radius)?;

    println!("fixtures written to {} (episode has {} steps)", root.display(), ep.actions.len());
    Ok(())
}
