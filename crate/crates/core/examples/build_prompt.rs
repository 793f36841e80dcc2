//! Assembles the prompt for a late step of a simulated episode and shows
//! which past frames survived the short/long history split.
//!
//!     cargo run --example build_prompt [seed] [step]

use solnav::dataset::prompt_at;
use solnav::history::select_history_indices;
use solnav::sim::{generate_episode, CameraModel, Difficulty};
use solnav::GridConfig;

fn main() -> solnav::Result<()> {
    let mut args = std::env::args().skip(1).map(|s| s.parse::<usize>().ok());
    let seed = args.next().flatten().unwrap_or(7) as u64;
    let ep = generate_episode(seed, Difficulty::Corridor, &CameraModel::default())?;
    let step = args.next().flatten().unwrap_or(ep.actions.len() - 1).min(ep.actions.len() - 1);

    let grid = GridConfig::default();
    let (long, short) = select_history_indices(step, grid.count_short, grid.count_long);
    println!("episode {} has {} steps; prompting at step {step}", ep.id, ep.actions.len());
    println!("long-term frames kept ({}x{} each): {long:?}", grid.n_long, grid.n_long);
    println!("short-term frames kept ({}x{} each): {short:?}", grid.n_short, grid.n_short);

    let prompt = prompt_at(&ep, step, &grid, 4)?;
    let headers = prompt.lines().filter(|l| l.starts_with("Observation t-")).count();
    let cells = prompt.lines().filter(|l| l.starts_with('[')).count();
    println!("{headers} observation headers, {cells} cell lines, {} bytes\n", prompt.len());
    print!("{prompt}");
    Ok(())
}
