//! Generates one episode and draws it from above: obstacles, the oracle
//! path, start and goal.
//!
//!     cargo run --example simulate_episode [seed] [corridor|rooms|cluttered]

use solnav::action::format_action_list;
use solnav::sim::{execute, generate_episode, CameraModel, Difficulty};

fn main() -> solnav::Result<()> {
    let mut args = std::env::args().skip(1);
    let seed = args.next().and_then(|s| s.parse().ok()).unwrap_or(3);
    let difficulty: Difficulty = match args.next() {
        Some(d) => d.parse().map_err(solnav::Error::InvalidConfig)?,
        None => Difficulty::Cluttered,
    };
    let ep = generate_episode(seed, difficulty, &CameraModel::default())?;
    let world = ep.world.as_ref().expect("generated episodes carry their scene");
    let path = execute(world, ep.start, &ep.actions);

    let cell = 0.25;
    let (cols, rows) = ((world.width / cell).ceil() as usize, (world.depth / cell).ceil() as usize);
    let mut map = vec![vec![' '; cols]; rows];
    for (r, line) in map.iter_mut().enumerate() {
        for (c, ch) in line.iter_mut().enumerate() {
            if world.point_blocked((c as f64 + 0.5) * cell, (r as f64 + 0.5) * cell) {
                *ch = '#';
            }
        }
    }
    let mut mark = |x: f64, y: f64, ch: char| {
        let (c, r) = ((x / cell) as usize, (y / cell) as usize);
        if r < rows && c < cols {
            map[r][c] = ch;
        }
    };
    for p in &path {
        mark(p.x, p.y, '.');
    }
    mark(ep.start.x, ep.start.y, 'S');
    mark(ep.goal.0, ep.goal.1, 'G');

    println!("{}: {}", ep.id, ep.instruction);
    println!("{} actions: {}", ep.actions.len(), format_action_list(&ep.actions));
    println!("reference path length {:.2} m\n", ep.shortest_path_length);
    // Row 0 is y = 0; print with y growing upward.
    for line in map.iter().rev() {
        println!("|{}|", line.iter().collect::<String>());
    }
    Ok(())
}
