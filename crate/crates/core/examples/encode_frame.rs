//! Renders one view in a generated scene and prints its structured
//! description at the three grid sizes the prompts use.
//!
//!     cargo run --example encode_frame [seed]

use solnav::encoder::encode_frame;
use solnav::sim::{generate_world, render, CameraModel, Difficulty};

fn main() -> solnav::Result<()> {
    let seed = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(7);
    let world = generate_world(seed, Difficulty::Rooms)?;
    let frame = render(&world, &world.start, &CameraModel::default())?;
    println!(
        "scene {seed}: {:.1} x {:.1} m, start ({:.2}, {:.2}) facing {} degrees, looking for the {}",
        world.width,
        world.depth,
        world.start.x,
        world.start.y,
        world.start.heading(),
        world.target_label()
    );

    for n in [6, 4, 2] {
        println!("\n{n}x{n}:");
        print!("{}", encode_frame(&frame, n, 0, true)?.to_text());
    }

    println!("\n2x2 without depth:");
    print!("{}", encode_frame(&frame, 2, 0, false)?.to_text());
    Ok(())
}
