//! The line protocol an external policy process speaks, wired to an
//! in-process stand-in. Each decision sends one JSON request with the full
//! prompt; the other side answers with one JSON line of action indices.
//! `solnav eval --policy stdio` exposes the same protocol on its standard
//! streams.
//!
//!     cargo run --example stdio_policy

use std::io::{BufRead, BufReader, Write};
use std::os::unix::net::UnixStream;
use std::thread;

use solnav::rollout::{rollout, BlockReply, BlockRequest, EvalTask, LinePolicy, RolloutConfig};
use solnav::sim::{generate_episode, Difficulty};

/// A hand-written responder that only reads the prompt: it turns until the
/// object named in the instruction sits in the middle of the current view,
/// walks toward it, and stops once it is close.
fn answer(req: &BlockRequest) -> BlockReply {
    let instruction = req.prompt.lines().find_map(|l| l.strip_prefix("Instruction: ")).unwrap_or("");
    let current = req.prompt.rsplit("Observation t-0").next().unwrap_or("");
    let mut cols = Vec::new();
    let mut nearest = f64::INFINITY;
    for line in current.lines() {
        let Some((head, rest)) = line.split_once(": ") else { continue };
        let Some((_, col)) = head.trim_matches(['[', ']']).split_once(',') else { continue };
        let field = |key: &str| rest.split(", ").find_map(|f| f.strip_prefix(key));
        let semantic = field("semantic=").unwrap_or("");
        if !semantic.is_empty() && instruction.contains(semantic) && !["wall", "floor"].contains(&semantic) {
            cols.push(col.parse::<f64>().unwrap_or(0.0));
            nearest = nearest.min(field("depth=").and_then(|d| d.parse().ok()).unwrap_or(f64::INFINITY));
        }
    }
    // One turn per block when the object is in view: four would swing it
    // from one edge of a 90 degree view to the other.
    let actions = if cols.is_empty() {
        vec![1; req.n_a]
    } else {
        let centre = cols.iter().sum::<f64>() / cols.len() as f64;
        let first = match centre {
            _ if nearest <= 1.0 => 0,
            c if c < 3.0 => 1,
            c if c > 4.0 => 2,
            _ => 3,
        };
        let rest = if first == 0 { 0 } else { 3 };
        std::iter::once(first).chain(std::iter::repeat(rest)).take(req.n_a).collect()
    };
    BlockReply { actions }
}

fn main() -> solnav::Result<()> {
    let (ours, theirs) = UnixStream::pair()?;
    let responder = thread::spawn(move || -> solnav::Result<usize> {
        let mut out = theirs.try_clone()?;
        let mut answered = 0;
        for line in BufReader::new(theirs).lines() {
            let req: BlockRequest = serde_json::from_str(&line?)?;
            serde_json::to_writer(&mut out, &answer(&req))?;
            out.write_all(b"\n")?;
            answered += 1;
        }
        Ok(answered)
    });

    let cfg = RolloutConfig { radius: 1.0, ..Default::default() };
    let task = EvalTask::from_episode(&generate_episode(11, Difficulty::Corridor, &cfg.camera)?)?;
    let policy = LinePolicy::new(BufReader::new(ours.try_clone()?), ours.try_clone()?);
    let run = rollout(&task, &policy, &cfg)?;
    drop(policy);
    ours.shutdown(std::net::Shutdown::Both)?;
    let answered = responder.join().expect("responder thread panicked")?;

    let r = &run.result;
    println!("{} requests answered, {} actions executed", answered, run.actions.len());
    println!(
        "ended {:.2} m from the goal after walking {:.2} m ({})",
        solnav::metrics::navigation_error(r),
        r.path_length,
        if solnav::metrics::success(r, cfg.radius) { "success" } else { "miss" }
    );
    Ok(())
}
