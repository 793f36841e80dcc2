//! Template instructions describing an action sequence.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::action::ActionId;

use super::motion::execute;
use super::world::{labels, Difficulty, World};

const LANDMARK_RADIUS: f64 = 1.5;

enum Segment {
    Turn { degrees: i32, at: (f64, f64) },
    Forward { steps: usize, end: (f64, f64) },
}

fn segments(world: &World, actions: &[ActionId]) -> Vec<Segment> {
    let poses = execute(world, world.start, actions);
    let mut out: Vec<Segment> = Vec::new();
    for (i, &a) in actions.iter().enumerate() {
        let after = poses[i + 1].position();
        match a {
            ActionId::TurnLeft | ActionId::TurnRight => {
                let d = if a == ActionId::TurnLeft { 15 } else { -15 };
                match out.last_mut() {
                    Some(Segment::Turn { degrees, .. }) => *degrees += d,
                    _ => out.push(Segment::Turn { degrees: d, at: after }),
                }
            }
            ActionId::Forward => match out.last_mut() {
                Some(Segment::Forward { steps, end }) => {
                    *steps += 1;
                    *end = after;
                }
                _ => out.push(Segment::Forward { steps: 1, end: after }),
            },
            ActionId::Stop => break,
        }
    }
    out.retain(|s| !matches!(s, Segment::Turn { degrees: 0, .. }));
    out
}

/// Nearest non-structural object within reach of a point.
fn landmark_near(world: &World, p: (f64, f64)) -> Option<&str> {
    world
        .obstacles
        .iter()
        .filter(|o| !matches!(o.label, labels::WALL | labels::FLOOR | labels::CEILING))
        .map(|o| (o.bounds.distance_to_point(p.0, p.1), o.label))
        .filter(|(d, _)| *d <= LANDMARK_RADIUS)
        .min_by(|a, b| a.0.total_cmp(&b.0))
        .map(|(_, l)| world.label_name(l))
}

fn turn_phrase(degrees: i32) -> &'static str {
    match degrees {
        d if d.abs() >= 150 => "turn around",
        d if d >= 60 => "turn left",
        d if d > 0 => "bear left",
        d if d <= -60 => "turn right",
        _ => "bear right",
    }
}

/// English instruction for `actions` from the world's start pose. Deterministic in `rng_seed`.
/// Swaps the words "left" and "right", keeping punctuation and spacing.
pub fn mirror_instruction(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    let mut word = String::new();
    let flush = |word: &mut String, out: &mut String| {
        out.push_str(match word.as_str() {
            "left" => "right",
            "right" => "left",
            w => w,
        });
        word.clear();
    };
    for c in text.chars() {
        if c.is_alphanumeric() {
            word.push(c);
        } else {
            flush(&mut word, &mut out);
            out.push(c);
        }
    }
    flush(&mut word, &mut out);
    out
}

pub fn generate_instruction(world: &World, actions: &[ActionId], rng_seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let segs = segments(world, actions);
    let straight = segs.iter().all(|s| matches!(s, Segment::Forward { .. }));
    if world.difficulty == Difficulty::Corridor && straight && !segs.is_empty() {
        return "walk straight ahead and stop at the end of the corridor".to_string();
    }
    let verbs = ["walk", "go", "head", "move"];
    let mut clauses = Vec::new();
    for s in &segs {
        match *s {
            Segment::Turn { degrees, at } => {
                let mut c = turn_phrase(degrees).to_string();
                if let Some(l) = landmark_near(world, at) {
                    c.push_str(&format!(" at the {l}"));
                }
                clauses.push(c);
            }
            Segment::Forward { steps, end } => {
                let meters = steps as f64 * 0.25;
                let verb = verbs.choose(&mut rng).unwrap();
                let mut c = if meters >= 1.0 {
                    format!("{verb} forward about {} meters", meters.round() as i64)
                } else {
                    format!("{verb} forward a little")
                };
                if let Some(l) = landmark_near(world, end) {
                    if l != world.target_label() {
                        c.push_str(&format!(" past the {l}"));
                    }
                }
                clauses.push(c);
            }
        }
    }
    let target = world.target_label();
    let ending = [format!("stop near the {target}"), format!("wait by the {target}")]
        .choose(&mut rng)
        .unwrap()
        .clone();
    if clauses.is_empty() {
        return ending;
    }
    let joiner = *[", then ", ", and then ", ", "].choose(&mut rng).unwrap();
    format!("{}{joiner}{ending}", clauses.join(joiner))
}
