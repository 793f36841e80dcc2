//! Procedural indoor layouts.

use std::collections::VecDeque;
use std::fmt;
use std::fmt::Write as _;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::geometry::Aabb;
use crate::error::{Error, Result};
use crate::frame::LabelTable;
use crate::pose::Pose;

pub const LATTICE: f64 = 0.25;
pub const AGENT_RADIUS: f64 = 0.15;
pub const WORLD_SIZE: f64 = 8.0;
pub const CEILING_HEIGHT: f64 = 2.5;
const MAX_ATTEMPTS: usize = 200;
const MIN_START_GOAL: f64 = 2.0;
/// Beyond this range a target one grid column wide no longer wins a cell.
const ROOM_MAX_START_GOAL: f64 = 5.0;

pub mod labels {
    pub const UNKNOWN: u16 = 0;
    pub const WALL: u16 = 1;
    pub const FLOOR: u16 = 2;
    pub const CEILING: u16 = 3;
    pub const DOOR: u16 = 4;
    pub const SOFA: u16 = 5;
    pub const BED: u16 = 6;
    pub const TV: u16 = 7;
    pub const CABINET: u16 = 8;
    pub const TABLE: u16 = 9;
    pub const CHAIR: u16 = 10;
    pub const PLANT: u16 = 11;
    pub const BOX: u16 = 12;

    pub const NAMES: [(u16, &str); 13] = [
        (UNKNOWN, "unknown"),
        (WALL, "wall"),
        (FLOOR, "floor"),
        (CEILING, "ceiling"),
        (DOOR, "door"),
        (SOFA, "sofa"),
        (BED, "bed"),
        (TV, "tv"),
        (CABINET, "cabinet"),
        (TABLE, "table"),
        (CHAIR, "chair"),
        (PLANT, "plant"),
        (BOX, "box"),
    ];

    /// Categories a goal can be placed next to.
    pub const TARGETS: [u16; 5] = [DOOR, SOFA, BED, TV, CABINET];
    pub const CLUTTER: [u16; 4] = [TABLE, CHAIR, PLANT, BOX];
}

pub const WALL_COLOR: [u8; 3] = [228, 226, 220];
pub const FLOOR_COLOR: [u8; 3] = [128, 98, 72];
pub const CEILING_COLOR: [u8; 3] = [245, 245, 245];

/// Footprint (along the wall, depth from the wall), height and base color per category.
fn category_shape(label: u16) -> (f64, f64, f64, [u8; 3]) {
    use labels::*;
    match label {
        DOOR => (1.4, 0.1, 2.1, [150, 96, 52]),
        SOFA => (2.0, 0.8, 0.9, [52, 78, 170]),
        BED => (1.8, 2.0, 0.9, [196, 56, 82]),
        TV => (1.6, 0.2, 1.4, [36, 36, 40]),
        CABINET => (1.6, 0.5, 1.9, [84, 150, 76]),
        TABLE => (1.0, 0.8, 0.75, [176, 140, 96]),
        CHAIR => (0.5, 0.5, 0.9, [200, 120, 40]),
        PLANT => (0.4, 0.4, 1.2, [40, 150, 60]),
        _ => (0.6, 0.6, 0.6, [180, 170, 60]),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Difficulty {
    /// Straight walled corridor with a door at the far end.
    Corridor,
    /// One furnished room; clutter stays clear of the straight start-goal line.
    Rooms,
    /// One room with obstacles placed across the straight start-goal line.
    Cluttered,
}

impl Difficulty {
    pub const ALL: [Difficulty; 3] = [Self::Corridor, Self::Rooms, Self::Cluttered];

    pub fn name(self) -> &'static str {
        match self {
            Self::Corridor => "corridor",
            Self::Rooms => "rooms",
            Self::Cluttered => "cluttered",
        }
    }
}

impl fmt::Display for Difficulty {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Difficulty {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|d| d.name() == s)
            .ok_or_else(|| format!("unknown difficulty {s:?} (expected corridor, rooms or cluttered)"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Obstacle {
    pub bounds: Aabb,
    pub height: f64,
    pub label: u16,
    pub color: [u8; 3],
}

/// An immutable scene plus the navigation task generated with it.
#[derive(Debug, Clone, PartialEq)]
pub struct World {
    pub seed: u64,
    pub difficulty: Difficulty,
    pub width: f64,
    pub depth: f64,
    pub ceiling_height: f64,
    pub obstacles: Vec<Obstacle>,
    pub label_table: LabelTable,
    pub start: Pose,
    pub goal: (f64, f64),
    /// Index into `obstacles` of the object the goal sits in front of.
    pub target: usize,
}

pub fn default_label_table() -> LabelTable {
    labels::NAMES.iter().map(|(k, v)| (*k, v.to_string())).collect()
}

impl World {
    /// Reflection across the line `y = depth / 2`. Headings negate, so every
    /// left turn in this world is a right turn in the mirrored one.
    pub fn mirrored(&self) -> Self {
        let d = self.depth;
        let mut w = self.clone();
        for o in &mut w.obstacles {
            let b = o.bounds;
            o.bounds = Aabb::new(b.min_x, d - b.max_y, b.max_x, d - b.min_y);
        }
        w.start = mirror_pose(&self.start, d);
        w.goal = (self.goal.0, d - self.goal.1);
        w
    }

    pub fn label_name(&self, id: u16) -> &str {
        self.label_table.get(&id).map_or("unknown", String::as_str)
    }

    pub fn target_label(&self) -> &str {
        self.label_name(self.obstacles[self.target].label)
    }

    /// Whether the point lies outside the walls or inside an obstacle.
    pub fn point_blocked(&self, x: f64, y: f64) -> bool {
        x <= 0.0 || y <= 0.0 || x >= self.width || y >= self.depth || self.obstacles.iter().any(|o| o.bounds.contains(x, y))
    }

    /// Whether the agent disk fits at the point.
    pub fn disk_free(&self, x: f64, y: f64) -> bool {
        self.segment_free((x, y), (x, y))
    }

    /// Whether the agent disk can sweep from p0 to p1 without touching anything.
    pub fn segment_free(&self, p0: (f64, f64), p1: (f64, f64)) -> bool {
        let r = AGENT_RADIUS;
        let inside = |p: (f64, f64)| p.0 >= r && p.1 >= r && p.0 <= self.width - r && p.1 <= self.depth - r;
        inside(p0) && inside(p1) && !self.obstacles.iter().any(|o| o.bounds.swept_disk_hits(p0, p1, r))
    }

    pub fn lattice_dims(&self) -> (i64, i64) {
        ((self.width / LATTICE).round() as i64, (self.depth / LATTICE).round() as i64)
    }

    /// Free lattice points and 4-neighbour components via flood fill.
    /// Returns the component id of every lattice point (`None` when blocked).
    pub fn lattice_components(&self) -> (Vec<Option<usize>>, usize) {
        let (nx, ny) = self.lattice_dims();
        let idx = |i: i64, j: i64| (j * (nx + 1) + i) as usize;
        let free: Vec<bool> = (0..=ny)
            .flat_map(|j| (0..=nx).map(move |i| (i, j)))
            .map(|(i, j)| self.disk_free(i as f64 * LATTICE, j as f64 * LATTICE))
            .collect();
        let mut comp = vec![None; free.len()];
        let mut count = 0;
        for start in 0..free.len() {
            if !free[start] || comp[start].is_some() {
                continue;
            }
            comp[start] = Some(count);
            let mut queue = VecDeque::from([start]);
            while let Some(k) = queue.pop_front() {
                let (i, j) = ((k as i64) % (nx + 1), (k as i64) / (nx + 1));
                for (di, dj) in [(1, 0), (-1, 0), (0, 1), (0, -1)] {
                    let (a, b) = (i + di, j + dj);
                    if a < 0 || b < 0 || a > nx || b > ny {
                        continue;
                    }
                    let n = idx(a, b);
                    let p0 = (i as f64 * LATTICE, j as f64 * LATTICE);
                    let p1 = (a as f64 * LATTICE, b as f64 * LATTICE);
                    if free[n] && comp[n].is_none() && self.segment_free(p0, p1) {
                        comp[n] = Some(count);
                        queue.push_back(n);
                    }
                }
            }
            count += 1;
        }
        (comp, count)
    }

    /// Plain-text scene description, one obstacle per line.
    pub fn to_scene_text(&self) -> String {
        let mut s = String::from("# solnav scene v1\n");
        let _ = writeln!(s, "seed {}", self.seed);
        let _ = writeln!(s, "difficulty {}", self.difficulty);
        let _ = writeln!(s, "bounds {} {}", self.width, self.depth);
        let _ = writeln!(s, "ceiling {}", self.ceiling_height);
        for (id, name) in &self.label_table {
            let _ = writeln!(s, "label {id} {name}");
        }
        let _ = writeln!(s, "start {}", self.start);
        let _ = writeln!(s, "goal {} {}", self.goal.0, self.goal.1);
        let _ = writeln!(s, "target {}", self.target);
        for o in &self.obstacles {
            let b = o.bounds;
            let _ = writeln!(
                s,
                "obstacle {} {} {} {} {} {} {} {} {}",
                b.min_x, b.min_y, b.max_x, b.max_y, o.height, o.label, o.color[0], o.color[1], o.color[2]
            );
        }
        s
    }

    pub fn from_scene_text(text: &str) -> std::result::Result<Self, String> {
        let mut w = World {
            seed: 0,
            difficulty: Difficulty::Rooms,
            width: WORLD_SIZE,
            depth: WORLD_SIZE,
            ceiling_height: CEILING_HEIGHT,
            obstacles: Vec::new(),
            label_table: LabelTable::new(),
            start: Pose::new(0.0, 0.0, 0),
            goal: (0.0, 0.0),
            target: 0,
        };
        for (n, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |m: &str| format!("line {}: {m}", n + 1);
            let mut it = line.split_whitespace();
            let key = it.next().unwrap_or_default();
            let rest: Vec<&str> = it.collect();
            let f = |i: usize| -> std::result::Result<f64, String> {
                rest.get(i).and_then(|v| v.parse().ok()).ok_or_else(|| err("expected a number"))
            };
            match key {
                "seed" => w.seed = f(0)? as u64,
                "difficulty" => w.difficulty = rest.first().ok_or_else(|| err("missing value"))?.parse()?,
                "bounds" => (w.width, w.depth) = (f(0)?, f(1)?),
                "ceiling" => w.ceiling_height = f(0)?,
                "label" => {
                    let name = rest.get(1..).map(|v| v.join(" ")).unwrap_or_default();
                    w.label_table.insert(f(0)? as u16, name);
                }
                "start" => w.start = Pose::new(f(0)?, f(1)?, f(2)? as i32),
                "goal" => w.goal = (f(0)?, f(1)?),
                "target" => w.target = f(0)? as usize,
                "obstacle" => w.obstacles.push(Obstacle {
                    bounds: Aabb::new(f(0)?, f(1)?, f(2)?, f(3)?),
                    height: f(4)?,
                    label: f(5)? as u16,
                    color: [f(6)? as u8, f(7)? as u8, f(8)? as u8],
                }),
                other => return Err(err(&format!("unknown key {other:?}"))),
            }
        }
        if w.target >= w.obstacles.len() {
            return Err("target index out of range".into());
        }
        Ok(w)
    }
}

fn snap(v: f64) -> f64 {
    (v / LATTICE).round() * LATTICE
}

fn jitter(rng: &mut ChaCha8Rng, c: [u8; 3]) -> [u8; 3] {
    c.map(|v| (v as i32 + rng.gen_range(-10..=10)).clamp(0, 255) as u8)
}

/// Rotates a layout generated in a canonical frame by `quarter` * 90 degrees
/// about the world center.
fn rotate_world(w: &mut World, quarter: u8) {
    let (cx, cy) = (w.width / 2.0, w.depth / 2.0);
    let rot = |x: f64, y: f64| -> (f64, f64) {
        let (mut dx, mut dy) = (x - cx, y - cy);
        for _ in 0..quarter {
            (dx, dy) = (-dy, dx);
        }
        (cx + dx, cy + dy)
    };
    for o in &mut w.obstacles {
        let a = rot(o.bounds.min_x, o.bounds.min_y);
        let b = rot(o.bounds.max_x, o.bounds.max_y);
        o.bounds = Aabb::new(a.0, a.1, b.0, b.1);
    }
    let s = rot(w.start.x, w.start.y);
    w.start = Pose::new(s.0, s.1, w.start.heading() + 90 * quarter as i32);
    w.goal = rot(w.goal.0, w.goal.1);
}

pub(crate) fn mirror_pose(p: &Pose, depth: f64) -> Pose {
    Pose::new(p.x, depth - p.y, -p.heading())
}

fn empty_world(seed: u64, difficulty: Difficulty) -> World {
    World {
        seed,
        difficulty,
        width: WORLD_SIZE,
        depth: WORLD_SIZE,
        ceiling_height: CEILING_HEIGHT,
        obstacles: Vec::new(),
        label_table: default_label_table(),
        start: Pose::new(0.0, 0.0, 0),
        goal: (0.0, 0.0),
        target: 0,
    }
}

fn random_heading(rng: &mut ChaCha8Rng) -> i32 {
    15 * rng.gen_range(0..24)
}

fn corridor(seed: u64, rng: &mut ChaCha8Rng) -> Option<World> {
    let mut w = empty_world(seed, Difficulty::Corridor);
    let width = [1.25, 1.5, 1.75][rng.gen_range(0..3)];
    let center = snap(rng.gen_range(2.5..5.5));
    let (lo, hi) = (center - width / 2.0, center + width / 2.0);
    w.obstacles.push(Obstacle {
        bounds: Aabb::new(0.0, 0.0, WORLD_SIZE, lo),
        height: CEILING_HEIGHT,
        label: labels::WALL,
        color: WALL_COLOR,
    });
    w.obstacles.push(Obstacle {
        bounds: Aabb::new(0.0, hi, WORLD_SIZE, WORLD_SIZE),
        height: CEILING_HEIGHT,
        label: labels::WALL,
        color: WALL_COLOR,
    });
    let (len, thick, h, color) = category_shape(labels::DOOR);
    w.obstacles.push(Obstacle {
        bounds: Aabb::new(WORLD_SIZE - thick, center - len / 2.0, WORLD_SIZE, center + len / 2.0),
        height: h,
        label: labels::DOOR,
        color: jitter(rng, color),
    });
    w.target = 2;
    let goal_x = snap(WORLD_SIZE - thick - rng.gen_range(0.5..0.8));
    w.goal = (goal_x, center);
    let start_x = snap(rng.gen_range(0.5..3.0));
    let heading = if rng.gen_bool(0.5) { 0 } else { 15 * rng.gen_range(-4..=4) };
    w.start = Pose::new(start_x, center, heading);
    rotate_world(&mut w, rng.gen_range(0..4));
    Some(w)
}

/// Places the target against a random wall, clutter elsewhere, then a start pose.
fn room(seed: u64, difficulty: Difficulty, rng: &mut ChaCha8Rng) -> Option<World> {
    let mut w = empty_world(seed, difficulty);
    let label = *labels::TARGETS.choose(rng).unwrap();
    let (len, thick, h, color) = category_shape(label);
    // canonical frame: target against the +x wall, rotated afterwards
    let along = snap(rng.gen_range(1.5..WORLD_SIZE - 1.5));
    w.obstacles.push(Obstacle {
        bounds: Aabb::new(WORLD_SIZE - thick, along - len / 2.0, WORLD_SIZE, along + len / 2.0),
        height: h,
        label,
        color: jitter(rng, color),
    });
    w.target = 0;
    let goal_x = snap(WORLD_SIZE - thick - rng.gen_range(0.35..0.55));
    w.goal = (goal_x, along);
    if !w.disk_free(goal_x, along) {
        return None;
    }
    rotate_world(&mut w, rng.gen_range(0..4));

    // start first so clutter can be placed relative to the start-goal line
    let start = loop_sample(rng, 200, |rng| {
        let (x, y) = (snap(rng.gen_range(0.5..WORLD_SIZE - 0.5)), snap(rng.gen_range(0.5..WORLD_SIZE - 0.5)));
        let d = (x - w.goal.0).hypot(y - w.goal.1);
        (d >= MIN_START_GOAL + 0.5 && d <= ROOM_MAX_START_GOAL && w.disk_free(x, y)).then_some((x, y))
    })?;
    w.start = Pose::new(start.0, start.1, random_heading(rng));

    let (count, blocking) = match difficulty {
        Difficulty::Cluttered => (rng.gen_range(3..=5), true),
        _ => (rng.gen_range(1..=3), false),
    };
    let line = (start, w.goal);
    for k in 0..count {
        let label = *labels::CLUTTER.choose(rng).unwrap();
        let (a, b, h, color) = category_shape(label);
        let must_block = blocking && k == 0;
        let placed = loop_sample(rng, 200, |rng| {
            let (cx, cy) = if must_block {
                let t = rng.gen_range(0.35..0.65);
                (line.0 .0 + t * (line.1 .0 - line.0 .0), line.0 .1 + t * (line.1 .1 - line.0 .1))
            } else {
                (rng.gen_range(0.6..WORLD_SIZE - 0.6), rng.gen_range(0.6..WORLD_SIZE - 0.6))
            };
            let (sx, sy) = if rng.gen_bool(0.5) { (a, b) } else { (b, a) };
            let bounds = Aabb::new(cx - sx / 2.0, cy - sy / 2.0, cx + sx / 2.0, cy + sy / 2.0);
            let inside = bounds.min_x > 0.05 && bounds.min_y > 0.05 && bounds.max_x < WORLD_SIZE - 0.05 && bounds.max_y < WORLD_SIZE - 0.05;
            let keepout = 0.6;
            let clear_of_agent = bounds.distance_to_point(start.0, start.1) > keepout
                && bounds.distance_to_point(w.goal.0, w.goal.1) > keepout;
            let clear_of_others = w.obstacles.iter().all(|o| !o.bounds.expanded(0.4).intersects(&bounds));
            let line_ok = must_block
                || blocking
                || !bounds.expanded(0.35).segment_intersects(line.0, line.1);
            (inside && clear_of_agent && clear_of_others && line_ok).then_some(bounds)
        })?;
        w.obstacles.push(Obstacle { bounds: placed, height: h, label, color: jitter(rng, color) });
    }
    Some(w)
}

fn loop_sample<T>(rng: &mut ChaCha8Rng, tries: usize, mut f: impl FnMut(&mut ChaCha8Rng) -> Option<T>) -> Option<T> {
    (0..tries).find_map(|_| f(rng))
}

/// Checks the task-level guarantees every generated world must satisfy.
fn validate(w: &World) -> bool {
    let (gx, gy) = w.goal;
    if !w.disk_free(w.start.x, w.start.y) || !w.disk_free(gx, gy) {
        return false;
    }
    if w.start.distance_to(w.goal) < MIN_START_GOAL {
        return false;
    }
    let (comp, count) = w.lattice_components();
    if count != 1 {
        return false;
    }
    let (nx, _) = w.lattice_dims();
    let at = |x: f64, y: f64| comp[((y / LATTICE).round() as i64 * (nx + 1) + (x / LATTICE).round() as i64) as usize];
    at(w.start.x, w.start.y).is_some() && at(gx, gy).is_some()
}

/// Deterministic in `seed`; free space is one connected component and start/goal are at least 2 m apart.
pub fn generate_world(seed: u64, difficulty: Difficulty) -> Result<World> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5017_a7e5_0000_0000 ^ (difficulty as u64) << 32);
    for _ in 0..MAX_ATTEMPTS {
        let candidate = match difficulty {
            Difficulty::Corridor => corridor(seed, &mut rng),
            _ => room(seed, difficulty, &mut rng),
        };
        if let Some(w) = candidate {
            if validate(&w) {
                return Ok(w);
            }
        }
    }
    Err(Error::GenerationFailed { seed, attempts: MAX_ATTEMPTS })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_in_seed() {
        for d in Difficulty::ALL {
            assert_eq!(generate_world(7, d).unwrap(), generate_world(7, d).unwrap());
        }
        assert_ne!(
            generate_world(7, Difficulty::Rooms).unwrap(),
            generate_world(8, Difficulty::Rooms).unwrap()
        );
    }

    #[test]
    fn corridor_has_clear_line() {
        for seed in 0..30 {
            let w = generate_world(seed, Difficulty::Corridor).unwrap();
            assert_eq!(w.obstacles.len(), 3);
            let s = w.start.position();
            for o in &w.obstacles {
                assert!(!o.bounds.segment_intersects(s, w.goal), "seed {seed}");
            }
            assert_eq!(w.target_label(), "door");
        }
    }

    #[test]
    fn scene_text_round_trip() {
        for d in Difficulty::ALL {
            let w = generate_world(3, d).unwrap();
            let back = World::from_scene_text(&w.to_scene_text()).unwrap();
            assert_eq!(back, w);
        }
        assert!(World::from_scene_text("bogus 1").is_err());
    }

    #[test]
    fn cluttered_blocks_the_line() {
        for seed in 0..20 {
            let w = generate_world(seed, Difficulty::Cluttered).unwrap();
            let s = w.start.position();
            assert!(w.obstacles.iter().skip(1).any(|o| o.bounds.segment_intersects(s, w.goal)), "seed {seed}");
        }
    }
}
