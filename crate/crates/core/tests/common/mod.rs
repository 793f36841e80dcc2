//! Independent reference computations shared by the integration tests.
//! None of these call the library routine they are used to check.

#![allow(dead_code)]

use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use solnav::action::ActionId;
use solnav::metrics::EpisodeResult;
use solnav::predictor::{Featurizer, HeadModel, SparseVec};
use solnav::sim::geometry::Aabb;
use solnav::sim::world::{default_label_table, Difficulty, Obstacle, World};
use solnav::sim::step;
use solnav::{ActionBlock, Pose};

pub struct OracleMetrics {
    pub ne: f64,
    pub sr: f64,
    pub os: f64,
    pub spl: f64,
}

/// NE, SR, OS and SPL straight from their definitions, looping over raw
/// coordinates.
pub fn metrics_by_hand(results: &[EpisodeResult], radius: f64) -> OracleMetrics {
    let d = |a: (f64, f64), b: (f64, f64)| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt();
    let (mut ne, mut sr, mut os, mut spl) = (0.0, 0.0, 0.0, 0.0);
    for r in results {
        let last = *r.trajectory.last().unwrap();
        let err = d(last, r.goal);
        ne += err;
        let reached = err <= radius;
        if reached {
            sr += 1.0;
        }
        let mut closest = f64::INFINITY;
        for &p in &r.trajectory {
            closest = closest.min(d(p, r.goal));
        }
        if closest <= radius {
            os += 1.0;
        }
        let mut walked = 0.0;
        for i in 1..r.trajectory.len() {
            walked += d(r.trajectory[i - 1], r.trajectory[i]);
        }
        if reached {
            let l = r.shortest_path_length;
            spl += l / if walked > l { walked } else { l };
        }
    }
    let n = results.len() as f64;
    OracleMetrics { ne: ne / n, sr: sr / n, os: os / n, spl: spl / n }
}

/// A random result: a walk of 1 to 40 points, a goal near the walk, and a
/// positive reference length.
pub fn random_result(rng: &mut ChaCha8Rng, id: usize) -> EpisodeResult {
    let n = rng.gen_range(1..=40);
    let mut p = (rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0));
    let mut traj = vec![p];
    for _ in 1..n {
        p = (p.0 + rng.gen_range(-0.3..0.3), p.1 + rng.gen_range(-0.3..0.3));
        traj.push(p);
    }
    let goal = (traj[0].0 + rng.gen_range(-4.0..4.0), traj[0].1 + rng.gen_range(-4.0..4.0));
    let l = rng.gen_range(0.05..6.0);
    EpisodeResult::from_trajectory(format!("synthetic-{id}"), traj, goal, l, rng.gen_bool(0.8)).unwrap()
}

/// Largest relative disagreement between analytic weight gradients and
/// central finite differences over `probes` random (sample, weight) pairs.
pub fn gradient_check(probes: usize, seed: u64) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let f = Featurizer::new(1 << 10, vec![1, 2], 0).unwrap();
    let words = ["wall", "door", "floor", "left", "right", "depth=1.2", "near", "sofa", "[1,2]:", "bed"];
    let weights = [0.4, 1.3, 2.2, 0.7];
    let mut model = HeadModel::zeros(f.clone(), 4, weights);
    let mut worst: f64 = 0.0;
    for _ in 0..probes {
        let prompt: Vec<&str> = (0..rng.gen_range(3..12)).map(|_| words[rng.gen_range(0..words.len())]).collect();
        let x: SparseVec = f.featurize(&prompt.join(" ")).unwrap();
        for (i, _) in x.iter() {
            for h in 0..4 {
                for c in 0..4 {
                    model.set_weight(i, h, c, rng.gen_range(-1.5..1.5));
                }
            }
        }
        let target = ActionBlock::from_raw((0..4).map(|_| ActionId::from_index(rng.gen_range(0..4)).unwrap()).collect());
        let k = rng.gen_range(0..x.nnz());
        let (feature, value) = x.iter().nth(k).unwrap();
        let (h, c) = (rng.gen_range(0..4), rng.gen_range(0..4));

        let g = model.sample_gradient(&x, &target).unwrap();
        let analytic = value * g.dlogits[h][c];

        let eps = 1e-5;
        let w0 = model.weight(feature, h, c);
        model.set_weight(feature, h, c, w0 + eps);
        let up = model.loss(&x, &target).unwrap();
        model.set_weight(feature, h, c, w0 - eps);
        let down = model.loss(&x, &target).unwrap();
        model.set_weight(feature, h, c, w0);
        let numeric = (up - down) / (2.0 * eps);

        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-6);
        worst = worst.max(rel);
    }
    worst
}

/// A square room of side `size` with `n` random box obstacles.
pub fn small_world(size: f64, n: usize, rng: &mut ChaCha8Rng) -> World {
    let obstacles = (0..n)
        .map(|_| {
            let (x, y) = (rng.gen_range(0.3..size - 0.8), rng.gen_range(0.3..size - 0.8));
            let (w, d) = (rng.gen_range(0.2..1.2), rng.gen_range(0.2..1.2));
            Obstacle { bounds: Aabb::new(x, y, (x + w).min(size), (y + d).min(size)), height: 1.0, label: 12, color: [90, 90, 90] }
        })
        .collect();
    World {
        seed: 0,
        difficulty: Difficulty::Rooms,
        width: size,
        depth: size,
        ceiling_height: 2.5,
        obstacles,
        label_table: default_label_table(),
        start: Pose::new(0.5, 0.5, 0),
        goal: (size - 0.5, size - 0.5),
        target: 0,
    }
}

/// Fewest actions to get within `tol` of `goal`, by breadth-first search
/// over exact poses. Two poses are merged only when they agree to a
/// micrometer, so the search is exhaustive; it gives up past `max_depth`.
pub fn bfs_action_count(world: &World, start: Pose, goal: (f64, f64), tol: f64, max_depth: usize) -> Option<usize> {
    let key = |p: &Pose| ((p.x * 1e6).round() as i64, (p.y * 1e6).round() as i64, p.heading());
    let mut seen = HashSet::from([key(&start)]);
    let mut layer = vec![start];
    for depth in 0..=max_depth {
        if layer.iter().any(|p| ((p.x - goal.0).powi(2) + (p.y - goal.1).powi(2)).sqrt() < tol) {
            return Some(depth);
        }
        let mut next = Vec::new();
        for p in &layer {
            for a in [ActionId::TurnLeft, ActionId::TurnRight, ActionId::Forward] {
                let q = step(world, p, a);
                if seen.insert(key(&q)) {
                    next.push(q);
                }
            }
        }
        layer = next;
    }
    None
}
