//! Oracle trajectories by A* over (position, heading) states.
//!
//! Positions stay continuous: each search node remembers the exact pose the
//! simulator reaches, so replaying the returned actions lands exactly where
//! the search predicted. Every edge costs one action.
//!
//! The search merges poses that share a heading and a cell of
//! [`MERGE_CELL`] meters. Merging at the full 0.25 m lattice keeps whichever
//! pose reached a cell first and throws away others that would have led to
//! a shorter plan; at an eighth of the lattice the result matched an
//! unmerged breadth-first search on every small world we tried.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use crate::action::{ActionId, FORWARD_METERS};
use crate::error::{Error, Result};
use crate::pose::Pose;

use super::motion::step;
use super::world::{World, LATTICE};

/// Goal tolerance. Slightly under 0.25 m so that a move ending exactly one
/// step short does not count as arrival.
pub const GOAL_TOLERANCE: f64 = 0.25 - 1e-6;

const MAX_EXPANSIONS: usize = 400_000;
const MOVES: [ActionId; 3] = [ActionId::TurnLeft, ActionId::TurnRight, ActionId::Forward];

pub type StateKey = (i64, i64, i32);

/// Side of the cells used to merge search nodes.
pub const MERGE_CELL: f64 = LATTICE / 8.0;

pub fn state_key(p: &Pose) -> StateKey {
    ((p.x / MERGE_CELL).round() as i64, (p.y / MERGE_CELL).round() as i64, p.heading())
}

fn lattice_key(p: &Pose) -> StateKey {
    ((p.x / LATTICE).round() as i64, (p.y / LATTICE).round() as i64, p.heading())
}

pub fn at_goal(p: &Pose, goal: (f64, f64)) -> bool {
    p.distance_to(goal) < GOAL_TOLERANCE
}

/// Lower bound on the forward moves still needed.
fn forwards_needed(p: &Pose, goal: (f64, f64)) -> u32 {
    let d = p.distance_to(goal);
    if d < GOAL_TOLERANCE {
        0
    } else {
        ((d - GOAL_TOLERANCE) / FORWARD_METERS).floor() as u32 + 1
    }
}

struct Node {
    pose: Pose,
    cost: Cost,
    parent: Option<(usize, ActionId)>,
}

/// Action count first, then the number of switches between turning and
/// driving. Among equally short plans this prefers turning in one go and
/// then driving straight over zig-zagging.
type Cost = (u32, u32);

/// Search state: merge cell, heading, and whether the last action turned.
type SearchKey = (StateKey, Option<bool>);

fn no_path(start: &Pose, goal: (f64, f64)) -> Error {
    Error::NoPath { sx: start.x, sy: start.y, gx: goal.0, gy: goal.1 }
}

fn unwind(nodes: &[Node], mut i: usize) -> Vec<ActionId> {
    let mut out = Vec::new();
    while let Some((p, a)) = nodes[i].parent {
        out.push(a);
        i = p;
    }
    out.reverse();
    out
}

fn is_turn(a: ActionId) -> bool {
    matches!(a, ActionId::TurnLeft | ActionId::TurnRight)
}

/// Shortest action sequence (excluding the final stop) from `start` to within
/// [`GOAL_TOLERANCE`] of `goal`, tie-broken as described on [`Cost`].
pub fn plan(world: &World, start: Pose, goal: (f64, f64)) -> Result<Vec<ActionId>> {
    if world.point_blocked(start.x, start.y) || world.point_blocked(goal.0, goal.1) {
        return Err(no_path(&start, goal));
    }
    let start_key: SearchKey = (state_key(&start), None);
    let mut nodes = vec![Node { pose: start, cost: (0, 0), parent: None }];
    let mut best: HashMap<SearchKey, Cost> = HashMap::from([(start_key, (0, 0))]);
    let mut closed: HashMap<SearchKey, ()> = HashMap::new();
    let mut open = BinaryHeap::new();
    let mut counter = 0u64;
    open.push(Reverse((forwards_needed(&start, goal), 0u32, counter, 0usize)));

    let mut expansions = 0;
    while let Some(Reverse((_, _, _, i))) = open.pop() {
        let pose = nodes[i].pose;
        let last = nodes[i].parent.map(|(_, a)| is_turn(a));
        if closed.insert((state_key(&pose), last), ()).is_some() {
            continue;
        }
        if at_goal(&pose, goal) {
            return Ok(unwind(&nodes, i));
        }
        expansions += 1;
        if expansions > MAX_EXPANSIONS {
            break;
        }
        let (g, switches) = nodes[i].cost;
        for a in MOVES {
            let next = step(world, &pose, a);
            if next == pose {
                continue;
            }
            let turned = is_turn(a);
            let cost = (
                g + 1,
                switches + u32::from(last.is_some_and(|l| l != turned)),
            );
            let k = (state_key(&next), Some(turned));
            if closed.contains_key(&k) || best.get(&k).is_some_and(|&b| b <= cost) {
                continue;
            }
            best.insert(k, cost);
            nodes.push(Node { pose: next, cost, parent: Some((i, a)) });
            counter += 1;
            let f = cost.0 + forwards_needed(&next, goal);
            open.push(Reverse((f, cost.1, counter, nodes.len() - 1)));
        }
    }
    Err(no_path(&start, goal))
}

/// Oracle trajectory: the planned actions followed by stop.
pub fn oracle_actions(world: &World, start: Pose, goal: (f64, f64)) -> Result<Vec<ActionId>> {
    let mut actions = plan(world, start, goal)?;
    actions.push(ActionId::Stop);
    Ok(actions)
}

/// Fewest forward moves from `start` to the goal when turning is free, in
/// meters. Breadth-first over 0/1 edge weights, merging poses at the full
/// lattice since this search has no heuristic to keep it small.
pub fn geodesic_length(world: &World, start: Pose, goal: (f64, f64)) -> Result<f64> {
    let mut seen: HashMap<StateKey, u32> = HashMap::from([(lattice_key(&start), 0)]);
    let mut deque = VecDeque::from([(start, 0u32)]);
    let mut done: HashMap<StateKey, ()> = HashMap::new();
    while let Some((pose, d)) = deque.pop_front() {
        if done.insert(lattice_key(&pose), ()).is_some() {
            continue;
        }
        if at_goal(&pose, goal) {
            return Ok(d as f64 * FORWARD_METERS);
        }
        if done.len() > MAX_EXPANSIONS {
            break;
        }
        for a in MOVES {
            let next = step(world, &pose, a);
            if next == pose {
                continue;
            }
            let cost = d + u32::from(a == ActionId::Forward);
            let k = lattice_key(&next);
            if done.contains_key(&k) || seen.get(&k).is_some_and(|&c| c <= cost) {
                continue;
            }
            seen.insert(k, cost);
            if a == ActionId::Forward {
                deque.push_back((next, cost));
            } else {
                deque.push_front((next, cost));
            }
        }
    }
    Err(no_path(&start, goal))
}

/// Reference path length for SPL: the free-turn geodesic, never longer than
/// the oracle's own forward distance.
pub fn shortest_path_length(world: &World, start: Pose, goal: (f64, f64), oracle: &[ActionId]) -> Result<f64> {
    let forwards = oracle.iter().filter(|&&a| a == ActionId::Forward).count() as f64 * FORWARD_METERS;
    let geo = geodesic_length(world, start, goal)?;
    Ok(geo.min(forwards))
}
