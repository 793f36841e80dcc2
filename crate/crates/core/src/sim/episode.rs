use std::sync::Arc;

use crate::action::ActionId;
use crate::dataset::derived_id;
use crate::episode::Episode;
use crate::error::{Error, Result};

use super::instruction::{generate_instruction, mirror_instruction};
use super::motion::execute;
use super::planner::{oracle_actions, shortest_path_length};
use super::render::{render, CameraModel};
use super::world::{generate_world, mirror_pose, Difficulty};

pub fn episode_id(seed: u64, difficulty: Difficulty) -> String {
    format!("{difficulty}-{seed:06}")
}

/// World, oracle trajectory, one rendered frame per pre-action pose, instruction
/// and reference path length. Deterministic in `seed`.
pub fn generate_episode(seed: u64, difficulty: Difficulty, cam: &CameraModel) -> Result<Episode> {
    let world = generate_world(seed, difficulty)?;
    let actions = oracle_actions(&world, world.start, world.goal)?;
    let poses = execute(&world, world.start, &actions);
    let frames = poses[..actions.len()]
        .iter()
        .map(|p| render(&world, p, cam).map(Arc::new))
        .collect::<Result<Vec<_>>>()?;
    let instruction = generate_instruction(&world, &actions, seed);
    let spl_ref = shortest_path_length(&world, world.start, world.goal, &actions)?;
    Episode::new(
        episode_id(seed, difficulty),
        world.start,
        world.goal,
        instruction,
        frames,
        actions,
        spl_ref,
        Some(world),
    )
}

/// Left-right reflection of a generated episode: mirrored scene, frames
/// flipped horizontally, turns swapped, "left" and "right" swapped in the
/// instruction. Needs the scene to reflect start and goal.
pub fn mirror_episode(ep: &Episode) -> Result<Episode> {
    let world = ep
        .world
        .as_ref()
        .ok_or_else(|| Error::InvalidEpisode(format!("{}: no scene description to mirror", ep.id)))?;
    let d = world.depth;
    Episode::new(
        derived_id(&ep.id, "mirror"),
        mirror_pose(&ep.start, d),
        (ep.goal.0, d - ep.goal.1),
        mirror_instruction(&ep.instruction),
        ep.frames.iter().map(|f| Arc::new(f.mirrored())).collect(),
        ep.actions.iter().map(|a| a.mirrored()).collect(),
        ep.shortest_path_length,
        Some(world.mirrored()),
    )
}

/// A trajectory that leaves the oracle path and comes back: the first
/// `at` actions of `ep`, then `detour`, then a fresh plan from wherever the
/// detour ended. Returns the episode and the step where the fresh plan
/// begins; only actions from there on are the planner's choice.
pub fn recovery_episode(ep: &Episode, at: usize, detour: &[ActionId], tag: &str, cam: &CameraModel) -> Result<(Episode, usize)> {
    let world = ep
        .world
        .as_ref()
        .ok_or_else(|| Error::InvalidEpisode(format!("{}: no scene description to replan in", ep.id)))?;
    if at >= ep.actions.len() {
        return Err(Error::InvalidEpisode(format!("{}: detour at step {at} past the end", ep.id)));
    }
    let mut actions = ep.actions[..at].to_vec();
    actions.extend_from_slice(detour);
    let off_path = *execute(world, ep.start, &actions).last().unwrap_or(&ep.start);
    let first_planned = actions.len();
    actions.extend(oracle_actions(world, off_path, ep.goal)?);
    let poses = execute(world, ep.start, &actions);
    let mut frames = ep.frames[..at].to_vec();
    for p in &poses[at..actions.len()] {
        frames.push(Arc::new(render(world, p, cam)?));
    }
    let out = Episode::new(
        derived_id(&ep.id, tag),
        ep.start,
        ep.goal,
        ep.instruction.clone(),
        frames,
        actions,
        ep.shortest_path_length,
        Some(world.clone()),
    )?;
    Ok((out, first_planned))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovery_returns_to_the_goal() {
        let cam = CameraModel::default();
        let ep = generate_episode(4, Difficulty::Rooms, &cam).unwrap();
        let detour = [ActionId::TurnLeft, ActionId::TurnLeft, ActionId::TurnLeft, ActionId::Forward];
        let (r, first) = recovery_episode(&ep, 5, &detour, "recover0", &cam).unwrap();
        assert_eq!(first, 9);
        assert_eq!(&r.actions[..5], &ep.actions[..5]);
        assert_eq!(&r.actions[5..9], &detour);
        assert_eq!(*r.actions.last().unwrap(), ActionId::Stop);
        let end = *execute(r.world.as_ref().unwrap(), r.start, &r.actions).last().unwrap();
        assert!(end.distance_to(r.goal) < 0.25);
        assert!(Arc::ptr_eq(&r.frames[4], &ep.frames[4]));
        assert_eq!(r.frames[9].rgb(), render(r.world.as_ref().unwrap(), &execute(r.world.as_ref().unwrap(), r.start, &r.actions)[9], &cam).unwrap().rgb());
        assert_eq!(r.id, format!("{}+recover0", ep.id));
    }

    #[test]
    fn mirror_matches_rendering_the_mirrored_scene() {
        let cam = CameraModel::default();
        for (seed, d) in [(3, Difficulty::Rooms), (8, Difficulty::Corridor)] {
            let ep = generate_episode(seed, d, &cam).unwrap();
            let m = mirror_episode(&ep).unwrap();
            let world = m.world.as_ref().unwrap();
            let poses = execute(world, m.start, &m.actions);
            let last = poses.last().unwrap();
            assert!(last.distance_to(m.goal) < 0.25);
            for (k, p) in poses[..m.actions.len()].iter().enumerate().step_by(5) {
                let direct = render(world, p, &cam).unwrap();
                let flipped = &m.frames[k];
                let same = direct.segmentation().iter().zip(flipped.segmentation()).filter(|(a, b)| a == b).count();
                assert!(same as f64 >= 0.995 * direct.segmentation().len() as f64, "seed {seed} frame {k}");
                let worst = direct.depth().iter().zip(flipped.depth()).map(|(a, b)| (a - b).abs()).fold(0f32, f32::max);
                assert!(worst < 0.05, "{worst}");
            }
        }
    }

    #[test]
    fn seed_seven_corridor() {
        let ep = generate_episode(7, Difficulty::Corridor, &CameraModel::default()).unwrap();
        assert_eq!(ep.frames.len(), ep.actions.len());
        assert_eq!(*ep.actions.last().unwrap(), ActionId::Stop);
        let forwards = ep.actions.iter().filter(|&&a| a == ActionId::Forward).count() as f64;
        assert!(ep.shortest_path_length <= 0.25 * forwards + 1e-12);
        assert!(ep.shortest_path_length > 0.0);
    }
}
