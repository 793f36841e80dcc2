use crate::action::{ActionId, FORWARD_METERS, TURN_DEGREES};
use crate::pose::Pose;

use super::world::World;

/// Applies one action. A forward move whose swept disk would touch an
/// obstacle leaves the pose unchanged.
pub fn step(world: &World, pose: &Pose, a: ActionId) -> Pose {
    match a {
        ActionId::Stop => *pose,
        ActionId::TurnLeft => pose.with_heading(pose.heading() + TURN_DEGREES),
        ActionId::TurnRight => pose.with_heading(pose.heading() - TURN_DEGREES),
        ActionId::Forward => {
            let next = forward_point(pose);
            if world.segment_free(pose.position(), next) {
                Pose::new(next.0, next.1, pose.heading())
            } else {
                *pose
            }
        }
    }
}

pub fn forward_point(pose: &Pose) -> (f64, f64) {
    let t = pose.heading_rad();
    (pose.x + FORWARD_METERS * t.cos(), pose.y + FORWARD_METERS * t.sin())
}

/// Replays actions from `start`, returning every visited pose (start first).
pub fn execute(world: &World, start: Pose, actions: &[ActionId]) -> Vec<Pose> {
    let mut poses = Vec::with_capacity(actions.len() + 1);
    poses.push(start);
    let mut p = start;
    for &a in actions {
        p = step(world, &p, a);
        poses.push(p);
    }
    poses
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::geometry::Aabb;
    use crate::sim::world::{default_label_table, Difficulty, Obstacle};
    use proptest::prelude::*;

    fn world_with_wall() -> World {
        World {
            seed: 0,
            difficulty: Difficulty::Rooms,
            width: 8.0,
            depth: 8.0,
            ceiling_height: 2.5,
            obstacles: vec![Obstacle {
                bounds: Aabb::new(5.0, 0.0, 5.2, 8.0),
                height: 2.5,
                label: 1,
                color: [200; 3],
            }],
            label_table: default_label_table(),
            start: Pose::new(1.0, 1.0, 0),
            goal: (2.0, 2.0),
            target: 0,
        }
    }

    #[test]
    fn turn_and_forward() {
        let w = world_with_wall();
        assert_eq!(step(&w, &Pose::new(1.0, 1.0, 90), ActionId::TurnLeft).heading(), 105);
        assert_eq!(step(&w, &Pose::new(1.0, 1.0, 0), ActionId::TurnRight).heading(), 345);
        let p = step(&w, &Pose::new(1.0, 4.0, 0), ActionId::Forward);
        assert!((p.x - 1.25).abs() < 1e-12 && (p.y - 4.0).abs() < 1e-12 && p.heading() == 0);
        assert_eq!(step(&w, &Pose::new(1.0, 4.0, 0), ActionId::Stop), Pose::new(1.0, 4.0, 0));
    }

    #[test]
    fn blocked_forward_is_noop() {
        let w = world_with_wall();
        // disk edge 0.1 m from the wall face
        let p = Pose::new(4.75, 4.0, 0);
        assert_eq!(step(&w, &p, ActionId::Forward), p);
    }

    #[test]
    fn turn_algebra() {
        let w = world_with_wall();
        let mut p = Pose::new(2.0, 2.0, 30);
        for _ in 0..24 {
            p = step(&w, &p, ActionId::TurnLeft);
        }
        assert_eq!(p.heading(), 30);
        let q = step(&w, &step(&w, &p, ActionId::TurnLeft), ActionId::TurnRight);
        assert_eq!(q, p);
    }

    proptest! {
        #[test]
        fn stays_in_free_space(actions in proptest::collection::vec(0usize..4, 0..200), h in 0i32..24) {
            let w = world_with_wall();
            let acts: Vec<ActionId> = actions.into_iter().map(|i| ActionId::from_index(i).unwrap()).collect();
            for p in execute(&w, Pose::new(2.0, 3.0, 15 * h), &acts) {
                prop_assert!(w.disk_free(p.x, p.y));
                prop_assert_eq!(p.heading() % 15, 0);
            }
        }
    }
}
