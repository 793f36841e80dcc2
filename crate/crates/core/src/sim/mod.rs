//! Gridworld simulator standing in for a photorealistic indoor environment.

pub mod episode;
pub mod geometry;
pub mod instruction;
pub mod motion;
pub mod planner;
pub mod render;
pub mod world;

pub use episode::{episode_id, generate_episode, mirror_episode, recovery_episode};
pub use instruction::{generate_instruction, mirror_instruction};
pub use motion::{execute, step};
pub use planner::{oracle_actions, shortest_path_length, GOAL_TOLERANCE};
pub use render::{render, CameraModel};
pub use world::{generate_world, Difficulty, Obstacle, World};
