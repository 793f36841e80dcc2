//! Column raycaster producing RGB, depth and ground-truth segmentation.
//!
//! Each image column casts one horizontal ray and collects every box it
//! enters. Each pixel then walks those hits front to back with its own
//! elevation, landing on the floor, the ceiling, or the first box tall enough
//! to cover it. Depth is the ground-plane distance to the hit point.

use serde::{Deserialize, Serialize};

use super::world::{labels, World, CEILING_COLOR, FLOOR_COLOR, WALL_COLOR};
use crate::error::{Error, Result};
use crate::frame::Frame;
use crate::pose::Pose;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub width: usize,
    pub height: usize,
    pub horizontal_fov: f64,
    pub camera_height: f64,
    pub max_range: f64,
}

impl Default for CameraModel {
    fn default() -> Self {
        Self { width: 96, height: 72, horizontal_fov: 90.0, camera_height: 1.0, max_range: 10.0 }
    }
}

struct Hit {
    dist: f64,
    height: f64,
    label: u16,
    color: [u8; 3],
}

fn shade(c: [u8; 3], dist: f64, max_range: f64) -> [u8; 3] {
    let f = 1.0 - 0.5 * (dist / max_range).min(1.0);
    c.map(|v| (v as f64 * f).round() as u8)
}

pub fn render(world: &World, pose: &Pose, cam: &CameraModel) -> Result<Frame> {
    if world.point_blocked(pose.x, pose.y) {
        return Err(Error::PoseInObstacle { x: pose.x, y: pose.y });
    }
    let (w, h) = (cam.width, cam.height);
    let tan_h = (cam.horizontal_fov.to_radians() / 2.0).tan();
    let tan_v = tan_h * h as f64 / w as f64;
    let mut rgb = vec![[0u8; 3]; w * h];
    let mut depth = vec![0f32; w * h];
    let mut seg = vec![0u16; w * h];
    let heading = pose.heading_rad();
    let up = world.ceiling_height - cam.camera_height;

    for col in 0..w {
        // leftmost column looks counter-clockwise of the heading
        let x_img = (1.0 - 2.0 * (col as f64 + 0.5) / w as f64) * tan_h;
        let theta = heading + x_img.atan();
        let (dx, dy) = (theta.cos(), theta.sin());
        let mut hits: Vec<Hit> = world
            .obstacles
            .iter()
            .filter_map(|o| {
                o.bounds.ray_entry(pose.x, pose.y, dx, dy).map(|t| Hit {
                    dist: t,
                    height: o.height,
                    label: o.label,
                    color: o.color,
                })
            })
            .collect();
        hits.push(Hit {
            dist: boundary_exit(world, pose.x, pose.y, dx, dy),
            height: world.ceiling_height,
            label: labels::WALL,
            color: WALL_COLOR,
        });
        hits.sort_by(|a, b| a.dist.total_cmp(&b.dist));
        let norm = (1.0 + x_img * x_img).sqrt();

        for row in 0..h {
            let y_img = (1.0 - 2.0 * (row as f64 + 0.5) / h as f64) * tan_v;
            let slope = y_img / norm;
            let floor_at = if slope < 0.0 { cam.camera_height / -slope } else { f64::INFINITY };
            let ceil_at = if slope > 0.0 { up / slope } else { f64::INFINITY };
            let mut out = None;
            for hit in &hits {
                if floor_at < hit.dist {
                    out = Some((floor_at, labels::FLOOR, FLOOR_COLOR));
                    break;
                }
                if ceil_at < hit.dist {
                    out = Some((ceil_at, labels::CEILING, CEILING_COLOR));
                    break;
                }
                let z = cam.camera_height + slope * hit.dist;
                if z <= hit.height {
                    out = Some((hit.dist, hit.label, hit.color));
                    break;
                }
            }
            let (dist, label, color) = out.unwrap_or((f64::INFINITY, labels::UNKNOWN, [0, 0, 0]));
            let k = row * w + col;
            let clamped = dist.min(cam.max_range);
            depth[k] = clamped as f32;
            seg[k] = label;
            rgb[k] = shade(color, clamped, cam.max_range);
        }
    }
    Frame::new(w, h, rgb, depth, seg, world.label_table.clone())
}

fn boundary_exit(world: &World, x: f64, y: f64, dx: f64, dy: f64) -> f64 {
    let tx = if dx > 1e-12 {
        (world.width - x) / dx
    } else if dx < -1e-12 {
        -x / dx
    } else {
        f64::INFINITY
    };
    let ty = if dy > 1e-12 {
        (world.depth - y) / dy
    } else if dy < -1e-12 {
        -y / dy
    } else {
        f64::INFINITY
    };
    tx.min(ty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::world::{default_label_table, Difficulty};

    fn open_world(size: f64) -> World {
        World {
            seed: 0,
            difficulty: Difficulty::Rooms,
            width: size,
            depth: size,
            ceiling_height: 2.5,
            obstacles: vec![],
            label_table: default_label_table(),
            start: Pose::new(1.0, 1.0, 0),
            goal: (2.0, 2.0),
            target: 0,
        }
    }

    fn center_depth(f: &Frame) -> f32 {
        let (w, h) = (f.width(), f.height());
        // rows just above and below the horizon both see the facing wall
        f.depth()[f.index(h / 2, w / 2)]
    }

    #[test]
    fn facing_wall_distance() {
        let w = open_world(8.0);
        let f = render(&w, &Pose::new(6.0, 4.0, 0), &CameraModel::default()).unwrap();
        assert!((center_depth(&f) - 2.0).abs() < 0.01, "{}", center_depth(&f));
        let f = render(&w, &Pose::new(4.0, 6.0, 90), &CameraModel::default()).unwrap();
        assert!((center_depth(&f) - 2.0).abs() < 0.01);
        let k = f.index(f.height() / 2, f.width() / 2);
        assert_eq!(f.label_table()[&f.segmentation()[k]], "wall");
    }

    #[test]
    fn clamps_to_max_range() {
        let mut w = open_world(40.0);
        w.width = 40.0;
        let f = render(&w, &Pose::new(1.0, 20.0, 0), &CameraModel::default()).unwrap();
        assert_eq!(center_depth(&f), 10.0);
    }

    #[test]
    fn floor_below_ceiling_above() {
        let w = open_world(8.0);
        let f = render(&w, &Pose::new(1.0, 4.0, 0), &CameraModel::default()).unwrap();
        let name = |r: usize| f.label_table()[&f.segmentation()[f.index(r, 48)]].as_str();
        assert_eq!(name(71), "floor");
        assert_eq!(name(0), "ceiling");
        // bottom row floor hit: camera 1 m high, steepest ray
        let d = f.depth()[f.index(71, 48)];
        assert!(d > 0.5 && d < 2.0);
    }

    #[test]
    fn deterministic_and_rejects_blocked_pose() {
        let w = crate::sim::generate_world(7, Difficulty::Rooms).unwrap();
        let a = render(&w, &w.start, &CameraModel::default()).unwrap();
        let b = render(&w, &w.start, &CameraModel::default()).unwrap();
        assert_eq!(a, b);
        let inside = w.obstacles[0].bounds.center();
        assert!(matches!(
            render(&w, &Pose::new(inside.0, inside.1, 0), &CameraModel::default()),
            Err(Error::PoseInObstacle { .. })
        ));
    }
}
