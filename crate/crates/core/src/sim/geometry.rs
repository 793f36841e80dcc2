//! Axis-aligned boxes, ray casting and swept-disk collision tests.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Aabb {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Aabb {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Self {
        Self {
            min_x: min_x.min(max_x),
            min_y: min_y.min(max_y),
            max_x: min_x.max(max_x),
            max_y: min_y.max(max_y),
        }
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    pub fn center(&self) -> (f64, f64) {
        ((self.min_x + self.max_x) / 2.0, (self.min_y + self.max_y) / 2.0)
    }

    pub fn expanded(&self, m: f64) -> Self {
        Self::new(self.min_x - m, self.min_y - m, self.max_x + m, self.max_y + m)
    }

    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min_x < o.max_x && o.min_x < self.max_x && self.min_y < o.max_y && o.min_y < self.max_y
    }

    /// Euclidean distance from a point to the box (0 inside).
    pub fn distance_to_point(&self, x: f64, y: f64) -> f64 {
        let dx = (self.min_x - x).max(0.0).max(x - self.max_x);
        let dy = (self.min_y - y).max(0.0).max(y - self.max_y);
        dx.hypot(dy)
    }

    /// Entry distance of the ray `origin + t * dir` (t >= 0), if it hits.
    pub fn ray_entry(&self, ox: f64, oy: f64, dx: f64, dy: f64) -> Option<f64> {
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        for (o, d, lo, hi) in [(ox, dx, self.min_x, self.max_x), (oy, dy, self.min_y, self.max_y)] {
            if d.abs() < 1e-12 {
                if o < lo || o > hi {
                    return None;
                }
            } else {
                let (a, b) = ((lo - o) / d, (hi - o) / d);
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                t0 = t0.max(a);
                t1 = t1.min(b);
                if t0 > t1 {
                    return None;
                }
            }
        }
        Some(t0)
    }

    /// Whether the segment p0-p1 touches the box.
    pub fn segment_intersects(&self, p0: (f64, f64), p1: (f64, f64)) -> bool {
        let (dx, dy) = (p1.0 - p0.0, p1.1 - p0.1);
        let (mut t0, mut t1) = (0.0f64, 1.0f64);
        for (o, d, lo, hi) in [(p0.0, dx, self.min_x, self.max_x), (p0.1, dy, self.min_y, self.max_y)] {
            if d.abs() < 1e-12 {
                if o < lo || o > hi {
                    return false;
                }
            } else {
                let (a, b) = ((lo - o) / d, (hi - o) / d);
                let (a, b) = if a < b { (a, b) } else { (b, a) };
                t0 = t0.max(a);
                t1 = t1.min(b);
                if t0 > t1 {
                    return false;
                }
            }
        }
        true
    }

    /// Whether a disk of radius `r` swept along p0-p1 overlaps the box.
    ///
    /// The Minkowski sum of a box and a disk is the union of two crossed boxes
    /// and four corner disks, each tested exactly.
    pub fn swept_disk_hits(&self, p0: (f64, f64), p1: (f64, f64), r: f64) -> bool {
        let wide = Aabb::new(self.min_x - r, self.min_y, self.max_x + r, self.max_y);
        let tall = Aabb::new(self.min_x, self.min_y - r, self.max_x, self.max_y + r);
        if wide.segment_intersects(p0, p1) || tall.segment_intersects(p0, p1) {
            return true;
        }
        [
            (self.min_x, self.min_y),
            (self.min_x, self.max_y),
            (self.max_x, self.min_y),
            (self.max_x, self.max_y),
        ]
        .into_iter()
        .any(|c| point_segment_distance(c, p0, p1) < r)
    }
}

pub fn point_segment_distance(p: (f64, f64), a: (f64, f64), b: (f64, f64)) -> f64 {
    let (abx, aby) = (b.0 - a.0, b.1 - a.1);
    let len2 = abx * abx + aby * aby;
    let t = if len2 == 0.0 {
        0.0
    } else {
        (((p.0 - a.0) * abx + (p.1 - a.1) * aby) / len2).clamp(0.0, 1.0)
    };
    (a.0 + t * abx - p.0).hypot(a.1 + t * aby - p.1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ray_entry_distance() {
        let b = Aabb::new(2.0, -1.0, 3.0, 1.0);
        assert!((b.ray_entry(0.0, 0.0, 1.0, 0.0).unwrap() - 2.0).abs() < 1e-12);
        assert!(b.ray_entry(0.0, 0.0, -1.0, 0.0).is_none());
        assert!(b.ray_entry(0.0, 5.0, 1.0, 0.0).is_none());
    }

    #[test]
    fn swept_disk_against_brute_force() {
        let b = Aabb::new(1.0, 1.0, 1.4, 2.0);
        let r = 0.15;
        let mut rng = 12345u64;
        let mut next = || {
            rng = rng.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            (rng >> 11) as f64 / (1u64 << 53) as f64 * 3.0
        };
        for _ in 0..2000 {
            let p0 = (next(), next());
            let p1 = (p0.0 + (next() - 1.5) / 6.0, p0.1 + (next() - 1.5) / 6.0);
            let brute = (0..=400).any(|k| {
                let t = k as f64 / 400.0;
                b.distance_to_point(p0.0 + t * (p1.0 - p0.0), p0.1 + t * (p1.1 - p0.1)) < r - 1e-3
            });
            let exact = b.swept_disk_hits(p0, p1, r);
            if brute {
                assert!(exact, "{p0:?} {p1:?}");
            }
        }
    }
}
