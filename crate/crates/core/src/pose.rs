use std::fmt;

use serde::{Deserialize, Serialize};

/// Agent pose in the plane. Heading is in whole degrees, counter-clockwise from +x.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    heading: i32,
}

impl Pose {
    pub fn new(x: f64, y: f64, heading_deg: i32) -> Self {
        Self { x, y, heading: normalize_heading(heading_deg) }
    }

    pub fn heading(&self) -> i32 {
        self.heading
    }

    pub fn heading_rad(&self) -> f64 {
        (self.heading as f64).to_radians()
    }

    pub fn position(&self) -> (f64, f64) {
        (self.x, self.y)
    }

    pub fn with_heading(self, heading_deg: i32) -> Self {
        Self::new(self.x, self.y, heading_deg)
    }

    pub fn distance_to(&self, p: (f64, f64)) -> f64 {
        (self.x - p.0).hypot(self.y - p.1)
    }
}

impl fmt::Display for Pose {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {} {}", self.x, self.y, self.heading)
    }
}

pub fn normalize_heading(deg: i32) -> i32 {
    deg.rem_euclid(360)
}
