use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

pub type Vec3 = nalgebra::Vector3<f64>;

/// Planar pose: position in meters and heading in radians (counter-clockwise from +x).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Pose2 {
    pub x: f64,
    pub y: f64,
    pub heading: f64,
}

impl Pose2 {
    pub const fn new(x: f64, y: f64, heading: f64) -> Self {
        Pose2 { x, y, heading }
    }

    pub fn position(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn forward(&self) -> [f64; 2] {
        [self.heading.cos(), self.heading.sin()]
    }

    pub fn distance_to(&self, p: [f64; 2]) -> f64 {
        (self.x - p[0]).hypot(self.y - p[1])
    }
}

/// Rigid planar transform: rotate by `theta` then translate by `(x, y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Se2 {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Default for Se2 {
    fn default() -> Self {
        Se2::IDENTITY
    }
}

impl Se2 {
    pub const IDENTITY: Se2 = Se2 {
        x: 0.0,
        y: 0.0,
        theta: 0.0,
    };

    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Se2 { x, y, theta }
    }

    pub fn apply(&self, p: [f64; 2]) -> [f64; 2] {
        let (s, c) = self.theta.sin_cos();
        [c * p[0] - s * p[1] + self.x, s * p[0] + c * p[1] + self.y]
    }

    pub fn inverse(&self) -> Se2 {
        let (s, c) = self.theta.sin_cos();
        Se2 {
            x: -(c * self.x + s * self.y),
            y: -(-s * self.x + c * self.y),
            theta: -self.theta,
        }
    }
}

/// Wraps an angle into (-π, π].
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = a % (2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    } else if a > PI {
        a -= 2.0 * PI;
    }
    a
}

pub fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn se2_inverse_round_trips() {
        let t = Se2::new(1.5, -2.0, 0.7);
        let p = [0.3, 4.0];
        let q = t.inverse().apply(t.apply(p));
        assert!((q[0] - p[0]).abs() < 1e-12 && (q[1] - p[1]).abs() < 1e-12);
    }

    #[test]
    fn wrap_angle_range() {
        assert!((wrap_angle(3.0 * PI) - PI).abs() < 1e-12);
        assert!((wrap_angle(-PI) - PI).abs() < 1e-12);
        assert_eq!(wrap_angle(0.25), 0.25);
    }
}
