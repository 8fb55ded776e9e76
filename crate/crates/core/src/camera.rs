//! Pinhole camera mounted on a planar pose.
//!
//! Camera frame convention: x right, y down, z forward (optical axis).
//! The optical axis is horizontal and points along the mount heading.

use serde::{Deserialize, Serialize};

use crate::geometry::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Intrinsics {
    pub width: usize,
    pub height: usize,
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
}

impl Intrinsics {
    /// Square pixels, principal point at the image centre, horizontal field of view in radians.
    pub fn from_fov(width: usize, height: usize, hfov: f64) -> Self {
        let fx = (width as f64 / 2.0) / (hfov / 2.0).tan();
        Intrinsics {
            width,
            height,
            fx,
            fy: fx,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub intrinsics: Intrinsics,
    /// Optical centre in world coordinates.
    pub position: [f64; 3],
    pub heading: f64,
}

impl CameraModel {
    fn axes(&self) -> (Vec3, Vec3, Vec3) {
        let (s, c) = self.heading.sin_cos();
        let right = Vec3::new(s, -c, 0.0);
        let down = Vec3::new(0.0, 0.0, -1.0);
        let forward = Vec3::new(c, s, 0.0);
        (right, down, forward)
    }

    pub fn center(&self) -> Vec3 {
        Vec3::new(self.position[0], self.position[1], self.position[2])
    }

    pub fn world_to_camera(&self, p: &Vec3) -> Vec3 {
        let (r, d, f) = self.axes();
        let v = p - self.center();
        Vec3::new(v.dot(&r), v.dot(&d), v.dot(&f))
    }

    pub fn camera_to_world(&self, p: &Vec3) -> Vec3 {
        let (r, d, f) = self.axes();
        self.center() + r * p.x + d * p.y + f * p.z
    }

    /// Rotates a camera-frame direction into the world frame.
    pub fn direction_to_world(&self, v: &Vec3) -> Vec3 {
        let (r, d, f) = self.axes();
        r * v.x + d * v.y + f * v.z
    }

    /// Projects a camera-frame point to continuous pixel coordinates.
    pub fn project(&self, p: &Vec3) -> Option<[f64; 2]> {
        if p.z <= 1e-9 {
            return None;
        }
        let k = &self.intrinsics;
        Some([k.cx + k.fx * p.x / p.z, k.cy + k.fy * p.y / p.z])
    }

    /// Unit ray in the camera frame through continuous pixel coordinates `(u, v)`.
    pub fn pixel_ray(&self, u: f64, v: f64) -> Vec3 {
        let k = &self.intrinsics;
        Vec3::new((u - k.cx) / k.fx, (v - k.cy) / k.fy, 1.0).normalize()
    }

    pub fn in_image(&self, uv: [f64; 2]) -> bool {
        let k = &self.intrinsics;
        uv[0] >= 0.0 && uv[0] <= k.width as f64 && uv[1] >= 0.0 && uv[1] <= k.height as f64
    }
}
