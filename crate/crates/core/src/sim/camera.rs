use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::servo::CameraVelocity;

/// Pinhole intrinsics with square pixels and no skew.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraModel {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl CameraModel {
    pub fn new(focal: f64, cx: f64, cy: f64, width: u32, height: u32) -> Result<Self> {
        let cam = Self {
            focal,
            cx,
            cy,
            width,
            height,
        };
        cam.validate()?;
        Ok(cam)
    }

    /// Principal point on the geometric sensor center.
    pub fn centered(focal: f64, width: u32, height: u32) -> Result<Self> {
        Self::new(
            focal,
            (width as f64 - 1.0) / 2.0,
            (height as f64 - 1.0) / 2.0,
            width,
            height,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.focal > 0.0) {
            return Err(Error::Config("focal length must be positive".into()));
        }
        if self.width == 0 || self.height == 0 || self.width > u16::MAX as u32 || self.height > u16::MAX as u32 {
            return Err(Error::Config("sensor size out of range".into()));
        }
        if !(self.cx >= 0.0 && self.cx < self.width as f64 && self.cy >= 0.0 && self.cy < self.height as f64) {
            return Err(Error::Config("principal point must lie on the sensor".into()));
        }
        Ok(())
    }

    pub fn center(&self) -> [f64; 2] {
        [self.cx, self.cy]
    }

    /// `K` as a row-major 3x3 matrix.
    pub fn k_matrix(&self) -> [[f64; 3]; 3] {
        [
            [self.focal, 0.0, self.cx],
            [0.0, self.focal, self.cy],
            [0.0, 0.0, 1.0],
        ]
    }

    /// Workspace millimetres covered by one pixel at depth `depth` metres.
    pub fn mm_per_px(&self, depth: f64) -> f64 {
        1000.0 * depth / self.focal
    }
}

/// Camera pose above the workspace plane with the optic axis pointing
/// straight down.
///
/// At `yaw = 0` the image `u` axis is world `+x` and the image `v` axis is
/// world `-y`. Positive yaw is a positive rotation about the optic axis in the
/// camera frame, which turns the camera axes clockwise when viewed from above.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CameraPose {
    /// World position in metres; `z` is the height above the workspace.
    pub position: [f64; 3],
    pub yaw: f64,
}

impl CameraPose {
    pub fn new(x: f64, y: f64, height: f64, yaw: f64) -> Self {
        Self {
            position: [x, y, height],
            yaw,
        }
    }

    /// Camera axes expressed in the world frame, `[x_c, y_c, z_c]`.
    pub fn axes(&self) -> [[f64; 3]; 3] {
        let (s, c) = self.yaw.sin_cos();
        [[c, -s, 0.0], [-s, -c, 0.0], [0.0, 0.0, -1.0]]
    }

    /// World point expressed in the camera frame.
    pub fn to_camera(&self, world: [f64; 3]) -> [f64; 3] {
        let d = [
            world[0] - self.position[0],
            world[1] - self.position[1],
            world[2] - self.position[2],
        ];
        let a = self.axes();
        [dot(&a[0], &d), dot(&a[1], &d), dot(&a[2], &d)]
    }

    /// World point seen at camera-frame coordinates `cam`.
    pub fn to_world(&self, cam: [f64; 3]) -> [f64; 3] {
        let a = self.axes();
        let mut out = self.position;
        for (axis, k) in a.iter().zip(cam) {
            out[0] += axis[0] * k;
            out[1] += axis[1] * k;
            out[2] += axis[2] * k;
        }
        out
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// Pinhole projection `p ~ K [R | t] X` followed by the perspective divide.
pub fn project(camera: &CameraModel, pose: &CameraPose, world: [f64; 3]) -> Result<[f64; 2]> {
    let c = pose.to_camera(world);
    if !(c[2] > 0.0) {
        return Err(Error::BehindCamera);
    }
    Ok([
        camera.focal * c[0] / c[2] + camera.cx,
        camera.focal * c[1] / c[2] + camera.cy,
    ])
}

/// Point on the horizontal plane at height `plane_z` seen at pixel `(u, v)`.
pub fn back_project(camera: &CameraModel, pose: &CameraPose, pixel: [f64; 2], plane_z: f64) -> Result<[f64; 3]> {
    let depth = pose.position[2] - plane_z;
    if !(depth > 0.0) {
        return Err(Error::BehindCamera);
    }
    let x = (pixel[0] - camera.cx) / camera.focal * depth;
    let y = (pixel[1] - camera.cy) / camera.focal * depth;
    Ok(pose.to_world([x, y, depth]))
}

/// One explicit Euler step of a camera-frame twist.
///
/// Translation is mapped through the camera axes at the start of the step.
/// Only the yaw component of the angular velocity is integrated, so the optic
/// axis keeps pointing down.
pub fn apply_velocity(pose: &CameraPose, twist: &CameraVelocity, dt: f64) -> CameraPose {
    assert!(dt > 0.0, "integration step must be positive");
    let a = pose.axes();
    let mut position = pose.position;
    for (axis, v) in a.iter().zip(twist.v) {
        position[0] += axis[0] * v * dt;
        position[1] += axis[1] * v * dt;
        position[2] += axis[2] * v * dt;
    }
    CameraPose {
        position,
        yaw: pose.yaw + twist.w[2] * dt,
    }
}
