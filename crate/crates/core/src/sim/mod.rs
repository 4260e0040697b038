//! Simulated eye-in-hand camera, workspace scene and event sensor.
//!
//! Workspace scale: the camera hovers 0.6 m above a 1.2 x 1.0 m workspace
//! with a 120 px focal length, so one pixel covers 5 mm on the workspace
//! plane and the 240 px sensor width spans the full 1.2 m.

mod camera;
mod generator;
mod scene;

pub use camera::{apply_velocity, back_project, project, CameraModel, CameraPose};
pub use generator::{generate_events, EventGenConfig, EventGenerator, TimedPose};
pub use scene::{SceneObject, Shape};


/// Workspace extent in metres, centered on the world origin.
pub const WORKSPACE_SIZE: [f64; 2] = [1.2, 1.0];
pub const DEFAULT_CAMERA_HEIGHT: f64 = 0.6;
pub const DEFAULT_FOCAL: f64 = 120.0;
