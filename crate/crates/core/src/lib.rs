//! Event-based visual servoing.
//!
//! The crate turns an asynchronous event stream into camera velocity
//! commands for an eye-in-hand manipulator:
//!
//! - [`event`] – the event model, the three time surfaces (SAE, SACE, SAVE)
//!   and the `ebvs-events v1` text format.
//! - [`harris`] – per-event corner classification on a binarized SAE patch.
//! - [`heatmap`] – decaying Gaussian heat-map of corner events, peak
//!   extraction and the object centroid.
//! - [`tracking`] – moving-average corner tracking with periodic
//!   cross-validation against the heat-map.
//! - [`servo`] – the image-based control law and gripper alignment.
//! - [`strategy`] – the explore / reach / align / grasp switching machine.
//! - [`pipeline`] – glue that runs the perception chain per event.
//! - [`sim`] – pinhole camera, planar prism scene and a silhouette-sweep
//!   event generator standing in for a real sensor.
//! - [`harness`] – closed-loop trials, suites, traces and metrics.
//!
//! Image coordinates follow the sensor convention: `u` is the column
//! (growing right), `v` is the row (growing down), and pixel `(u, v)` has its
//! center at the real coordinate `(u, v)`.

pub mod error;
pub mod event;
pub mod harness;
pub mod harris;
pub mod heatmap;
pub mod pipeline;
pub mod servo;
pub mod sim;
pub mod strategy;
pub mod tracking;

pub use error::{Error, Result};
