//! Closed-loop trials: simulated scene and sensor, perception, strategy and
//! control wired together, with metrics and CSV traces.

mod config;
mod suite;
mod trial;

pub use config::{CameraConfig, NoiseConfig, ObjectConfig, OutputConfig, SensorConfig, TrialConfig};
pub use suite::{load_config_dir, run_suite, SuiteReport, SuiteRow};
pub use trial::{run_trial, run_trial_with, EventSource, TrialMetrics, TrialOutput, GRASP_SUCCESS_PX, TRACE_HEADER};
