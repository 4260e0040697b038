use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{DEFAULT_HEIGHT, DEFAULT_WIDTH};
use crate::harris::HarrisConfig;
use crate::heatmap::HeatMapConfig;
use crate::pipeline::PerceptionConfig;
use crate::servo::ControllerConfig;
use crate::sim::{CameraModel, CameraPose, EventGenConfig, SceneObject, Shape, DEFAULT_CAMERA_HEIGHT, DEFAULT_FOCAL};
use crate::strategy::StrategyConfig;
use crate::tracking::TrackerConfig;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub width: u32,
    pub height: u32,
    /// Events fired per pixel as an edge sweeps past.
    pub crossings_per_pixel: u32,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            width: DEFAULT_WIDTH,
            height: DEFAULT_HEIGHT,
            crossings_per_pixel: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CameraConfig {
    /// Focal length, px.
    pub focal: f64,
    /// Height of the optical center above the workspace plane, m.
    pub height: f64,
    /// Start position on the workspace plane, m.
    pub start: [f64; 2],
    /// Start yaw, rad.
    pub yaw: f64,
}

impl Default for CameraConfig {
    fn default() -> Self {
        Self {
            focal: DEFAULT_FOCAL,
            height: DEFAULT_CAMERA_HEIGHT,
            start: [0.0, 0.0],
            yaw: 0.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectConfig {
    pub shape: Shape,
    /// Circumradius, m.
    pub size: f64,
    /// Centroid on the workspace plane, m.
    pub center: [f64; 2],
    /// Rotation about the vertical axis, rad.
    pub rotation: f64,
    /// Prism height, m.
    pub height: f64,
}

impl Default for ObjectConfig {
    fn default() -> Self {
        Self {
            shape: Shape::Rectangle,
            size: 0.12,
            center: [0.1, -0.05],
            rotation: 0.3,
            height: 0.03,
        }
    }
}

impl ObjectConfig {
    pub fn build(&self) -> Result<SceneObject> {
        self.shape.build(self.size, self.center, self.rotation, self.height)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseConfig {
    /// Background events per second over the whole sensor.
    pub rate: f64,
    /// Timestamp jitter, µs.
    pub jitter_sigma: f64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            rate: 0.0,
            jitter_sigma: 0.0,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputConfig {
    /// Directory for `trace.csv`, `phases.csv` and `metrics.toml`.
    /// Nothing is written when unset.
    pub dir: Option<PathBuf>,
}

/// Everything a trial depends on. A trial is a pure function of this value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrialConfig {
    pub seed: u64,
    /// Simulated time budget, s.
    pub max_sim_time: f64,
    /// Pose integration and event generation rate, Hz.
    pub physics_hz: f64,
    pub sensor: SensorConfig,
    pub camera: CameraConfig,
    /// The object to grasp. Leaving the table out of a config file gives an
    /// empty workspace.
    #[serde(default)]
    pub object: Option<ObjectConfig>,
    pub noise: NoiseConfig,
    pub controller: ControllerConfig,
    pub detector: HarrisConfig,
    pub heatmap: HeatMapConfig,
    pub tracker: TrackerConfig,
    pub strategy: StrategyConfig,
    pub output: OutputConfig,
}

impl Default for TrialConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            max_sim_time: 30.0,
            physics_hz: 1000.0,
            sensor: SensorConfig::default(),
            camera: CameraConfig::default(),
            object: Some(ObjectConfig::default()),
            noise: NoiseConfig::default(),
            controller: ControllerConfig::default(),
            detector: HarrisConfig::default(),
            heatmap: HeatMapConfig::default(),
            tracker: TrackerConfig::default(),
            strategy: StrategyConfig::default(),
            output: OutputConfig::default(),
        }
    }
}

impl TrialConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.max_sim_time > 0.0 && self.max_sim_time.is_finite()) {
            return Err(Error::Config("max_sim_time must be positive".into()));
        }
        self.camera_model()?;
        if !(self.camera.height > 0.0) {
            return Err(Error::Config("camera.height must be positive".into()));
        }
        if let Some(obj) = &self.object {
            obj.build()?;
            if obj.height >= self.camera.height {
                return Err(Error::Config("object must be below the camera".into()));
            }
        }
        self.generator_config().validate()?;
        self.controller.validate()?;
        self.detector.validate()?;
        self.heatmap.validate()?;
        self.tracker.validate()?;
        self.strategy.validate()?;
        let substeps = self.physics_hz / self.strategy.tick_hz;
        if !(substeps >= 1.0 && (substeps - substeps.round()).abs() < 1e-9) {
            return Err(Error::Config(
                "physics_hz must be a whole multiple of strategy.tick_hz".into(),
            ));
        }
        if 1e6 / self.physics_hz < 1.0 || (1e6 / self.physics_hz).fract() != 0.0 {
            return Err(Error::Config("physics_hz must divide one second into whole microseconds".into()));
        }
        Ok(())
    }

    pub fn camera_model(&self) -> Result<CameraModel> {
        CameraModel::centered(self.camera.focal, self.sensor.width, self.sensor.height)
    }

    pub fn start_pose(&self) -> CameraPose {
        CameraPose::new(self.camera.start[0], self.camera.start[1], self.camera.height, self.camera.yaw)
    }

    /// Depth of the servoed feature: configured, or the gap between the
    /// camera and the top face of the object.
    pub fn feature_depth(&self) -> f64 {
        self.controller.depth_z.unwrap_or_else(|| {
            self.camera.height - self.object.as_ref().map_or(0.0, |o| o.height)
        })
    }

    pub fn generator_config(&self) -> EventGenConfig {
        EventGenConfig {
            crossings_per_pixel: self.sensor.crossings_per_pixel,
            noise_rate: self.noise.rate,
            jitter_sigma: self.noise.jitter_sigma,
            seed: self.seed,
        }
    }

    pub fn perception_config(&self) -> PerceptionConfig {
        PerceptionConfig {
            detector: self.detector.clone(),
            heatmap: self.heatmap.clone(),
            tracker: self.tracker.clone(),
        }
    }

    /// Seed of the exploration-target generator, decorrelated from the
    /// event generator's.
    pub fn strategy_seed(&self) -> u64 {
        self.seed ^ 0x9e37_79b9_7f4a_7c15
    }
}
