//! Moving-average corner tracking.
//!
//! Once the heat-map has produced a stable corner set, every new corner event
//! nudges its nearest tracked corner with `p ← 0.9 p + 0.1 p_hc`. The tracked
//! set is cross-checked against fresh heat-map peaks at a fixed cadence and
//! dropped back to detection after repeated disagreement.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::Timestamp;
use crate::heatmap::PeakSet;

/// Weight kept by a tracked corner on each update.
pub const RETAIN: f64 = 0.9;
/// Weight given to the incoming corner event.
pub const BLEND: f64 = 0.1;

pub const MIN_TRACKED_CORNERS: usize = 3;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrackerConfig {
    /// Corner events farther than this from every tracked corner are ignored, px.
    pub gate_radius: f64,
    /// Tracked-vs-detected distance counted as a disagreement, px.
    pub discrepancy_px: f64,
    /// Consecutive disagreeing validations before falling back to detection.
    pub max_strikes: u32,
    /// Validation cadence, s.
    pub validation_interval: f64,
}

impl Default for TrackerConfig {
    fn default() -> Self {
        Self {
            gate_radius: 8.0,
            discrepancy_px: 5.0,
            max_strikes: 3,
            validation_interval: 0.3,
        }
    }
}

impl TrackerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.gate_radius > 0.0 && self.discrepancy_px > 0.0 && self.validation_interval > 0.0) {
            return Err(Error::Config("tracker radii and interval must be positive".into()));
        }
        if self.max_strikes == 0 {
            return Err(Error::Config("tracker.max_strikes must be at least 1".into()));
        }
        Ok(())
    }

    pub fn validation_interval_us(&self) -> Timestamp {
        (self.validation_interval * 1e6).round() as Timestamp
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrackMode {
    Detecting,
    Tracking,
}

impl TrackMode {
    pub fn name(self) -> &'static str {
        match self {
            TrackMode::Detecting => "detecting",
            TrackMode::Tracking => "tracking",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TrackedCorner {
    pub position: [f64; 2],
    pub last_update: Timestamp,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Validation {
    pub discrepancy: bool,
    pub strikes: u32,
    pub reverted: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct TrackedFeatureSet {
    config: TrackerConfig,
    corners: Vec<TrackedCorner>,
    centroid: Option<[f64; 2]>,
    mode: TrackMode,
    last_validation: Option<Timestamp>,
    strikes: u32,
    reversions: u32,
}

impl TrackedFeatureSet {
    /// An empty tracker in detection mode.
    pub fn new(config: TrackerConfig) -> Self {
        Self {
            config,
            corners: Vec::new(),
            centroid: None,
            mode: TrackMode::Detecting,
            last_validation: None,
            strikes: 0,
            reversions: 0,
        }
    }

    /// A tracker seeded from heat-map peaks.
    pub fn seeded(config: TrackerConfig, peaks: &PeakSet, t: Timestamp) -> Result<Self> {
        let mut tracker = Self::new(config);
        tracker.seed_from_peaks(peaks, t)?;
        Ok(tracker)
    }

    pub fn config(&self) -> &TrackerConfig {
        &self.config
    }

    pub fn mode(&self) -> TrackMode {
        self.mode
    }

    pub fn corners(&self) -> &[TrackedCorner] {
        &self.corners
    }

    pub fn corner_positions(&self) -> Vec<[f64; 2]> {
        self.corners.iter().map(|c| c.position).collect()
    }

    /// Mean of the tracked corners, whatever the mode.
    pub fn centroid(&self) -> Option<[f64; 2]> {
        self.centroid
    }

    /// The centroid, only while tracking.
    pub fn tracked_centroid(&self) -> Option<[f64; 2]> {
        match self.mode {
            TrackMode::Tracking => self.centroid,
            TrackMode::Detecting => None,
        }
    }

    pub fn strikes(&self) -> u32 {
        self.strikes
    }

    pub fn last_validation(&self) -> Option<Timestamp> {
        self.last_validation
    }

    /// Number of tracking-to-detection fallbacks so far.
    pub fn reversions(&self) -> u32 {
        self.reversions
    }

    fn refresh_centroid(&mut self) {
        self.centroid = if self.corners.is_empty() {
            None
        } else {
            let n = self.corners.len() as f64;
            let (sx, sy) = self
                .corners
                .iter()
                .fold((0.0, 0.0), |(x, y), c| (x + c.position[0], y + c.position[1]));
            Some([sx / n, sy / n])
        };
    }

    fn load(&mut self, peaks: &PeakSet, t: Timestamp) {
        self.corners = peaks
            .peaks
            .iter()
            .map(|p| TrackedCorner {
                position: p.position(),
                last_update: t,
            })
            .collect();
        self.refresh_centroid();
    }

    /// Switches to tracking with one corner per peak.
    pub fn seed_from_peaks(&mut self, peaks: &PeakSet, t: Timestamp) -> Result<()> {
        if peaks.len() < MIN_TRACKED_CORNERS {
            return Err(Error::NotEnoughFeatures {
                needed: MIN_TRACKED_CORNERS,
                got: peaks.len(),
            });
        }
        self.load(peaks, t);
        self.mode = TrackMode::Tracking;
        self.strikes = 0;
        self.last_validation = Some(t);
        Ok(())
    }

    /// Blends a corner event into its nearest tracked corner.
    ///
    /// Returns the index of the updated corner, or `None` when not tracking
    /// or when the event falls outside the association gate.
    pub fn assimilate_corner(&mut self, p: [f64; 2], t: Timestamp) -> Option<usize> {
        if self.mode != TrackMode::Tracking {
            return None;
        }
        let (i, d) = self
            .corners
            .iter()
            .enumerate()
            .map(|(i, c)| (i, (c.position[0] - p[0]).hypot(c.position[1] - p[1])))
            .min_by(|a, b| a.1.total_cmp(&b.1))?;
        if d > self.config.gate_radius {
            return None;
        }
        let c = &mut self.corners[i];
        c.position = [
            RETAIN * c.position[0] + BLEND * p[0],
            RETAIN * c.position[1] + BLEND * p[1],
        ];
        c.last_update = t;
        self.refresh_centroid();
        Some(i)
    }

    /// Moves every tracked corner by `delta` px, the image motion predicted
    /// from the camera's own velocity. Corners that see no corner events for
    /// a while (a vertex whose edges run along the motion) would otherwise be
    /// left behind.
    pub fn shift(&mut self, delta: [f64; 2]) {
        if self.mode != TrackMode::Tracking {
            return;
        }
        for c in &mut self.corners {
            c.position[0] += delta[0];
            c.position[1] += delta[1];
        }
        self.refresh_centroid();
    }

    /// Compares the tracked corners with freshly detected peaks.
    ///
    /// A disagreement is a different count, an empty peak set, or a tracked
    /// corner farther than `discrepancy_px` from its nearest peak. After
    /// `max_strikes` consecutive disagreements the tracker falls back to
    /// detection with its corners replaced by the peaks.
    pub fn validate_against_detection(&mut self, peaks: &PeakSet, t: Timestamp) -> Validation {
        self.last_validation = Some(t);
        if self.mode != TrackMode::Tracking {
            return Validation {
                discrepancy: false,
                strikes: self.strikes,
                reverted: false,
            };
        }
        let detected = peaks.positions();
        let discrepancy = detected.is_empty()
            || detected.len() != self.corners.len()
            || self.corners.iter().any(|c| {
                let nearest = detected
                    .iter()
                    .map(|q| (q[0] - c.position[0]).hypot(q[1] - c.position[1]))
                    .fold(f64::INFINITY, f64::min);
                nearest > self.config.discrepancy_px
            });
        if !discrepancy {
            self.strikes = 0;
            return Validation {
                discrepancy,
                strikes: 0,
                reverted: false,
            };
        }
        self.strikes += 1;
        let strikes = self.strikes;
        let reverted = strikes >= self.config.max_strikes;
        if reverted {
            self.mode = TrackMode::Detecting;
            self.strikes = 0;
            self.reversions += 1;
            self.load(peaks, t);
        }
        Validation {
            discrepancy,
            strikes,
            reverted,
        }
    }

    /// `t_us,mode,strikes,corner_0_x,corner_0_y,...,centroid_x,centroid_y`.
    pub fn trace_row(&self, t: Timestamp) -> String {
        let mut row = format!("{t},{},{}", self.mode.name(), self.strikes);
        for c in &self.corners {
            let _ = write!(row, ",{:.4},{:.4}", c.position[0], c.position[1]);
        }
        match self.centroid {
            Some(c) => {
                let _ = write!(row, ",{:.4},{:.4}", c[0], c[1]);
            }
            None => row.push_str(",,"),
        }
        row
    }
}
