//! Per-event perception chain: SAE update, corner classification, heat-map
//! deposit and tracking, plus the periodic detection check.

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::event::{Event, StreamClock, SurfaceKind, TimeSurface, Timestamp, VirtualEvent, VirtualKind};
use crate::harris::{CornerClass, HarrisConfig, HarrisDetector};
use crate::heatmap::{CornerHeatMap, HeatMapConfig, PeakSet};
use crate::tracking::{TrackMode, TrackedFeatureSet, TrackerConfig, Validation};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PerceptionConfig {
    pub detector: HarrisConfig,
    pub heatmap: HeatMapConfig,
    pub tracker: TrackerConfig,
}

/// What a detection check did.
#[derive(Clone, Debug, PartialEq)]
pub enum CheckOutcome {
    /// Still detecting; too few peaks to start tracking.
    Waiting { peaks: usize },
    /// Tracking started from the current peaks.
    Seeded { peaks: usize },
    Validated(Validation),
}

pub struct Perception {
    width: u32,
    height: u32,
    sae: TimeSurface,
    sace: TimeSurface,
    save: TimeSurface,
    detector: HarrisDetector,
    heatmap: CornerHeatMap,
    tracker: TrackedFeatureSet,
    clock: StreamClock,
    events: u64,
    corners: u64,
    last_peaks: PeakSet,
}

impl Perception {
    pub fn new(width: u32, height: u32, config: &PerceptionConfig) -> Result<Self> {
        config.tracker.validate()?;
        Ok(Self {
            width,
            height,
            sae: TimeSurface::new(width, height, SurfaceKind::Sae),
            sace: TimeSurface::new(width, height, SurfaceKind::Sace),
            save: TimeSurface::new(width, height, SurfaceKind::Save),
            detector: HarrisDetector::new(config.detector.clone())?,
            heatmap: CornerHeatMap::new(width, height, config.heatmap.clone())?,
            tracker: TrackedFeatureSet::new(config.tracker.clone()),
            clock: StreamClock::new(),
            events: 0,
            corners: 0,
            last_peaks: PeakSet::default(),
        })
    }

    /// Runs one sensor event through the chain.
    pub fn process(&mut self, e: &Event) -> Result<CornerClass> {
        self.clock.advance(e.t)?;
        self.sae.apply(e)?;
        self.events += 1;
        let class = self.detector.classify_event(&self.sae, e);
        if class == CornerClass::Corner {
            self.corners += 1;
            self.sace.apply(e)?;
            self.heatmap.deposit(e.u, e.v, e.t)?;
            self.tracker.assimilate_corner([e.u as f64, e.v as f64], e.t);
        }
        Ok(class)
    }

    /// Extracts heat-map peaks at `now` and either seeds the tracker or
    /// validates it against them.
    pub fn check(&mut self, now: Timestamp) -> Result<CheckOutcome> {
        self.heatmap.decay_to(now)?;
        let peaks = self.heatmap.extract_peaks();
        let outcome = match self.tracker.mode() {
            TrackMode::Detecting => {
                if self.tracker.seed_from_peaks(&peaks, now).is_ok() {
                    CheckOutcome::Seeded { peaks: peaks.len() }
                } else {
                    CheckOutcome::Waiting { peaks: peaks.len() }
                }
            }
            TrackMode::Tracking => CheckOutcome::Validated(self.tracker.validate_against_detection(&peaks, now)),
        };
        self.last_peaks = peaks;
        Ok(outcome)
    }

    /// Predicts tracked corners forward by the image shift caused by camera
    /// motion.
    pub fn apply_ego_motion(&mut self, shift: [f64; 2]) {
        self.tracker.shift(shift);
    }

    /// Stamps a virtual event into SAVE. Targets outside the sensor are
    /// skipped.
    pub fn stamp_virtual(&mut self, e: &VirtualEvent) {
        if e.pixel(self.width, self.height).is_some() {
            // Per-cell order can only break when a target is re-stamped at an
            // older time, which the callers never do.
            let _ = self.save.apply_virtual(e);
        }
    }

    /// Stamps the tracked centroid as an object-centroid virtual event.
    pub fn stamp_centroid(&mut self, now: Timestamp) -> Option<[f64; 2]> {
        let c = self.tracker.tracked_centroid()?;
        self.stamp_virtual(&VirtualEvent::new(c[0], c[1], now, VirtualKind::ObjectCentroid));
        Some(c)
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn sae(&self) -> &TimeSurface {
        &self.sae
    }

    pub fn sace(&self) -> &TimeSurface {
        &self.sace
    }

    pub fn save(&self) -> &TimeSurface {
        &self.save
    }

    pub fn heatmap(&self) -> &CornerHeatMap {
        &self.heatmap
    }

    pub fn tracker(&self) -> &TrackedFeatureSet {
        &self.tracker
    }

    /// Peaks found by the most recent check.
    pub fn last_peaks(&self) -> &PeakSet {
        &self.last_peaks
    }

    pub fn event_count(&self) -> u64 {
        self.events
    }

    pub fn corner_count(&self) -> u64 {
        self.corners
    }

    pub fn last_event_time(&self) -> Option<Timestamp> {
        self.clock.last()
    }
}
