//! Explore / reach / align / grasp switching.
//!
//! The machine picks which virtual feature the controller servos to:
//! a random exploration target until the object centroid has been seen
//! consistently for `contiguity_threshold` ticks, then the centroid itself,
//! then an alignment target once the centroid sits on the sensor center.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Timestamp, VirtualEvent, VirtualKind, US_PER_SECOND};
use crate::servo::{alignment_angle, alignment_step, farthest_from};
use crate::tracking::{TrackMode, TrackedFeatureSet};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StrategyConfig {
    /// Consecutive consistent centroids needed before reaching.
    pub contiguity_threshold: u32,
    /// Two successive centroids closer than this are contiguous, px.
    pub contiguity_radius: f64,
    /// Centroid-to-center distance that counts as reached, px.
    pub reach_tolerance: f64,
    /// Without a centroid for this long the contiguity count resets, s.
    pub centroid_timeout: f64,
    /// An exploration target older than this is replaced, s.
    pub explore_stale_after: f64,
    /// Exploration targets are drawn from this central fraction of the sensor.
    pub explore_fraction: f64,
    /// Control tick rate, Hz.
    pub tick_hz: f64,
}

impl Default for StrategyConfig {
    fn default() -> Self {
        Self {
            contiguity_threshold: 3,
            contiguity_radius: 3.0,
            reach_tolerance: 2.0,
            centroid_timeout: 0.3,
            explore_stale_after: 2.0,
            explore_fraction: 0.8,
            tick_hz: 100.0,
        }
    }
}

impl StrategyConfig {
    pub fn validate(&self) -> Result<()> {
        if self.contiguity_threshold == 0 {
            return Err(Error::Config("strategy.contiguity_threshold must be at least 1".into()));
        }
        for (name, v) in [
            ("contiguity_radius", self.contiguity_radius),
            ("reach_tolerance", self.reach_tolerance),
            ("centroid_timeout", self.centroid_timeout),
            ("explore_stale_after", self.explore_stale_after),
            ("tick_hz", self.tick_hz),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!("strategy.{name} must be positive")));
            }
        }
        if !(self.explore_fraction > 0.0 && self.explore_fraction <= 1.0) {
            return Err(Error::Config("strategy.explore_fraction must be in (0, 1]".into()));
        }
        Ok(())
    }

    pub fn tick_dt(&self) -> f64 {
        1.0 / self.tick_hz
    }

    fn us(seconds: f64) -> Timestamp {
        (seconds * US_PER_SECOND).round() as Timestamp
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Phase {
    Explore,
    Reach,
    Align,
    Grasp,
    Done,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Explore => "explore",
            Phase::Reach => "reach",
            Phase::Align => "align",
            Phase::Grasp => "grasp",
            Phase::Done => "done",
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PhaseTransition {
    pub t: Timestamp,
    pub from: Phase,
    pub to: Phase,
    pub reason: &'static str,
}

impl PhaseTransition {
    pub const CSV_HEADER: &'static str = "t_us,phase_from,phase_to,reason";

    pub fn csv_row(&self) -> String {
        format!("{},{},{},{}", self.t, self.from, self.to, self.reason)
    }
}

/// What the controller should do this tick.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Directive {
    /// Servo so that the image feature at `target` moves to the sensor center.
    Servo { target: [f64; 2] },
    /// Rotate about the optical axis by `yaw_delta` over the tick.
    Rotate { yaw_delta: f64 },
    /// Descend and close the gripper.
    Grasp,
    Idle,
}

pub struct StepInput<'a> {
    pub now: Timestamp,
    pub tracker: &'a TrackedFeatureSet,
    pub camera_yaw: f64,
    pub omega_align: f64,
    pub align_tolerance: f64,
}

/// Which virtual feature the three-case switching function selects.
///
/// `count < c_th` keeps exploring; otherwise the centroid is the target
/// until it lies within `eps` of the center, when alignment takes over.
pub fn switching_case(count: u32, c_th: u32, centroid: [f64; 2], center: [f64; 2], eps: f64) -> Phase {
    if count < c_th {
        Phase::Explore
    } else if (centroid[0] - center[0]).hypot(centroid[1] - center[1]) <= eps {
        Phase::Align
    } else {
        Phase::Reach
    }
}

#[derive(Clone, Debug)]
pub struct ServoState {
    config: StrategyConfig,
    width: u32,
    height: u32,
    center: [f64; 2],
    rng: ChaCha8Rng,
    pub phase: Phase,
    pub active_target: VirtualEvent,
    pub contiguity_count: u32,
    /// Newest centroid seen and when.
    pub last_centroid: Option<VirtualEvent>,
    /// When the current exploration target was spawned.
    pub target_spawned: Timestamp,
    /// Absolute yaw the alignment phase rotates to.
    pub align_yaw: Option<f64>,
    transitions: Vec<PhaseTransition>,
}

impl ServoState {
    /// Starts in Explore with a freshly drawn target.
    pub fn new(config: StrategyConfig, width: u32, height: u32, center: [f64; 2], seed: u64) -> Result<Self> {
        config.validate()?;
        let mut state = Self {
            config,
            width,
            height,
            center,
            rng: ChaCha8Rng::seed_from_u64(seed),
            phase: Phase::Explore,
            active_target: VirtualEvent::new(center[0], center[1], 0, VirtualKind::RandomTarget),
            contiguity_count: 0,
            last_centroid: None,
            target_spawned: 0,
            align_yaw: None,
            transitions: Vec::new(),
        };
        state.active_target = state.spawn_random_target(0);
        Ok(state)
    }

    pub fn config(&self) -> &StrategyConfig {
        &self.config
    }

    pub fn center(&self) -> [f64; 2] {
        self.center
    }

    pub fn transitions(&self) -> &[PhaseTransition] {
        &self.transitions
    }

    /// Draws a uniformly random exploration target in the central band of
    /// the sensor and records its spawn time.
    pub fn spawn_random_target(&mut self, now: Timestamp) -> VirtualEvent {
        let f = self.config.explore_fraction;
        let (w, h) = (self.width as f64, self.height as f64);
        let x0 = w * (1.0 - f) / 2.0;
        let y0 = h * (1.0 - f) / 2.0;
        let x = x0 + self.rng.random::<f64>() * w * f;
        let y = y0 + self.rng.random::<f64>() * h * f;
        self.target_spawned = now;
        VirtualEvent::new(x, y, now, VirtualKind::RandomTarget)
    }

    /// Feeds one centroid estimate into the contiguity counter.
    pub fn update_contiguity(&mut self, centroid: [f64; 2], t: Timestamp) {
        let timeout = StrategyConfig::us(self.config.centroid_timeout);
        self.contiguity_count = match self.last_centroid {
            Some(prev)
                if t.saturating_sub(prev.t) <= timeout
                    && prev.distance_to(centroid[0], centroid[1]) <= self.config.contiguity_radius =>
            {
                self.contiguity_count + 1
            }
            _ => 0,
        };
        self.last_centroid = Some(VirtualEvent::new(centroid[0], centroid[1], t, VirtualKind::ObjectCentroid));
    }

    /// Resets the counter when no centroid has arrived recently.
    pub fn expire_contiguity(&mut self, now: Timestamp) {
        let timeout = StrategyConfig::us(self.config.centroid_timeout);
        if let Some(prev) = self.last_centroid {
            if now.saturating_sub(prev.t) > timeout {
                self.contiguity_count = 0;
                self.last_centroid = None;
            }
        }
    }

    /// Moves image-anchored exploration targets with the camera so they
    /// stay fixed in the world.
    pub fn apply_ego_motion(&mut self, shift: [f64; 2]) {
        if self.active_target.kind == VirtualKind::RandomTarget {
            self.active_target.x += shift[0];
            self.active_target.y += shift[1];
        }
    }

    fn transition(&mut self, t: Timestamp, to: Phase, reason: &'static str) {
        if self.phase == to {
            return;
        }
        log::debug!("{t}: {} -> {to} ({reason})", self.phase);
        self.transitions.push(PhaseTransition {
            t,
            from: self.phase,
            to,
            reason,
        });
        self.phase = to;
    }

    fn regress_to_explore(&mut self, now: Timestamp, reason: &'static str) {
        self.contiguity_count = 0;
        self.transition(now, Phase::Explore, reason);
        self.active_target = self.spawn_random_target(now);
    }

    fn explore_target(&mut self, now: Timestamp) -> VirtualEvent {
        let stale = StrategyConfig::us(self.config.explore_stale_after);
        let current = self.active_target;
        let reached = current.distance_to(self.center[0], self.center[1]) <= self.config.reach_tolerance;
        if current.kind != VirtualKind::RandomTarget || reached || now.saturating_sub(self.target_spawned) >= stale {
            self.spawn_random_target(now)
        } else {
            current
        }
    }

    /// One control tick.
    pub fn step(&mut self, input: &StepInput<'_>) -> Directive {
        let now = input.now;
        match self.phase {
            Phase::Explore | Phase::Reach => {
                let centroid = input.tracker.tracked_centroid();
                match centroid {
                    Some(c) => self.update_contiguity(c, now),
                    None => self.expire_contiguity(now),
                }
                if self.phase == Phase::Reach && input.tracker.mode() == TrackMode::Detecting {
                    self.regress_to_explore(now, "tracking_lost");
                    return Directive::Servo {
                        target: [self.active_target.x, self.active_target.y],
                    };
                }
                let case = match centroid {
                    Some(c) => switching_case(
                        self.contiguity_count,
                        self.config.contiguity_threshold,
                        c,
                        self.center,
                        self.config.reach_tolerance,
                    ),
                    None => Phase::Explore,
                };
                match case {
                    Phase::Explore => {
                        if self.phase == Phase::Reach {
                            self.regress_to_explore(now, "contiguity_lost");
                        } else {
                            self.active_target = self.explore_target(now);
                        }
                        Directive::Servo {
                            target: [self.active_target.x, self.active_target.y],
                        }
                    }
                    Phase::Reach => {
                        let c = centroid.expect("reach requires a centroid");
                        self.transition(now, Phase::Reach, "contiguity");
                        self.active_target = VirtualEvent::new(c[0], c[1], now, VirtualKind::ObjectCentroid);
                        Directive::Servo { target: c }
                    }
                    _ => {
                        let c = centroid.expect("align requires a centroid");
                        self.enter_align(now, c, input);
                        self.align_directive(now, input)
                    }
                }
            }
            Phase::Align => self.align_directive(now, input),
            Phase::Grasp => {
                self.transition(now, Phase::Done, "grasped");
                Directive::Grasp
            }
            Phase::Done => Directive::Idle,
        }
    }

    fn enter_align(&mut self, now: Timestamp, centroid: [f64; 2], input: &StepInput<'_>) {
        let corners = input.tracker.corner_positions();
        let theta = alignment_angle(centroid, &corners).unwrap_or(0.0);
        let r = farthest_from(centroid, &corners)
            .map(|i| (corners[i][0] - centroid[0]).hypot(corners[i][1] - centroid[1]))
            .unwrap_or(0.0);
        self.align_yaw = Some(input.camera_yaw + theta);
        self.active_target = VirtualEvent::new(centroid[0] + r, centroid[1], now, VirtualKind::AlignmentTarget);
        self.transition(now, Phase::Align, "centered");
    }

    fn align_directive(&mut self, now: Timestamp, input: &StepInput<'_>) -> Directive {
        let target = self.align_yaw.unwrap_or(input.camera_yaw);
        let step = alignment_step(
            input.camera_yaw,
            target,
            input.omega_align,
            self.config.tick_dt(),
            input.align_tolerance,
        );
        if step.done {
            self.transition(now, Phase::Grasp, "aligned");
            Directive::Grasp
        } else {
            Directive::Rotate {
                yaw_delta: step.yaw_delta,
            }
        }
    }
}
