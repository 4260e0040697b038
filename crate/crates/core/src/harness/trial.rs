use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;

use super::config::TrialConfig;
use crate::error::Result;
use crate::event::{write_events, Event, Timestamp, US_PER_SECOND};
use crate::pipeline::{CheckOutcome, Perception};
use crate::servo::{CameraVelocity, InteractionModel, ServoTarget};
use crate::sim::{apply_velocity, CameraPose, EventGenerator, SceneObject, TimedPose};
use crate::strategy::{Directive, Phase, PhaseTransition, ServoState, StepInput};

/// Grasp counts as successful within this many pixels of the true centroid.
pub const GRASP_SUCCESS_PX: f64 = 5.0;

pub const TRACE_HEADER: &str = "t_us,mode,strikes,corner_i_x,corner_i_y,...,centroid_x,centroid_y";

/// Where a trial gets its events from.
#[derive(Clone, Copy, Debug)]
pub enum EventSource<'a> {
    /// Generate events from the simulated scene as the camera moves.
    Live,
    /// Feed a previously recorded stream instead.
    Recorded(&'a [Event]),
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrialMetrics {
    pub success: bool,
    pub final_phase: String,
    pub timed_out: bool,
    /// Gripper-center to true-centroid distance at grasp time, mm.
    pub e_grasp_mm: Option<f64>,
    /// Same distance in pixels at the feature depth.
    pub e_grasp_px: Option<f64>,
    /// Tracking-to-detection reversions.
    pub n_switch: u32,
    pub sim_time: f64,
    /// Seconds spent in each phase.
    pub phase_durations: BTreeMap<String, f64>,
    pub events: u64,
    pub corner_events: u64,
}

#[derive(Clone, Debug)]
pub struct TrialOutput {
    pub metrics: TrialMetrics,
    /// One row per detection check, headed by [`TRACE_HEADER`].
    pub trace: String,
    /// Phase transitions, headed by [`PhaseTransition::CSV_HEADER`].
    pub phases: String,
    /// The stream fed to perception, when recording was requested.
    pub recorded: Option<Vec<Event>>,
    pub final_pose: CameraPose,
}

impl TrialOutput {
    /// Writes `trace.csv`, `phases.csv` and `metrics.toml` into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("trace.csv"), &self.trace)?;
        std::fs::write(dir.join("phases.csv"), &self.phases)?;
        let metrics = toml::to_string(&self.metrics).map_err(|e| crate::Error::Config(e.to_string()))?;
        std::fs::write(dir.join("metrics.toml"), metrics)?;
        Ok(())
    }

    pub fn write_recording(&self, path: &Path, width: u32, height: u32) -> Result<()> {
        let events = self.recorded.as_deref().unwrap_or(&[]);
        let mut w = BufWriter::new(File::create(path)?);
        write_events(&mut w, width, height, events)?;
        w.flush()?;
        Ok(())
    }
}

pub fn run_trial(config: &TrialConfig) -> Result<TrialOutput> {
    run_trial_with(config, EventSource::Live, false)
}

/// Runs one closed-loop trial.
///
/// Control runs at `strategy.tick_hz`; within each tick the pose is
/// integrated at `physics_hz` and every event of each sub-step is pushed
/// through perception in timestamp order. Detection checks run every
/// `tracker.validation_interval`.
pub fn run_trial_with(config: &TrialConfig, source: EventSource<'_>, record: bool) -> Result<TrialOutput> {
    config.validate()?;
    let camera = config.camera_model()?;
    let center = camera.center();
    let scene: Vec<SceneObject> = config.object.iter().map(|o| o.build()).collect::<Result<_>>()?;
    let depth = config.feature_depth();
    let model = InteractionModel::planar(camera.focal, depth, config.controller.lambda)?;
    let mut generator = EventGenerator::new(camera, config.generator_config())?;
    let mut perception = Perception::new(camera.width, camera.height, &config.perception_config())?;
    let mut state = ServoState::new(
        config.strategy.clone(),
        camera.width,
        camera.height,
        center,
        config.strategy_seed(),
    )?;

    let tick_us = (US_PER_SECOND / config.strategy.tick_hz).round() as Timestamp;
    let substeps = (config.physics_hz / config.strategy.tick_hz).round() as Timestamp;
    let sub_us = tick_us / substeps;
    let sub_dt = sub_us as f64 / US_PER_SECOND;
    let check_us = config.tracker.validation_interval_us();
    let max_us = (config.max_sim_time * US_PER_SECOND).round() as Timestamp;

    let mut pose = config.start_pose();
    let mut now: Timestamp = 0;
    let mut next_check = check_us;
    let mut trace = format!("{TRACE_HEADER}\n");
    let mut batch = Vec::new();
    let mut recorded = record.then(Vec::new);
    let mut replay_cursor = 0usize;
    let mut e_grasp_m = None;
    let mut phase_durations: BTreeMap<String, f64> = BTreeMap::new();

    perception.stamp_virtual(&state.active_target);
    loop {
        while now >= next_check {
            let outcome = perception.check(next_check)?;
            if let CheckOutcome::Validated(v) = &outcome {
                if v.reverted {
                    log::debug!("{next_check}: tracking lost");
                }
            }
            trace.push_str(&perception.tracker().trace_row(next_check));
            trace.push('\n');
            next_check += check_us;
        }
        perception.stamp_centroid(now);

        let phase_before = state.phase;
        let directive = state.step(&StepInput {
            now,
            tracker: perception.tracker(),
            camera_yaw: pose.yaw,
            omega_align: config.controller.omega_align,
            align_tolerance: config.controller.align_tolerance(),
        });
        perception.stamp_virtual(&state.active_target);

        let twist = match directive {
            Directive::Servo { target } => model
                .compute_velocity(&ServoTarget::new(target, center))
                .clamped(config.controller.v_max, config.controller.w_max),
            Directive::Rotate { yaw_delta } => {
                CameraVelocity::yaw_rate(yaw_delta * config.strategy.tick_hz).clamped(config.controller.v_max, config.controller.w_max)
            }
            Directive::Grasp => {
                if e_grasp_m.is_none() {
                    if let Some(obj) = scene.first() {
                        let c = obj.true_centroid();
                        e_grasp_m = Some((pose.position[0] - c[0]).hypot(pose.position[1] - c[1]));
                    }
                }
                CameraVelocity::ZERO
            }
            Directive::Idle => CameraVelocity::ZERO,
        };
        if state.phase == Phase::Done || now >= max_us {
            break;
        }
        *phase_durations.entry(phase_before.name().to_string()).or_default() += tick_us as f64 / US_PER_SECOND;

        for _ in 0..substeps {
            let next = apply_velocity(&pose, &twist, sub_dt);
            let end = now + sub_us;
            batch.clear();
            match source {
                EventSource::Live => {
                    generator.interval(&scene, &TimedPose::new(now, pose), &TimedPose::new(end, next), &mut batch)?;
                }
                EventSource::Recorded(events) => {
                    let start = replay_cursor;
                    while replay_cursor < events.len() && events[replay_cursor].t < end {
                        replay_cursor += 1;
                    }
                    batch.extend_from_slice(&events[start..replay_cursor]);
                }
            }
            for e in &batch {
                perception.process(e)?;
            }
            if let Some(rec) = recorded.as_mut() {
                rec.extend_from_slice(&batch);
            }
            let shift = model.feature_velocity(&twist);
            let shift = [shift[0] * sub_dt, shift[1] * sub_dt];
            state.apply_ego_motion(shift);
            perception.apply_ego_motion(shift);
            pose = next;
            now = end;
        }
    }

    let done = state.phase == Phase::Done;
    let px_per_m = camera.focal / depth;
    let e_grasp_px = e_grasp_m.map(|m| m * px_per_m);
    let metrics = TrialMetrics {
        success: done && e_grasp_px.is_some_and(|e| e <= GRASP_SUCCESS_PX),
        final_phase: state.phase.name().to_string(),
        timed_out: !done,
        e_grasp_mm: e_grasp_m.map(|m| m * 1000.0),
        e_grasp_px,
        n_switch: perception.tracker().reversions(),
        sim_time: now as f64 / US_PER_SECOND,
        phase_durations,
        events: perception.event_count(),
        corner_events: perception.corner_count(),
    };
    if !done {
        log::warn!(
            "trial timed out after {:.2} s in phase {} ({} events, {} corners)",
            metrics.sim_time,
            metrics.final_phase,
            metrics.events,
            metrics.corner_events
        );
    }
    let mut phases = format!("{}\n", PhaseTransition::CSV_HEADER);
    for t in state.transitions() {
        phases.push_str(&t.csv_row());
        phases.push('\n');
    }
    let output = TrialOutput {
        metrics,
        trace,
        phases,
        recorded,
        final_pose: pose,
    };
    if let Some(dir) = &config.output.dir {
        output.write_to(dir)?;
    }
    Ok(output)
}
