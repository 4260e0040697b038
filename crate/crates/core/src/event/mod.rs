//! Event data model and the surfaces of active events.

mod io;
mod surface;

pub use io::{read_events, write_event, write_events, write_header, EventFile, HEADER_TAG};
pub use surface::{SurfaceKind, TimeSurface};

use crate::error::{Error, Result};

/// Microseconds since the start of the stream.
pub type Timestamp = u64;

pub const US_PER_SECOND: f64 = 1e6;

/// Default sensor size (DAVIS240C).
pub const DEFAULT_WIDTH: u32 = 240;
pub const DEFAULT_HEIGHT: u32 = 180;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Polarity {
    Negative,
    Positive,
}

impl Polarity {
    pub fn sign(self) -> i8 {
        match self {
            Polarity::Negative => -1,
            Polarity::Positive => 1,
        }
    }
}

/// One brightness-change sample.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Event {
    pub u: u16,
    pub v: u16,
    pub t: Timestamp,
    pub polarity: Polarity,
}

impl Event {
    pub fn new(u: u16, v: u16, t: Timestamp, polarity: Polarity) -> Self {
        Self { u, v, t, polarity }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum VirtualKind {
    /// `p_cc`, the sensor-plane center.
    DesiredCenter,
    /// `p_vr`, an exploration goal.
    RandomTarget,
    /// `p_voc`, the localized object centroid.
    ObjectCentroid,
    /// `p_va`, where the gripper-defining corner should sit after alignment.
    AlignmentTarget,
}

/// A feature or goal that was not sensed directly but is placed on the SAVE.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct VirtualEvent {
    pub x: f64,
    pub y: f64,
    pub t: Timestamp,
    pub kind: VirtualKind,
}

impl VirtualEvent {
    pub fn new(x: f64, y: f64, t: Timestamp, kind: VirtualKind) -> Self {
        Self { x, y, t, kind }
    }

    /// Nearest pixel, or `None` when the location falls off the sensor.
    pub fn pixel(&self, width: u32, height: u32) -> Option<(u16, u16)> {
        let u = self.x.round();
        let v = self.y.round();
        if !(u >= 0.0 && v >= 0.0 && u < width as f64 && v < height as f64) {
            return None;
        }
        Some((u as u16, v as u16))
    }

    pub fn distance_to(&self, x: f64, y: f64) -> f64 {
        (self.x - x).hypot(self.y - y)
    }
}

/// Enforces the global non-decreasing timestamp contract of a stream.
#[derive(Clone, Debug, Default)]
pub struct StreamClock {
    last: Option<Timestamp>,
}

impl StreamClock {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn last(&self) -> Option<Timestamp> {
        self.last
    }

    pub fn advance(&mut self, t: Timestamp) -> Result<()> {
        if let Some(last) = self.last {
            if t < last {
                return Err(Error::StreamOrder { t, last });
            }
        }
        self.last = Some(t);
        Ok(())
    }
}
