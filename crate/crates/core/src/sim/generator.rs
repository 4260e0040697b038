//! Synthetic event generation by silhouette sweep.
//!
//! Each object's top face is projected at both ends of a trajectory interval.
//! A pixel fires when its center changes sides of the silhouette boundary:
//! positive polarity when the object moves onto it, negative when it moves
//! off. The firing time is found by bisection on the linearly interpolated
//! outline, so timestamps stay accurate at any sampling rate. An edge
//! sliding along itself changes no pixel's occupancy and therefore stays
//! silent, which is the behavior of a real sensor moving parallel to a
//! contrast edge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, Normal};
use serde::{Deserialize, Serialize};

use super::camera::{CameraModel, CameraPose};
use super::scene::SceneObject;
use crate::error::{Error, Result};
use crate::event::{Event, Polarity, Timestamp, US_PER_SECOND};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EventGenConfig {
    /// Events emitted each time an edge crosses a pixel.
    pub crossings_per_pixel: u32,
    /// Uniform background noise over the whole sensor, events per second.
    pub noise_rate: f64,
    /// Standard deviation of Gaussian timestamp jitter, µs.
    pub jitter_sigma: f64,
    pub seed: u64,
}

impl Default for EventGenConfig {
    fn default() -> Self {
        Self {
            crossings_per_pixel: 1,
            noise_rate: 0.0,
            jitter_sigma: 0.0,
            seed: 0,
        }
    }
}

impl EventGenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.crossings_per_pixel == 0 {
            return Err(Error::Config("crossings per pixel must be at least 1".into()));
        }
        if !(self.noise_rate >= 0.0 && self.noise_rate.is_finite()) {
            return Err(Error::Config("noise rate must be a non-negative number".into()));
        }
        if !(self.jitter_sigma >= 0.0 && self.jitter_sigma.is_finite()) {
            return Err(Error::Config("jitter sigma must be a non-negative number".into()));
        }
        Ok(())
    }
}

/// A trajectory sample.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimedPose {
    pub t: Timestamp,
    pub pose: CameraPose,
}

impl TimedPose {
    pub fn new(t: Timestamp, pose: CameraPose) -> Self {
        Self { t, pose }
    }
}

const BISECTION_STEPS: usize = 16;
const SPAN_EPS: f64 = 1e-7;

/// Stateful generator: carries the noise process and PRNG across intervals so
/// a trajectory can be fed incrementally.
pub struct EventGenerator {
    camera: CameraModel,
    config: EventGenConfig,
    rng: ChaCha8Rng,
    noise: Option<Exp<f64>>,
    jitter: Option<Normal<f64>>,
    next_noise: Option<f64>,
    candidates: Vec<(u16, u16)>,
}

impl EventGenerator {
    pub fn new(camera: CameraModel, config: EventGenConfig) -> Result<Self> {
        camera.validate()?;
        config.validate()?;
        let noise = if config.noise_rate > 0.0 {
            Some(Exp::new(config.noise_rate / US_PER_SECOND).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        let jitter = if config.jitter_sigma > 0.0 {
            Some(Normal::new(0.0, config.jitter_sigma).map_err(|e| Error::Config(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            camera,
            rng: ChaCha8Rng::seed_from_u64(config.seed),
            config,
            noise,
            jitter,
            next_noise: None,
            candidates: Vec::new(),
        })
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    /// Appends the events of the half-open interval `[from.t, to.t)` to `out`,
    /// sorted by timestamp.
    pub fn interval(
        &mut self,
        scene: &[SceneObject],
        from: &TimedPose,
        to: &TimedPose,
        out: &mut Vec<Event>,
    ) -> Result<()> {
        if to.t <= from.t {
            return Err(Error::Trajectory {
                prev: from.t,
                next: to.t,
            });
        }
        let start = out.len();
        let (t0, t1) = (from.t, to.t);

        let mut before = Vec::with_capacity(scene.len());
        let mut after = Vec::with_capacity(scene.len());
        for obj in scene {
            before.push(oriented(obj.project(&self.camera, &from.pose)?));
            after.push(oriented(obj.project(&self.camera, &to.pose)?));
        }

        self.collect_candidates(&before, &after);
        let span = (t1 - t0) as f64;
        for &(v, u) in &self.candidates {
            let p = [u as f64, v as f64];
            let was = occupied(&before, p);
            let is = occupied(&after, p);
            if was == is {
                continue;
            }
            let s = crossing_fraction(&before, &after, p, was);
            let t = (t0 + (s * span).round() as Timestamp).min(t1 - 1);
            let polarity = if is { Polarity::Positive } else { Polarity::Negative };
            for _ in 0..self.config.crossings_per_pixel {
                out.push(Event::new(u, v, t, polarity));
            }
        }

        if let Some(exp) = self.noise {
            let mut next = match self.next_noise {
                Some(n) => n.max(t0 as f64),
                None => t0 as f64 + exp.sample(&mut self.rng),
            };
            while next < t1 as f64 {
                let u = self.rng.random_range(0..self.camera.width) as u16;
                let v = self.rng.random_range(0..self.camera.height) as u16;
                let polarity = if self.rng.random_bool(0.5) {
                    Polarity::Positive
                } else {
                    Polarity::Negative
                };
                out.push(Event::new(u, v, next.floor() as Timestamp, polarity));
                next += exp.sample(&mut self.rng);
            }
            self.next_noise = Some(next);
        }

        if let Some(normal) = self.jitter {
            for e in &mut out[start..] {
                let shifted = e.t as f64 + normal.sample(&mut self.rng);
                e.t = shifted.round().clamp(t0 as f64, (t1 - 1) as f64) as Timestamp;
            }
        }

        out[start..].sort_by_key(|e| e.t);
        Ok(())
    }

    /// Pixels whose centers lie in the area swept by any edge, row-major and
    /// without duplicates.
    fn collect_candidates(&mut self, before: &[Vec<[f64; 2]>], after: &[Vec<[f64; 2]>]) {
        self.candidates.clear();
        let (w, h) = (self.camera.width as i64, self.camera.height as i64);
        for (p0, p1) in before.iter().zip(after) {
            let n = p0.len();
            for i in 0..n {
                let j = (i + 1) % n;
                let quad = [p0[i], p0[j], p1[j], p1[i]];
                let y_min = quad.iter().map(|p| p[1]).fold(f64::INFINITY, f64::min);
                let y_max = quad.iter().map(|p| p[1]).fold(f64::NEG_INFINITY, f64::max);
                let v_lo = ((y_min - SPAN_EPS).ceil() as i64).max(0);
                let v_hi = ((y_max + SPAN_EPS).floor() as i64).min(h - 1);
                for v in v_lo..=v_hi {
                    let Some((x_lo, x_hi)) = hull_row_span(&quad, v as f64) else {
                        continue;
                    };
                    let u_lo = ((x_lo - SPAN_EPS).ceil() as i64).max(0);
                    let u_hi = ((x_hi + SPAN_EPS).floor() as i64).min(w - 1);
                    for u in u_lo..=u_hi {
                        self.candidates.push((v as u16, u as u16));
                    }
                }
            }
        }
        self.candidates.sort_unstable();
        self.candidates.dedup();
    }
}

/// Horizontal extent of the convex hull of `pts` on the line `y`.
///
/// The hull's intersection with a line is the hull of the line's
/// intersections with every segment between two input points.
fn hull_row_span(pts: &[[f64; 2]; 4], y: f64) -> Option<(f64, f64)> {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..4 {
        for j in i..4 {
            let (p, q) = (pts[i], pts[j]);
            let (dp, dq) = (p[1] - y, q[1] - y);
            if dp.abs() <= SPAN_EPS {
                lo = lo.min(p[0]);
                hi = hi.max(p[0]);
            }
            if dq.abs() <= SPAN_EPS {
                lo = lo.min(q[0]);
                hi = hi.max(q[0]);
            }
            if dp * dq < 0.0 {
                let x = p[0] + (q[0] - p[0]) * dp / (dp - dq);
                lo = lo.min(x);
                hi = hi.max(x);
            }
        }
    }
    (lo <= hi).then_some((lo, hi))
}

/// Reorders an image-plane polygon to counterclockwise (positive area).
fn oriented(mut poly: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    let n = poly.len();
    let area: f64 = (0..n)
        .map(|i| {
            let (a, b) = (poly[i], poly[(i + 1) % n]);
            a[0] * b[1] - a[1] * b[0]
        })
        .sum();
    if area < 0.0 {
        poly.reverse();
    }
    poly
}

/// Strict interior test for a positively oriented convex polygon.
pub(crate) fn inside_convex(poly: &[[f64; 2]], p: [f64; 2]) -> bool {
    let n = poly.len();
    (0..n).all(|i| {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        (b[0] - a[0]) * (p[1] - a[1]) - (b[1] - a[1]) * (p[0] - a[0]) > 0.0
    })
}

fn occupied(polys: &[Vec<[f64; 2]>], p: [f64; 2]) -> bool {
    polys.iter().any(|poly| inside_convex(poly, p))
}

/// Fraction of the interval at which `p` changed occupancy, by bisection on
/// the interpolated outlines.
fn crossing_fraction(before: &[Vec<[f64; 2]>], after: &[Vec<[f64; 2]>], p: [f64; 2], was: bool) -> f64 {
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut scratch: Vec<Vec<[f64; 2]>> = before.to_vec();
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        for ((s, a), b) in scratch.iter_mut().zip(before).zip(after) {
            for ((sv, av), bv) in s.iter_mut().zip(a).zip(b) {
                sv[0] = av[0] + (bv[0] - av[0]) * mid;
                sv[1] = av[1] + (bv[1] - av[1]) * mid;
            }
        }
        if occupied(&scratch, p) == was {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Generates the full stream for a sampled trajectory.
pub fn generate_events(
    scene: &[SceneObject],
    camera: &CameraModel,
    trajectory: &[TimedPose],
    config: &EventGenConfig,
) -> Result<Vec<Event>> {
    for pair in trajectory.windows(2) {
        if pair[1].t <= pair[0].t {
            return Err(Error::Trajectory {
                prev: pair[0].t,
                next: pair[1].t,
            });
        }
    }
    let mut generator = EventGenerator::new(*camera, config.clone())?;
    let mut out = Vec::new();
    for pair in trajectory.windows(2) {
        generator.interval(scene, &pair[0], &pair[1], &mut out)?;
    }
    Ok(out)
}
