//! Image-based control law and gripper alignment.
//!
//! Camera frame convention: `x` along the image `u` axis, `y` along the image
//! `v` axis, `z` along the optic axis pointing into the scene. Translating the
//! camera by `+x` moves a static scene point towards smaller `u`, so for a
//! point at depth `Z` the interaction matrix of the planar case is
//! `diag(-f/Z, -f/Z)`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Camera twist `(v, w)` in the camera frame.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct CameraVelocity {
    /// Linear velocity, m/s.
    pub v: [f64; 3],
    /// Angular velocity, rad/s.
    pub w: [f64; 3],
}

impl CameraVelocity {
    pub const ZERO: Self = Self {
        v: [0.0; 3],
        w: [0.0; 3],
    };

    pub fn planar(vx: f64, vy: f64) -> Self {
        Self {
            v: [vx, vy, 0.0],
            w: [0.0; 3],
        }
    }

    pub fn yaw_rate(wz: f64) -> Self {
        Self {
            v: [0.0; 3],
            w: [0.0, 0.0, wz],
        }
    }

    pub fn linear_norm(&self) -> f64 {
        norm3(&self.v)
    }

    pub fn angular_norm(&self) -> f64 {
        norm3(&self.w)
    }

    /// Scales the linear and angular parts down to their limits, keeping
    /// their directions.
    pub fn clamped(self, v_max: f64, w_max: f64) -> Self {
        let scale = |x: [f64; 3], limit: f64| {
            let n = norm3(&x);
            if n > limit && n > 0.0 {
                let s = limit / n;
                [x[0] * s, x[1] * s, x[2] * s]
            } else {
                x
            }
        };
        Self {
            v: scale(self.v, v_max),
            w: scale(self.w, w_max),
        }
    }
}

fn norm3(x: &[f64; 3]) -> f64 {
    (x[0] * x[0] + x[1] * x[1] + x[2] * x[2]).sqrt()
}

/// Feature position and its goal on the image plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ServoTarget {
    pub desired: [f64; 2],
    pub current: [f64; 2],
}

impl ServoTarget {
    pub fn new(current: [f64; 2], desired: [f64; 2]) -> Self {
        Self { desired, current }
    }

    /// `e = f - f_d`.
    pub fn error(&self) -> [f64; 2] {
        [
            self.current[0] - self.desired[0],
            self.current[1] - self.desired[1],
        ]
    }
}

pub type Mat2 = [[f64; 2]; 2];

/// Moore-Penrose pseudo-inverse of a 2x2 matrix.
///
/// Invertible input takes the exact inverse. A singular, non-zero 2x2 matrix
/// has rank one, `M = σ u vᵀ`, so its pseudo-inverse is `Mᵀ / σ²` with
/// `σ² = ‖M‖²_F`.
pub fn pseudo_inverse(m: &Mat2) -> Mat2 {
    let det = m[0][0] * m[1][1] - m[0][1] * m[1][0];
    let frob2 = m.iter().flatten().map(|x| x * x).sum::<f64>();
    if det.abs() > 1e-12 * frob2 {
        let inv = 1.0 / det;
        return [
            [m[1][1] * inv, -m[0][1] * inv],
            [-m[1][0] * inv, m[0][0] * inv],
        ];
    }
    log::warn!("interaction matrix is rank deficient; using the rank-one pseudo-inverse");
    if frob2 == 0.0 {
        return [[0.0; 2]; 2];
    }
    [
        [m[0][0] / frob2, m[1][0] / frob2],
        [m[0][1] / frob2, m[1][1] / frob2],
    ]
}

/// Interaction model for one point feature under planar camera translation.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InteractionModel {
    matrix: Mat2,
    gain: f64,
}

impl InteractionModel {
    /// `L = diag(-f/Z, -f/Z)` for a feature at constant depth `Z`.
    pub fn planar(focal: f64, depth: f64, gain: f64) -> Result<Self> {
        if !(depth > 0.0) {
            return Err(Error::Config(format!("depth must be positive, got {depth}")));
        }
        if !(focal > 0.0) {
            return Err(Error::Config(format!("focal length must be positive, got {focal}")));
        }
        let k = -focal / depth;
        Ok(Self {
            matrix: [[k, 0.0], [0.0, k]],
            gain,
        })
    }

    /// Arbitrary 2x2 model, e.g. to exercise degenerate configurations.
    pub fn with_matrix(matrix: Mat2, gain: f64) -> Self {
        Self { matrix, gain }
    }

    pub fn matrix(&self) -> Mat2 {
        self.matrix
    }

    pub fn gain(&self) -> f64 {
        self.gain
    }

    /// `V = -λ L⁺ e`, embedded as an `x, y` translation.
    pub fn compute_velocity(&self, target: &ServoTarget) -> CameraVelocity {
        let e = target.error();
        let p = pseudo_inverse(&self.matrix);
        let vx = -self.gain * (p[0][0] * e[0] + p[0][1] * e[1]);
        let vy = -self.gain * (p[1][0] * e[0] + p[1][1] * e[1]);
        CameraVelocity::planar(vx, vy)
    }

    /// Image velocity of a static feature for camera twist `twist`: `L v`.
    pub fn feature_velocity(&self, twist: &CameraVelocity) -> [f64; 2] {
        let m = &self.matrix;
        [
            m[0][0] * twist.v[0] + m[0][1] * twist.v[1],
            m[1][0] * twist.v[0] + m[1][1] * twist.v[1],
        ]
    }
}

/// Controller parameters (`[controller]` block of a trial config).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Servo gain λ, 1/s.
    pub lambda: f64,
    /// Constant yaw rate used during alignment, rad/s.
    pub omega_align: f64,
    pub align_tolerance_deg: f64,
    /// Linear speed limit, m/s.
    pub v_max: f64,
    /// Angular speed limit, rad/s.
    pub w_max: f64,
    /// Feature depth assumed by the interaction model, m. When unset the
    /// harness uses the camera height above the object's top face.
    pub depth_z: Option<f64>,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            lambda: 1.2,
            omega_align: 0.8,
            align_tolerance_deg: 2.0,
            v_max: 0.25,
            w_max: 1.0,
            depth_z: None,
        }
    }
}

impl ControllerConfig {
    pub fn align_tolerance(&self) -> f64 {
        self.align_tolerance_deg.to_radians()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0) {
            return Err(Error::Config("controller.lambda must be positive".into()));
        }
        if !(self.omega_align > 0.0) {
            return Err(Error::Config("controller.omega_align must be positive".into()));
        }
        if !(self.v_max > 0.0 && self.w_max > 0.0) {
            return Err(Error::Config("controller velocity limits must be positive".into()));
        }
        if !(self.align_tolerance_deg >= 0.0) {
            return Err(Error::Config("controller.align_tolerance_deg must be non-negative".into()));
        }
        if let Some(z) = self.depth_z {
            if !(z > 0.0) {
                return Err(Error::Config("controller.depth_z must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Wraps an angle into `(-π, π]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut r = a.rem_euclid(2.0 * PI);
    if r > PI {
        r -= 2.0 * PI;
    }
    if r <= -PI {
        r += 2.0 * PI;
    }
    r
}

/// Index of the point farthest from `center`; exact ties go to the first in
/// row-major order (smaller `y`, then smaller `x`).
pub fn farthest_from(center: [f64; 2], points: &[[f64; 2]]) -> Option<usize> {
    let mut best: Option<(usize, f64)> = None;
    for (i, p) in points.iter().enumerate() {
        let d = (p[0] - center[0]).hypot(p[1] - center[1]);
        best = match best {
            None => Some((i, d)),
            Some((j, bd)) => {
                let q = points[j];
                if d > bd || (d == bd && (p[1], p[0]) < (q[1], q[0])) {
                    Some((i, d))
                } else {
                    Some((j, bd))
                }
            }
        };
    }
    best.map(|(i, _)| i)
}

/// Gripper orientation: direction from the centroid to the farthest corner,
/// in `(-π, π]`.
pub fn alignment_angle(centroid: [f64; 2], corners: &[[f64; 2]]) -> Result<f64> {
    let i = farthest_from(centroid, corners).ok_or(Error::NoFeature)?;
    let c = corners[i];
    let theta = (c[1] - centroid[1]).atan2(c[0] - centroid[0]);
    Ok(if theta <= -PI { PI } else { theta })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AlignStep {
    /// Signed yaw increment to apply this tick, rad.
    pub yaw_delta: f64,
    pub done: bool,
}

/// One constant-rate rotation step from `current` towards `target` along the
/// shorter arc. Reports `done` once the wrapped residual is within
/// `tolerance`; the step never overshoots the target.
pub fn alignment_step(current: f64, target: f64, omega: f64, dt: f64, tolerance: f64) -> AlignStep {
    assert!(omega > 0.0, "alignment rate must be positive");
    let residual = wrap_angle(target - current);
    if residual.abs() <= tolerance {
        return AlignStep {
            yaw_delta: 0.0,
            done: true,
        };
    }
    let step = (omega * dt).min(residual.abs());
    AlignStep {
        yaw_delta: step.copysign(residual),
        done: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    macro_rules! assert_close {
        ($a:expr, $b:expr, $tol:expr) => {{
            let (a, b): (f64, f64) = ($a, $b);
            assert!((a - b).abs() <= $tol, "{a} vs {b} (tol {})", $tol);
        }};
    }

    fn model(gain: f64, focal: f64, depth: f64) -> InteractionModel {
        InteractionModel::planar(focal, depth, gain).unwrap()
    }

    #[test]
    fn zero_error_gives_zero_velocity() {
        let m = model(1.2, 120.0, 0.6);
        let v = m.compute_velocity(&ServoTarget::new([119.5, 89.5], [119.5, 89.5]));
        assert_eq!(v.linear_norm(), 0.0);
        assert_eq!(v.angular_norm(), 0.0);
    }

    #[test]
    fn hand_solved_planar_case() {
        // λ = 1, f/Z = 200 px/m, e = (20, 0) px → v_x = 0.1 m/s.
        let m = model(1.0, 200.0, 1.0);
        let v = m.compute_velocity(&ServoTarget::new([20.0, 0.0], [0.0, 0.0]));
        assert_close!(v.v[0], 0.1, 1e-15);
        assert_eq!(v.v[1], 0.0);
        assert_eq!(v.v[2], 0.0);
        assert_eq!(v.w, [0.0; 3]);
    }

    #[test]
    fn doubling_gain_doubles_velocity() {
        let t = ServoTarget::new([150.0, 60.0], [119.5, 89.5]);
        let a = model(0.7, 120.0, 0.6).compute_velocity(&t);
        let b = model(1.4, 120.0, 0.6).compute_velocity(&t);
        assert_eq!(b.v[0], 2.0 * a.v[0]);
        assert_eq!(b.v[1], 2.0 * a.v[1]);
    }

    #[test]
    fn rejects_non_positive_depth() {
        assert!(matches!(
            InteractionModel::planar(120.0, 0.0, 1.0),
            Err(Error::Config(_))
        ));
        assert!(InteractionModel::planar(120.0, -1.0, 1.0).is_err());
        assert!(InteractionModel::planar(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn singular_matrix_uses_least_squares() {
        // Rank one: only the x direction is observable.
        let m = InteractionModel::with_matrix([[-2.0, 0.0], [0.0, 0.0]], 1.0);
        let v = m.compute_velocity(&ServoTarget::new([4.0, 7.0], [0.0, 0.0]));
        assert_close!(v.v[0], 2.0, 1e-9);
        assert_close!(v.v[1], 0.0, 1e-9);
        let zero = pseudo_inverse(&[[0.0; 2]; 2]);
        assert_eq!(zero, [[0.0; 2]; 2]);
    }

    #[test]
    fn clamp_keeps_direction() {
        let v = CameraVelocity {
            v: [3.0, -4.0, 0.0],
            w: [0.0, 0.0, -2.0],
        }
        .clamped(0.25, 1.0);
        assert_close!(v.linear_norm(), 0.25, 1e-15);
        assert_close!(v.v[0] / v.v[1], -0.75, 1e-12);
        assert_eq!(v.w, [0.0, 0.0, -1.0]);
        let small = CameraVelocity::planar(0.01, 0.0).clamped(0.25, 1.0);
        assert_eq!(small, CameraVelocity::planar(0.01, 0.0));
    }

    #[test]
    fn alignment_angle_axis_cases() {
        assert_eq!(alignment_angle([20.0, 20.0], &[[30.0, 20.0], [22.0, 21.0]]).unwrap(), 0.0);
        assert_close!(
            alignment_angle([20.0, 20.0], &[[20.0, 30.0], [19.0, 18.0]]).unwrap(),
            PI / 2.0,
            1e-15
        );
        assert_eq!(alignment_angle([0.0, 0.0], &[[-3.0, -0.0]]).unwrap(), PI);
        assert!(matches!(alignment_angle([0.0, 0.0], &[]), Err(Error::NoFeature)));
    }

    #[test]
    fn alignment_angle_tie_prefers_row_major_first() {
        // Both at distance 10; (20,10) sits on row 10, (30,20) on row 20.
        let corners = [[30.0, 20.0], [20.0, 10.0]];
        assert_close!(
            alignment_angle([20.0, 20.0], &corners).unwrap(),
            -PI / 2.0,
            1e-15
        );
    }

    #[test]
    fn alignment_step_cases() {
        let s = alignment_step(0.3, 0.3, 0.5, 0.1, 2f64.to_radians());
        assert_eq!(s, AlignStep { yaw_delta: 0.0, done: true });
        let s = alignment_step(0.0, PI / 2.0, 0.5, 0.1, 2f64.to_radians());
        assert_close!(s.yaw_delta, 0.05, 1e-15);
        assert!(!s.done);
        // Final step stops on the target.
        let s = alignment_step(0.0, 0.05, 1.0, 0.1, 0.01);
        assert_close!(s.yaw_delta, 0.05, 1e-15);
    }

    /// Independent wrap oracle: try both rotation directions and keep the
    /// shorter one.
    fn shorter_arc_sign(from: f64, to: f64) -> f64 {
        let tau = 2.0 * PI;
        let pos = (to - from).rem_euclid(tau);
        let neg = (from - to).rem_euclid(tau);
        if pos <= neg {
            1.0
        } else {
            -1.0
        }
    }

    #[test]
    fn alignment_step_takes_shorter_arc_through_pi() {
        let s = alignment_step(0.1, -3.1, 0.5, 0.1, 2f64.to_radians());
        assert_eq!(s.yaw_delta.signum(), shorter_arc_sign(0.1, -3.1));
        assert!(!s.done);
    }

    proptest! {
        #[test]
        fn alignment_step_matches_wrap_oracle(from in -10.0f64..10.0, to in -10.0f64..10.0) {
            let s = alignment_step(from, to, 0.5, 0.01, 1e-3);
            let gap = wrap_angle(to - from).abs();
            prop_assume!((gap - PI).abs() > 1e-9);
            if !s.done {
                prop_assert_eq!(s.yaw_delta.signum(), shorter_arc_sign(from, to));
            }
        }

        #[test]
        fn velocity_is_linear_in_error(
            e1 in prop::array::uniform2(-50.0f64..50.0),
            e2 in prop::array::uniform2(-50.0f64..50.0),
        ) {
            let m = model(1.2, 120.0, 0.6);
            let v = |e: [f64; 2]| m.compute_velocity(&ServoTarget::new(e, [0.0, 0.0]));
            let sum = v([e1[0] + e2[0], e1[1] + e2[1]]);
            let (a, b) = (v(e1), v(e2));
            for k in 0..2 {
                prop_assert!((sum.v[k] - (a.v[k] + b.v[k])).abs() <= 1e-12);
            }
        }

        #[test]
        fn alignment_angle_translation_invariant_rotation_equivariant(
            pts in prop::collection::vec(prop::array::uniform2(-40.0f64..40.0), 1..6),
            shift in prop::array::uniform2(-100.0f64..100.0),
            phi in -PI..PI,
        ) {
            let c = [0.0, 0.0];
            let base = alignment_angle(c, &pts).unwrap();
            // Require a clear farthest point so rounding cannot flip the choice.
            let mut d: Vec<f64> = pts.iter().map(|p| p[0].hypot(p[1])).collect();
            d.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assume!(d.len() == 1 || d[0] - d[1] > 1e-6);
            prop_assume!(d[0] > 1e-6);

            let moved: Vec<[f64; 2]> = pts.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
            let t = alignment_angle([shift[0], shift[1]], &moved).unwrap();
            prop_assert!(wrap_angle(t - base).abs() < 1e-9);

            let (s, co) = phi.sin_cos();
            let rotated: Vec<[f64; 2]> = pts.iter().map(|p| [co * p[0] - s * p[1], s * p[0] + co * p[1]]).collect();
            let r = alignment_angle(c, &rotated).unwrap();
            prop_assert!(wrap_angle(r - base - phi).abs() < 1e-9);
        }

        #[test]
        fn wrap_angle_range(a in -100.0f64..100.0) {
            let w = wrap_angle(a);
            prop_assert!(w > -PI && w <= PI);
            prop_assert!(((a - w) / (2.0 * PI)).round() * 2.0 * PI - (a - w) < 1e-9);
        }
    }
}
