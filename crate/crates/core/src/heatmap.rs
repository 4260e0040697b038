//! Corner heat-map: Gaussian accumulation of corner events with exponential
//! forgetting, local-peak extraction and the object centroid.
//!
//! Decay is applied lazily through a global scale factor, so a deposit costs
//! `O(radius²)` and decaying the whole map is `O(1)`. The stored grid is
//! renormalized before the scale factor can underflow.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Timestamp, US_PER_SECOND};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeatMapConfig {
    /// Deposit amplitude α.
    pub alpha: f64,
    /// Deposit spread σ, px.
    pub sigma: f64,
    /// Decay rate τ, 1/s.
    pub tau: f64,
    /// Deposit truncation radius, px. Defaults to `ceil(3σ)`.
    pub kernel_radius: Option<usize>,
    /// Peaks must reach this fraction of the map maximum.
    pub peak_threshold: f64,
    /// Side of the square dilation window used for local maxima, px.
    pub dilation: usize,
}

impl Default for HeatMapConfig {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            sigma: 2.0,
            tau: 5.0,
            kernel_radius: None,
            peak_threshold: 0.3,
            dilation: 10,
        }
    }
}

impl HeatMapConfig {
    pub fn radius(&self) -> usize {
        self.kernel_radius
            .unwrap_or_else(|| (3.0 * self.sigma).ceil() as usize)
    }

    /// Largest pointwise error the truncated kernel can introduce per deposit.
    pub fn truncation_bound(&self) -> f64 {
        let r = self.radius() as f64;
        self.alpha * (-0.5 * r * r / (self.sigma * self.sigma)).exp()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.sigma > 0.0 && self.tau >= 0.0) {
            return Err(Error::Config("heat-map alpha and sigma must be positive, tau non-negative".into()));
        }
        if !(self.peak_threshold > 0.0 && self.peak_threshold <= 1.0) {
            return Err(Error::Config("peak threshold must be in (0, 1]".into()));
        }
        if self.dilation == 0 {
            return Err(Error::Config("dilation window must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Peak {
    pub x: u16,
    pub y: u16,
    pub value: f64,
}

impl Peak {
    pub fn position(&self) -> [f64; 2] {
        [self.x as f64, self.y as f64]
    }
}

/// Local maxima of the heat-map, in row-major order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PeakSet {
    pub peaks: Vec<Peak>,
}

impl PeakSet {
    pub fn len(&self) -> usize {
        self.peaks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.peaks.is_empty()
    }

    pub fn positions(&self) -> Vec<[f64; 2]> {
        self.peaks.iter().map(Peak::position).collect()
    }
}

const RENORMALIZE_BELOW: f64 = 1e-200;

#[derive(Clone, Debug)]
pub struct CornerHeatMap {
    width: u32,
    height: u32,
    config: HeatMapConfig,
    stored: Vec<f64>,
    scale: f64,
    last_update: Option<Timestamp>,
    /// `(du, dv, weight)` for every offset inside the truncation disc.
    kernel: Vec<(i32, i32, f64)>,
}

impl CornerHeatMap {
    pub fn new(width: u32, height: u32, config: HeatMapConfig) -> Result<Self> {
        config.validate()?;
        let r = config.radius() as i32;
        let mut kernel = Vec::new();
        for dv in -r..=r {
            for du in -r..=r {
                let d2 = (du * du + dv * dv) as f64;
                if d2 <= (r * r) as f64 {
                    let w = config.alpha * (-0.5 * d2 / (config.sigma * config.sigma)).exp();
                    kernel.push((du, dv, w));
                }
            }
        }
        Ok(Self {
            width,
            height,
            config,
            stored: vec![0.0; width as usize * height as usize],
            scale: 1.0,
            last_update: None,
            kernel,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn config(&self) -> &HeatMapConfig {
        &self.config
    }

    /// Timestamp of the last decay or deposit.
    pub fn last_update(&self) -> Option<Timestamp> {
        self.last_update
    }

    pub fn value(&self, x: u32, y: u32) -> f64 {
        self.stored[(y * self.width + x) as usize] * self.scale
    }

    /// Materialized map, row-major.
    pub fn values(&self) -> Vec<f64> {
        self.stored.iter().map(|v| v * self.scale).collect()
    }

    /// Multiplies the whole map by `exp(-τ (t - t_c))` and sets `t_c = t`.
    pub fn decay_to(&mut self, t: Timestamp) -> Result<()> {
        if let Some(last) = self.last_update {
            if t < last {
                return Err(Error::StreamOrder { t, last });
            }
            let elapsed = (t - last) as f64 / US_PER_SECOND;
            if elapsed > 0.0 {
                self.scale *= (-self.config.tau * elapsed).exp();
                if self.scale < RENORMALIZE_BELOW {
                    let s = self.scale;
                    self.stored.iter_mut().for_each(|v| *v *= s);
                    self.scale = 1.0;
                }
            }
        }
        self.last_update = Some(t);
        Ok(())
    }

    /// Decays to `t`, then adds a truncated Gaussian centered on `(x, y)`.
    pub fn deposit(&mut self, x: u16, y: u16, t: Timestamp) -> Result<()> {
        if x as u32 >= self.width || y as u32 >= self.height {
            return Err(Error::OutOfBounds {
                u: x as i64,
                v: y as i64,
                width: self.width,
                height: self.height,
            });
        }
        self.decay_to(t)?;
        let inv = 1.0 / self.scale;
        let (w, h) = (self.width as i32, self.height as i32);
        for &(du, dv, k) in &self.kernel {
            let (u, v) = (x as i32 + du, y as i32 + dv);
            if u < 0 || v < 0 || u >= w || v >= h {
                continue;
            }
            self.stored[(v * w + u) as usize] += k * inv;
        }
        Ok(())
    }

    /// Local maxima of the map that reach `peak_threshold` of its maximum.
    ///
    /// A cell is a local maximum when it equals the grayscale dilation of the
    /// map. The dilation window spans offsets `-d/2 ..= (d-1)/2` around each
    /// cell, i.e. `-5..=4` for the default 10x10 window. Within an exactly
    /// flat plateau only the first cell in row-major order is kept.
    pub fn extract_peaks(&self) -> PeakSet {
        let values = self.values();
        let (w, h) = (self.width as usize, self.height as usize);
        let max = values.iter().cloned().fold(0.0, f64::max);
        if !(max > 0.0) {
            return PeakSet::default();
        }
        let d = self.config.dilation;
        let before = (d / 2) as isize;
        let after = ((d - 1) / 2) as isize;
        let dilated = dilate(&values, w, h, before, after);
        let threshold = self.config.peak_threshold * max;

        let mut peaks: Vec<Peak> = Vec::new();
        for y in 0..h {
            for x in 0..w {
                let v = values[y * w + x];
                if v <= 0.0 || v < threshold || v != dilated[y * w + x] {
                    continue;
                }
                let plateau_dup = peaks.iter().any(|p| {
                    let dx = p.x as isize - x as isize;
                    let dy = p.y as isize - y as isize;
                    p.value == v && (-before..=after).contains(&dx) && (-before..=after).contains(&dy)
                });
                if !plateau_dup {
                    peaks.push(Peak {
                        x: x as u16,
                        y: y as u16,
                        value: v,
                    });
                }
            }
        }
        PeakSet { peaks }
    }

    /// Writes the map as a binary PGM scaled so the maximum is 255.
    pub fn write_pgm<W: Write>(&self, mut out: W) -> Result<()> {
        let values = self.values();
        let max = values.iter().cloned().fold(0.0, f64::max);
        writeln!(out, "P5\n{} {}\n255", self.width, self.height)?;
        let bytes: Vec<u8> = values
            .iter()
            .map(|v| if max > 0.0 { (v / max * 255.0).round() as u8 } else { 0 })
            .collect();
        out.write_all(&bytes)?;
        Ok(())
    }
}

/// Separable max filter over the window `[-before, after]` on both axes,
/// clipped at the borders.
fn dilate(values: &[f64], w: usize, h: usize, before: isize, after: isize) -> Vec<f64> {
    let mut rows = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            let lo = (x as isize - before).max(0) as usize;
            let hi = ((x as isize + after) as usize).min(w - 1);
            rows[y * w + x] = values[y * w + lo..=y * w + hi]
                .iter()
                .cloned()
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        let lo = (y as isize - before).max(0) as usize;
        let hi = ((y as isize + after) as usize).min(h - 1);
        for x in 0..w {
            out[y * w + x] = (lo..=hi)
                .map(|yy| rows[yy * w + x])
                .fold(f64::NEG_INFINITY, f64::max);
        }
    }
    out
}

/// Mean of the peak positions.
pub fn compute_centroid(peaks: &[[f64; 2]]) -> Result<[f64; 2]> {
    if peaks.is_empty() {
        return Err(Error::NoFeature);
    }
    let n = peaks.len() as f64;
    let (sx, sy) = peaks.iter().fold((0.0, 0.0), |(x, y), p| (x + p[0], y + p[1]));
    Ok([sx / n, sy / n])
}

#[cfg(test)]
mod tests {
    use super::*;

    fn map() -> CornerHeatMap {
        CornerHeatMap::new(240, 180, HeatMapConfig::default()).unwrap()
    }

    #[test]
    fn single_deposit_values() {
        let mut h = map();
        h.deposit(50, 50, 0).unwrap();
        assert_eq!(h.value(50, 50), 1.0);
        assert!((h.value(50, 52) - (-0.5f64).exp()).abs() < 1e-15);
        assert_eq!(h.value(50, 57), 0.0);
    }

    #[test]
    fn deposits_add() {
        let mut h = map();
        h.deposit(50, 50, 100).unwrap();
        h.deposit(50, 50, 100).unwrap();
        assert_eq!(h.value(50, 50), 2.0);
    }

    #[test]
    fn out_of_order_is_rejected() {
        let mut h = map();
        h.deposit(10, 10, 500).unwrap();
        assert!(matches!(h.deposit(10, 10, 499), Err(Error::StreamOrder { .. })));
        assert!(matches!(h.decay_to(10), Err(Error::StreamOrder { .. })));
        assert!(matches!(h.deposit(240, 0, 600), Err(Error::OutOfBounds { .. })));
    }

    #[test]
    fn zero_elapsed_leaves_map_unchanged() {
        let mut h = map();
        h.deposit(30, 40, 1000).unwrap();
        let before = h.values();
        h.decay_to(1000).unwrap();
        assert_eq!(h.values(), before);
    }

    #[test]
    fn scalar_decay() {
        let mut h = map();
        h.deposit(30, 40, 0).unwrap();
        h.decay_to(200_000).unwrap();
        assert!((h.value(30, 40) - (-1.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn decay_strictly_decreases_nonzero_cells() {
        let mut h = map();
        h.deposit(30, 40, 0).unwrap();
        h.deposit(100, 90, 10).unwrap();
        let before = h.values();
        h.decay_to(20).unwrap();
        for (a, b) in before.iter().zip(h.values()) {
            if *a > 0.0 {
                assert!(b < *a);
            } else {
                assert_eq!(b, 0.0);
            }
        }
    }

    #[test]
    fn renormalization_keeps_values() {
        let mut h = map();
        h.deposit(60, 60, 0).unwrap();
        // 100 s at τ = 5 is e^-500, well past the renormalization point.
        h.decay_to(100_000_000).unwrap();
        h.deposit(60, 60, 100_000_000).unwrap();
        assert!((h.value(60, 60) - 1.0).abs() < 1e-12);
        assert!(h.values().iter().all(|v| v.is_finite() && *v >= 0.0));
    }

    #[test]
    fn single_gaussian_single_peak() {
        let mut h = map();
        h.deposit(77, 33, 5).unwrap();
        let peaks = h.extract_peaks();
        assert_eq!(peaks.len(), 1);
        assert_eq!((peaks.peaks[0].x, peaks.peaks[0].y), (77, 33));
    }

    #[test]
    fn empty_map_has_no_peaks() {
        assert!(map().extract_peaks().is_empty());
    }

    #[test]
    fn plateau_keeps_row_major_first() {
        let config = HeatMapConfig {
            kernel_radius: Some(0),
            ..Default::default()
        };
        let mut h = CornerHeatMap::new(40, 40, config).unwrap();
        h.deposit(10, 10, 0).unwrap();
        h.deposit(12, 10, 0).unwrap();
        h.deposit(30, 30, 0).unwrap();
        let p = h.extract_peaks();
        let xy: Vec<_> = p.peaks.iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(xy, vec![(10, 10), (30, 30)]);
    }

    #[test]
    fn weak_peaks_fall_below_relative_threshold() {
        let mut h = map();
        for _ in 0..10 {
            h.deposit(20, 20, 0).unwrap();
        }
        for _ in 0..2 {
            h.deposit(80, 80, 0).unwrap();
        }
        for _ in 0..3 {
            h.deposit(150, 100, 0).unwrap();
        }
        let xy: Vec<_> = h.extract_peaks().peaks.iter().map(|p| (p.x, p.y)).collect();
        assert_eq!(xy, vec![(20, 20), (150, 100)]);
    }

    #[test]
    fn centroid_cases() {
        let square = [[10.0, 10.0], [30.0, 10.0], [30.0, 30.0], [10.0, 30.0]];
        assert_eq!(compute_centroid(&square).unwrap(), [20.0, 20.0]);
        assert_eq!(compute_centroid(&[[42.0, 17.0]]).unwrap(), [42.0, 17.0]);
        assert!(matches!(compute_centroid(&[]), Err(Error::NoFeature)));
    }

    #[test]
    fn pgm_header_and_size() {
        let mut h = CornerHeatMap::new(8, 6, HeatMapConfig::default()).unwrap();
        h.deposit(3, 3, 0).unwrap();
        let mut buf = Vec::new();
        h.write_pgm(&mut buf).unwrap();
        let header = b"P5\n8 6\n255\n";
        assert!(buf.starts_with(header));
        assert_eq!(buf.len(), header.len() + 48);
        assert_eq!(buf[header.len() + 3 * 8 + 3], 255);
    }
}
