//! Event-based Harris corner classification.
//!
//! For each incoming event the newest `N` events inside a square patch around
//! it are marked as 1 and everything else as 0. Gradients of that binary
//! patch come from 5x5 Sobel kernels, the gradient outer products are summed
//! under a window `Gu`, and the usual Harris response
//! `det(H) - k trace(H)^2` decides between corner, edge and flat.
//!
//! The 5x5 Sobel pair is the separable extension of the 3x3 operator,
//! normalized by its largest coefficient (12):
//!
//! ```text
//! Gx[r][c] = S[r] * D[c] / 12,   Gy[r][c] = D[r] * S[c] / 12
//! S = [1, 4, 6, 4, 1]            D = [-1, -2, 0, 2, 1]
//! ```
//!
//! Gradients are taken with zero padding outside the patch. The cost per
//! event depends only on the patch size.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::event::{Event, Timestamp, TimeSurface};

pub const SOBEL_SMOOTH: [f64; 5] = [1.0, 4.0, 6.0, 4.0, 1.0];
pub const SOBEL_DERIV: [f64; 5] = [-1.0, -2.0, 0.0, 2.0, 1.0];
pub const SOBEL_NORM: f64 = 12.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WindowKind {
    /// Normalized Gaussian with `σ = patch_size / 6`.
    Gaussian,
    /// Equal weight on every patch cell.
    Uniform,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarrisConfig {
    /// Score at or above which an event is a corner.
    pub threshold: f64,
    /// Number of newest events kept in the binary patch.
    pub newest: usize,
    pub patch_size: usize,
    pub harris_k: f64,
    pub window: WindowKind,
}

impl Default for HarrisConfig {
    fn default() -> Self {
        Self {
            threshold: 5.0,
            newest: 20,
            patch_size: 9,
            harris_k: 0.04,
            window: WindowKind::Gaussian,
        }
    }
}

impl HarrisConfig {
    pub fn validate(&self) -> Result<()> {
        if self.patch_size % 2 == 0 || self.patch_size < 5 {
            return Err(Error::Config(format!(
                "patch size must be odd and at least 5, got {}",
                self.patch_size
            )));
        }
        if self.newest == 0 || self.newest > self.patch_size * self.patch_size {
            return Err(Error::Config(format!(
                "newest-event count must be in 1..={}",
                self.patch_size * self.patch_size
            )));
        }
        Ok(())
    }

    /// Window weights `Gu`, row-major, summing to one.
    pub fn window_weights(&self) -> Vec<f64> {
        let n = self.patch_size;
        let c = (n / 2) as f64;
        let mut w: Vec<f64> = match self.window {
            WindowKind::Uniform => vec![1.0; n * n],
            WindowKind::Gaussian => {
                let sigma = n as f64 / 6.0;
                (0..n * n)
                    .map(|i| {
                        let (y, x) = ((i / n) as f64 - c, (i % n) as f64 - c);
                        (-(x * x + y * y) / (2.0 * sigma * sigma)).exp()
                    })
                    .collect()
            }
        };
        let sum: f64 = w.iter().sum();
        w.iter_mut().for_each(|x| *x /= sum);
        w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CornerClass {
    Corner,
    Edge,
    Flat,
}

/// Square binary patch, row-major, centered on the triggering event.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinaryPatch {
    size: usize,
    bits: Vec<u8>,
}

impl BinaryPatch {
    pub fn empty(size: usize) -> Self {
        Self {
            size,
            bits: vec![0; size * size],
        }
    }

    /// Builds a patch from rows of 0/1 values.
    pub fn from_rows(rows: &[&[u8]]) -> Self {
        let size = rows.len();
        let mut bits = Vec::with_capacity(size * size);
        for r in rows {
            assert_eq!(r.len(), size, "patch must be square");
            bits.extend(r.iter().map(|&b| (b != 0) as u8));
        }
        Self { size, bits }
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.bits[row * self.size + col] != 0
    }

    pub fn set(&mut self, row: usize, col: usize, on: bool) {
        self.bits[row * self.size + col] = on as u8;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b != 0).count()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Quarter-turn clockwise rotation.
    pub fn rotated(&self) -> Self {
        let n = self.size;
        let mut out = Self::empty(n);
        for r in 0..n {
            for c in 0..n {
                out.set(c, n - 1 - r, self.get(r, c));
            }
        }
        out
    }
}

/// Precomputed detector state for one [`HarrisConfig`].
#[derive(Clone, Debug)]
pub struct HarrisDetector {
    config: HarrisConfig,
    weights: Vec<f64>,
}

impl HarrisDetector {
    pub fn new(config: HarrisConfig) -> Result<Self> {
        config.validate()?;
        let weights = config.window_weights();
        Ok(Self { config, weights })
    }

    pub fn config(&self) -> &HarrisConfig {
        &self.config
    }

    /// Marks the `N` most recent occupied cells of the window around
    /// `center`. Cells off the sensor count as empty. The center cell always
    /// wins; equal timestamps are ranked in row-major order.
    pub fn binarize_patch(&self, sae: &TimeSurface, center: (u16, u16)) -> BinaryPatch {
        let n = self.config.patch_size;
        let half = (n / 2) as i64;
        let (cu, cv) = (center.0 as i64, center.1 as i64);
        let center_idx = (half as usize) * n + half as usize;

        let mut cells: Vec<(Timestamp, usize)> = Vec::with_capacity(n * n);
        for r in 0..n {
            for c in 0..n {
                let u = cu + c as i64 - half;
                let v = cv + r as i64 - half;
                if let Some(t) = sae.get_signed(u, v) {
                    cells.push((t, r * n + c));
                }
            }
        }
        let rank = |&(t, idx): &(Timestamp, usize)| {
            (
                idx != center_idx,
                std::cmp::Reverse(t),
                idx,
            )
        };
        let keep = self.config.newest.min(cells.len());
        if keep < cells.len() {
            cells.select_nth_unstable_by_key(keep, rank);
        }
        let mut patch = BinaryPatch::empty(n);
        for &(_, idx) in &cells[..keep] {
            patch.bits[idx] = 1;
        }
        patch
    }

    /// Harris response of a binary patch.
    pub fn harris_score(&self, patch: &BinaryPatch) -> f64 {
        let n = patch.size;
        assert_eq!(n, self.config.patch_size, "patch size does not match detector");
        let bits = &patch.bits;

        // Separable correlation, first along rows then along columns.
        let mut row_deriv = vec![0.0; n * n];
        let mut row_smooth = vec![0.0; n * n];
        for r in 0..n {
            for c in 0..n {
                let (mut d, mut s) = (0.0, 0.0);
                for k in 0..5 {
                    let cc = c as i64 + k as i64 - 2;
                    if cc < 0 || cc >= n as i64 {
                        continue;
                    }
                    let b = bits[r * n + cc as usize] as f64;
                    d += b * SOBEL_DERIV[k];
                    s += b * SOBEL_SMOOTH[k];
                }
                row_deriv[r * n + c] = d;
                row_smooth[r * n + c] = s;
            }
        }

        let (mut a, mut b, mut c2) = (0.0, 0.0, 0.0);
        for r in 0..n {
            for c in 0..n {
                let (mut ix, mut iy) = (0.0, 0.0);
                for k in 0..5 {
                    let rr = r as i64 + k as i64 - 2;
                    if rr < 0 || rr >= n as i64 {
                        continue;
                    }
                    let idx = rr as usize * n + c;
                    ix += row_deriv[idx] * SOBEL_SMOOTH[k];
                    iy += row_smooth[idx] * SOBEL_DERIV[k];
                }
                ix /= SOBEL_NORM;
                iy /= SOBEL_NORM;
                let w = self.weights[r * n + c];
                a += w * ix * ix;
                b += w * ix * iy;
                c2 += w * iy * iy;
            }
        }
        let det = a * c2 - b * b;
        let trace = a + c2;
        det - self.config.harris_k * trace * trace
    }

    pub fn classify_score(&self, score: f64) -> CornerClass {
        if score >= self.config.threshold {
            CornerClass::Corner
        } else if score < 0.0 {
            CornerClass::Edge
        } else {
            CornerClass::Flat
        }
    }

    /// Classifies `event`, which must already be stored in `sae`.
    pub fn classify_event(&self, sae: &TimeSurface, event: &Event) -> CornerClass {
        let patch = self.binarize_patch(sae, (event.u, event.v));
        self.classify_score(self.harris_score(&patch))
    }
}
