//! Reference computations shared by several test targets.

use ebvs::harris::BinaryPatch;

/// Full 5x5 Sobel kernels written out cell by cell.
const GX: [[f64; 5]; 5] = [
    [-1.0, -2.0, 0.0, 2.0, 1.0],
    [-4.0, -8.0, 0.0, 8.0, 4.0],
    [-6.0, -12.0, 0.0, 12.0, 6.0],
    [-4.0, -8.0, 0.0, 8.0, 4.0],
    [-1.0, -2.0, 0.0, 2.0, 1.0],
];

/// Dense zero-padded 2D correlation, Gaussian window with σ = 1.5.
pub fn dense_harris(patch: &BinaryPatch, k: f64) -> f64 {
    let n = patch.size() as i64;
    let at = |r: i64, c: i64| -> f64 {
        if r < 0 || c < 0 || r >= n || c >= n {
            0.0
        } else {
            patch.get(r as usize, c as usize) as u8 as f64
        }
    };
    let mut wsum = 0.0;
    let mut weights = vec![0.0; (n * n) as usize];
    for r in 0..n {
        for c in 0..n {
            let (y, x) = ((r - n / 2) as f64, (c - n / 2) as f64);
            let w = (-(x * x + y * y) / (2.0 * 1.5 * 1.5)).exp();
            weights[(r * n + c) as usize] = w;
            wsum += w;
        }
    }
    let (mut a, mut b, mut c2) = (0.0, 0.0, 0.0);
    for r in 0..n {
        for c in 0..n {
            let (mut ix, mut iy) = (0.0, 0.0);
            for i in 0..5 {
                for j in 0..5 {
                    let v = at(r + i as i64 - 2, c + j as i64 - 2);
                    ix += GX[i][j] * v;
                    iy += GX[j][i] * v;
                }
            }
            ix /= 12.0;
            iy /= 12.0;
            let w = weights[(r * n + c) as usize] / wsum;
            a += w * ix * ix;
            b += w * ix * iy;
            c2 += w * iy * iy;
        }
    }
    a * c2 - b * b - k * (a + c2).powi(2)
}
