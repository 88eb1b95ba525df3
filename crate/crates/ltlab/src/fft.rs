//! Thin n-dimensional FFT sweeps on row-major tensors, built on rustfft.
//!
//! Transforms are applied axis by axis with gather/scatter into a scratch
//! line; the inverse is normalized so that `ifft(fft(v)) == v`. Everything
//! here is sequential and deterministic.

use num_complex::Complex64;
use rustfft::FftPlanner;

/// Forward DFT along every axis of a row-major tensor with the given
/// per-axis lengths (axis 0 slowest).
pub fn fft_nd(points: &[usize], values: &mut [Complex64]) {
    transform(points, values, false);
}

/// Inverse DFT along every axis, normalized by the total point count.
pub fn ifft_nd(points: &[usize], values: &mut [Complex64]) {
    transform(points, values, true);
}

fn transform(points: &[usize], values: &mut [Complex64], inverse: bool) {
    let total: usize = points.iter().product();
    assert_eq!(values.len(), total, "tensor length mismatch");
    let mut planner = FftPlanner::new();
    for (axis, &n) in points.iter().enumerate() {
        let fft = if inverse {
            planner.plan_fft_inverse(n)
        } else {
            planner.plan_fft_forward(n)
        };
        // stride between consecutive entries along `axis`
        let stride: usize = points[axis + 1..].iter().product();
        let lines = total / n;
        let mut scratch = vec![Complex64::new(0.0, 0.0); n];
        for line in 0..lines {
            // base index of this line: split line id into (outer, inner) parts
            let outer = line / stride;
            let inner = line % stride;
            let base = outer * stride * n + inner;
            for j in 0..n {
                scratch[j] = values[base + j * stride];
            }
            fft.process(&mut scratch);
            for j in 0..n {
                values[base + j * stride] = scratch[j];
            }
        }
    }
    if inverse {
        let scale = 1.0 / total as f64;
        for v in values.iter_mut() {
            *v *= scale;
        }
    }
}

/// Signed Fourier mode number for index `j` on an `n`-point axis:
/// `0, 1, ..., n/2, -(n/2-1), ..., -1`.
pub fn mode_number(j: usize, n: usize) -> i64 {
    if j <= n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn roundtrip_2d() {
        let points = [8usize, 16];
        let mut v: Vec<Complex64> = (0..128)
            .map(|i| Complex64::new((i as f64).sin(), (i as f64 * 0.3).cos()))
            .collect();
        let orig = v.clone();
        fft_nd(&points, &mut v);
        ifft_nd(&points, &mut v);
        for (a, b) in v.iter().zip(orig.iter()) {
            assert_relative_eq!(a.re, b.re, epsilon = 1e-12);
            assert_relative_eq!(a.im, b.im, epsilon = 1e-12);
        }
    }

    #[test]
    fn single_mode_lands_in_right_bin() {
        // e^{2 pi i * 3 x / n} along axis 1 of a 2d tensor.
        let (n0, n1) = (4usize, 32usize);
        let mut v = vec![Complex64::new(0.0, 0.0); n0 * n1];
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let phase = 2.0 * std::f64::consts::PI * 3.0 * i1 as f64 / n1 as f64;
                v[i0 * n1 + i1] = Complex64::new(phase.cos(), phase.sin());
            }
        }
        fft_nd(&[n0, n1], &mut v);
        // Energy should sit at (k0=0, k1=3).
        for i0 in 0..n0 {
            for i1 in 0..n1 {
                let mag = v[i0 * n1 + i1].norm();
                if i0 == 0 && i1 == 3 {
                    assert_relative_eq!(mag, (n0 * n1) as f64, max_relative = 1e-10);
                } else {
                    assert!(mag < 1e-8, "leakage at ({i0},{i1}): {mag}");
                }
            }
        }
    }

    #[test]
    fn mode_numbers_wrap() {
        assert_eq!(mode_number(0, 8), 0);
        assert_eq!(mode_number(4, 8), 4);
        assert_eq!(mode_number(5, 8), -3);
        assert_eq!(mode_number(7, 8), -1);
    }
}
