//! Square 2-D FFTs built from row transforms and in-place transposes.
//!
//! The `*_transposed` pair skips the final transpose: the spectrum comes out
//! with its two frequency axes swapped. Every transfer function used in this
//! crate depends on `fx² + fy²` only, so propagation can stay in that layout
//! and save two transposes per step.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

const BLOCK: usize = 32;

#[derive(Clone)]
pub struct Fft2 {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Fft2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Fft2").field("n", &self.n).finish()
    }
}

impl Fft2 {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn rows(&self, plan: &Arc<dyn Fft<f64>>, data: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); plan.get_inplace_scratch_len()];
        plan.process_with_scratch(data, &mut scratch);
    }

    /// Forward transform leaving the spectrum at `data[kx * n + ky]`.
    pub fn forward_transposed(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.rows(&self.forward, data);
        transpose_in_place(data, self.n);
        self.rows(&self.forward, data);
    }

    /// Inverse of [`Fft2::forward_transposed`], including the `1/n²` factor.
    pub fn inverse_transposed(&self, data: &mut [Complex64]) {
        assert_eq!(data.len(), self.n * self.n);
        self.rows(&self.inverse, data);
        transpose_in_place(data, self.n);
        self.rows(&self.inverse, data);
        let scale = 1.0 / (self.n * self.n) as f64;
        data.iter_mut().for_each(|v| *v *= scale);
    }

    /// Unnormalized forward transform in natural `[ky * n + kx]` layout.
    pub fn forward(&self, data: &mut [Complex64]) {
        self.forward_transposed(data);
        transpose_in_place(data, self.n);
    }

    /// Normalized inverse transform from natural layout.
    pub fn inverse(&self, data: &mut [Complex64]) {
        transpose_in_place(data, self.n);
        self.inverse_transposed(data);
    }
}

pub fn transpose_in_place<T>(data: &mut [T], n: usize) {
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    data.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft2(data: &[Complex64], n: usize) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); n * n];
        for ky in 0..n {
            for kx in 0..n {
                let mut acc = Complex64::new(0.0, 0.0);
                for y in 0..n {
                    for x in 0..n {
                        let phase = -2.0 * std::f64::consts::PI * ((kx * x + ky * y) as f64) / n as f64;
                        acc += data[y * n + x] * Complex64::from_polar(1.0, phase);
                    }
                }
                out[ky * n + kx] = acc;
            }
        }
        out
    }

    #[test]
    fn matches_naive_dft() {
        let n = 8;
        let data: Vec<Complex64> = (0..n * n)
            .map(|i| Complex64::new((i as f64 * 0.37).sin(), (i as f64 * 0.11).cos()))
            .collect();
        let expected = naive_dft2(&data, n);
        let mut got = data.clone();
        Fft2::new(n).forward(&mut got);
        for (a, b) in got.iter().zip(&expected) {
            assert!((a - b).norm() < 1e-10);
        }
        Fft2::new(n).inverse(&mut got);
        for (a, b) in got.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn transpose_round_trip() {
        let n = 70;
        let original: Vec<usize> = (0..n * n).collect();
        let mut data = original.clone();
        transpose_in_place(&mut data, n);
        assert_eq!(data[3 * n + 5], original[5 * n + 3]);
        transpose_in_place(&mut data, n);
        assert_eq!(data, original);
    }
}
