//! Sampled scalar fields, Laguerre-Gaussian modes and apertures.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::quadrature;

/// Uniform square sampling grid centered on index `n / 2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub n: usize,
    pub delta: f64,
}

impl GridSpec {
    pub fn new(n: usize, delta: f64) -> Result<Self> {
        if n < 64 || !n.is_power_of_two() {
            return Err(Error::InvalidParameter(format!(
                "grid size must be a power of two >= 64, got {n}"
            )));
        }
        if !(delta > 0.0 && delta.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "grid spacing must be positive, got {delta}"
            )));
        }
        Ok(Self { n, delta })
    }

    pub fn extent(&self) -> f64 {
        self.n as f64 * self.delta
    }

    pub fn cell_area(&self) -> f64 {
        self.delta * self.delta
    }

    pub fn len(&self) -> usize {
        self.n * self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Transverse coordinate of sample `i` along either axis.
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.delta
    }

    /// Spatial frequency (cycles/m) of FFT bin `k`.
    pub fn freq(&self, k: usize) -> f64 {
        let n = self.n as isize;
        let k = k as isize;
        let signed = if k < n / 2 { k } else { k - n };
        signed as f64 / self.extent()
    }

    pub fn freq_spacing(&self) -> f64 {
        1.0 / self.extent()
    }

    /// Radius from the grid center of the sample at flat index `idx`.
    pub fn radius(&self, idx: usize) -> f64 {
        let (y, x) = (idx / self.n, idx % self.n);
        self.coord(x).hypot(self.coord(y))
    }
}

/// Complex amplitude sampled on a [`GridSpec`], row-major (`y * n + x`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    grid: GridSpec,
    data: Vec<Complex64>,
}

impl ComplexField {
    pub fn new(grid: GridSpec, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != grid.len() {
            return Err(Error::DimensionMismatch {
                expected: grid.len(),
                found: data.len(),
            });
        }
        Ok(Self { grid, data })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            data: vec![Complex64::new(0.0, 0.0); grid.len()],
        }
    }

    /// Samples `f(x, y)` at every grid point.
    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> Complex64) -> Self {
        let coords: Vec<f64> = (0..grid.n).map(|i| grid.coord(i)).collect();
        let mut data = Vec::with_capacity(grid.len());
        for &y in &coords {
            for &x in &coords {
                data.push(f(x, y));
            }
        }
        Self { grid, data }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.data
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.data
    }

    /// `∬|ψ|² dA` as a midpoint Riemann sum.
    pub fn power(&self) -> f64 {
        self.data.iter().map(|a| a.norm_sqr()).sum::<f64>() * self.grid.cell_area()
    }

    pub fn scaled(&self, alpha: Complex64) -> Self {
        Self {
            grid: self.grid,
            data: self.data.iter().map(|a| a * alpha).collect(),
        }
    }

    pub fn normalized(mut self) -> Self {
        let p = self.power();
        if p > 0.0 {
            let s = 1.0 / p.sqrt();
            self.data.iter_mut().for_each(|a| *a *= s);
        }
        self
    }

    /// `α·self + β·other`.
    pub fn combine(&self, alpha: Complex64, other: &Self, beta: Complex64) -> Result<Self> {
        if self.grid != other.grid {
            return Err(Error::GridMismatch);
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| alpha * a + beta * b)
            .collect();
        Ok(Self { grid: self.grid, data })
    }

    pub fn intensity(&self) -> Vec<f64> {
        self.data.iter().map(|a| a.norm_sqr()).collect()
    }
}

/// Gaussian beam parameters at the transmitter waist.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BeamParams {
    /// Beam-waist radius (m).
    pub w0: f64,
    /// Wavelength (m).
    pub lambda: f64,
}

impl BeamParams {
    pub fn new(w0: f64, lambda: f64) -> Result<Self> {
        if !(w0 > 0.0) || !(lambda > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "beam waist and wavelength must be positive (w0={w0}, lambda={lambda})"
            )));
        }
        Ok(Self { w0, lambda })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.lambda
    }

    pub fn rayleigh_range(&self) -> f64 {
        PI * self.w0 * self.w0 / self.lambda
    }
}

/// OAM quantum number of a `p = 0` Laguerre-Gaussian mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ModeIndex {
    pub l: i32,
}

impl ModeIndex {
    pub fn new(l: i32) -> Self {
        Self { l }
    }

    /// Radial index; only the `p = 0` subspace is modeled.
    pub fn p(&self) -> u32 {
        0
    }
}

impl From<i32> for ModeIndex {
    fn from(l: i32) -> Self {
        Self { l }
    }
}

/// `w(z) = w0·√(1 + (z/zR)²)`.
pub fn beam_radius(beam: &BeamParams, z: f64) -> f64 {
    let zr = beam.rayleigh_range();
    beam.w0 * (1.0 + (z / zr).powi(2)).sqrt()
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// Analytic `p = 0` LG amplitude `R_{0,l}(r,z)·e^{ilθ}/√(2π)`.
pub fn lg_amplitude(l: i32, r: f64, theta: f64, z: f64, beam: &BeamParams) -> Complex64 {
    let al = l.unsigned_abs();
    let w = beam_radius(beam, z);
    let zr = beam.rayleigh_range();
    let k = beam.wavenumber();
    let rho = r * std::f64::consts::SQRT_2 / w;
    // r = 0 with |l| > 0 gives 0^|l| = 0, the analytic limit.
    let magnitude = 2.0 / factorial(al).sqrt() / w * rho.powi(al as i32) * (-(r * r) / (w * w)).exp()
        / (2.0 * PI).sqrt();
    let curvature = k * r * r * z / (2.0 * (z * z + zr * zr));
    let gouy = -f64::from(al + 1) * (z / zr).atan();
    Complex64::from_polar(magnitude, curvature + gouy + f64::from(l) * theta)
}

fn check_sampling(w: f64, grid: &GridSpec) -> Result<()> {
    if w < 4.0 * grid.delta {
        return Err(Error::GridUndersampled(format!(
            "beam radius {w:.4} m is under 4 samples of {} m",
            grid.delta
        )));
    }
    if grid.extent() < 4.0 * w {
        return Err(Error::GridUndersampled(format!(
            "grid extent {:.3} m is under 4x the beam radius {w:.4} m",
            grid.extent()
        )));
    }
    Ok(())
}

/// Samples the LG mode at distance `z` from the waist and normalizes it to
/// unit power on the discrete grid.
pub fn lg_field(mode: ModeIndex, z: f64, beam: &BeamParams, grid: &GridSpec) -> Result<ComplexField> {
    if !(z >= 0.0) {
        return Err(Error::InvalidParameter(format!("z must be non-negative, got {z}")));
    }
    check_sampling(beam_radius(beam, z), grid)?;
    let field = ComplexField::from_fn(*grid, |x, y| {
        lg_amplitude(mode.l, x.hypot(y), y.atan2(x), z, beam)
    });
    Ok(field.normalized())
}

/// Discrete inner product `Σ conj(a)·b·δ²`.
pub fn overlap(a: &ComplexField, b: &ComplexField) -> Result<Complex64> {
    if a.grid != b.grid {
        return Err(Error::GridMismatch);
    }
    let sum: Complex64 = a.data.iter().zip(&b.data).map(|(x, y)| x.conj() * y).sum();
    Ok(sum * a.grid.cell_area())
}

/// Hard circular aperture of radius `r_a` centered on the grid.
pub fn apply_aperture(f: &ComplexField, r_a: f64) -> ComplexField {
    let grid = f.grid;
    let r2 = r_a * r_a;
    let zero = Complex64::new(0.0, 0.0);
    let data = f
        .data
        .iter()
        .enumerate()
        .map(|(idx, &a)| {
            let (y, x) = (idx / grid.n, idx % grid.n);
            let (cx, cy) = (grid.coord(x), grid.coord(y));
            if cx * cx + cy * cy <= r2 {
                a
            } else {
                zero
            }
        })
        .collect();
    ComplexField { grid, data }
}

/// Flat indices of the samples inside a centered circle of radius `r_a`.
pub fn aperture_indices(grid: &GridSpec, r_a: f64) -> Vec<usize> {
    let r2 = r_a * r_a;
    (0..grid.len())
        .filter(|&idx| {
            let (y, x) = (idx / grid.n, idx % grid.n);
            let (cx, cy) = (grid.coord(x), grid.coord(y));
            cx * cx + cy * cy <= r2
        })
        .collect()
}

/// Diffraction loss in dB of a vacuum-propagated LG mode behind a circular
/// aperture, from 1-D radial quadrature of the analytic intensity.
pub fn aperture_transmission_db(mode: ModeIndex, z: f64, beam: &BeamParams, r_a: f64) -> f64 {
    let w = beam_radius(beam, z);
    let al = mode.l.unsigned_abs() as i32;
    // Radial power density up to constants: u^|l| e^{-u} with u = 2r²/w².
    let density = |r: f64| {
        let u = 2.0 * r * r / (w * w);
        u.powi(al) * (-u).exp() * r
    };
    let outer = 20.0 * w;
    let peak = w * (f64::from(al.max(1)) / 2.0).sqrt();
    let breaks = [peak, 2.0 * peak, 4.0 * w];
    let total = quadrature::integrate_with_breaks(density, 0.0, outer, &breaks, 1e-12, 0.0);
    let inside = quadrature::integrate_with_breaks(density, 0.0, r_a.min(outer), &breaks, 1e-12, 0.0);
    -10.0 * (inside / total).log10()
}

/// Translates a field by `(dx, dy)` using the Fourier shift theorem.
pub fn translate(f: &ComplexField, dx: f64, dy: f64) -> ComplexField {
    let grid = f.grid;
    let fft = Fft2::new(grid.n);
    let mut data = f.data.clone();
    fft.forward_transposed(&mut data);
    let n = grid.n;
    let ramp_x: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * grid.freq(k) * dx))
        .collect();
    let ramp_y: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(1.0, -2.0 * PI * grid.freq(k) * dy))
        .collect();
    // Transposed layout: row index is kx, column index is ky.
    for (kx, row) in data.chunks_mut(n).enumerate() {
        for (ky, v) in row.iter_mut().enumerate() {
            *v *= ramp_x[kx] * ramp_y[ky];
        }
    }
    fft.inverse_transposed(&mut data);
    ComplexField { grid, data }
}
