//! Angular-spectrum vacuum propagation and split-step propagation through
//! a stack of phase screens, from the satellite down to the ground.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::atomic::{AtomicBool, Ordering};

use num_complex::Complex64;
#[cfg(feature = "parallel")]
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::optics::{lg_field, BeamParams, ComplexField, GridSpec, ModeIndex};
use crate::seeding::{derive_seed, rng_from_seed};
use crate::turbulence::{ChannelGeometry, PhaseScreen, ScreenGenerator, SlabPartition, TurbulenceProfile};

/// Paraxial (Fresnel) angular-spectrum propagator for one grid and
/// wavelength. The global `e^{ikz}` phase is dropped.
#[derive(Debug)]
pub struct Propagator {
    grid: GridSpec,
    wavelength: f64,
    fft: Fft2,
    freq_sq: Vec<f64>,
    absorber: Option<Vec<f64>>,
    warned: AtomicBool,
}

impl Propagator {
    pub fn new(grid: GridSpec, wavelength: f64) -> Self {
        let n = grid.n;
        let freq: Vec<f64> = (0..n).map(|k| grid.freq(k)).collect();
        let freq_sq = (0..grid.len())
            .map(|idx| freq[idx / n].powi(2) + freq[idx % n].powi(2))
            .collect();
        Self {
            grid,
            wavelength,
            fft: Fft2::new(n),
            freq_sq,
            absorber: None,
            warned: AtomicBool::new(false),
        }
    }

    /// Adds a super-Gaussian edge absorber applied after every vacuum step.
    pub fn with_absorber(mut self) -> Self {
        let grid = self.grid;
        let edge = 0.47 * grid.extent();
        self.absorber = Some((0..grid.len()).map(|idx| (-(grid.radius(idx) / edge).powi(16)).exp()).collect());
        self
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn wavelength(&self) -> f64 {
        self.wavelength
    }

    /// Whether the transfer-function chirp is adequately sampled for `dz`
    /// (`λ·dz ≤ n·δ²`).
    pub fn is_fresnel_sampled(&self, dz: f64) -> bool {
        self.wavelength * dz <= self.grid.n as f64 * self.grid.delta * self.grid.delta
    }

    /// `H(f) = exp(−iπλ·dz·f²)` in the transposed spectral layout.
    pub fn transfer(&self, dz: f64) -> Vec<Complex64> {
        if !self.is_fresnel_sampled(dz) && !self.warned.swap(true, Ordering::Relaxed) {
            log::warn!(
                "step of {dz:.1} m violates the Fresnel sampling criterion on a {}x{} grid at {} m; \
                 results are valid only while the beam stays well inside the window",
                self.grid.n,
                self.grid.n,
                self.grid.delta
            );
        }
        let c = -PI * self.wavelength * dz;
        self.freq_sq.iter().map(|&f2| Complex64::from_polar(1.0, c * f2)).collect()
    }

    pub fn apply_transfer(&self, data: &mut [Complex64], transfer: &[Complex64]) {
        self.fft.forward_transposed(data);
        data.iter_mut().zip(transfer).for_each(|(v, h)| *v *= h);
        self.fft.inverse_transposed(data);
        if let Some(window) = &self.absorber {
            data.iter_mut().zip(window).for_each(|(v, w)| *v *= w);
        }
    }

    pub fn vacuum_step(&self, f: &ComplexField, dz: f64) -> Result<ComplexField> {
        if !(dz >= 0.0) {
            return Err(Error::InvalidParameter(format!("step must be non-negative, got {dz}")));
        }
        if f.grid() != self.grid {
            return Err(Error::GridMismatch);
        }
        if dz == 0.0 {
            return Ok(f.clone());
        }
        let transfer = self.transfer(dz);
        let mut data = f.amplitudes().to_vec();
        self.apply_transfer(&mut data, &transfer);
        ComplexField::new(self.grid, data)
    }
}

/// Free-space propagation over `dz` metres.
pub fn vacuum_step(f: &ComplexField, dz: f64, beam: &BeamParams) -> Result<ComplexField> {
    Propagator::new(f.grid(), beam.lambda).vacuum_step(f, dz)
}

/// Everything that fixes one draw of the satellite-to-ground channel.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealizationSpec {
    pub geometry: ChannelGeometry,
    pub partition: SlabPartition,
    pub profile: TurbulenceProfile,
    pub beam: BeamParams,
    pub seed: u64,
    /// `false` replaces every screen with zeros (vacuum debugging).
    pub turbulent: bool,
}

impl ChannelRealizationSpec {
    /// Screens for every slab, ground slab first. Slab `j` draws from the
    /// stream keyed by `(seed, j)`.
    pub fn screens(&self, generator: &ScreenGenerator) -> Vec<PhaseScreen> {
        self.partition
            .slabs
            .iter()
            .enumerate()
            .map(|(j, slab)| {
                if !self.turbulent || !slab.fried_parameter.is_finite() {
                    return PhaseScreen::zeros(generator.grid());
                }
                let mut rng = rng_from_seed(derive_seed(&[self.seed, j as u64]));
                generator.generate(slab.fried_parameter, &mut rng)
            })
            .collect()
    }

    /// Path distances (from the satellite) of the screens, ordered along
    /// the direction of travel, paired with their slab index.
    fn screen_positions(&self) -> Vec<(f64, usize)> {
        let mut positions: Vec<(f64, usize)> = self
            .partition
            .slabs
            .iter()
            .enumerate()
            .map(|(j, s)| (self.geometry.distance_from_satellite(s.screen_altitude()), j))
            .collect();
        positions.sort_by(|a, b| a.0.total_cmp(&b.0));
        positions
    }
}

/// Propagates every field through the same realization. Steps are the
/// outer loop so each transfer function and screen phasor is built once.
fn propagate_fields(
    propagator: &Propagator,
    mut fields: Vec<Vec<Complex64>>,
    spec: &ChannelRealizationSpec,
    screens: &[PhaseScreen],
) -> Vec<Vec<Complex64>> {
    let mut z = 0.0;
    let path = spec.geometry.path_length();
    let mut schedule: Vec<(f64, Option<usize>)> = spec
        .screen_positions()
        .into_iter()
        .map(|(pos, j)| (pos, Some(j)))
        .collect();
    schedule.push((path, None));

    for (pos, screen) in schedule {
        let dz = pos - z;
        if dz > 0.0 {
            let transfer = propagator.transfer(dz);
            for_each_field(&mut fields, |data| propagator.apply_transfer(data, &transfer));
        }
        z = pos;
        if let Some(j) = screen {
            let phases = &screens[j].phases;
            if phases.iter().any(|&p| p != 0.0) {
                let phasor: Vec<Complex64> = phases.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
                for_each_field(&mut fields, |data| {
                    data.iter_mut().zip(&phasor).for_each(|(v, w)| *v *= w);
                });
            }
        }
    }
    fields
}

#[cfg(feature = "parallel")]
fn for_each_field(fields: &mut [Vec<Complex64>], op: impl Fn(&mut [Complex64]) + Sync) {
    fields.par_iter_mut().for_each(|f| op(f));
}

#[cfg(not(feature = "parallel"))]
fn for_each_field(fields: &mut [Vec<Complex64>], op: impl Fn(&mut [Complex64])) {
    fields.iter_mut().for_each(|f| op(f));
}

fn check_screens(spec: &ChannelRealizationSpec, screens: &[PhaseScreen], grid: GridSpec) -> Result<()> {
    if screens.len() != spec.partition.len() {
        return Err(Error::ScreenMismatch {
            screens: screens.len(),
            slabs: spec.partition.len(),
        });
    }
    if screens.iter().any(|s| s.grid != grid) {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

/// Satellite-to-ground split-step propagation of one field: a vacuum step
/// down to the first screen, then alternating screens and vacuum steps
/// (half a slab on each side of every screen), ending at the ground plane
/// before any aperture.
pub fn split_step_channel(
    input: &ComplexField,
    spec: &ChannelRealizationSpec,
    screens: &[PhaseScreen],
) -> Result<ComplexField> {
    check_screens(spec, screens, input.grid())?;
    let propagator = Propagator::new(input.grid(), spec.beam.lambda);
    let out = propagate_fields(&propagator, vec![input.amplitudes().to_vec()], spec, screens);
    ComplexField::new(input.grid(), out.into_iter().next().expect("one field"))
}

/// Reusable per-grid machinery for propagating mode sets.
#[derive(Debug)]
pub struct ChannelSimulator {
    grid: GridSpec,
    beam: BeamParams,
    propagator: Propagator,
    generator: ScreenGenerator,
}

impl ChannelSimulator {
    pub fn new(
        grid: GridSpec,
        beam: BeamParams,
        profile: &TurbulenceProfile,
        subharmonic_orders: usize,
        absorber: bool,
    ) -> Self {
        let mut propagator = Propagator::new(grid, beam.lambda);
        if absorber {
            propagator = propagator.with_absorber();
        }
        Self {
            grid,
            beam,
            propagator,
            generator: ScreenGenerator::new(grid, profile, subharmonic_orders),
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    pub fn propagator(&self) -> &Propagator {
        &self.propagator
    }

    pub fn screens(&self, spec: &ChannelRealizationSpec) -> Vec<PhaseScreen> {
        spec.screens(&self.generator)
    }

    /// Sends every listed mode through one realization; all modes see the
    /// identical screen stack.
    pub fn propagate_modes(&self, ls: &[i32], spec: &ChannelRealizationSpec) -> Result<BTreeMap<i32, ComplexField>> {
        if let Some(&bad) = ls.iter().find(|l| l.abs() > 4) {
            return Err(Error::InvalidParameter(format!("OAM number {bad} outside [-4, 4]")));
        }
        let screens = self.screens(spec);
        check_screens(spec, &screens, self.grid)?;
        let inputs = ls
            .iter()
            .map(|&l| lg_field(ModeIndex::new(l), 0.0, &self.beam, &self.grid).map(ComplexField::into_amplitudes))
            .collect::<Result<Vec<_>>>()?;
        let outputs = propagate_fields(&self.propagator, inputs, spec, &screens);
        ls.iter()
            .zip(outputs)
            .map(|(&l, data)| Ok((l, ComplexField::new(self.grid, data)?)))
            .collect()
    }
}

/// Generates the realization's screens from its seed and propagates the
/// listed modes from the satellite waist to the ground.
pub fn propagate_mode_set(
    ls: &[i32],
    spec: &ChannelRealizationSpec,
    grid: &GridSpec,
    subharmonic_orders: usize,
) -> Result<BTreeMap<i32, ComplexField>> {
    ChannelSimulator::new(*grid, spec.beam, &spec.profile, subharmonic_orders, false).propagate_modes(ls, spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optics::{beam_radius, overlap};
    use crate::turbulence::partition_slabs;

    fn beam() -> BeamParams {
        BeamParams::new(0.15, 1064e-9).unwrap()
    }

    fn spec(turbulent: bool, seed: u64) -> ChannelRealizationSpec {
        let geometry = ChannelGeometry::new(5e5, 3000.0, 0.0).unwrap();
        let profile = TurbulenceProfile::reference();
        let partition = partition_slabs(&geometry, &profile, 1064e-9).unwrap();
        ChannelRealizationSpec {
            geometry,
            partition,
            profile,
            beam: beam(),
            seed,
            turbulent,
        }
    }

    fn second_moment_radius(f: &ComplexField) -> f64 {
        let grid = f.grid();
        let (mut num, mut den) = (0.0, 0.0);
        for (idx, a) in f.amplitudes().iter().enumerate() {
            let r = grid.radius(idx);
            num += r * r * a.norm_sqr();
            den += a.norm_sqr();
        }
        (2.0 * num / den).sqrt()
    }

    #[test]
    fn zero_step_is_identity() {
        let grid = GridSpec::new(128, 0.01).unwrap();
        let f = lg_field(ModeIndex::new(1), 0.0, &beam(), &grid).unwrap();
        assert_eq!(vacuum_step(&f, 0.0, &beam()).unwrap(), f);
        assert!(vacuum_step(&f, -1.0, &beam()).is_err());
    }

    #[test]
    fn gaussian_spreads_to_closed_form_radius() {
        let grid = GridSpec::new(512, 0.02).unwrap();
        let b = beam();
        let f = lg_field(ModeIndex::new(0), 0.0, &b, &grid).unwrap();
        let out = vacuum_step(&f, 5e5, &b).unwrap();
        let w = second_moment_radius(&out);
        assert!((w - beam_radius(&b, 5e5)).abs() / beam_radius(&b, 5e5) < 5e-3, "w = {w}");
        assert!((out.power() - f.power()).abs() < 1e-9);
    }

    #[test]
    fn vacuum_matches_analytic_mode() {
        let grid = GridSpec::new(512, 0.02).unwrap();
        let b = beam();
        for l in [-3, 0, 2] {
            let f = lg_field(ModeIndex::new(l), 0.0, &b, &grid).unwrap();
            let out = vacuum_step(&f, 3e5, &b).unwrap();
            let analytic = lg_field(ModeIndex::new(l), 3e5, &b, &grid).unwrap();
            assert!(overlap(&analytic, &out).unwrap().norm() > 0.99);
        }
    }

    #[test]
    fn zero_screens_equal_vacuum() {
        let grid = GridSpec::new(256, 0.02).unwrap();
        let s = spec(false, 1);
        let b = beam();
        let f = lg_field(ModeIndex::new(2), 0.0, &b, &grid).unwrap();
        let screens = vec![PhaseScreen::zeros(grid); s.partition.len()];
        let turb = split_step_channel(&f, &s, &screens).unwrap();
        let vac = vacuum_step(&f, s.geometry.path_length(), &b).unwrap();
        let diff: f64 = turb
            .amplitudes()
            .iter()
            .zip(vac.amplitudes())
            .map(|(a, c)| (a - c).norm_sqr())
            .sum::<f64>()
            * grid.cell_area();
        assert!(diff.sqrt() < 1e-9);
        assert!(matches!(
            split_step_channel(&f, &s, &screens[1..]),
            Err(Error::ScreenMismatch { .. })
        ));
    }

    #[test]
    fn turbulent_propagation_conserves_power_and_is_deterministic() {
        let grid = GridSpec::new(256, 0.02).unwrap();
        let s = spec(true, 99);
        let a = propagate_mode_set(&[-1, 0, 1], &s, &grid, 3).unwrap();
        let b = propagate_mode_set(&[-1, 0, 1], &s, &grid, 3).unwrap();
        assert_eq!(a, b);
        for f in a.values() {
            assert!((f.power() - 1.0).abs() < 1e-9);
        }
        assert!(propagate_mode_set(&[5], &s, &grid, 3).is_err());
    }

    #[test]
    fn split_step_is_linear() {
        let grid = GridSpec::new(256, 0.02).unwrap();
        let s = spec(true, 5);
        let b = beam();
        let sim = ChannelSimulator::new(grid, b, &s.profile, 3, false);
        let screens = sim.screens(&s);
        let f = lg_field(ModeIndex::new(1), 0.0, &b, &grid).unwrap();
        let g = lg_field(ModeIndex::new(-2), 0.0, &b, &grid).unwrap();
        let (alpha, beta) = (Complex64::new(0.6, 0.2), Complex64::new(-0.3, 0.9));
        let mixed = f.combine(alpha, &g, beta).unwrap();
        let lhs = split_step_channel(&mixed, &s, &screens).unwrap();
        let rhs = split_step_channel(&f, &s, &screens)
            .unwrap()
            .combine(alpha, &split_step_channel(&g, &s, &screens).unwrap(), beta)
            .unwrap();
        let err: f64 = lhs
            .amplitudes()
            .iter()
            .zip(rhs.amplitudes())
            .map(|(x, y)| (x - y).norm_sqr())
            .sum::<f64>()
            * grid.cell_area();
        assert!(err.sqrt() < 1e-9);
    }
}
