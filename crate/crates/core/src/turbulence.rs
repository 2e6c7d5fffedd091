//! Slant-path turbulence: Hufnagel-Valley profile, integrated turbulence
//! measures, slab partitioning and modified von Karman phase screens.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fft::Fft2;
use crate::optics::GridSpec;
use crate::quadrature::{self, ABS_FLOOR};

/// Subharmonic orders added below the FFT grid's lowest frequency.
pub const SUBHARMONIC_ORDERS: usize = 3;

/// Upper bound on the slab search before the profile is declared pathological.
pub const MAX_SLABS: usize = 64;

const REL_TOL: f64 = 1e-12;

// Altitudes (m) where the HV terms change character; seeds the quadrature.
const ALTITUDE_BREAKS: [f64; 12] = [
    50.0, 200.0, 500.0, 1_000.0, 2_000.0, 4_000.0, 7_000.0, 10_000.0, 14_000.0, 20_000.0, 30_000.0,
    50_000.0,
];

/// Ground-level turbulence and wind parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TurbulenceProfile {
    ground_strength: f64,
    ground_wind: f64,
    outer_scale: f64,
    inner_scale: f64,
    #[serde(skip_serializing)]
    #[serde(default)]
    rms_wind: f64,
}

impl TurbulenceProfile {
    /// `ground_strength` is `A` in m^{-2/3}; wind in m/s; scales in m.
    pub fn new(ground_strength: f64, ground_wind: f64, outer_scale: f64, inner_scale: f64) -> Result<Self> {
        if !(ground_strength > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "ground turbulence strength must be positive, got {ground_strength}"
            )));
        }
        if !(ground_wind >= 0.0) {
            return Err(Error::InvalidParameter(format!("ground wind must be >= 0, got {ground_wind}")));
        }
        if !(inner_scale > 0.0 && outer_scale > inner_scale) {
            return Err(Error::InvalidParameter(format!(
                "need outer scale > inner scale > 0 (got {outer_scale}, {inner_scale})"
            )));
        }
        Ok(Self {
            ground_strength,
            ground_wind,
            outer_scale,
            inner_scale,
            rms_wind: bufton_vrms(ground_wind),
        })
    }

    /// A = 9.6e-14 m^{-2/3}, Vg = 3 m/s, L0 = 5 m, l0 = 1 cm.
    pub fn reference() -> Self {
        Self::new(9.6e-14, 3.0, 5.0, 0.01).expect("valid constants")
    }

    pub fn ground_strength(&self) -> f64 {
        self.ground_strength
    }
    pub fn ground_wind(&self) -> f64 {
        self.ground_wind
    }
    pub fn rms_wind(&self) -> f64 {
        self.rms_wind
    }
    pub fn outer_scale(&self) -> f64 {
        self.outer_scale
    }
    pub fn inner_scale(&self) -> f64 {
        self.inner_scale
    }
}

/// Satellite/ground-station geometry; all altitudes in m, angle in rad.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelGeometry {
    pub satellite_altitude: f64,
    pub ground_altitude: f64,
    pub zenith_angle: f64,
}

impl ChannelGeometry {
    pub fn new(satellite_altitude: f64, ground_altitude: f64, zenith_angle: f64) -> Result<Self> {
        if !(ground_altitude >= 0.0 && satellite_altitude > ground_altitude) {
            return Err(Error::InvalidParameter(format!(
                "need H > h0 >= 0 (H={satellite_altitude}, h0={ground_altitude})"
            )));
        }
        if !(0.0..PI / 2.0).contains(&zenith_angle) {
            return Err(Error::InvalidParameter(format!(
                "zenith angle must lie in [0, pi/2), got {zenith_angle}"
            )));
        }
        Ok(Self {
            satellite_altitude,
            ground_altitude,
            zenith_angle,
        })
    }

    pub fn secant(&self) -> f64 {
        1.0 / self.zenith_angle.cos()
    }

    /// Slant distance `L = (H - h0)/cos θz`.
    pub fn path_length(&self) -> f64 {
        (self.satellite_altitude - self.ground_altitude) * self.secant()
    }

    /// Path distance from the satellite down to altitude `h`.
    pub fn distance_from_satellite(&self, h: f64) -> f64 {
        (self.satellite_altitude - h) * self.secant()
    }
}

/// Hufnagel-Valley structure constant `C_n²(h)` in m^{-2/3}.
pub fn cn2(h: f64, profile: &TurbulenceProfile) -> f64 {
    let v = profile.rms_wind / 27.0;
    0.00594 * v * v * (h * 1e-5).powi(10) * (-h / 1000.0).exp()
        + 2.7e-16 * (-h / 1500.0).exp()
        + profile.ground_strength * (-h / 100.0).exp()
}

/// Bufton wind profile `V(h)` in m/s.
pub fn bufton_wind(h: f64, ground_wind: f64) -> f64 {
    ground_wind + 30.0 * (-((h - 9400.0) / 4800.0).powi(2)).exp()
}

/// RMS of the Bufton profile over 5-20 km.
pub fn bufton_vrms(ground_wind: f64) -> f64 {
    let mean_sq = quadrature::integrate_with_breaks(
        |h| bufton_wind(h, ground_wind).powi(2),
        5e3,
        20e3,
        &[9400.0],
        1e-12,
        0.0,
    ) / 15e3;
    mean_sq.sqrt()
}

/// `∫ C_n²(h) dh` over `[lower, upper]`.
pub fn cn2_integral(profile: &TurbulenceProfile, lower: f64, upper: f64) -> f64 {
    quadrature::integrate_with_breaks(|h| cn2(h, profile), lower, upper, &ALTITUDE_BREAKS, REL_TOL, ABS_FLOOR)
}

fn wavenumber(wavelength: f64) -> f64 {
    2.0 * PI / wavelength
}

/// Rytov variance of the turbulence between two altitudes, with the path
/// weighting measured from the ground station.
pub fn rytov_variance_between(
    geom: &ChannelGeometry,
    profile: &TurbulenceProfile,
    wavelength: f64,
    lower: f64,
    upper: f64,
) -> f64 {
    let h0 = geom.ground_altitude;
    let integral = quadrature::integrate_with_breaks(
        |h| cn2(h, profile) * (h - h0).max(0.0).powf(5.0 / 6.0),
        lower,
        upper,
        &ALTITUDE_BREAKS,
        REL_TOL,
        ABS_FLOOR,
    );
    2.25 * wavenumber(wavelength).powf(7.0 / 6.0) * geom.secant().powf(11.0 / 6.0) * integral
}

pub fn rytov_variance(geom: &ChannelGeometry, profile: &TurbulenceProfile, wavelength: f64) -> f64 {
    rytov_variance_between(geom, profile, wavelength, geom.ground_altitude, geom.satellite_altitude)
}

/// Weak-to-strong fluctuation scintillation index for a downlink.
pub fn scintillation_index(rytov: f64) -> f64 {
    let s = rytov.powf(6.0 / 5.0);
    let a = 0.49 * rytov / (1.0 + 1.11 * s).powf(7.0 / 6.0);
    let b = 0.51 * rytov / (1.0 + 0.69 * s).powf(5.0 / 6.0);
    (a + b).exp_m1()
}

fn fried_from_integral(geom: &ChannelGeometry, wavelength: f64, integral: f64) -> f64 {
    if integral <= 0.0 {
        return f64::INFINITY;
    }
    (0.423 * wavenumber(wavelength).powi(2) * geom.secant() * integral).powf(-3.0 / 5.0)
}

/// Fried parameter of the turbulence between two altitudes; infinite for an
/// empty interval.
pub fn fried_parameter_between(
    geom: &ChannelGeometry,
    profile: &TurbulenceProfile,
    wavelength: f64,
    lower: f64,
    upper: f64,
) -> f64 {
    fried_from_integral(geom, wavelength, cn2_integral(profile, lower, upper))
}

pub fn fried_parameter(geom: &ChannelGeometry, profile: &TurbulenceProfile, wavelength: f64) -> f64 {
    fried_parameter_between(geom, profile, wavelength, geom.ground_altitude, geom.satellite_altitude)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Slab {
    /// Lower boundary altitude (m).
    pub lower: f64,
    /// Upper boundary altitude (m).
    pub upper: f64,
    /// Slant thickness (m).
    pub thickness: f64,
    pub rytov_variance: f64,
    pub scintillation_index: f64,
    pub fried_parameter: f64,
    pub cn2_integral: f64,
}

impl Slab {
    /// The phase screen sits halfway through the slab.
    pub fn screen_altitude(&self) -> f64 {
        0.5 * (self.lower + self.upper)
    }
}

/// Slabs ordered from the ground station upward.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SlabPartition {
    pub geometry: ChannelGeometry,
    pub slabs: Vec<Slab>,
    pub total_rytov: f64,
    pub total_scintillation: f64,
}

impl SlabPartition {
    pub fn len(&self) -> usize {
        self.slabs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slabs.is_empty()
    }

    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = vec![self.geometry.ground_altitude];
        b.extend(self.slabs.iter().map(|s| s.upper));
        b
    }

    pub fn total_thickness(&self) -> f64 {
        self.slabs.iter().map(|s| s.thickness).sum()
    }

    /// Largest per-slab scintillation index allowed by the two splitting
    /// conditions (`< 0.1` and `< 0.1·σ_I²` of the whole path).
    pub fn scintillation_limit(&self) -> f64 {
        0.1f64.min(0.1 * self.total_scintillation)
    }

    /// Whether every slab strictly satisfies both splitting conditions.
    pub fn satisfies_conditions(&self) -> bool {
        let limit = self.scintillation_limit();
        self.slabs.iter().all(|s| s.scintillation_index < limit)
    }
}

fn make_slab(geom: &ChannelGeometry, profile: &TurbulenceProfile, wavelength: f64, lower: f64, upper: f64) -> Slab {
    let rytov = rytov_variance_between(geom, profile, wavelength, lower, upper);
    let integral = cn2_integral(profile, lower, upper);
    Slab {
        lower,
        upper,
        thickness: (upper - lower) * geom.secant(),
        rytov_variance: rytov,
        scintillation_index: scintillation_index(rytov),
        fried_parameter: fried_from_integral(geom, wavelength, integral),
        cn2_integral: integral,
    }
}

/// Cuts the path into slabs with a greedy upward sweep: each slab grows
/// until the next altitude would break a splitting condition. A final pass
/// merges neighbours whose union still satisfies both conditions.
pub fn partition_slabs(
    geom: &ChannelGeometry,
    profile: &TurbulenceProfile,
    wavelength: f64,
) -> Result<SlabPartition> {
    let h0 = geom.ground_altitude;
    let top = geom.satellite_altitude;
    let total_rytov = rytov_variance(geom, profile, wavelength);
    let total_scintillation = scintillation_index(total_rytov);
    let limit = 0.1f64.min(0.1 * total_scintillation);
    let index_of = |lo: f64, hi: f64| scintillation_index(rytov_variance_between(geom, profile, wavelength, lo, hi));

    let mut cuts = vec![h0];
    let mut lower = h0;
    while index_of(lower, top) >= limit {
        if cuts.len() > MAX_SLABS {
            return Err(Error::PartitionFailed(format!(
                "conditions not met within {MAX_SLABS} slabs"
            )));
        }
        // Largest upper boundary whose slab stays strictly under the limit.
        let (mut ok, mut bad) = (lower, top);
        while bad - ok > 1e-3 * (1.0 + ok.abs()) * 1e-3 {
            let mid = 0.5 * (ok + bad);
            if index_of(lower, mid) < limit {
                ok = mid;
            } else {
                bad = mid;
            }
        }
        if ok <= lower {
            return Err(Error::PartitionFailed(format!(
                "cannot form a slab above {lower} m under the limit {limit:e}"
            )));
        }
        cuts.push(ok);
        lower = ok;
    }
    cuts.push(top);

    let mut i = 0;
    while i + 2 < cuts.len() {
        if index_of(cuts[i], cuts[i + 2]) < limit {
            cuts.remove(i + 1);
        } else {
            i += 1;
        }
    }
    if cuts.len() - 1 > MAX_SLABS {
        return Err(Error::PartitionFailed(format!(
            "{} slabs exceed the limit of {MAX_SLABS}",
            cuts.len() - 1
        )));
    }

    let slabs = cuts
        .windows(2)
        .map(|w| make_slab(geom, profile, wavelength, w[0], w[1]))
        .collect();
    Ok(SlabPartition {
        geometry: *geom,
        slabs,
        total_rytov,
        total_scintillation,
    })
}

/// Modified von Karman phase PSD in rad²·m² at spatial frequency `f`
/// (cycles/m).
pub fn mvk_psd(f: f64, r0: f64, profile: &TurbulenceProfile) -> f64 {
    let f0 = 1.0 / profile.outer_scale;
    let fm = 0.9422 / profile.inner_scale;
    0.023 * r0.powf(-5.0 / 3.0) * (-(f * f) / (fm * fm)).exp() / (f * f + f0 * f0).powf(11.0 / 6.0)
}

/// Bessel function of the first kind, order zero. Power series below
/// |x| = 8, Hankel-type rational asymptotics above (absolute error ~1e-8).
pub fn bessel_j0(x: f64) -> f64 {
    1.0 - one_minus_j0(x)
}

/// `1 − J0(x)` without cancellation at small arguments.
fn one_minus_j0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 8.0 {
        let q = -0.25 * x * x;
        let mut term = 1.0;
        let mut sum = 0.0;
        for k in 1..60 {
            term *= q / (k * k) as f64;
            sum += term;
            if term.abs() < 1e-17 * sum.abs().max(1e-300) {
                break;
            }
        }
        -sum
    } else {
        let z = 8.0 / ax;
        let y = z * z;
        let xx = ax - 0.785398164;
        let p = 1.0 + y * (-0.1098628627e-2 + y * (0.2734510407e-4 + y * (-0.2073370639e-5 + y * 0.2093887211e-6)));
        let q = -0.1562499995e-1
            + y * (0.1430488765e-3 + y * (-0.6911147651e-5 + y * (0.7621095161e-6 - y * 0.934935152e-7)));
        1.0 - (0.636619772 / ax).sqrt() * (xx.cos() * p - z * xx.sin() * q)
    }
}

/// Phase structure function implied by [`mvk_psd`]:
/// `D(r) = 4π ∫ f Φ(f) [1 − J0(2π f r)] df`.
pub fn theoretical_structure_function(r: f64, r0: f64, profile: &TurbulenceProfile) -> f64 {
    if r <= 0.0 {
        return 0.0;
    }
    let fmax = 8.0 * 0.9422 / profile.inner_scale;
    let period = 1.0 / r;
    let count = ((fmax / period) as usize).min(4000);
    let mut breaks: Vec<f64> = (1..=count).map(|k| k as f64 * period).collect();
    breaks.extend([0.1 / profile.outer_scale, 1.0 / profile.outer_scale]);
    4.0 * PI
        * quadrature::integrate_with_breaks(
            |f| f * mvk_psd(f, r0, profile) * one_minus_j0(2.0 * PI * f * r),
            0.0,
            fmax,
            &breaks,
            1e-10,
            0.0,
        )
}

/// Random phase realization (rad) on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseScreen {
    pub grid: GridSpec,
    pub phases: Vec<f64>,
    pub r0: f64,
}

impl PhaseScreen {
    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            grid,
            phases: vec![0.0; grid.len()],
            r0: f64::INFINITY,
        }
    }

    pub fn mean(&self) -> f64 {
        self.phases.iter().sum::<f64>() / self.phases.len() as f64
    }

    pub fn variance(&self) -> f64 {
        let m = self.mean();
        self.phases.iter().map(|p| (p - m).powi(2)).sum::<f64>() / self.phases.len() as f64
    }
}

#[derive(Debug, Clone)]
struct Subharmonic {
    fx: f64,
    fy: f64,
    /// `√Φ(f)·Δf_p` at unit Fried parameter.
    amplitude: f64,
}

/// FFT phase-screen synthesizer with Lane subharmonics. The spectral
/// filter is evaluated once per grid and rescaled by `r0^{-5/6}` per draw.
#[derive(Debug, Clone)]
pub struct ScreenGenerator {
    grid: GridSpec,
    fft: Fft2,
    amplitudes: Vec<f64>,
    subharmonics: Vec<Subharmonic>,
}

impl ScreenGenerator {
    pub fn new(grid: GridSpec, profile: &TurbulenceProfile, subharmonic_orders: usize) -> Self {
        let n = grid.n;
        let df = grid.freq_spacing();
        let mut amplitudes = vec![0.0; grid.len()];
        for (idx, a) in amplitudes.iter_mut().enumerate() {
            let (i, j) = (idx / n, idx % n);
            if i == 0 && j == 0 {
                continue;
            }
            let f = grid.freq(i).hypot(grid.freq(j));
            *a = mvk_psd(f, 1.0, profile).sqrt() * df;
        }
        let mut subharmonics = Vec::new();
        for p in 1..=subharmonic_orders {
            let dfp = df / 3f64.powi(p as i32);
            for b in -1i32..=1 {
                for a in -1i32..=1 {
                    if a == 0 && b == 0 {
                        continue;
                    }
                    let (fx, fy) = (f64::from(a) * dfp, f64::from(b) * dfp);
                    subharmonics.push(Subharmonic {
                        fx,
                        fy,
                        amplitude: mvk_psd(fx.hypot(fy), 1.0, profile).sqrt() * dfp,
                    });
                }
            }
        }
        Self {
            grid,
            fft: Fft2::new(n),
            amplitudes,
            subharmonics,
        }
    }

    pub fn grid(&self) -> GridSpec {
        self.grid
    }

    /// Draws one piston-free screen for Fried parameter `r0`.
    pub fn generate<R: Rng + ?Sized>(&self, r0: f64, rng: &mut R) -> PhaseScreen {
        let n = self.grid.n;
        let scale = r0.powf(-5.0 / 6.0);
        let mut spectrum: Vec<Complex64> = self
            .amplitudes
            .iter()
            .map(|&a| {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                Complex64::new(re, im) * (a * scale)
            })
            .collect();
        // The filter depends on |f| only, so the transposed layout is harmless.
        self.fft.inverse_transposed(&mut spectrum);
        let unnormalize = (n * n) as f64;
        let mut phases: Vec<f64> = spectrum.iter().map(|c| c.re * unnormalize).collect();

        if !self.subharmonics.is_empty() {
            let coords: Vec<f64> = (0..n).map(|i| self.grid.coord(i)).collect();
            let mut low = vec![0.0; self.grid.len()];
            for sh in &self.subharmonics {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                let c = Complex64::new(re, im) * (sh.amplitude * scale);
                let ex: Vec<Complex64> = coords
                    .iter()
                    .map(|&x| Complex64::from_polar(1.0, 2.0 * PI * sh.fx * x))
                    .collect();
                for (y, row) in low.chunks_mut(n).enumerate() {
                    let cy = c * Complex64::from_polar(1.0, 2.0 * PI * sh.fy * coords[y]);
                    for (v, e) in row.iter_mut().zip(&ex) {
                        *v += (cy * e).re;
                    }
                }
            }
            let mean = low.iter().sum::<f64>() / low.len() as f64;
            for (p, l) in phases.iter_mut().zip(&low) {
                *p += l - mean;
            }
        }

        let piston = phases.iter().sum::<f64>() / phases.len() as f64;
        phases.iter_mut().for_each(|p| *p -= piston);
        PhaseScreen {
            grid: self.grid,
            phases,
            r0,
        }
    }
}

/// One screen with [`SUBHARMONIC_ORDERS`] subharmonic levels.
pub fn generate_phase_screen<R: Rng + ?Sized>(
    r0: f64,
    grid: &GridSpec,
    profile: &TurbulenceProfile,
    rng: &mut R,
) -> PhaseScreen {
    ScreenGenerator::new(*grid, profile, SUBHARMONIC_ORDERS).generate(r0, rng)
}

/// Ensemble estimate of `D(Δr) = ⟨[φ(x+Δr) − φ(x)]²⟩` along both grid
/// axes. Separations are rounded to whole samples.
pub fn screen_structure_function(screens: &[PhaseScreen], separations: &[f64]) -> Result<Vec<f64>> {
    if screens.len() < 50 {
        return Err(Error::TooFewScreens(screens.len()));
    }
    let grid = screens[0].grid;
    if screens.iter().any(|s| s.grid != grid) {
        return Err(Error::GridMismatch);
    }
    let mut total = vec![0.0; separations.len()];
    for s in screens {
        for (t, v) in total.iter_mut().zip(single_screen_structure_function(s, separations)?) {
            *t += v;
        }
    }
    Ok(total.into_iter().map(|t| t / screens.len() as f64).collect())
}

/// Structure function of one screen, averaged over all sample pairs along
/// x and y. Separations are rounded to whole samples.
pub fn single_screen_structure_function(screen: &PhaseScreen, separations: &[f64]) -> Result<Vec<f64>> {
    let grid = screen.grid;
    let n = grid.n;
    let p = &screen.phases;
    separations
        .iter()
        .map(|&sep| {
            let shift = (sep / grid.delta).round() as usize;
            if shift == 0 || shift >= n {
                return Err(Error::InvalidParameter(format!(
                    "separation {sep} m is outside the resolvable range of the grid"
                )));
            }
            let mut acc = 0.0;
            for y in 0..n {
                for x in 0..n - shift {
                    acc += (p[y * n + x + shift] - p[y * n + x]).powi(2);
                }
            }
            for y in 0..n - shift {
                for x in 0..n {
                    acc += (p[(y + shift) * n + x] - p[y * n + x]).powi(2);
                }
            }
            Ok(acc / (2 * n * (n - shift)) as f64)
        })
        .collect()
}
