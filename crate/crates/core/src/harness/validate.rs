use std::fmt;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::config::CampaignConfig;
use crate::conjugation::{conjugate_filter, conjugated_ensemble, KrausOperator};
use crate::error::Result;
use crate::optics::{lg_field, overlap, ModeIndex};
use crate::propagation::Propagator;
use crate::quantum::{average_error_rate, build_mubs, CMatrix, CrosstalkMatrix, EncodingSubspace};
use crate::seeding::{derive_seed, rng_from_seed};
use crate::turbulence::{single_screen_structure_function, theoretical_structure_function, ScreenGenerator};

/// Number of screens in the structure-function check.
pub const VALIDATION_SCREENS: usize = 200;
/// Random channels per dimension in the filter check.
pub const VALIDATION_CHANNELS: usize = 1000;
const VALIDATION_SEED: u64 = 0x5CA1_AB1E;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationEntry {
    pub section: String,
    pub name: String,
    pub passed: bool,
    pub measured: f64,
    pub tolerance: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub entries: Vec<ValidationEntry>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.passed)
    }

    fn push(&mut self, section: &str, name: String, passed: bool, measured: f64, tolerance: f64) {
        self.entries.push(ValidationEntry {
            section: section.to_string(),
            name,
            passed,
            measured,
            tolerance,
        });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for e in &self.entries {
            writeln!(
                f,
                "[{}] {:<10} {:<44} measured {:.3e} tolerance {:.3e}",
                if e.passed { "PASS" } else { "FAIL" },
                e.section,
                e.name,
                e.measured,
                e.tolerance
            )?;
        }
        let failed = self.entries.iter().filter(|e| !e.passed).count();
        write!(f, "{} checks, {} failed", self.entries.len(), failed)
    }
}

/// Complex Gaussian matrix scaled so its largest singular value is drawn
/// uniformly from (0, 1].
pub fn random_contraction<R: Rng + ?Sized>(d: usize, rng: &mut R) -> CMatrix {
    let m = CMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let top = m.clone().singular_values().max();
    let scale: f64 = 1.0 - rng.random::<f64>();
    m * Complex64::from(scale / top)
}

/// Vacuum overlaps against the analytic modes at every configured
/// distance.
pub fn validate_vacuum(config: &CampaignConfig, report: &mut ValidationReport) -> Result<()> {
    let grid = config.grid()?;
    let beam = config.beam()?;
    let threshold = config.vacuum_overlap_threshold();
    let propagator = Propagator::new(grid, beam.lambda);
    let mut distances: Vec<f64> = config.geometries()?.iter().map(|g| g.path_length()).collect();
    distances.sort_by(f64::total_cmp);
    distances.dedup_by(|a, b| (*a - *b).abs() < 1e-6);
    let inputs = (-4..=4)
        .map(|l| lg_field(ModeIndex::new(l), 0.0, &beam, &grid))
        .collect::<Result<Vec<_>>>()?;
    for &z in &distances {
        let transfer = propagator.transfer(z);
        let mut worst = f64::INFINITY;
        for (input, l) in inputs.iter().zip(-4..=4) {
            let mut data = input.amplitudes().to_vec();
            propagator.apply_transfer(&mut data, &transfer);
            let out = crate::optics::ComplexField::new(grid, data)?;
            let analytic = lg_field(ModeIndex::new(l), z, &beam, &grid)?;
            worst = worst.min(overlap(&analytic, &out)?.norm());
        }
        report.push(
            "vacuum",
            format!("min |overlap| over |l|<=4 at z={:.0} km", z / 1e3),
            worst > threshold,
            worst,
            threshold,
        );
    }
    Ok(())
}

pub fn validate_mubs(report: &mut ValidationReport) -> Result<()> {
    for d in 2..=9 {
        let m = build_mubs(d)?;
        let expected = if d == 6 { 2 } else { d + 1 };
        let err = m.unbiasedness_error().max(m.orthonormality_error());
        report.push(
            "mub",
            format!("d={d}: {} bases, |<xi|xi'>|^2 - 1/d", m.num_bases()),
            m.num_bases() == expected && err <= 1e-10,
            err,
            1e-10,
        );
    }
    Ok(())
}

/// Ensemble structure function of freshly generated screens against the
/// spectrum-derived curve over `[5·l_inner, L_outer/3]`.
pub fn validate_screens(config: &CampaignConfig, screens: usize, report: &mut ValidationReport) -> Result<()> {
    let grid = config.grid()?;
    let profile = config.profile()?;
    let r0 = 0.1;
    let generator = ScreenGenerator::new(grid, &profile, config.numerics.subharmonic_orders);
    let lo = (5.0 * profile.inner_scale() / grid.delta).ceil().max(1.0) as usize;
    let hi = (profile.outer_scale() / 3.0 / grid.delta).floor() as usize;
    let shifts: Vec<usize> = (0..8)
        .map(|i| {
            let t = f64::from(i) / 7.0;
            ((lo as f64).ln() * (1.0 - t) + (hi.max(lo) as f64).ln() * t).exp().round() as usize
        })
        .collect();
    let mut shifts = shifts;
    shifts.dedup();
    let seps: Vec<f64> = shifts.iter().map(|&s| s as f64 * grid.delta).collect();
    let mut acc = vec![0.0; seps.len()];
    for i in 0..screens {
        let mut rng = rng_from_seed(derive_seed(&[VALIDATION_SEED, i as u64]));
        let screen = generator.generate(r0, &mut rng);
        for (a, v) in acc.iter_mut().zip(single_screen_structure_function(&screen, &seps)?) {
            *a += v;
        }
    }
    let mut worst: f64 = 0.0;
    for (a, &r) in acc.iter().zip(&seps) {
        let theory = theoretical_structure_function(r, r0, &profile);
        worst = worst.max((a / screens as f64 - theory).abs() / theory);
    }
    report.push(
        "screens",
        format!("{screens}-screen D(r) relative error, r in [{:.2}, {:.2}] m", seps[0], seps[seps.len() - 1]),
        worst <= 0.15,
        worst,
        0.15,
    );
    Ok(())
}

/// Filter identities over random contractive channels, and the ideal
/// conjugated ensemble.
pub fn validate_filters(channels: usize, report: &mut ValidationReport) -> Result<()> {
    for d in 2..=9 {
        let mut rng = rng_from_seed(derive_seed(&[VALIDATION_SEED, 1, d as u64]));
        let mut identity_err: f64 = 0.0;
        let mut max_sv: f64 = 0.0;
        let sub = EncodingSubspace::new((0..d as i32).map(|l| l - 4).collect())?;
        let mut ensemble = Vec::with_capacity(channels);
        for _ in 0..channels {
            let m = random_contraction(d, &mut rng);
            let k = KrausOperator::from_matrix(m.clone());
            if let Ok(filter) = conjugate_filter(&k) {
                let resid = filter.apply(&m) - CMatrix::identity(d, d) * Complex64::from(k.gamma_min());
                identity_err = identity_err.max(resid.camax());
                max_sv = max_sv.max(filter.max_singular_value());
            }
            ensemble.push(CrosstalkMatrix::new(sub.clone(), m)?);
        }
        report.push(
            "filter",
            format!("d={d}: max |Mt M - gamma_min 1|"),
            identity_err <= 1e-10,
            identity_err,
            1e-10,
        );
        report.push(
            "filter",
            format!("d={d}: max filter singular value - 1"),
            max_sv <= 1.0 + 1e-10,
            max_sv - 1.0,
            1e-10,
        );
        let (rho, _) = conjugated_ensemble(&ensemble)?;
        let infidelity = (1.0 - rho.fidelity_with_max_entangled()).abs();
        report.push("filter", format!("d={d}: conjugated infidelity"), infidelity <= 1e-9, infidelity, 1e-9);
        if d != 6 {
            let q = average_error_rate(&rho, &build_mubs(d)?)?;
            report.push("filter", format!("d={d}: conjugated Q"), q <= 1e-9, q, 1e-9);
        }
    }
    Ok(())
}

/// Vacuum propagation, MUB, phase-screen and conjugate-filter checks.
pub fn validate_suite(config: &CampaignConfig) -> Result<ValidationReport> {
    let mut report = ValidationReport::default();
    validate_vacuum(config, &mut report)?;
    validate_mubs(&mut report)?;
    validate_screens(config, VALIDATION_SCREENS, &mut report)?;
    validate_filters(VALIDATION_CHANNELS, &mut report)?;
    Ok(report)
}
