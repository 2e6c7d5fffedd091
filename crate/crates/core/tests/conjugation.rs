use nalgebra::DMatrix;
use num_complex::Complex64;
use oam_qkd::conjugation::{
    apply_misalignment, conjugate_filter, conjugated_ensemble, conjugated_ensemble_with, depolarize, KrausOperator,
};
use oam_qkd::optics::{lg_field, overlap, BeamParams, GridSpec, ModeIndex};
use oam_qkd::quantum::{average_error_rate, build_mubs, CrosstalkMatrix, DensityMatrix, EncodingSubspace};
use oam_qkd::seeding::rng_from_seed;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::StandardNormal;

fn subspace(d: usize) -> EncodingSubspace {
    EncodingSubspace::new((0..d as i32).map(|k| k - 4).collect()).unwrap()
}

fn contraction(d: usize, seed: u64, scale: f64) -> DMatrix<Complex64> {
    let mut rng = rng_from_seed(seed);
    let m = DMatrix::from_fn(d, d, |_, _| {
        Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let top = m.clone().singular_values().max();
    m * Complex64::from(scale / top)
}

fn random_unitary(d: usize, seed: u64) -> DMatrix<Complex64> {
    let svd = contraction(d, seed, 1.0).svd(true, true);
    svd.u.unwrap() * svd.v_t.unwrap()
}

#[test]
fn singular_channel_is_rejected_and_loses_the_photon() {
    let mut m = DMatrix::<Complex64>::identity(3, 3);
    m[(2, 2)] = Complex64::from(0.0);
    assert!(conjugate_filter(&KrausOperator::from_matrix(m.clone())).is_err());
    let good = CrosstalkMatrix::identity(subspace(3));
    let bad = CrosstalkMatrix::new(subspace(3), m).unwrap();
    let (rho, t) = conjugated_ensemble(&[good, bad]).unwrap();
    assert!((t - 0.5).abs() < 1e-12);
    assert!((rho.fidelity_with_max_entangled() - 1.0).abs() < 1e-12);
}

#[test]
fn misalignment_out_of_range_is_an_error() {
    let grid = GridSpec::new(128, 0.05).unwrap();
    let beam = BeamParams::new(0.3, 1064e-9).unwrap();
    let f = lg_field(ModeIndex::new(1), 0.0, &beam, &grid).unwrap();
    assert!(apply_misalignment(&f, 3.2, 0.0).is_err());
    assert!(apply_misalignment(&f, -0.1, 0.0).is_err());
    assert_eq!(apply_misalignment(&f, 0.0, 1.0).unwrap().amplitudes(), f.amplitudes());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_inverts_the_channel_up_to_gamma_min(d in 2usize..=9, seed: u64, scale in 0.05f64..=1.0) {
        let m = contraction(d, seed, scale);
        let k = KrausOperator::from_matrix(m.clone());
        let filter = conjugate_filter(&k).unwrap();
        let target = DMatrix::<Complex64>::identity(d, d) * Complex64::from(k.gamma_min());
        prop_assert!((filter.apply(&m) - target).camax() < 1e-10);
        prop_assert!(filter.max_singular_value() <= 1.0 + 1e-10);
        // Polar decomposition: M = U·|M|.
        prop_assert!((k.unitary() * k.modulus() - &m).camax() < 1e-10);
    }

    #[test]
    fn conjugated_ensemble_is_error_free(d in 2usize..=9, seed: u64, n in 1usize..30) {
        let ensemble: Vec<_> = (0..n as u64)
            .map(|k| CrosstalkMatrix::new(subspace(d), contraction(d, seed.wrapping_add(k), 0.9)).unwrap())
            .collect();
        let (rho, t) = conjugated_ensemble(&ensemble).unwrap();
        let mean_gamma2 = ensemble
            .iter()
            .map(|c| KrausOperator::from_matrix(c.matrix().clone()).gamma_min().powi(2))
            .sum::<f64>()
            / n as f64;
        prop_assert!((t - mean_gamma2).abs() < 1e-12);
        prop_assert!(average_error_rate(&rho, &build_mubs(d).unwrap()).unwrap() < 1e-9);
    }

    #[test]
    fn unitary_channels_survive_conjugation_losslessly(d in 2usize..=9, seed: u64) {
        let c = CrosstalkMatrix::new(subspace(d), random_unitary(d, seed)).unwrap();
        let (rho, t) = conjugated_ensemble(&[c]).unwrap();
        prop_assert!((t - 1.0).abs() < 1e-10);
        prop_assert!((rho.fidelity_with_max_entangled() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn stale_filter_leaves_errors(d in 2usize..=5, seed: u64) {
        // A filter built for one channel and applied to a different one
        // does not restore the maximally entangled state.
        let a = CrosstalkMatrix::new(subspace(d), random_unitary(d, seed)).unwrap();
        let b = CrosstalkMatrix::new(subspace(d), random_unitary(d, seed ^ 0xFFFF)).unwrap();
        let (rho, _) = conjugated_ensemble_with(&[a], &[b]).unwrap();
        prop_assert!(rho.fidelity_with_max_entangled() < 1.0 - 1e-6);
    }

    #[test]
    fn depolarization_sets_the_infidelity(d in 2usize..=9, frac in 0.0f64..=1.0) {
        let ceiling = 1.0 - 1.0 / (d * d) as f64;
        let p = frac * ceiling;
        let rho = DensityMatrix::pure(&oam_qkd::quantum::maximally_entangled(d), 0.7).unwrap();
        let out = depolarize(&rho, p).unwrap();
        prop_assert!((out.fidelity_with_max_entangled() - (1.0 - p)).abs() < 1e-12);
        prop_assert!((out.survival() - 0.7).abs() < 1e-15);
        prop_assert!((out.trace() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn misalignment_shifts_are_reversible(mag in 0.01f64..1.0, dir in 0.0f64..6.3, l in -4i32..=4) {
        let grid = GridSpec::new(128, 0.05).unwrap();
        let beam = BeamParams::new(0.3, 1064e-9).unwrap();
        let f = lg_field(ModeIndex::new(l), 0.0, &beam, &grid).unwrap();
        let there = apply_misalignment(&f, mag, dir).unwrap();
        let back = apply_misalignment(&there, mag, dir + std::f64::consts::PI).unwrap();
        prop_assert!((overlap(&f, &back).unwrap() - 1.0).norm() < 1e-9);
    }
}
