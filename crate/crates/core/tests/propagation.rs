use num_complex::Complex64;
use oam_qkd::optics::{lg_field, overlap, BeamParams, ComplexField, GridSpec, ModeIndex};
use oam_qkd::propagation::{split_step_channel, ChannelRealizationSpec, ChannelSimulator, Propagator};
use oam_qkd::turbulence::{partition_slabs, ChannelGeometry, ScreenGenerator, TurbulenceProfile};
use proptest::prelude::*;

const LAMBDA: f64 = 1064e-9;

fn grid() -> GridSpec {
    GridSpec::new(256, 0.02).unwrap()
}

fn beam() -> BeamParams {
    BeamParams::new(0.15, LAMBDA).unwrap()
}

fn spec(h: f64, seed: u64, turbulent: bool) -> ChannelRealizationSpec {
    let geometry = ChannelGeometry::new(h, 3000.0, 0.0).unwrap();
    let profile = TurbulenceProfile::reference();
    ChannelRealizationSpec {
        geometry,
        partition: partition_slabs(&geometry, &profile, LAMBDA).unwrap(),
        profile,
        beam: beam(),
        seed,
        turbulent,
    }
}

fn gram(fields: &[&ComplexField]) -> Vec<Vec<Complex64>> {
    fields
        .iter()
        .map(|a| fields.iter().map(|b| overlap(a, b).unwrap()).collect())
        .collect()
}

#[test]
fn turbulent_channel_preserves_mode_orthonormality() {
    // Screens are pure phases and the transfer function has unit modulus,
    // so the channel is unitary before the aperture.
    let sim = ChannelSimulator::new(grid(), beam(), &TurbulenceProfile::reference(), 3, false);
    let ls = [-2, -1, 0, 1, 2];
    let inputs: Vec<ComplexField> = ls
        .iter()
        .map(|&l| lg_field(ModeIndex::new(l), 0.0, &beam(), &grid()).unwrap())
        .collect();
    let out = sim.propagate_modes(&ls, &spec(2e4, 11, true)).unwrap();
    let g_in = gram(&inputs.iter().collect::<Vec<_>>());
    let g_out = gram(&out.values().collect::<Vec<_>>());
    for i in 0..ls.len() {
        for j in 0..ls.len() {
            assert!((g_in[i][j] - g_out[i][j]).norm() < 1e-10, "({i},{j})");
        }
    }
}

#[test]
fn realization_is_fixed_by_seed() {
    let sim = ChannelSimulator::new(grid(), beam(), &TurbulenceProfile::reference(), 3, false);
    let a = sim.propagate_modes(&[1], &spec(2e5, 5, true)).unwrap();
    let b = sim.propagate_modes(&[1], &spec(2e5, 5, true)).unwrap();
    let c = sim.propagate_modes(&[1], &spec(2e5, 6, true)).unwrap();
    assert_eq!(a[&1].amplitudes(), b[&1].amplitudes());
    assert!(overlap(&a[&1], &c[&1]).unwrap().norm() < 0.999_999);
}

#[test]
fn mode_set_does_not_change_individual_fields() {
    let sim = ChannelSimulator::new(grid(), beam(), &TurbulenceProfile::reference(), 3, false);
    let s = spec(3e5, 21, true);
    let all = sim.propagate_modes(&[-3, 0, 2], &s).unwrap();
    let single = sim.propagate_modes(&[2], &s).unwrap();
    assert_eq!(all[&2].amplitudes(), single[&2].amplitudes());
}

#[test]
fn screen_count_must_match_partition() {
    let s = spec(2e5, 1, true);
    let generator = ScreenGenerator::new(grid(), &s.profile, 3);
    let mut screens = s.screens(&generator);
    screens.pop();
    let input = lg_field(ModeIndex::new(0), 0.0, &beam(), &grid()).unwrap();
    assert!(split_step_channel(&input, &s, &screens).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn vacuum_steps_compose(a in 1e3f64..2e5, b in 1e3f64..2e5, l in -3i32..=3) {
        let p = Propagator::new(grid(), LAMBDA);
        let f = lg_field(ModeIndex::new(l), 0.0, &beam(), &grid()).unwrap();
        let two = p.vacuum_step(&p.vacuum_step(&f, a).unwrap(), b).unwrap();
        let one = p.vacuum_step(&f, a + b).unwrap();
        prop_assert!((overlap(&one, &two).unwrap() - 1.0).norm() < 1e-9);
    }

    #[test]
    fn vacuum_step_is_reversible(z in 1e3f64..3e5, l in -4i32..=4) {
        let p = Propagator::new(grid(), LAMBDA);
        let f = lg_field(ModeIndex::new(l), 0.0, &beam(), &grid()).unwrap();
        let forward = p.transfer(z);
        let backward: Vec<Complex64> = forward.iter().map(|h| h.conj()).collect();
        let mut data = f.amplitudes().to_vec();
        p.apply_transfer(&mut data, &forward);
        p.apply_transfer(&mut data, &backward);
        let err = f.amplitudes().iter().zip(&data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max);
        prop_assert!(err < 1e-10);
    }

    #[test]
    fn vacuum_channel_matches_analytic_mode(h in 2e5f64..5e5, l in -4i32..=4) {
        let g = GridSpec::new(512, 0.02).unwrap();
        let sim = ChannelSimulator::new(g, beam(), &TurbulenceProfile::reference(), 3, false);
        let s = spec(h, 0, false);
        let out = sim.propagate_modes(&[l], &s).unwrap();
        let analytic = lg_field(ModeIndex::new(l), s.geometry.path_length(), &beam(), &g).unwrap();
        prop_assert!(overlap(&analytic, &out[&l]).unwrap().norm() > 0.99);
    }
}
