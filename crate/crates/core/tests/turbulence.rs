use std::f64::consts::FRAC_PI_4;

use oam_qkd::optics::GridSpec;
use oam_qkd::seeding::rng_from_seed;
use oam_qkd::turbulence::{
    cn2, fried_parameter, partition_slabs, rytov_variance, rytov_variance_between, screen_structure_function,
    ChannelGeometry, ScreenGenerator, TurbulenceProfile,
};
use proptest::prelude::*;

const LAMBDA: f64 = 1064e-9;

#[test]
fn structure_function_rejects_small_ensembles() {
    let grid = GridSpec::new(64, 0.02).unwrap();
    let generator = ScreenGenerator::new(grid, &TurbulenceProfile::reference(), 3);
    let mut rng = rng_from_seed(1);
    let screens: Vec<_> = (0..10).map(|_| generator.generate(0.1, &mut rng)).collect();
    assert!(screen_structure_function(&screens, &[0.1]).is_err());
}

#[test]
fn screens_follow_the_seed() {
    let grid = GridSpec::new(64, 0.02).unwrap();
    let generator = ScreenGenerator::new(grid, &TurbulenceProfile::reference(), 3);
    let a = generator.generate(0.1, &mut rng_from_seed(9));
    let b = generator.generate(0.1, &mut rng_from_seed(9));
    assert_eq!(a.phases, b.phases);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn rytov_variance_is_additive(h in 2e5f64..5e5, h0 in 0.0f64..3000.0, frac in 0.01f64..0.99, theta in 0.0f64..1.0) {
        let g = ChannelGeometry::new(h, h0, theta).unwrap();
        let p = TurbulenceProfile::reference();
        let mid = h0 + frac * (2e4 - h0);
        let split = rytov_variance_between(&g, &p, LAMBDA, h0, mid) + rytov_variance_between(&g, &p, LAMBDA, mid, h);
        let whole = rytov_variance(&g, &p, LAMBDA);
        prop_assert!((split - whole).abs() <= 1e-8 * whole);
    }

    #[test]
    fn slant_paths_see_more_turbulence(h in 2e5f64..5e5, h0 in 0.0f64..3000.0) {
        let p = TurbulenceProfile::reference();
        let zenith = ChannelGeometry::new(h, h0, 0.0).unwrap();
        let slant = ChannelGeometry::new(h, h0, FRAC_PI_4).unwrap();
        prop_assert!(fried_parameter(&slant, &p, LAMBDA) < fried_parameter(&zenith, &p, LAMBDA));
        prop_assert!(rytov_variance(&slant, &p, LAMBDA) > rytov_variance(&zenith, &p, LAMBDA));
    }

    #[test]
    fn partitions_tile_the_path_and_meet_the_conditions(
        h in 2e5f64..5e5,
        h0 in 0.0f64..3000.0,
        theta in 0.0f64..FRAC_PI_4,
    ) {
        let g = ChannelGeometry::new(h, h0, theta).unwrap();
        let part = partition_slabs(&g, &TurbulenceProfile::reference(), LAMBDA).unwrap();
        prop_assert!(part.satisfies_conditions());
        prop_assert!((part.total_thickness() - g.path_length()).abs() < 1e-6 * g.path_length());
        let b = part.boundaries();
        prop_assert!(b.windows(2).all(|w| w[1] > w[0]));
        prop_assert_eq!(b[0], h0);
        prop_assert_eq!(*b.last().unwrap(), h);
    }

    #[test]
    fn cn2_is_positive_and_scales_with_ground_strength(h in 0.0f64..3000.0, a in 1e-15f64..1e-12) {
        let weak = TurbulenceProfile::new(a, 3.0, 5.0, 0.01).unwrap();
        let strong = TurbulenceProfile::new(2.0 * a, 3.0, 5.0, 0.01).unwrap();
        prop_assert!(cn2(h, &weak) > 0.0);
        prop_assert!(cn2(h, &strong) > cn2(h, &weak));
    }
}
