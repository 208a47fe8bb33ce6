use std::f64::consts::PI;

use feyncoh::analytic::{self, CoherenceParams, Domain, HbtKind, HomPair, ThirdOrderConfig};
use feyncoh::montecarlo::fit_visibility;
use feyncoh::paths::{boson_path_oracle, fermion_path_oracle};
use num_complex::Complex64;
use proptest::prelude::*;

fn kinds() -> impl Strategy<Value = HbtKind> {
    prop_oneof![
        Just(HbtKind::Thermal),
        Just(HbtKind::Laser),
        Just(HbtKind::ColdAtomCloud),
        Just(HbtKind::FermionBeam),
        Just(HbtKind::Bec),
        (1u32..5).prop_map(|stages| HbtKind::SuperbunchingCascade { stages }),
    ]
}

proptest! {
    #[test]
    fn hbt_patterns_are_even_and_tend_to_one(kind in kinds(), width in 1e9f64..1e13, s in 0.0f64..50.0) {
        let params = CoherenceParams::temporal(width);
        let tc = 2.0 * PI / width;
        let grid = [-s * tc, s * tc, 2000.0 * tc];
        let p = analytic::hbt_second_order(&kind, Domain::Temporal, &params, &grid).unwrap();
        prop_assert!((p.values[0] - p.values[1]).abs() < 1e-12);
        prop_assert!((p.values[2] - 1.0).abs() < 1e-3);
        prop_assert!(p.values.iter().all(|&v| v >= 0.0));
        if kind == HbtKind::FermionBeam {
            prop_assert!(p.values.iter().all(|&v| v <= 1.0));
        }
    }

    #[test]
    fn entangled_dip_stays_in_unit_interval(width in 1e9f64..1e13, tau in -1e-8f64..1e-8) {
        let p = analytic::hom_second_order(HomPair::EntangledPair, Domain::Temporal, &CoherenceParams::temporal(width), &[tau]).unwrap();
        prop_assert!((0.0..=1.0).contains(&p.values[0]));
    }

    #[test]
    fn third_order_thermal_is_symmetric(a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let width = 1e12;
        let tc = 2.0 * PI / width;
        let params = CoherenceParams::temporal(width);
        let cfg = ThirdOrderConfig::ThermalHbt3(Domain::Temporal);
        let v = |x: f64, y: f64| analytic::third_order_pattern(cfg, &params, &[x * tc], &[y * tc]).unwrap().values[0];
        // exchanging detectors 2 and 3, or reversing all delays, leaves g3 unchanged
        prop_assert!((v(a, b) - v(b, a)).abs() < 1e-12);
        prop_assert!((v(a, b) - v(-a, -b)).abs() < 1e-12);
        prop_assert!(v(a, b) >= 0.0 && v(a, b) <= 6.0 + 1e-12);
    }

    #[test]
    fn fit_recovers_noiseless_visibility(v in 0.0f64..1.0, phi in 0.0f64..std::f64::consts::TAU, offset in 0.1f64..10.0) {
        let k = 3.0;
        let x: Vec<f64> = (0..200).map(|i| i as f64 * 0.05).collect();
        let y: Vec<f64> = x.iter().map(|&xi| offset * (1.0 + v * (k * xi + phi).cos())).collect();
        let f = fit_visibility(&x, &y, k);
        prop_assert!((f.visibility - v).abs() < 1e-9);
        prop_assert!(!f.ill_conditioned);
    }

    #[test]
    fn permanent_and_determinant_are_row_symmetric(seed in any::<u64>(), n in 2usize..5) {
        use rand::{RngExt, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let m: Vec<Vec<Complex64>> = (0..n)
            .map(|_| (0..n).map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)).collect())
            .collect();
        let mut swapped = m.clone();
        swapped.swap(0, 1);
        prop_assert!((boson_path_oracle(&m).unwrap() - boson_path_oracle(&swapped).unwrap()).norm() < 1e-12);
        prop_assert!((fermion_path_oracle(&m).unwrap() + fermion_path_oracle(&swapped).unwrap()).norm() < 1e-12);
    }
}
