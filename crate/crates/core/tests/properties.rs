//! Randomized invariants across the public API.

use std::f64::consts::{PI, TAU};

use klein_core::bandstructure::{excited_gap, DiracParams, LatticeParams};
use klein_core::config::parse_config;
use klein_core::experiments::{barrier_from_height, barrier_height, Engine, Loading, ScenarioConfig};
use klein_core::plot::{Figure, Series};
use proptest::prelude::*;

const N_CUT: usize = 8;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    // phases on a dyadic grid survive the 2π shift and its reduction exactly
    #[test]
    fn gap_is_periodic_and_even_in_phi(m in 0u32..1700, v1 in 0.5f64..8.0, v2 in 0.2f64..3.0) {
        let phi = f64::from(m) / 1024.0;
        let g = |p: f64| excited_gap(&LatticeParams::new(v1, v2, p).unwrap(), N_CUT).unwrap().gap;
        let base = g(phi);
        prop_assert_eq!(base, g(phi + TAU));
        prop_assert!((base - g(-phi)).abs() < 1e-9, "{} vs {}", base, g(-phi));
    }

    #[test]
    fn weak_second_harmonic_opens_half_its_amplitude(v2 in 0.02f64..0.2, phi in 0.0f64..TAU) {
        let gap = excited_gap(&LatticeParams::new(0.0, v2, phi).unwrap(), N_CUT).unwrap().gap;
        prop_assert!((gap / (v2 / 2.0) - 1.0).abs() < 0.05, "{} vs {}", gap, v2 / 2.0);
    }
}

proptest! {
    #[test]
    fn lattice_potential_has_period_pi(z in -1e3f64..1e3, v1 in 0.0f64..10.0, v2 in 0.0f64..5.0, phi in 0.0f64..TAU) {
        let lat = LatticeParams::new(v1, v2, phi).unwrap();
        prop_assert!((lat.potential(z + PI) - lat.potential(z)).abs() < 1e-9);
        prop_assert!(lat.potential(z).abs() <= lat.max_abs_potential() + 1e-12);
    }

    #[test]
    fn compton_wavelength_scales_inversely_with_gap(gap in 1e-3f64..5.0, c in 0.5f64..8.0, s in 1.1f64..10.0) {
        let a = DiracParams::new(gap, c).unwrap();
        let b = DiracParams::new(gap * s, c).unwrap();
        prop_assert!((a.compton_wavelength / b.compton_wavelength / s - 1.0).abs() < 1e-12);
        prop_assert!((a.compton_wavelength * gap / (4.0 * PI * c) - 1.0).abs() < 1e-12);
        prop_assert!((a.rest_energy - gap / 2.0).abs() == 0.0);
    }

    #[test]
    fn barrier_height_inverts(vb in 0.3f64..10.0, w0 in 80.0f64..300.0, grav in 0.01f64..0.15) {
        let geo = barrier_from_height(vb, w0, grav).unwrap();
        prop_assert!(!geo.degenerate);
        prop_assert!(geo.z_trap < geo.z_barrier);
        prop_assert!((geo.height() - vb).abs() < 1e-8 * vb.max(1.0), "{}", geo.height());
        let again = barrier_height(geo.pot.v0, w0, grav).unwrap();
        prop_assert!((again - vb).abs() < 1e-8 * vb.max(1.0));
        // extrema really are stationary
        prop_assert!(geo.pot.derivative(geo.z_trap).abs() < 1e-7);
        prop_assert!(geo.pot.derivative(geo.z_barrier).abs() < 1e-7);
    }

    #[test]
    fn config_echo_round_trips(
        vb in 0.0f64..10.0,
        q0 in -1.0f64..1.0,
        phi in 0.0f64..TAU,
        dt in 1e-4f64..2e-3,
        sigma in 5.0f64..20.0,
        offset in 0.0f64..150.0,
        pow in 9u32..15,
        schrodinger in any::<bool>(),
        band in any::<bool>(),
        absorber in any::<bool>(),
    ) {
        let cfg = ScenarioConfig {
            lattice: LatticeParams::new(4.0, 1.2, phi).unwrap(),
            barrier_height_vb: vb,
            q0,
            dt,
            sigma_z: sigma,
            detect_offset: offset,
            n_points: Some(1 << pow),
            engine: if schrodinger { Engine::Schrodinger } else { Engine::Dirac },
            loading: if band { Loading::Band } else { Loading::Sudden },
            absorber,
            ..ScenarioConfig::default()
        };
        let back = parse_config(&cfg.echo()).unwrap();
        prop_assert_eq!(&back, &cfg);
        prop_assert_eq!(back.echo(), cfg.echo());
    }

    #[test]
    fn svg_rendering_is_deterministic(
        ys in proptest::collection::vec(-1e3f64..1e3, 2..60),
        x0 in -10.0f64..10.0,
        band in any::<bool>(),
    ) {
        let xs: Vec<f64> = (0..ys.len()).map(|i| x0 + i as f64 * 0.5).collect();
        let fig = Figure {
            title: "t".into(),
            x_label: "x".into(),
            y_label: "y".into(),
            series: vec![Series::new("a", xs.clone(), ys.clone()), Series::new("b <&>", xs, ys.iter().map(|y| -y).collect())],
            bands: if band { vec![(x0, x0 + 1.0)] } else { vec![] },
        };
        let a = fig.render().unwrap();
        prop_assert_eq!(&a, &fig.clone().render().unwrap());
        prop_assert!(a.starts_with("<svg") || a.starts_with("<?xml"));
        prop_assert_eq!(a.matches("<polyline").count(), 2);
        prop_assert!(a.contains("b &lt;&amp;&gt;"));
    }
}
