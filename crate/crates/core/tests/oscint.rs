use proptest::prelude::*;
use sublevel_core::fit::geometric_grid;
use sublevel_core::fourier::fit_decay;
use sublevel_core::harness::vdc;
use sublevel_core::oscint::*;
use sublevel_core::{Complex, Error, UniPoly};

/// `J_n(t)` by the trapezoid rule on the periodic Bessel integral, which
/// converges geometrically once the node count exceeds `t`.
fn bessel_j(n: i32, t: f64) -> f64 {
    let m = (t.abs() as usize + 64) * 2;
    let h = std::f64::consts::TAU / m as f64;
    (0..m).map(|i| (n as f64 * i as f64 * h - t * (i as f64 * h).sin()).cos()).sum::<f64>() / m as f64
}

fn chord(x: f64) -> f64 {
    2.0 * (1.0 - x * x).max(0.0).sqrt()
}

#[test]
fn disk_chord_transform_matches_bessel() {
    let half = Some(SingularityHint { g: 0.5, k: 0 });
    let f = OscillatoryIntegrand::new(chord, -1.0, 1.0).with_hints(half, half);
    for t in [3.0, 50.0, 1e3, 1e5] {
        let r = osc_integrate(&f, t, &OscOptions::default()).unwrap();
        let exact = std::f64::consts::TAU * bessel_j(1, t) / t;
        assert!(
            (r.value - Complex::new(exact, 0.0)).norm() < 1e-9 * exact.abs() + 1e-14,
            "t={t}: {} vs {exact}",
            r.value
        );
    }
}

#[test]
fn bessel_oracle_sanity() {
    // J_0(0) = 1, J_1 small-argument series, first zero of J_0
    assert!((bessel_j(0, 0.0) - 1.0).abs() < 1e-15);
    let t = 1e-3;
    assert!((bessel_j(1, t) - (t / 2.0 - t.powi(3) / 16.0)).abs() < 1e-15);
    assert!(bessel_j(0, 2.404_825_557_695_773).abs() < 1e-13);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn real_amplitudes_conjugate(t in 1.0f64..500.0, c in 0.1f64..3.0) {
        let f = OscillatoryIntegrand::new(move |x: f64| (c * x).cos() + x * x, -0.5, 1.5);
        let opts = OscOptions::default();
        let p = osc_integrate(&f, t, &opts).unwrap().value;
        let m = osc_integrate(&f, -t, &opts).unwrap().value;
        prop_assert!((p - m.conj()).norm() < 1e-10 * (1.0 + p.norm()));
    }

    #[test]
    fn linear_in_the_amplitude(t in 1.0f64..500.0, a in -2.0f64..2.0, b in -2.0f64..2.0) {
        let opts = OscOptions::default();
        let phi = |x: f64| (1.0 - x * x).sqrt();
        let psi = |x: f64| x.exp();
        let hint = Some(SingularityHint { g: 0.5, k: 0 });
        let i1 = osc_integrate(&OscillatoryIntegrand::new(phi, -1.0, 1.0).with_hints(hint, hint), t, &opts).unwrap().value;
        let i2 = osc_integrate(&OscillatoryIntegrand::new(psi, -1.0, 1.0).with_hints(hint, hint), t, &opts).unwrap().value;
        let both = OscillatoryIntegrand::new(move |x: f64| a * phi(x) + b * psi(x), -1.0, 1.0).with_hints(hint, hint);
        let i3 = osc_integrate(&both, t, &opts).unwrap().value;
        prop_assert!((i3 - (i1 * a + i2 * b)).norm() < 1e-10 * (1.0 + i3.norm()));
    }

    #[test]
    fn sublevel_scan_matches_exact_root_lengths(
        coeffs in prop::collection::vec(-2.0f64..2.0, 2..5),
        eps in 1e-4f64..0.5,
    ) {
        let p = UniPoly::new(coeffs);
        prop_assume!(p.degree() >= 1);
        let scan = sublevel_length_scan(|x| p.eval(x), -1.0, 1.0, eps);
        let exact = p.monotone_pieces(-1.0, 1.0).sublevel_length(eps);
        prop_assert!((scan - exact).abs() < 1e-9, "{} vs {}", scan, exact);
    }
}

#[test]
fn smooth_bump_decays_faster_than_powers() {
    let bump = |x: f64| if x > 0.0 && x < 1.0 { (-1.0 / (x * (1.0 - x))).exp() } else { 0.0 };
    let f = OscillatoryIntegrand::new(bump, 0.0, 1.0);
    let opts = OscOptions::default();
    let at = |t: f64| osc_integrate(&f, t, &opts).unwrap().value.norm();
    let low = at(10.0);
    let high = at(400.0);
    assert!(high < 1e-9 * low, "{low} {high}");
}

#[test]
fn linear_phase_routes_agree() {
    let t = 237.0;
    let phi = |x: f64| 1.0 + x * x;
    let a = osc_integrate(&OscillatoryIntegrand::new(phi, 0.0, 2.0), t, &OscOptions::default()).unwrap().value;
    let b = phase_integrate(|x: f64| -t * x, |_x: f64| -t, phi, 0.0, 2.0, &OscOptions::default()).unwrap().value;
    assert!((a - b).norm() < 1e-11, "{a} {b}");
}

#[test]
fn phase_partition_resolves_the_phase() {
    let h = |x: f64| 300.0 * x * x * x;
    let dh = |x: f64| 900.0 * x * x;
    let pts = phase_partition(h, dh, -1.0, 1.0, 1_000_000).unwrap();
    assert!(pts.windows(2).all(|w| w[1] > w[0] && (h(w[1]) - h(w[0])).abs() <= std::f64::consts::PI + 1e-12));
    assert_eq!(*pts.first().unwrap(), -1.0);
    assert_eq!(*pts.last().unwrap(), 1.0);
    assert!(matches!(phase_partition(h, dh, -1.0, 1.0, 10), Err(Error::Budget(_))));
}

#[test]
fn model_asymptotics_recover_the_exponent() {
    let grid = geometric_grid(1e2, 1e6, 64);
    for (g, k) in [(0.5, 0u32), (0.25, 0)] {
        let s = model_asymptotic_1d(g, k, &grid, &OscOptions::default()).unwrap();
        let fit = fit_decay(&s).unwrap();
        assert!((fit.delta_hat - 1.0 - g).abs() < 0.05, "g={g}: {fit:?}");
        assert_eq!(fit.l_hat, k);
    }
}

#[test]
fn van_der_corput_suites_hold() {
    assert!(vdc::first_order_suite(25, 3).unwrap().iter().all(|r| r.pass));
    for k in 1..=3 {
        assert!(vdc::oscillatory_suite(k, 25, 3).unwrap().iter().all(|r| r.pass), "oscillatory k={k}");
        assert!(vdc::sublevel_suite(k, 25, 3).unwrap().iter().all(|r| r.pass), "sublevel k={k}");
    }
}

#[test]
fn violated_hypotheses_are_reported() {
    let h = |x: f64| x * x;
    let h1 = |x: f64| 2.0 * x;
    let h2 = |_x: f64| 2.0;
    let one = |_x: f64| 1.0;
    let zero = |_x: f64| 0.0;
    // h' vanishes at 0, so |h'| >= 1 fails on [-1, 1]
    let f = VdcIntegrand {
        phase: &h,
        phase_derivs: vec![&h1, &h2],
        amplitude: &one,
        amplitude_deriv: &zero,
        a: -1.0,
        b: 1.0,
    };
    assert!(matches!(vdc_bound_check(&f, 1, 1.0), Err(Error::Hypothesis(_))));
    let ok = vdc_bound_check(&f, 2, 2.0).unwrap();
    assert!(ok.ratio <= vdc_constant(2));
    assert!(matches!(sublevel_vdc_check(h, h1, 1, 1.0, (-1.0, 1.0), &[1e-3]), Err(Error::Hypothesis(_))));
}
