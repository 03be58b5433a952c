use proptest::prelude::*;
use sublevel_core::fit::geometric_grid;
use sublevel_core::fourier::*;
use sublevel_core::geometry::{Domain, DomainSpec};
use sublevel_core::oscint::{model_cutoff, OscOptions};
use sublevel_core::{Complex, GrowthIndex, Rational};

fn bessel_j1(t: f64) -> f64 {
    let m = (t.abs() as usize + 64) * 2;
    let h = std::f64::consts::TAU / m as f64;
    (0..m).map(|i| (i as f64 * h - t * (i as f64 * h).sin()).cos()).sum::<f64>() / m as f64
}

/// Composite Simpson on `[a, b]` with `n` (even) intervals.
fn simpson<F: Fn(f64) -> Complex>(f: F, a: f64, b: f64, n: usize) -> Complex {
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * (h / 3.0)
}

#[test]
fn disk_transform_is_rotation_invariant_bessel() {
    let disk = Domain::new(DomainSpec::disk()).unwrap();
    let opts = OscOptions::default();
    for v in [[0.6, 0.8], [1.0, 0.0], [-0.28, 0.96]] {
        for t in [7.0, 300.0, 5000.0] {
            let r = indicator_ft_slice(&disk, &v, t, &opts).unwrap();
            let exact = std::f64::consts::TAU * bessel_j1(t) / t;
            assert!(
                (r.value - Complex::new(exact, 0.0)).norm() < 1e-8 * exact.abs() + 1e-13,
                "v={v:?} t={t}: {} vs {exact}",
                r.value
            );
        }
    }
}

#[test]
fn ball_transform_closed_form() {
    let ball = Domain::new(DomainSpec::superellipsoid(&[1, 1, 1])).unwrap();
    let v = [1.0 / 3.0, 2.0 / 3.0, 2.0 / 3.0];
    for t in [5.0, 40.0] {
        let r = indicator_ft_slice(&ball, &v, t, &OscOptions::default()).unwrap();
        let exact = 4.0 * std::f64::consts::PI * (t.sin() - t * t.cos()) / t.powi(3);
        assert!(
            (r.value.re - exact).abs() < 1e-6 * exact.abs() + 1e-9 && r.value.im.abs() < 1e-8,
            "t={t}: {} vs {exact}",
            r.value
        );
    }
}

#[test]
fn zero_frequency_is_the_volume() {
    let d = Domain::new(DomainSpec::superellipsoid(&[2, 1])).unwrap();
    let r = indicator_ft_slice(&d, &[0.0, 1.0], 0.0, &OscOptions::default()).unwrap();
    assert!((r.value.re - d.volume(0).unwrap().value).abs() < 1e-14);
}

#[test]
fn circle_surface_transform_matches_direct_quadrature() {
    let disk = Domain::new(DomainSpec::disk()).unwrap();
    let chart = disk.chart_at(&[0.0, 1.0]).unwrap();
    let cutoff = Cutoff::for_chart(&chart);
    let rho = cutoff.support();
    for t in [5.0, 60.0] {
        let got = surface_ft_graph(&chart, &cutoff, &[0.0, t]).unwrap().value;
        let oracle = simpson(
            |u| Complex::from_polar(model_cutoff(u.abs() / cutoff.radius), -t * (1.0 - (1.0 - u * u).sqrt())),
            -rho,
            rho,
            40_000,
        );
        assert!((got - oracle).norm() < 1e-9, "t={t}: {got} vs {oracle}");
        let mirrored = surface_ft_graph(&chart, &cutoff, &[3.0, t]).unwrap().value;
        let flipped = surface_ft_graph(&chart, &cutoff, &[-3.0, t]).unwrap().value;
        assert!((mirrored - flipped).norm() < 1e-9);
    }
}

#[test]
fn sphere_surface_transform_matches_radial_quadrature() {
    let ball = Domain::new(DomainSpec::superellipsoid(&[1, 1, 1])).unwrap();
    let chart = ball.chart_at(&[0.0, 0.0, 1.0]).unwrap();
    let cutoff = Cutoff::for_chart(&chart);
    let t = 15.0;
    let got = surface_ft_graph(&chart, &cutoff, &[0.0, 0.0, t]).unwrap().value;
    let oracle = simpson(
        |r| {
            Complex::from_polar(model_cutoff(r / cutoff.radius), -t * (1.0 - (1.0 - r * r).sqrt()))
                * (std::f64::consts::TAU * r)
        },
        0.0,
        cutoff.support(),
        20_000,
    );
    assert!((got - oracle).norm() < 1e-6, "{got} vs {oracle}");
}

#[test]
fn ibp_identity_with_empty_cap_is_zero() {
    let disk = Domain::new(DomainSpec::disk()).unwrap();
    let chart = disk.chart_at(&[0.0, 1.0]).unwrap();
    let r = ibp_identity_check(&disk, &chart, &[10.0, 20.0], Some(0.0)).unwrap();
    assert!(r.indicator.iter().chain(&r.surface).chain(&r.remainder).all(|z| z.norm() == 0.0));
}

#[test]
fn ibp_remainder_decays_for_the_circle() {
    let disk = Domain::new(DomainSpec::disk()).unwrap();
    let chart = disk.chart_at(&[0.0, 1.0]).unwrap();
    let r = ibp_identity_check(&disk, &chart, &geometric_grid(1e2, 1e4, 24), None).unwrap();
    let e = r.remainder_exponent.unwrap();
    assert!(e >= 1.9, "{e}");
    assert!(r.pass);
}

proptest! {
    #[test]
    fn indicator_prediction_is_surface_plus_one(num in 1i64..12, den in 2i64..12, k in 0u32..2, n in 1u32..3) {
        let ix = GrowthIndex::exact(Rational::new(num, den), k);
        let s = predicted_decay(&ix, n, TransformKind::Surface).unwrap();
        let i = predicted_decay(&ix, n, TransformKind::Indicator).unwrap();
        prop_assert_eq!(i.0 - s.0, Rational::from_integer(1));
        prop_assert_eq!(i.1, s.1);
        prop_assert!(s.0 <= Rational::new(1, n as i64 + 1));
    }
}

#[test]
fn undetermined_index_below_threshold_is_undecidable() {
    let ix = GrowthIndex::at_least(Rational::new(1, 4));
    assert!(matches!(predicted_decay(&ix, 1, TransformKind::Indicator), Err(sublevel_core::Error::Undecidable(_))));
    let ix = GrowthIndex::at_least(Rational::new(1, 2));
    assert_eq!(predicted_decay(&ix, 2, TransformKind::Surface).unwrap(), (Rational::new(1, 3), 0));
}
