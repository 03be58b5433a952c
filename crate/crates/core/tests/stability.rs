use proptest::prelude::*;
use sublevel_core::fit::geometric_grid;
use sublevel_core::indices::{estimate_sublevel_curve, powered_sum_index, SublevelFunction, SublevelOptions};
use sublevel_core::stability::*;
use sublevel_core::{GrowthIndex, Polynomial, Rational};

fn opts() -> SublevelOptions {
    SublevelOptions { lines: 1 << 11, ..SublevelOptions::default() }
}

proptest! {
    #[test]
    fn construction_reaches_the_target_index(a in 1i64..5, b in 2i64..6) {
        let t = Rational::new(a, b);
        prop_assume!(t < Rational::from_integer(1));
        let ce = counterexample_construct(t).unwrap();
        // c is the least integer with c t > 1
        prop_assert!(Rational::from_integer(ce.c as i64) * t > Rational::from_integer(1));
        prop_assert!(Rational::from_integer(ce.c as i64 - 1) * t <= Rational::from_integer(1));
        prop_assert_eq!(ce.q_index.g, t);
        prop_assert_eq!(powered_sum_index(ce.n, ce.k, ce.c).unwrap().g, t);
        prop_assert!(ce.h_prime < t);
        prop_assert_eq!(ce.family.len(), ce.c as usize);
        prop_assert!(PerturbationFamily::uniform_capacity(t).unwrap() < ce.family.len());
    }
}

#[test]
fn targets_above_one_have_no_construction() {
    assert_eq!(counterexample_construct(Rational::from_integer(1)).unwrap().c, 2);
    assert!(counterexample_construct(Rational::new(3, 2)).is_err());
    assert!(counterexample_construct(Rational::from_integer(0)).is_err());
}

#[test]
fn family_validation() {
    let base = SublevelFunction::power_sum(&[1, 1]);
    let x = Polynomial::variable(2, 0);
    let y = Polynomial::variable(2, 1);
    assert!(PerturbationFamily::new(base.clone(), vec![x.clone(), y.clone()], 0.1, 1.0).is_ok());
    assert!(PerturbationFamily::new(base.clone(), vec![x.clone(), x.scale(2.0)], 0.1, 1.0).is_err());
    let shifted = x.add(&Polynomial::constant(2, 1.0)).unwrap();
    assert!(PerturbationFamily::new(base.clone(), vec![shifted], 0.1, 1.0).is_err());
    assert!(PerturbationFamily::new(base, vec![Polynomial::variable(3, 0)], 0.1, 1.0).is_err());
}

#[test]
fn zero_coefficients_reproduce_the_base_estimate() {
    let base = SublevelFunction::power_sum(&[1, 1]);
    let fam = PerturbationFamily::new(base.clone(), vec![Polynomial::variable(2, 0)], 1.0, 1.0)
        .unwrap()
        .with_index(GrowthIndex::exact(Rational::from_integer(1), 0));
    let eps = geometric_grid(1e-9, 1e-3, 10);
    let report = family_sweep(&fam, &[vec![0.0], vec![0.5], vec![-0.5]], &eps, 21, &opts()).unwrap();
    let mut sorted = eps.clone();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let alone = estimate_sublevel_curve(&base, 1.0, &sorted, 21, &opts()).unwrap();
    let m: Vec<f64> = alone.iter().map(|p| p.0).collect();
    assert_eq!(report.samples[0].measures, m);
    // a linear term makes the zero set a smooth curve: index 1
    assert!(report.fits.iter().all(|f| (f.g_hat - 1.0).abs() < 0.05), "{:?}", report.fits);
    assert!(report.pass);
    assert_eq!(report.within_capacity, Some(false));
    assert!(family_sweep(&fam, &[vec![2.0]], &eps, 21, &opts()).is_err());
}

#[test]
fn integrability_of_the_inverse_square() {
    // int_{|x| < r} |x|^{-2} dx = 4 pi r in three dimensions
    let base = SublevelFunction::power_sum(&[1, 1, 1]);
    let fam = PerturbationFamily::new(base, vec![Polynomial::variable(3, 0)], 0.05, 0.5).unwrap();
    let eps = geometric_grid(1e-8, 0.3, 40);
    let r = integrability_bound(&fam, 1.0, &[vec![0.0]], &eps, 5, &SublevelOptions::default()).unwrap();
    let oracle = 4.0 * std::f64::consts::PI * 0.5;
    assert!((r.estimates[0] / oracle - 1.0).abs() < 0.05, "{:?}", r);
    let low = geometric_grid(1e-8, 0.2, 40);
    assert!(integrability_bound(&fam, 1.0, &[vec![0.0]], &low, 5, &opts()).is_err());
}
