use proptest::prelude::*;
use sublevel_core::geometry::{Domain, DomainSpec, RadiusExpr};
use sublevel_core::lattice::*;
use sublevel_core::{Polynomial, Rational};

fn sup(a: &[u32]) -> Domain {
    Domain::new(DomainSpec::superellipsoid(a)).unwrap()
}

/// Integer loop over the box with exact rational arithmetic:
/// `sum (q x_i)^{2 a_i} / p^{2 a_i} <= 1` checked as a fraction sum.
fn naive_superellipse(a: &[u32; 2], s: Rational) -> u64 {
    let (p, q) = (*s.numer() as i128, *s.denom() as i128);
    let reach = p / q + 1;
    let mut n = 0;
    for x in -reach..=reach {
        for y in -reach..=reach {
            // (qx/p)^{2a} + (qy/p)^{2b} <= 1, cleared of denominators
            let (ea, eb) = (2 * a[0], 2 * a[1]);
            let lhs = (q * x).pow(ea) * p.pow(eb) + (q * y).pow(eb) * p.pow(ea);
            if lhs <= p.pow(ea + eb) {
                n += 1;
            }
        }
    }
    n
}

#[test]
fn gauss_circle_values() {
    let disk = sup(&[1, 1]);
    // N(r) for r = 0..10, r integer
    let known = [1u64, 5, 13, 29, 49, 81, 113, 149, 197, 253, 317];
    for (r, want) in known.iter().enumerate().skip(1) {
        assert_eq!(count_lattice_points(&disk, Rational::from_integer(r as i64)).unwrap(), *want, "r={r}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn exact_counts_match_the_naive_loop(a0 in 1u32..4, a1 in 1u32..4, num in 1i64..400, den in 1i64..9) {
        let s = Rational::new(num, den);
        prop_assume!(s <= Rational::from_integer(40));
        let d = sup(&[a0, a1]);
        prop_assert_eq!(count_lattice_points(&d, s).unwrap(), naive_superellipse(&[a0, a1], s));
    }

    #[test]
    fn counts_are_monotone_in_s(num in 1i64..2000, extra in 1i64..200) {
        let d = sup(&[2, 3]);
        let s1 = Rational::new(num, 64);
        let s2 = Rational::new(num + extra, 64);
        prop_assert!(count_lattice_points(&d, s1).unwrap() <= count_lattice_points(&d, s2).unwrap());
    }

    #[test]
    fn counts_are_permutation_invariant(num in 1i64..600) {
        let s = Rational::new(num, 64);
        let base = count_lattice_points(&sup(&[1, 2, 4]), s).unwrap();
        prop_assert_eq!(base, count_lattice_points(&sup(&[4, 1, 2]), s).unwrap());
        prop_assert_eq!(base, count_lattice_points(&sup(&[2, 4, 1]), s).unwrap());
    }
}

#[test]
fn exact_and_guarded_paths_agree_with_brute_force() {
    for a in [vec![1u32, 1], vec![2, 3], vec![1, 1, 1], vec![1, 2, 2]] {
        let d = sup(&a);
        for s in [Rational::from_integer(3), Rational::new(97, 16), Rational::new(11, 2)] {
            let exact = count_lattice_points_with(&d, s, CountPath::Exact).unwrap();
            let guarded = count_lattice_points_with(&d, s, CountPath::Guarded).unwrap();
            let brute = brute_force_count(&d, s).unwrap();
            assert_eq!(exact, brute, "{a:?} s={s}");
            assert_eq!(guarded, brute, "{a:?} s={s}");
        }
    }
}

#[test]
fn non_superellipsoid_domains_use_the_guarded_path() {
    let p = Polynomial::new(1, vec![(vec![2], 1.0)]).unwrap();
    let perturbed =
        Domain::new(DomainSpec::Perturbed { dimension: 2, exponent: 2, perturbation: p, eta: 0.05 }).unwrap();
    let polar = Domain::new(DomainSpec::Polar { dimension: 2, radius: RadiusExpr::Const { value: 1.0 } }).unwrap();
    for s in [Rational::from_integer(5), Rational::new(33, 4)] {
        assert_eq!(count_lattice_points(&perturbed, s).unwrap(), brute_force_count(&perturbed, s).unwrap());
        // the polar unit circle is the disk
        assert_eq!(count_lattice_points(&polar, s).unwrap(), count_lattice_points(&sup(&[1, 1]), s).unwrap());
    }
    assert!(count_lattice_points_with(&polar, Rational::from_integer(2), CountPath::Exact).is_err());
}

#[test]
fn large_dilates_fall_back_to_big_integers() {
    // (p)^{2A} with A = 2 + 6 and p ~ 10^6 overflows i128
    let d = sup(&[2, 6]);
    let s = Rational::new(1_000_003, 64);
    let n = count_lattice_points(&d, s).unwrap();
    let vol = d.volume(0).unwrap().value * (1_000_003.0f64 / 64.0).powi(2);
    assert!((n as f64 - vol).abs() < 1e-3 * vol);
}

#[test]
fn discrepancy_series_bookkeeping() {
    let d = sup(&[1, 1]);
    let grid = octave_grid(4.0, 64.0, 4, GRID_DENOMINATOR).unwrap();
    assert!(grid.windows(2).all(|w| w[1] > w[0]));
    assert!(grid.iter().all(|s| GRID_DENOMINATOR % *s.denom() == 0));
    assert_eq!(grid.len(), 17);
    let series = discrepancy_series(&d, &grid, 0).unwrap();
    for r in &series.results {
        let sf = *r.s.numer() as f64 / *r.s.denom() as f64;
        assert!((r.volume_term - std::f64::consts::PI * sf * sf).abs() < 1e-9 * r.volume_term);
        assert_eq!(r.discrepancy, r.n as f64 - r.volume_term);
    }
    assert_eq!(series.blocks.len(), 5);
    assert!(discrepancy_series(&d, &[Rational::from_integer(2), Rational::from_integer(1)], 0).is_err());
}

#[test]
fn predicted_exponents() {
    use sublevel_core::GrowthIndex;
    let disk = predicted_discrepancy_exponent(&GrowthIndex::exact(Rational::new(1, 2), 0), 1).unwrap();
    assert_eq!(disk, (Rational::new(2, 3), true));
    let quartic = predicted_discrepancy_exponent(&GrowthIndex::exact(Rational::new(1, 4), 0), 1).unwrap();
    assert_eq!(quartic, (Rational::new(6, 7), false));
}
