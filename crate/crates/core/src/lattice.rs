//! Lattice points in dilates `sD`: exact counts, discrepancy series and
//! envelope exponents.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::geometry::{Domain, DomainSpec, RadiusExpr};
use crate::indices::GrowthIndex;
use crate::poly::Polynomial;
use crate::Rational;

/// Width of the floating guard band on `Phi(x/s)` for the guarded path.
pub const GUARD_WIDTH: f64 = 1e-9;

/// Default denominator of octave grids.
pub const GRID_DENOMINATOR: i64 = 64;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountPath {
    /// Integer arithmetic; superellipsoids only.
    Exact,
    /// Floating evaluation with exact re-evaluation inside the guard band.
    Guarded,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountResult {
    pub s: Rational,
    pub n: u64,
    /// `s^d vol(D)`.
    pub volume_term: f64,
    pub discrepancy: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancySeries {
    pub results: Vec<CountResult>,
    /// Per-octave `(s, max |D(s)|)`, `s` where the maximum is attained.
    pub blocks: Vec<(f64, f64)>,
}

fn s_f64(s: Rational) -> f64 {
    *s.numer() as f64 / *s.denom() as f64
}

/// Integers wide enough for `P^{2A}`: `i128` when it fits, big integers
/// otherwise.
trait ExactInt: Clone + Ord + Send + Sync {
    fn power(base: i64, e: u32) -> Option<Self>;
    fn times(&self, other: &Self) -> Option<Self>;
    fn minus(&self, other: &Self) -> Self;
    fn nil() -> Self;
    fn approx(&self) -> f64;
}

impl ExactInt for i128 {
    fn power(base: i64, e: u32) -> Option<Self> {
        (base as i128).checked_pow(e)
    }
    fn times(&self, other: &Self) -> Option<Self> {
        self.checked_mul(*other)
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn nil() -> Self {
        0
    }
    fn approx(&self) -> f64 {
        *self as f64
    }
}

impl ExactInt for BigInt {
    fn power(base: i64, e: u32) -> Option<Self> {
        Some(num_traits::pow(BigInt::from(base), e as usize))
    }
    fn times(&self, other: &Self) -> Option<Self> {
        Some(self * other)
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
    fn nil() -> Self {
        BigInt::zero()
    }
    fn approx(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }
}

/// `sum_i (Q x_i)^{2a_i} P^{2A - 2a_i} <= P^{2A}`, counted by nested axis
/// slices.
struct SuperCounter<T> {
    q: i64,
    exps: Vec<u32>,
    /// `P^{2A - 2a_i}` per axis.
    weights: Vec<T>,
    total: T,
}

impl<T: ExactInt> SuperCounter<T> {
    fn new(a: &[u32], s: Rational) -> Option<Self> {
        let (p, q) = (*s.numer(), *s.denom());
        let top = *a.iter().max()?;
        let weights = a.iter().map(|&ai| T::power(p, 2 * (top - ai))).collect::<Option<Vec<_>>>()?;
        let total = T::power(p, 2 * top)?;
        Some(Self { q, exps: a.iter().map(|x| 2 * x).collect(), weights, total })
    }

    fn term(&self, axis: usize, m: i64) -> Option<T> {
        T::power(self.q * m, self.exps[axis])?.times(&self.weights[axis])
    }

    /// Largest `m >= 0` with `term(axis, m) <= budget`, or `None` when even
    /// `m = 0` fails.
    fn max_root(&self, axis: usize, budget: &T) -> Option<i64> {
        if *budget < T::nil() {
            return None;
        }
        let fits = |m: i64| matches!(self.term(axis, m), Some(v) if v <= *budget);
        let w = self.weights[axis].approx();
        let guess = (budget.approx() / w).powf(1.0 / self.exps[axis] as f64) / self.q as f64;
        let mut m = if guess.is_finite() { guess.floor().max(0.0) as i64 } else { 0 };
        while !fits(m) {
            m -= 1;
        }
        while fits(m + 1) {
            m += 1;
        }
        Some(m)
    }

    fn count_from(&self, axis: usize, budget: &T) -> u64 {
        let Some(m) = self.max_root(axis, budget) else {
            return 0;
        };
        if axis + 1 == self.exps.len() {
            return 2 * m as u64 + 1;
        }
        (-m..=m)
            .map(|x| {
                let rest = budget.minus(&self.term(axis, x.abs()).expect("bounded by budget"));
                self.count_from(axis + 1, &rest)
            })
            .sum()
    }

    fn count(&self) -> u64 {
        let Some(m) = self.max_root(0, &self.total) else {
            return 0;
        };
        if self.exps.len() == 1 {
            return 2 * m as u64 + 1;
        }
        (-m..=m)
            .into_par_iter()
            .map(|x| {
                let rest = self.total.minus(&self.term(0, x.abs()).expect("bounded by budget"));
                self.count_from(1, &rest)
            })
            .sum()
    }
}

/// Number of integer points in the closed dilate `sD`, on the exact path
/// for superellipsoids and the guarded path otherwise.
pub fn count_lattice_points(domain: &Domain, s: Rational) -> Result<u64> {
    let path = match domain.spec() {
        DomainSpec::Superellipsoid { .. } => CountPath::Exact,
        _ => CountPath::Guarded,
    };
    count_lattice_points_with(domain, s, path)
}

pub fn count_lattice_points_with(domain: &Domain, s: Rational, path: CountPath) -> Result<u64> {
    if *s.numer() <= 0 {
        return Err(Error::InvalidInput(format!("dilation {s} must be positive")));
    }
    match (path, domain.spec()) {
        (CountPath::Exact, DomainSpec::Superellipsoid { exponents }) => {
            // overflowing terms exceed every budget, so checked i128
            // arithmetic is exact whenever P^{2A} fits
            if let Some(c) = SuperCounter::<i128>::new(exponents, s) {
                return Ok(c.count());
            }
            Ok(SuperCounter::<BigInt>::new(exponents, s).expect("big integers do not overflow").count())
        }
        (CountPath::Exact, _) => {
            Err(Error::Unsupported("exact counting needs a superellipsoid; use the guarded path".into()))
        }
        (CountPath::Guarded, _) => guarded_count(domain, s),
    }
}

/// Exact membership for the guarded path.
enum ExactTest {
    /// `Phi(x/s) <= 0` with polynomial `Phi`.
    Polynomial(Polynomial),
    /// `|x| <= s h(x/|x|)` with polynomial `h` split by homogeneous degree.
    Polar(Vec<Polynomial>),
}

impl ExactTest {
    fn for_domain(domain: &Domain) -> Self {
        match domain.spec() {
            DomainSpec::Polar { dimension, radius } => ExactTest::Polar(homogeneous_parts(radius, *dimension)),
            _ => ExactTest::Polynomial(domain.defining_polynomial().expect("polynomial domain").clone()),
        }
    }

    fn inside(&self, x: &[i64], s: &BigRational) -> bool {
        match self {
            ExactTest::Polynomial(p) => {
                let y: Vec<BigRational> = x.iter().map(|&v| BigRational::from_integer(BigInt::from(v)) / s).collect();
                !p.eval_exact(&y).is_positive()
            }
            ExactTest::Polar(parts) => polar_inside(parts, x, s),
        }
    }
}

fn homogeneous_parts(radius: &RadiusExpr, dim: usize) -> Vec<Polynomial> {
    let h = radius.to_polynomial(dim);
    let top = h.degree();
    (0..=top)
        .map(|j| {
            let terms: Vec<(Vec<u32>, f64)> =
                h.terms().iter().filter(|(e, _)| e.iter().sum::<u32>() == j).cloned().collect();
            Polynomial::new(dim, terms).expect("subset of a valid polynomial")
        })
        .collect()
}

/// Sign of `sum_j s h_j(x) r^{m-j} - r^{m+1}` at `r = sqrt(|x|^2)`, written
/// as `A + B sqrt(N)` and decided exactly.
fn polar_inside(parts: &[Polynomial], x: &[i64], s: &BigRational) -> bool {
    if x.iter().all(|&v| v == 0) {
        return true;
    }
    let m = parts.len() - 1;
    let big_n = BigRational::from_integer(x.iter().map(|&v| BigInt::from(v) * BigInt::from(v)).sum());
    let xr: Vec<BigRational> = x.iter().map(|&v| BigRational::from_integer(BigInt::from(v))).collect();
    // coefficients of r^p, p = 0..=m+1
    let mut coef = vec![BigRational::zero(); m + 2];
    for (j, hj) in parts.iter().enumerate() {
        coef[m - j] += s * hj.eval_exact(&xr);
    }
    coef[m + 1] -= BigRational::one();
    let (mut a, mut b) = (BigRational::zero(), BigRational::zero());
    let mut npow = BigRational::one();
    for (p, c) in coef.iter().enumerate() {
        if p % 2 == 0 {
            if p > 0 {
                npow *= &big_n;
            }
            a += c * &npow;
        } else {
            b += c * &npow;
        }
    }
    // A + B sqrt(N) >= 0
    match (a.is_negative(), b.is_negative()) {
        (false, false) => true,
        (true, true) => false,
        (false, true) => a.clone() * &a >= b.clone() * &b * &big_n,
        (true, false) => b.clone() * &b * &big_n >= a.clone() * &a,
    }
}

fn guarded_count(domain: &Domain, s: Rational) -> Result<u64> {
    let d = domain.dimension();
    let sf = s_f64(s);
    let reach = (domain.bounding_radius() * sf).ceil() as i64;
    let exact = ExactTest::for_domain(domain);
    let s_big = BigRational::new(BigInt::from(*s.numer()), BigInt::from(*s.denom()));
    let classify = |x: &[i64]| -> Result<bool> {
        let y: Vec<f64> = x.iter().map(|&v| v as f64 / sf).collect();
        let phi = domain.defining_value(&y)?;
        if !phi.is_finite() {
            return Err(Error::Uncertified { point: x.to_vec() });
        }
        if phi.abs() > GUARD_WIDTH {
            return Ok(phi < 0.0);
        }
        Ok(exact.inside(x, &s_big))
    };
    let rows: Vec<u64> = (-reach..=reach)
        .into_par_iter()
        .map(|x0| {
            let mut count = 0u64;
            let mut x = vec![0i64; d];
            x[0] = x0;
            let span = (2 * reach + 1) as u64;
            let cells = span.pow(d as u32 - 1);
            for idx in 0..cells {
                let mut rem = idx;
                for xi in x.iter_mut().skip(1) {
                    *xi = (rem % span) as i64 - reach;
                    rem /= span;
                }
                if classify(&x)? {
                    count += 1;
                }
            }
            Ok(count)
        })
        .collect::<Result<_>>()?;
    Ok(rows.into_iter().sum())
}

/// Counts, volume terms and per-octave envelope over an increasing grid.
pub fn discrepancy_series(domain: &Domain, s_grid: &[Rational], seed: u64) -> Result<DiscrepancySeries> {
    discrepancy_series_with(domain, s_grid, seed, None)
}

/// As [`discrepancy_series`], counting on `path` when given.
pub fn discrepancy_series_with(
    domain: &Domain,
    s_grid: &[Rational],
    seed: u64,
    path: Option<CountPath>,
) -> Result<DiscrepancySeries> {
    if s_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidInput("s grid must be strictly increasing".into()));
    }
    if s_grid.is_empty() {
        return Ok(DiscrepancySeries { results: Vec::new(), blocks: Vec::new() });
    }
    let vol = domain.volume(seed)?.value;
    let d = domain.dimension() as i32;
    let results: Vec<CountResult> = s_grid
        .iter()
        .map(|&s| {
            let n = match path {
                Some(p) => count_lattice_points_with(domain, s, p)?,
                None => count_lattice_points(domain, s)?,
            };
            log::debug!("N({s}) = {n}");
            let volume_term = s_f64(s).powi(d) * vol;
            Ok(CountResult { s, n, volume_term, discrepancy: n as f64 - volume_term })
        })
        .collect::<Result<_>>()?;
    let blocks = octave_maxima(&results);
    Ok(DiscrepancySeries { results, blocks })
}

fn octave_maxima(results: &[CountResult]) -> Vec<(f64, f64)> {
    let s0 = s_f64(results[0].s);
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut current = usize::MAX;
    for r in results {
        let s = s_f64(r.s);
        let block = ((s / s0).log2() + 1e-12).floor() as usize;
        let m = r.discrepancy.abs();
        if block != current {
            out.push((s, m));
            current = block;
        } else if m > out.last().unwrap().1 {
            *out.last_mut().unwrap() = (s, m);
        }
    }
    out
}

/// Slope of `log max|D|` per octave against `log s`.
pub fn fit_discrepancy_exponent(series: &DiscrepancySeries) -> Result<f64> {
    if series.blocks.len() < 5 {
        return Err(Error::SingularFit(format!("{} octave blocks; need 5", series.blocks.len())));
    }
    let kept: Vec<(f64, f64)> = series.blocks.iter().copied().filter(|b| b.1 > 0.0).collect();
    if kept.len() < 4 {
        return Err(Error::SingularFit(format!("{} nonzero octave blocks", kept.len())));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = kept.into_iter().unzip();
    Ok(log_log_slope(&x, &y)?.slope)
}

/// `s_j = round(2^{j/per_octave} s_min * den) / den` up to `s_max`,
/// deduplicated.
pub fn octave_grid(s_min: f64, s_max: f64, per_octave: usize, den: i64) -> Result<Vec<Rational>> {
    if !(s_min > 0.0) || s_max < s_min || per_octave == 0 || den <= 0 {
        return Err(Error::InvalidInput("need 0 < s_min <= s_max, per_octave >= 1, den >= 1".into()));
    }
    let steps = ((s_max / s_min).log2() * per_octave as f64 + 1e-9).floor() as usize;
    let mut out: Vec<Rational> = (0..=steps)
        .map(|j| {
            let s = s_min * 2f64.powf(j as f64 / per_octave as f64);
            Rational::new((s * den as f64).round() as i64, den)
        })
        .collect();
    out.dedup();
    Ok(out)
}

/// Predicted discrepancy exponent and whether it carries an arbitrarily
/// small loss `s^epsilon`.
pub fn predicted_discrepancy_exponent(index: &GrowthIndex, n: u32) -> Result<(Rational, bool)> {
    if n == 0 {
        return Err(Error::InvalidInput("surface dimension must be positive".into()));
    }
    let nn = Rational::from_integer(n as i64);
    let threshold = Rational::new(1, n as i64 + 1);
    let saturated = nn - Rational::new(1, (n * n + 2 * n) as i64);
    if !index.determinate {
        return match index.lower_bound {
            Some(lb) if lb > threshold => Ok((saturated, false)),
            _ => Err(Error::Undecidable(format!(
                "index only bounded below by {:?}; threshold is {threshold}",
                index.lower_bound
            ))),
        };
    }
    let g = index.g;
    if g > threshold {
        return Ok((saturated, false));
    }
    let theta = nn - g / (nn + Rational::from_integer(1) - g);
    Ok((theta, g == threshold || index.k > 0))
}

/// Brute-force count over the full box with exact rational membership;
/// test oracle for small dilates.
pub fn brute_force_count(domain: &Domain, s: Rational) -> Result<u64> {
    let d = domain.dimension();
    let reach = (domain.bounding_radius() * s_f64(s)).ceil() as i64;
    let exact = ExactTest::for_domain(domain);
    let s_big = BigRational::new(BigInt::from(*s.numer()), BigInt::from(*s.denom()));
    let span = (2 * reach + 1) as u64;
    let mut x = vec![0i64; d];
    let mut count = 0;
    for idx in 0..span.pow(d as u32) {
        let mut rem = idx;
        for xi in x.iter_mut() {
            *xi = (rem % span) as i64 - reach;
            rem /= span;
        }
        if exact.inside(&x, &s_big) {
            count += 1;
        }
    }
    Ok(count)
}
