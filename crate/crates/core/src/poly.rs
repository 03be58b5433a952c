//! Sparse multivariate polynomials with real coefficients, plus the dense
//! univariate polynomials obtained by restricting them to coordinate lines.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{FromPrimitive, One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sparse polynomial in `arity` real variables.
///
/// Terms are kept sorted by exponent vector with unique multi-indices and
/// no zero coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolynomialRepr", into = "PolynomialRepr")]
pub struct Polynomial {
    arity: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

#[derive(Serialize, Deserialize)]
struct PolynomialRepr {
    arity: usize,
    terms: Vec<(Vec<u32>, f64)>,
}

impl TryFrom<PolynomialRepr> for Polynomial {
    type Error = Error;
    fn try_from(r: PolynomialRepr) -> Result<Self> {
        Polynomial::new(r.arity, r.terms)
    }
}

impl From<Polynomial> for PolynomialRepr {
    fn from(p: Polynomial) -> Self {
        PolynomialRepr { arity: p.arity, terms: p.terms }
    }
}

impl Polynomial {
    /// Builds a polynomial, merging repeated multi-indices.
    pub fn new(arity: usize, terms: Vec<(Vec<u32>, f64)>) -> Result<Self> {
        let mut merged: BTreeMap<Vec<u32>, f64> = BTreeMap::new();
        for (exps, c) in terms {
            if exps.len() != arity {
                return Err(Error::DimensionMismatch { expected: arity, got: exps.len() });
            }
            if !c.is_finite() {
                return Err(Error::InvalidInput("non-finite polynomial coefficient".into()));
            }
            *merged.entry(exps).or_insert(0.0) += c;
        }
        let terms = merged.into_iter().filter(|(_, c)| *c != 0.0).collect();
        Ok(Self { arity, terms })
    }

    pub fn zero(arity: usize) -> Self {
        Self { arity, terms: Vec::new() }
    }

    pub fn constant(arity: usize, c: f64) -> Self {
        Self::new(arity, vec![(vec![0; arity], c)]).expect("valid constant")
    }

    /// The coordinate function `x_i`.
    pub fn variable(arity: usize, i: usize) -> Self {
        let mut e = vec![0; arity];
        e[i] = 1;
        Self { arity, terms: vec![(e, 1.0)] }
    }

    pub fn monomial(exps: Vec<u32>, c: f64) -> Self {
        let arity = exps.len();
        Self::new(arity, vec![(exps, c)]).expect("valid monomial")
    }

    /// `sum_i x_i^{2 a_i}`.
    pub fn even_power_sum(half_exponents: &[u32]) -> Self {
        let arity = half_exponents.len();
        let terms = half_exponents
            .iter()
            .enumerate()
            .map(|(i, &a)| {
                let mut e = vec![0; arity];
                e[i] = 2 * a;
                (e, 1.0)
            })
            .collect();
        Self::new(arity, terms).expect("valid power sum")
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn terms(&self) -> &[(Vec<u32>, f64)] {
        &self.terms
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn degree(&self) -> u32 {
        self.terms.iter().map(|(e, _)| e.iter().sum::<u32>()).max().unwrap_or(0)
    }

    pub fn degree_in(&self, axis: usize) -> u32 {
        self.terms.iter().map(|(e, _)| e[axis]).max().unwrap_or(0)
    }

    pub fn constant_term(&self) -> f64 {
        self.terms.iter().find(|(e, _)| e.iter().all(|&x| x == 0)).map(|(_, c)| *c).unwrap_or(0.0)
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.arity);
        self.terms.iter().map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>()).sum()
    }

    pub fn partial(&self, axis: usize) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(e, _)| e[axis] > 0)
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2[axis] -= 1;
                (e2, c * e[axis] as f64)
            })
            .collect();
        Self::new(self.arity, terms).expect("derivative of valid polynomial")
    }

    pub fn gradient(&self, x: &[f64]) -> Vec<f64> {
        (0..self.arity).map(|i| self.partial(i).eval(x)).collect()
    }

    pub fn scale(&self, s: f64) -> Self {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), c * s)).collect();
        Self::new(self.arity, terms).expect("scaled polynomial")
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if other.arity != self.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, got: other.arity });
        }
        let mut terms = self.terms.clone();
        terms.extend(other.terms.iter().cloned());
        Self::new(self.arity, terms)
    }

    pub fn mul(&self, other: &Self) -> Result<Self> {
        if other.arity != self.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, got: other.arity });
        }
        let mut terms = Vec::with_capacity(self.terms.len() * other.terms.len());
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let e = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                terms.push((e, ca * cb));
            }
        }
        Self::new(self.arity, terms)
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::constant(self.arity, 1.0);
        for _ in 0..k {
            out = out.mul(self).expect("same arity");
        }
        out
    }

    /// Embeds into a space with more variables (new variables appended).
    pub fn extend_arity(&self, arity: usize) -> Result<Self> {
        if arity < self.arity {
            return Err(Error::DimensionMismatch { expected: self.arity, got: arity });
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, c)| {
                let mut e2 = e.clone();
                e2.resize(arity, 0);
                (e2, *c)
            })
            .collect();
        Self::new(arity, terms)
    }

    /// Restriction to the line `base + s * e_axis`; `base[axis]` is ignored.
    pub fn restrict_axis(&self, base: &[f64], axis: usize) -> UniPoly {
        let deg = self.degree_in(axis) as usize;
        let mut coeffs = vec![0.0; deg + 1];
        for (e, c) in &self.terms {
            let mut v = *c;
            for (i, (&k, &xi)) in e.iter().zip(base).enumerate() {
                if i != axis && k > 0 {
                    v *= xi.powi(k as i32);
                }
            }
            coeffs[e[axis] as usize] += v;
        }
        UniPoly::new(coeffs)
    }

    /// Restriction to the line `point + s * dir` as a polynomial in `s`.
    pub fn restrict_line(&self, point: &[f64], dir: &[f64]) -> UniPoly {
        let deg = self.degree() as usize;
        let mut coeffs = vec![0.0; deg + 1];
        let mut term: Vec<f64> = Vec::with_capacity(deg + 1);
        let mut next: Vec<f64> = Vec::with_capacity(deg + 1);
        for (e, c) in &self.terms {
            term.clear();
            term.push(*c);
            for (i, &k) in e.iter().enumerate() {
                if k == 0 {
                    continue;
                }
                // (p + s d)^k by the binomial theorem
                let (p, d) = (point[i], dir[i]);
                let k = k as usize;
                let mut lin = vec![0.0; k + 1];
                let mut binom = 1.0;
                for (j, l) in lin.iter_mut().enumerate() {
                    *l = binom * p.powi((k - j) as i32) * d.powi(j as i32);
                    binom = binom * (k - j) as f64 / (j + 1) as f64;
                }
                next.clear();
                next.resize(term.len() + k, 0.0);
                for (a, ta) in term.iter().enumerate() {
                    for (b, lb) in lin.iter().enumerate() {
                        next[a + b] += ta * lb;
                    }
                }
                std::mem::swap(&mut term, &mut next);
            }
            for (j, v) in term.iter().enumerate() {
                coeffs[j] += v;
            }
        }
        UniPoly::new(coeffs)
    }

    /// Substitutes `x = offset + sum_j y_j cols[j]`, giving a polynomial in
    /// `cols.len()` variables `y`.
    pub fn compose_affine(&self, offset: &[f64], cols: &[Vec<f64>]) -> Polynomial {
        let m = cols.len();
        let linear: Vec<Polynomial> = (0..self.arity)
            .map(|i| {
                let mut terms = vec![(vec![0; m], offset[i])];
                for (j, col) in cols.iter().enumerate() {
                    let mut e = vec![0; m];
                    e[j] = 1;
                    terms.push((e, col[i]));
                }
                Polynomial::new(m, terms).expect("affine coordinate")
            })
            .collect();
        let mut out = Polynomial::zero(m);
        for (e, c) in &self.terms {
            let mut t = Polynomial::constant(m, *c);
            for (i, &k) in e.iter().enumerate() {
                if k > 0 {
                    t = t.mul(&linear[i].pow(k)).expect("same arity");
                }
            }
            out = out.add(&t).expect("same arity");
        }
        out
    }

    /// Exact value at a rational point; coefficients are taken as the exact
    /// binary fractions they store.
    pub fn eval_exact(&self, x: &[BigRational]) -> BigRational {
        let mut acc = BigRational::zero();
        for (e, c) in &self.terms {
            let mut v = BigRational::from_f64(*c).expect("finite coefficient");
            for (&k, xi) in e.iter().zip(x) {
                if k > 0 {
                    v *= num_traits::pow(xi.clone(), k as usize);
                }
            }
            acc += v;
        }
        acc
    }
}

/// Dense univariate polynomial, coefficients in ascending degree.
#[derive(Clone, Debug, PartialEq)]
pub struct UniPoly {
    coeffs: Vec<f64>,
}

impl UniPoly {
    pub fn new(mut coeffs: Vec<f64>) -> Self {
        while coeffs.len() > 1 && *coeffs.last().unwrap() == 0.0 {
            coeffs.pop();
        }
        if coeffs.is_empty() {
            coeffs.push(0.0);
        }
        Self { coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn degree(&self) -> usize {
        self.coeffs.len() - 1
    }

    #[inline]
    pub fn eval(&self, x: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
    }

    pub fn derivative(&self) -> Self {
        if self.coeffs.len() <= 1 {
            return Self::new(vec![0.0]);
        }
        Self::new(self.coeffs.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect())
    }

    /// All real roots in `[lo, hi]`, ascending. Roots are isolated through
    /// the critical points of the polynomial (found recursively), then
    /// refined by bisection on each monotone piece.
    pub fn real_roots_in(&self, lo: f64, hi: f64) -> Vec<f64> {
        match self.degree() {
            0 => Vec::new(),
            1 => {
                let r = -self.coeffs[0] / self.coeffs[1];
                if (lo..=hi).contains(&r) {
                    vec![r]
                } else {
                    Vec::new()
                }
            }
            _ => {
                let crit = self.derivative().real_roots_in(lo, hi);
                let mut breaks = Vec::with_capacity(crit.len() + 2);
                breaks.push(lo);
                breaks.extend(crit.into_iter().filter(|&c| c > lo && c < hi));
                breaks.push(hi);
                let mut roots: Vec<f64> = Vec::new();
                for w in breaks.windows(2) {
                    let (u, v) = (w[0], w[1]);
                    let (pu, pv) = (self.eval(u), self.eval(v));
                    if pu == 0.0 {
                        if roots.last() != Some(&u) {
                            roots.push(u);
                        }
                    } else if pu.signum() != pv.signum() && pv != 0.0 {
                        roots.push(bisect_monotone(|s| self.eval(s), u, v, 0.0));
                    }
                }
                if self.eval(hi) == 0.0 && roots.last() != Some(&hi) {
                    roots.push(hi);
                }
                roots
            }
        }
    }

    /// Splits `[lo, hi]` into pieces on which the polynomial is monotone.
    pub fn monotone_pieces(&self, lo: f64, hi: f64) -> MonotonePieces<'_> {
        let mut breaks = vec![lo];
        if self.degree() >= 2 {
            breaks.extend(self.derivative().real_roots_in(lo, hi).into_iter().filter(|&c| c > lo && c < hi));
        }
        breaks.push(hi);
        let values = breaks.iter().map(|&b| self.eval(b)).collect();
        MonotonePieces { poly: self, breaks, values }
    }
}

/// Monotone decomposition of a univariate polynomial on an interval, reused
/// across many sublevel thresholds.
pub struct MonotonePieces<'a> {
    poly: &'a UniPoly,
    breaks: Vec<f64>,
    values: Vec<f64>,
}

impl MonotonePieces<'_> {
    /// Smallest `|p|` over the interval.
    pub fn min_abs(&self) -> f64 {
        let mut m = f64::INFINITY;
        for i in 0..self.breaks.len() - 1 {
            let (a, b) = (self.values[i], self.values[i + 1]);
            if a.signum() != b.signum() || a == 0.0 || b == 0.0 {
                return 0.0;
            }
            m = m.min(a.abs()).min(b.abs());
        }
        m
    }

    /// Lebesgue measure of `{s : |p(s)| < eps}` within the interval.
    pub fn sublevel_length(&self, eps: f64) -> f64 {
        let mut total = 0.0;
        for i in 0..self.breaks.len() - 1 {
            let (u, v) = (self.breaks[i], self.breaks[i + 1]);
            let (pu, pv) = (self.values[i], self.values[i + 1]);
            let (pmin, pmax) = if pu <= pv { (pu, pv) } else { (pv, pu) };
            if pmax <= -eps || pmin >= eps {
                continue;
            }
            let f = |s: f64| self.poly.eval(s);
            let increasing = pu <= pv;
            let (s_lo, s_hi) = if increasing {
                let s_lo = if pu > -eps { u } else { bisect_monotone(f, u, v, -eps) };
                let s_hi = if pv < eps { v } else { bisect_monotone(f, u, v, eps) };
                (s_lo, s_hi)
            } else {
                let s_lo = if pu < eps { u } else { bisect_monotone(f, u, v, eps) };
                let s_hi = if pv > -eps { v } else { bisect_monotone(f, u, v, -eps) };
                (s_lo, s_hi)
            };
            total += (s_hi - s_lo).max(0.0);
        }
        total
    }
}

/// Solves `f(s) = target` for monotone `f` on `[u, v]` with the target
/// bracketed, by plain bisection down to adjacent floats.
pub fn bisect_monotone<F: FnMut(f64) -> f64>(mut f: F, mut u: f64, mut v: f64, target: f64) -> f64 {
    let fu = f(u) - target;
    let up = fu < 0.0;
    for _ in 0..200 {
        let m = 0.5 * (u + v);
        if m <= u || m >= v {
            break;
        }
        let fm = f(m) - target;
        if fm == 0.0 {
            return m;
        }
        if (fm < 0.0) == up {
            u = m;
        } else {
            v = m;
        }
    }
    0.5 * (u + v)
}

/// Exact rational from a finite double.
pub fn rational_from_f64(x: f64) -> BigRational {
    BigRational::from_f64(x).expect("finite value")
}

pub fn rational_from_int(x: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(x))
}

pub fn big_one() -> BigRational {
    BigRational::one()
}
