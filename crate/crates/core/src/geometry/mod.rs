//! Domain families: superellipsoids `sum x_i^{2a_i} <= 1`, perturbed
//! superellipsoids `sum x_i^{2a} - eta p(x') <= 1`, and star-shaped domains
//! given in polar form `|x| <= h(x/|x|)`.
//!
//! [`Domain`] is the validated, evaluation-ready form of a [`DomainSpec`].

mod chart;

pub use chart::BoundaryChart;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::poly::{bisect_monotone, Polynomial, UniPoly};
use crate::qmc;
use crate::quad;

/// Band `|Phi| < BOUNDARY_TOL` treated as the boundary, which belongs to
/// the (closed) domain.
pub const BOUNDARY_TOL: f64 = 1e-12;

/// Minimum gradient norm accepted on the boundary.
pub const GRADIENT_GUARD: f64 = 1e-6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainSpec {
    Superellipsoid {
        exponents: Vec<u32>,
    },
    /// `perturbation` is a polynomial in the first `dimension - 1`
    /// coordinates.
    Perturbed {
        dimension: usize,
        exponent: u32,
        perturbation: Polynomial,
        eta: f64,
    },
    Polar {
        dimension: usize,
        radius: RadiusExpr,
    },
}

/// Closed-form radius function `h(omega)` on the unit sphere.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum RadiusExpr {
    Const { value: f64 },
    Coord { index: usize },
    Add { terms: Vec<RadiusExpr> },
    Mul { factors: Vec<RadiusExpr> },
    Pow { base: Box<RadiusExpr>, exponent: u32 },
}

impl RadiusExpr {
    pub fn eval(&self, w: &[f64]) -> f64 {
        match self {
            RadiusExpr::Const { value } => *value,
            RadiusExpr::Coord { index } => w[*index],
            RadiusExpr::Add { terms } => terms.iter().map(|t| t.eval(w)).sum(),
            RadiusExpr::Mul { factors } => factors.iter().map(|t| t.eval(w)).product(),
            RadiusExpr::Pow { base, exponent } => base.eval(w).powi(*exponent as i32),
        }
    }

    /// Value and gradient with respect to the ambient coordinates.
    pub fn value_grad(&self, w: &[f64]) -> (f64, Vec<f64>) {
        let d = w.len();
        match self {
            RadiusExpr::Const { value } => (*value, vec![0.0; d]),
            RadiusExpr::Coord { index } => {
                let mut g = vec![0.0; d];
                g[*index] = 1.0;
                (w[*index], g)
            }
            RadiusExpr::Add { terms } => {
                let mut v = 0.0;
                let mut g = vec![0.0; d];
                for t in terms {
                    let (tv, tg) = t.value_grad(w);
                    v += tv;
                    g.iter_mut().zip(tg).for_each(|(a, b)| *a += b);
                }
                (v, g)
            }
            RadiusExpr::Mul { factors } => {
                let mut v = 1.0;
                let mut g = vec![0.0; d];
                for t in factors {
                    let (tv, tg) = t.value_grad(w);
                    g.iter_mut().zip(tg).for_each(|(a, b)| *a = *a * tv + v * b);
                    v *= tv;
                }
                (v, g)
            }
            RadiusExpr::Pow { base, exponent } => {
                let (bv, bg) = base.value_grad(w);
                let k = *exponent as i32;
                let v = bv.powi(k);
                let dv = if k == 0 { 0.0 } else { k as f64 * bv.powi(k - 1) };
                (v, bg.into_iter().map(|x| x * dv).collect())
            }
        }
    }

    /// The same expression as a polynomial in the coordinates of `omega`.
    pub fn to_polynomial(&self, dim: usize) -> Polynomial {
        match self {
            RadiusExpr::Const { value } => Polynomial::constant(dim, *value),
            RadiusExpr::Coord { index } => Polynomial::variable(dim, *index),
            RadiusExpr::Add { terms } => {
                terms.iter().fold(Polynomial::zero(dim), |acc, t| acc.add(&t.to_polynomial(dim)).unwrap())
            }
            RadiusExpr::Mul { factors } => {
                factors.iter().fold(Polynomial::constant(dim, 1.0), |acc, t| acc.mul(&t.to_polynomial(dim)).unwrap())
            }
            RadiusExpr::Pow { base, exponent } => base.to_polynomial(dim).pow(*exponent),
        }
    }

    fn max_coord(&self) -> Option<usize> {
        match self {
            RadiusExpr::Const { .. } => None,
            RadiusExpr::Coord { index } => Some(*index),
            RadiusExpr::Add { terms } => terms.iter().filter_map(|t| t.max_coord()).max(),
            RadiusExpr::Mul { factors } => factors.iter().filter_map(|t| t.max_coord()).max(),
            RadiusExpr::Pow { base, .. } => base.max_coord(),
        }
    }
}

/// Volume with a standard error (zero for closed forms).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VolumeEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Result of the shell-condition search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShellReport {
    pub deltas: Vec<f64>,
    /// Smallest `c` consistent with all samples, per `delta`.
    pub constants: Vec<f64>,
    /// Maximum over the grid.
    pub constant: f64,
    pub holds: bool,
}

/// Validated domain with its defining function prepared for evaluation.
#[derive(Clone, Debug)]
pub struct Domain {
    spec: DomainSpec,
    dim: usize,
    phi: Option<Polynomial>,
    grad: Vec<Polynomial>,
    bound: f64,
}

/// Deterministic sample of unit directions (equispaced circle or
/// Fibonacci sphere).
pub fn direction_sample(dim: usize, count: usize) -> Vec<Vec<f64>> {
    match dim {
        2 => (0..count)
            .map(|i| {
                let th = std::f64::consts::TAU * i as f64 / count as f64;
                vec![th.cos(), th.sin()]
            })
            .collect(),
        3 => {
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..count)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / count as f64;
                    let r = (1.0 - z * z).sqrt();
                    let th = golden * i as f64;
                    vec![r * th.cos(), r * th.sin(), z]
                })
                .collect()
        }
        _ => {
            // signed coordinate directions
            let mut out = Vec::new();
            for i in 0..dim {
                for s in [-1.0, 1.0] {
                    let mut v = vec![0.0; dim];
                    v[i] = s;
                    out.push(v);
                }
            }
            out
        }
    }
}

pub(crate) fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Orthonormal basis of the complement of unit vector `v`, built by
/// Gram-Schmidt on the coordinate vectors least aligned with `v`.
pub fn complement_basis(v: &[f64]) -> Vec<Vec<f64>> {
    let d = v.len();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&i, &j| v[i].abs().total_cmp(&v[j].abs()));
    let mut basis: Vec<Vec<f64>> = Vec::new();
    for &i in &order {
        if basis.len() == d - 1 {
            break;
        }
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        let c = dot(&e, v);
        e.iter_mut().zip(v).for_each(|(a, b)| *a -= c * b);
        for b in &basis {
            let c = dot(&e, b);
            e.iter_mut().zip(b).for_each(|(a, x)| *a -= c * x);
        }
        let n = norm(&e);
        e.iter_mut().for_each(|a| *a /= n);
        basis.push(e);
    }
    // sort so the basis order follows coordinate order
    basis.sort_by(|a, b| {
        let ia = a.iter().map(|x| x.abs()).enumerate().max_by(|p, q| p.1.total_cmp(&q.1)).unwrap().0;
        let ib = b.iter().map(|x| x.abs()).enumerate().max_by(|p, q| p.1.total_cmp(&q.1)).unwrap().0;
        ia.cmp(&ib)
    });
    basis
}

/// Dirichlet volume `2^m prod Gamma(1 + 1/(2a_i)) / Gamma(1 + sum 1/(2a_i))`
/// of `{sum x_i^{2a_i} <= 1}` in `m = a.len()` dimensions.
pub fn dirichlet_volume(a: &[u32]) -> f64 {
    let s: f64 = a.iter().map(|&ai| 1.0 / (2.0 * ai as f64)).sum();
    let num: f64 = a.iter().map(|&ai| gamma(1.0 + 1.0 / (2.0 * ai as f64))).product();
    2f64.powi(a.len() as i32) * num / gamma(1.0 + s)
}

impl DomainSpec {
    pub fn dimension(&self) -> usize {
        match self {
            DomainSpec::Superellipsoid { exponents } => exponents.len(),
            DomainSpec::Perturbed { dimension, .. } | DomainSpec::Polar { dimension, .. } => *dimension,
        }
    }

    pub fn superellipsoid(exponents: &[u32]) -> Self {
        DomainSpec::Superellipsoid { exponents: exponents.to_vec() }
    }

    /// The unit disk.
    pub fn disk() -> Self {
        Self::superellipsoid(&[1, 1])
    }
}

impl Domain {
    pub fn new(spec: DomainSpec) -> Result<Self> {
        let dim = spec.dimension();
        if dim < 2 {
            return Err(Error::InvalidInput(format!("domain dimension {dim} < 2")));
        }
        let (phi, bound) = match &spec {
            DomainSpec::Superellipsoid { exponents } => {
                if exponents.contains(&0) {
                    return Err(Error::InvalidInput("superellipsoid exponents must be >= 1".into()));
                }
                let mut p = Polynomial::even_power_sum(exponents);
                p = p.add(&Polynomial::constant(dim, -1.0))?;
                (Some(p), (dim as f64).sqrt())
            }
            DomainSpec::Perturbed { dimension, exponent, perturbation, eta } => {
                if *exponent == 0 {
                    return Err(Error::InvalidInput("base exponent must be >= 1".into()));
                }
                if perturbation.arity() != dimension - 1 {
                    return Err(Error::DimensionMismatch { expected: dimension - 1, got: perturbation.arity() });
                }
                if perturbation.constant_term() != 0.0 {
                    return Err(Error::InvalidInput("perturbation must vanish at 0".into()));
                }
                if perturbation.degree() >= 2 * exponent {
                    return Err(Error::InvalidInput(format!(
                        "perturbation degree {} must be below {}",
                        perturbation.degree(),
                        2 * exponent
                    )));
                }
                if !(*eta > 0.0 && eta.is_finite()) {
                    return Err(Error::InvalidInput("eta must be positive".into()));
                }
                let base = Polynomial::even_power_sum(&vec![*exponent; *dimension]);
                let p = base
                    .add(&perturbation.extend_arity(*dimension)?.scale(-eta))?
                    .add(&Polynomial::constant(*dimension, -1.0))?;
                (Some(p), 0.0)
            }
            DomainSpec::Polar { dimension, radius } => {
                if !(2..=3).contains(dimension) {
                    return Err(Error::InvalidInput("polar domains need dimension 2 or 3".into()));
                }
                if let Some(i) = radius.max_coord() {
                    if i >= *dimension {
                        return Err(Error::DimensionMismatch { expected: *dimension, got: i + 1 });
                    }
                }
                (None, 0.0)
            }
        };
        let grad = phi.as_ref().map(|p| (0..dim).map(|i| p.partial(i)).collect()).unwrap_or_default();
        let mut dom = Domain { spec, dim, phi, grad, bound };
        dom.bound = dom.compute_bound()?;
        dom.check_boundary_gradient()?;
        Ok(dom)
    }

    pub fn spec(&self) -> &DomainSpec {
        &self.spec
    }

    pub fn dimension(&self) -> usize {
        self.dim
    }

    /// Polynomial defining function, when there is one.
    pub fn defining_polynomial(&self) -> Option<&Polynomial> {
        self.phi.as_ref()
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: x.len() });
        }
        Ok(())
    }

    /// `Phi(x)`: negative inside, zero on the boundary, positive outside.
    pub fn defining_value(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(self.phi_unchecked(x))
    }

    pub(crate) fn phi_unchecked(&self, x: &[f64]) -> f64 {
        match (&self.phi, &self.spec) {
            (Some(p), _) => p.eval(x),
            (None, DomainSpec::Polar { radius, .. }) => {
                let r = norm(x);
                if r == 0.0 {
                    return -self.min_radius();
                }
                let w: Vec<f64> = x.iter().map(|v| v / r).collect();
                r - radius.eval(&w)
            }
            _ => unreachable!("non-polynomial domains are polar"),
        }
    }

    pub fn gradient(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check_dim(x)?;
        Ok(self.gradient_unchecked(x))
    }

    pub(crate) fn gradient_unchecked(&self, x: &[f64]) -> Vec<f64> {
        match &self.spec {
            DomainSpec::Polar { radius, .. } => {
                let r = norm(x);
                if r == 0.0 {
                    return vec![0.0; self.dim];
                }
                let w: Vec<f64> = x.iter().map(|v| v / r).collect();
                let (_, gh) = radius.value_grad(&w);
                let wg = dot(&w, &gh);
                w.iter().zip(&gh).map(|(wi, gi)| wi - (gi - wg * wi) / r).collect()
            }
            _ => self.grad.iter().map(|p| p.eval(x)).collect(),
        }
    }

    /// Closed-domain membership: `Phi(x) < BOUNDARY_TOL`, so points in the
    /// boundary band count as inside.
    pub fn inside(&self, x: &[f64]) -> Result<bool> {
        Ok(self.defining_value(x)? < BOUNDARY_TOL)
    }

    fn min_radius(&self) -> f64 {
        match &self.spec {
            DomainSpec::Polar { radius, .. } => {
                direction_sample(self.dim, 4096).iter().map(|w| radius.eval(w)).fold(f64::INFINITY, f64::min)
            }
            _ => 1.0,
        }
    }

    /// Radius `rho(omega)` of the boundary along the ray through unit
    /// vector `omega` (first crossing from the origin).
    pub fn radial_extent(&self, omega: &[f64]) -> Result<f64> {
        self.check_dim(omega)?;
        match (&self.phi, &self.spec) {
            (_, DomainSpec::Polar { radius, .. }) => Ok(radius.eval(omega)),
            (Some(p), _) => {
                let origin = vec![0.0; self.dim];
                let line = p.restrict_line(&origin, omega);
                line.real_roots_in(0.0, 8.0)
                    .into_iter()
                    .find(|&r| r > 0.0)
                    .ok_or_else(|| Error::RootSolve("ray does not meet the boundary".into()))
            }
            _ => unreachable!(),
        }
    }

    /// Minkowski functional: `x` lies in `lambda D` iff `gauge(x) <= lambda`.
    pub fn gauge(&self, x: &[f64]) -> Result<f64> {
        let r = norm(x);
        if r == 0.0 {
            return Ok(0.0);
        }
        let w: Vec<f64> = x.iter().map(|v| v / r).collect();
        Ok(r / self.radial_extent(&w)?)
    }

    /// Radius of a ball about the origin containing the domain.
    pub fn bounding_radius(&self) -> f64 {
        self.bound
    }

    fn compute_bound(&self) -> Result<f64> {
        if let DomainSpec::Superellipsoid { .. } = self.spec {
            return Ok(self.bound);
        }
        let count = if self.dim == 2 { 2048 } else { 4096 };
        let mut m: f64 = 0.0;
        for w in direction_sample(self.dim, count) {
            let r = self.radial_extent(&w)?;
            if !(r > 0.0) {
                return Err(Error::InvalidInput("radius function must be positive".into()));
            }
            m = m.max(r);
        }
        Ok(1.1 * m)
    }

    fn check_boundary_gradient(&self) -> Result<()> {
        let count = if self.dim == 2 { 256 } else { 512 };
        for w in direction_sample(self.dim, count) {
            let r = self.radial_extent(&w)?;
            let x: Vec<f64> = w.iter().map(|v| v * r).collect();
            let g = norm(&self.gradient_unchecked(&x));
            if g < GRADIENT_GUARD {
                return Err(Error::DegenerateBoundary { gradient_norm: g });
            }
        }
        Ok(())
    }

    /// `[min, max]` of `x . v` over the domain.
    pub fn support_interval(&self, v: &[f64]) -> Result<(f64, f64)> {
        self.check_unit(v)?;
        if let DomainSpec::Superellipsoid { exponents } = &self.spec {
            let h = superellipsoid_support(exponents, v);
            return Ok((-h, h));
        }
        let hi = self.support_numeric(v)?;
        let neg: Vec<f64> = v.iter().map(|x| -x).collect();
        let lo = -self.support_numeric(&neg)?;
        Ok((lo, hi))
    }

    fn support_numeric(&self, v: &[f64]) -> Result<f64> {
        let h = |w: &[f64]| -> f64 {
            let r = self.radial_extent(w).unwrap_or(0.0);
            r * dot(w, v)
        };
        match self.dim {
            2 => {
                let n = 4096;
                let at = |th: f64| h(&[th.cos(), th.sin()]);
                let step = std::f64::consts::TAU / n as f64;
                let best = (0..n).max_by(|&i, &j| at(i as f64 * step).total_cmp(&at(j as f64 * step)));
                let c = best.unwrap() as f64 * step;
                Ok(golden_max(at, c - step, c + step))
            }
            _ => {
                let dirs = direction_sample(3, 8192);
                let mut best = dirs[0].clone();
                for w in &dirs {
                    if h(w) > h(&best) {
                        best = w.clone();
                    }
                }
                // local refinement in spherical coordinates
                let mut th = best[2].clamp(-1.0, 1.0).acos();
                let mut ph = best[1].atan2(best[0]);
                let sph = |th: f64, ph: f64| h(&[th.sin() * ph.cos(), th.sin() * ph.sin(), th.cos()]);
                let mut width = 0.1;
                for _ in 0..6 {
                    th = golden_max(|t| sph(t, ph), th - width, th + width);
                    ph = golden_max(|p| sph(th, p), ph - width, ph + width);
                    width *= 0.3;
                }
                Ok(sph(th, ph))
            }
        }
    }

    fn check_unit(&self, v: &[f64]) -> Result<()> {
        self.check_dim(v)?;
        if (norm(v) - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("direction has norm {}", norm(v))));
        }
        Ok(())
    }

    /// Length of `{s : Phi(point + s dir) <= 0}` within `|s| <= half_width`.
    fn chord_length(&self, point: &[f64], dir: &[f64], half_width: f64) -> f64 {
        if half_width <= 0.0 {
            return 0.0;
        }
        let mut breaks = vec![-half_width];
        match &self.phi {
            Some(p) => {
                let line = p.restrict_line(point, dir);
                breaks.extend(line.real_roots_in(-half_width, half_width));
                breaks.push(half_width);
                chord_from_breaks(&breaks, |s| line.eval(s))
            }
            None => {
                let g = |s: f64| {
                    let x: Vec<f64> = point.iter().zip(dir).map(|(a, b)| a + s * b).collect();
                    self.phi_unchecked(&x)
                };
                let n = 1024;
                let step = 2.0 * half_width / n as f64;
                let mut prev = g(-half_width);
                for i in 1..=n {
                    let s = -half_width + i as f64 * step;
                    let cur = g(s);
                    if (prev < 0.0) != (cur < 0.0) {
                        breaks.push(bisect_monotone(g, s - step, s, 0.0));
                    }
                    prev = cur;
                }
                breaks.push(half_width);
                chord_from_breaks(&breaks, g)
            }
        }
    }

    /// Area of `{center + s1 w1 + s2 w2} ∩ D` for `|s| <= half`.
    ///
    /// A point of the section is found by alternating line searches on
    /// `Phi`; rays from it locate the section's extent `[lo, hi]` along
    /// `w2` (every boundary point lies on one of them). Chords along `w1`
    /// are then integrated over `s2 = m + R sin(theta)`, which smooths the
    /// square-root behaviour at the ends.
    fn section_area(&self, center: &[f64], w1: &[f64], w2: &[f64], half: f64, tol: f64) -> Result<f64> {
        let at = |s1: f64, s2: f64| -> Vec<f64> {
            center.iter().zip(w1).zip(w2).map(|((c, a), b)| c + s1 * a + s2 * b).collect()
        };
        let phi = |s1: f64, s2: f64| self.phi_unchecked(&at(s1, s2));
        let (mut s1, mut s2) = (0.0, 0.0);
        let mut best = phi(s1, s2);
        for _ in 0..12 {
            let lim1 = (half * half - s2 * s2).max(0.0).sqrt();
            s1 = golden_argmax(|x| -phi(x, s2), -lim1, lim1);
            let lim2 = (half * half - s1 * s1).max(0.0).sqrt();
            s2 = golden_argmax(|y| -phi(s1, y), -lim2, lim2);
            let now = phi(s1, s2);
            if now >= best - 1e-15 * best.abs() && now < 0.0 {
                best = now;
                break;
            }
            best = best.min(now);
        }
        if !(best < 0.0) {
            return Ok(0.0);
        }
        let inner = at(s1, s2);
        let reach = 2.0 * half;
        let far = |th: f64| -> f64 {
            let dir: Vec<f64> = w1.iter().zip(w2).map(|(a, b)| th.cos() * a + th.sin() * b).collect();
            self.far_crossing(&inner, &dir, reach) * th.sin()
        };
        let n = 128;
        let step = std::f64::consts::TAU / n as f64;
        let extreme = |sign: f64| -> f64 {
            let g = |th: f64| sign * far(th);
            let i = (0..n).max_by(|&i, &j| g(i as f64 * step).total_cmp(&g(j as f64 * step))).unwrap_or(0);
            let c = i as f64 * step;
            golden_max(g, c - step, c + step)
        };
        let hi = s2 + extreme(1.0);
        let lo = s2 - extreme(-1.0);
        let (m, r) = (0.5 * (hi + lo), 0.5 * (hi - lo));
        if !(r > 0.0) {
            return Ok(0.0);
        }
        let integrand = |theta: f64| {
            let y = m + r * theta.sin();
            let p = at(0.0, y);
            let hw = (half * half - y * y).max(0.0).sqrt();
            self.chord_length(&p, w1, hw) * r * theta.cos()
        };
        let q = std::f64::consts::FRAC_PI_2;
        let (val, _) = quad::adaptive(integrand, &[-q, -0.5 * q, 0.0, 0.5 * q, q], tol, 0.0, 4000)?;
        Ok(val)
    }

    /// Distance to the last boundary crossing along `point + s dir`,
    /// `0 < s <= reach`.
    fn far_crossing(&self, point: &[f64], dir: &[f64], reach: f64) -> f64 {
        match &self.phi {
            Some(p) => p.restrict_line(point, dir).real_roots_in(0.0, reach).into_iter().fold(0.0, f64::max),
            None => {
                let g = |s: f64| {
                    let x: Vec<f64> = point.iter().zip(dir).map(|(a, b)| a + s * b).collect();
                    self.phi_unchecked(&x)
                };
                let n = 1024;
                let step = reach / n as f64;
                let mut last = 0.0;
                let mut prev = g(0.0);
                for i in 1..=n {
                    let s = i as f64 * step;
                    let cur = g(s);
                    if (prev < 0.0) != (cur < 0.0) {
                        last = bisect_monotone(g, s - step, s, 0.0);
                    }
                    prev = cur;
                }
                last
            }
        }
    }

    /// Measure of the hyperplane section `{x . v = offset}`.
    pub fn slice_measure(&self, v: &[f64], offset: f64) -> Result<f64> {
        self.slice_measure_tol(v, offset, 1e-10)
    }

    pub fn slice_measure_tol(&self, v: &[f64], offset: f64, tol: f64) -> Result<f64> {
        self.check_unit(v)?;
        if let DomainSpec::Superellipsoid { exponents } = &self.spec {
            if let Some(j) = axis_of(v) {
                return Ok(superellipsoid_axis_slice(exponents, j, offset));
            }
        }
        let b = self.bound;
        if offset.abs() >= b {
            return Ok(0.0);
        }
        let half = (b * b - offset * offset).sqrt();
        let basis = complement_basis(v);
        let center: Vec<f64> = v.iter().map(|x| x * offset).collect();
        match self.dim {
            2 => Ok(self.chord_length(&center, &basis[0], half)),
            3 => self.section_area(&center, &basis[0], &basis[1], half, tol),
            _ => Err(Error::Unsupported("slices in dimension above 3".into())),
        }
    }

    /// Volume: Dirichlet formula for superellipsoids, otherwise the radial
    /// form `|S| E[rho^d] / d` by randomised QMC over directions.
    pub fn volume(&self, seed: u64) -> Result<VolumeEstimate> {
        if let DomainSpec::Superellipsoid { exponents } = &self.spec {
            return Ok(VolumeEstimate { value: dirichlet_volume(exponents), stderr: 0.0 });
        }
        self.volume_radial(seed, 1e-9, 1 << 20)
    }

    /// Radial-form QMC volume, doubling the point count until the standard
    /// error is below `target` (relative).
    pub fn volume_radial(&self, seed: u64, target: f64, budget: usize) -> Result<VolumeEstimate> {
        let d = self.dim;
        let sphere = if d == 2 { std::f64::consts::TAU } else { 4.0 * std::f64::consts::PI };
        let mut n = 1024;
        loop {
            let (m, se) = qmc::replicated_mean(d - 1, n, seed, "volume-radial", |u| {
                let w = cube_to_sphere(d, u);
                self.radial_extent(&w).unwrap_or(0.0).powi(d as i32)
            });
            let est = VolumeEstimate { value: sphere * m / d as f64, stderr: sphere * se / d as f64 };
            if est.stderr <= target * est.value.abs() {
                return Ok(est);
            }
            if n >= budget {
                return Err(Error::Budget(format!("volume stderr {:e} after {n} points per replicate", est.stderr)));
            }
            n *= 2;
        }
    }

    /// Indicator QMC volume over the bounding box.
    pub fn volume_indicator(&self, seed: u64, points: usize) -> VolumeEstimate {
        let d = self.dim;
        let b = self.bound;
        let (m, se) = qmc::replicated_mean(d, points, seed, "volume-indicator", |u| {
            let x: Vec<f64> = u.iter().map(|ui| b * (2.0 * ui - 1.0)).collect();
            if self.phi_unchecked(&x) < BOUNDARY_TOL {
                1.0
            } else {
                0.0
            }
        });
        let box_vol = (2.0 * b).powi(d as i32);
        VolumeEstimate { value: m * box_vol, stderr: se * box_vol }
    }

    /// Searches for the constant `c` in `x + y in (1 + c delta) D` for
    /// `x in D`, `|y| <= delta`. Worst cases sit at boundary points `x` and
    /// `|y| = delta`, which is what is sampled.
    pub fn shell_condition_check(&self, deltas: &[f64]) -> Result<ShellReport> {
        let (nb, ny) = if self.dim == 2 { (256, 64) } else { (400, 100) };
        let boundary: Vec<Vec<f64>> = direction_sample(self.dim, nb)
            .into_iter()
            .map(|w| {
                let r = self.radial_extent(&w)?;
                Ok(w.iter().map(|v| v * r).collect())
            })
            .collect::<Result<_>>()?;
        let ys = direction_sample(self.dim, ny);
        let mut constants = Vec::with_capacity(deltas.len());
        for &delta in deltas {
            if delta <= 0.0 {
                constants.push(0.0);
                continue;
            }
            let mut c: f64 = 0.0;
            for x in &boundary {
                for y in &ys {
                    let z: Vec<f64> = x.iter().zip(y).map(|(a, b)| a + delta * b).collect();
                    c = c.max((self.gauge(&z)? - 1.0) / delta);
                }
            }
            constants.push(c);
        }
        let constant = constants.iter().cloned().fold(0.0, f64::max);
        Ok(ShellReport { deltas: deltas.to_vec(), holds: constants.iter().all(|c| c.is_finite()), constants, constant })
    }

    /// Boundary chart at `x0`; see [`BoundaryChart`].
    pub fn chart_at(&self, x0: &[f64]) -> Result<BoundaryChart> {
        BoundaryChart::new(self.clone(), x0)
    }
}

fn chord_from_breaks<F: Fn(f64) -> f64>(breaks: &[f64], g: F) -> f64 {
    breaks.windows(2).filter(|w| w[1] > w[0] && g(0.5 * (w[0] + w[1])) < 0.0).map(|w| w[1] - w[0]).sum()
}

fn axis_of(v: &[f64]) -> Option<usize> {
    let j = v.iter().position(|x| x.abs() == 1.0)?;
    v.iter().enumerate().all(|(i, x)| i == j || *x == 0.0).then_some(j)
}

/// Section `{x_j = o}` of a superellipsoid: a scaled copy of the
/// lower-dimensional superellipsoid with the remaining exponents.
pub fn superellipsoid_axis_slice(a: &[u32], j: usize, o: f64) -> f64 {
    if o.abs() >= 1.0 {
        return 0.0;
    }
    let rest: Vec<u32> = a.iter().enumerate().filter(|(i, _)| *i != j).map(|(_, &x)| x).collect();
    let expo: f64 = rest.iter().map(|&ai| 1.0 / (2.0 * ai as f64)).sum();
    // 1 - |o|^{2a_j} without cancellation for small |o|
    let gap = if o == 0.0 { 1.0 } else { -(2.0 * a[j] as f64 * o.abs().ln()).exp_m1() };
    gap.powf(expo) * dirichlet_volume(&rest)
}

/// Support function `max x . v` of `sum x_i^{2a_i} <= 1`, from the
/// Lagrange condition `|x_i| = (mu |v_i| / a_i)^{1/(2a_i - 1)}`.
pub fn superellipsoid_support(a: &[u32], v: &[f64]) -> f64 {
    let point = |mu: f64| -> Vec<f64> {
        a.iter().zip(v).map(|(&ai, &vi)| (mu * vi.abs() / ai as f64).powf(1.0 / (2.0 * ai as f64 - 1.0))).collect()
    };
    let level = |lmu: f64| -> f64 { point(lmu.exp()).iter().zip(a).map(|(x, &ai)| x.powi(2 * ai as i32)).sum::<f64>() };
    let (mut lo, mut hi) = (-60.0, 60.0);
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if level(m) < 1.0 {
            lo = m;
        } else {
            hi = m;
        }
    }
    let x = point((0.5 * (lo + hi)).exp());
    x.iter().zip(v).map(|(xi, vi)| xi * vi.abs()).sum()
}

/// Maps cube coordinates to the unit sphere in `d` in {2, 3} dimensions.
pub fn cube_to_sphere(d: usize, u: &[f64]) -> Vec<f64> {
    if d == 2 {
        let th = std::f64::consts::TAU * u[0];
        vec![th.cos(), th.sin()]
    } else {
        let z = 1.0 - 2.0 * u[0];
        let r = (1.0 - z * z).max(0.0).sqrt();
        let ph = std::f64::consts::TAU * u[1];
        vec![r * ph.cos(), r * ph.sin(), z]
    }
}

/// Golden-section maximisation of a unimodal function on `[a, b]`.
pub fn golden_max<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    f(0.5 * (a + b)).max(fc).max(fd)
}

/// Maximiser of a unimodal `f` on `[a, b]` by golden-section search.
pub(crate) fn golden_argmax<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..100 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a).abs() < 1e-15 * (1.0 + a.abs()) {
            break;
        }
    }
    if fc > fd {
        c
    } else {
        d
    }
}

/// Root of `line` in `[lo, hi]` nearest 0 at which `line` is nonincreasing.
pub(crate) fn nearest_descending_root(line: &UniPoly, lo: f64, hi: f64) -> Option<f64> {
    let dl = line.derivative();
    line.real_roots_in(lo, hi).into_iter().filter(|&w| dl.eval(w) <= 0.0).min_by(|a, b| a.abs().total_cmp(&b.abs()))
}
