//! Growth indices `(g, k)` of sublevel sets:
//! `m{|x| < r, |f(x)| < eps} ~ c eps^g |ln eps|^k` as `eps -> 0`.
//!
//! Closed forms cover the superellipsoid vertex charts and powered sums;
//! everything else goes through the sublevel-measure estimator and
//! [`fit_growth`].

use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_power_log;
use crate::geometry::{norm, BoundaryChart};
use crate::poly::{bisect_monotone, Polynomial, UniPoly};
use crate::qmc::{self, replicated_mean_vec};
use crate::quad;
use crate::Rational;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthIndex {
    pub g: Rational,
    pub k: u32,
    pub determinate: bool,
    /// Known lower bound on `g` when the index is not determined.
    pub lower_bound: Option<Rational>,
}

impl GrowthIndex {
    pub fn exact(g: Rational, k: u32) -> Self {
        Self { g, k, determinate: true, lower_bound: None }
    }

    pub fn at_least(bound: Rational) -> Self {
        Self { g: bound, k: 0, determinate: false, lower_bound: Some(bound) }
    }

    pub fn g_f64(&self) -> f64 {
        *self.g.numer() as f64 / *self.g.denom() as f64
    }
}

fn half_reciprocal_sum<'a>(a: impl Iterator<Item = &'a u32>) -> Rational {
    a.fold(Rational::zero(), |acc, &ai| acc + Rational::new(1, 2 * ai as i64))
}

/// Index of the superellipsoid `sum x_i^{2a_i} <= 1` at the vertex on axis
/// `j` (1-based): `(sum_{i != j} 1/(2a_i), 0)`.
pub fn example1_vertex_index(a: &[u32], j: usize) -> Result<GrowthIndex> {
    if j == 0 || j > a.len() {
        return Err(Error::InvalidInput(format!("axis {j} outside 1..={}", a.len())));
    }
    if a.contains(&0) {
        return Err(Error::InvalidInput("exponents must be >= 1".into()));
    }
    let g = half_reciprocal_sum(a.iter().enumerate().filter(|(i, _)| *i != j - 1).map(|(_, x)| x));
    Ok(GrowthIndex::exact(g, 0))
}

/// Global index of the superellipsoid. The smallest vertex index is
/// `g0 = sum 1/(2a_i) - 1/(2 min a)`; it is the index when `g0 <= 1/2`.
/// Otherwise curved boundary points may dominate and only `g >= 1/2` is
/// known.
pub fn example1_global_index(a: &[u32]) -> Result<GrowthIndex> {
    let min = *a.iter().min().ok_or_else(|| Error::InvalidInput("empty exponent vector".into()))?;
    if min == 0 {
        return Err(Error::InvalidInput("exponents must be >= 1".into()));
    }
    let g0 = half_reciprocal_sum(a.iter()) - Rational::new(1, 2 * min as i64);
    let half = Rational::new(1, 2);
    if g0 <= half {
        Ok(GrowthIndex::exact(g0, 0))
    } else {
        Ok(GrowthIndex::at_least(half))
    }
}

/// Index of `(sum_{i=1}^n x_i^{2k})^c`: `{q < eps} = {f < eps^{1/c}}` and
/// `f` has index `(n/(2k), 0)`.
pub fn powered_sum_index(n: u32, k: u32, c: u32) -> Result<GrowthIndex> {
    if n == 0 || k == 0 || c == 0 {
        return Err(Error::InvalidInput("n, k, c must be positive".into()));
    }
    Ok(GrowthIndex::exact(Rational::new(n as i64, 2 * k as i64 * c as i64), 0))
}

/// A function whose sublevel sets can be measured.
pub trait SublevelOracle: Sync {
    fn dim(&self) -> usize;

    fn eval(&self, x: &[f64]) -> f64;

    /// For each threshold `eps[i]`, writes into `out[i]` the length of
    /// `{s in [-half, half] : |f(base + s e_axis)| < eps[i]}`.
    ///
    /// The default scans 512 cells and refines crossings of `f = +-eps` by
    /// bisection; sign changes inside a single cell can be missed.
    fn line_lengths(&self, base: &[f64], axis: usize, half: f64, eps: &[f64], out: &mut [f64]) {
        let cells = 512;
        let mut x = base.to_vec();
        let mut at = |s: f64| {
            x[axis] = s;
            self.eval(&x)
        };
        let step = 2.0 * half / cells as f64;
        let values: Vec<f64> = (0..=cells).map(|i| at(-half + i as f64 * step)).collect();
        for (o, &e) in out.iter_mut().zip(eps) {
            let mut breaks = vec![-half];
            for i in 0..cells {
                let (a, b) = (values[i], values[i + 1]);
                for level in [-e, e] {
                    if (a < level) != (b < level) {
                        let s0 = -half + i as f64 * step;
                        let mut xl = base.to_vec();
                        let mut g = |s: f64| {
                            xl[axis] = s;
                            self.eval(&xl)
                        };
                        let root = if a < b {
                            bisect_monotone(g, s0, s0 + step, level)
                        } else {
                            bisect_monotone(|s| -g(s), s0, s0 + step, -level)
                        };
                        breaks.push(root);
                    }
                }
            }
            breaks.push(half);
            breaks.sort_by(f64::total_cmp);
            *o = breaks
                .windows(2)
                .filter(|w| w[1] > w[0] && at(0.5 * (w[0] + w[1])).abs() < e)
                .map(|w| w[1] - w[0])
                .sum();
        }
    }
}

/// Polynomial sublevel functions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SublevelFunction {
    Polynomial {
        poly: Polynomial,
    },
    /// `base^power`, measured through `|base| < eps^{1/power}` without
    /// expanding the power.
    Power {
        base: Polynomial,
        power: u32,
    },
}

impl SublevelFunction {
    pub fn poly(p: Polynomial) -> Self {
        SublevelFunction::Polynomial { poly: p }
    }

    /// `sum_i x_i^{2a_i}`.
    pub fn power_sum(half_exponents: &[u32]) -> Self {
        Self::poly(Polynomial::even_power_sum(half_exponents))
    }

    /// The same function as a single expanded polynomial.
    pub fn expanded(&self) -> Polynomial {
        match self {
            SublevelFunction::Polynomial { poly } => poly.clone(),
            SublevelFunction::Power { base, power } => base.pow(*power),
        }
    }

    fn base(&self) -> &Polynomial {
        match self {
            SublevelFunction::Polynomial { poly } => poly,
            SublevelFunction::Power { base, .. } => base,
        }
    }

    fn threshold(&self, eps: f64) -> f64 {
        match self {
            SublevelFunction::Polynomial { .. } => eps,
            SublevelFunction::Power { power, .. } => eps.powf(1.0 / *power as f64),
        }
    }
}

impl SublevelOracle for SublevelFunction {
    fn dim(&self) -> usize {
        self.base().arity()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        match self {
            SublevelFunction::Polynomial { poly } => poly.eval(x),
            SublevelFunction::Power { base, power } => base.eval(x).powi(*power as i32),
        }
    }

    /// Exact up to root bisection: the restriction is a univariate
    /// polynomial split into monotone pieces.
    fn line_lengths(&self, base: &[f64], axis: usize, half: f64, eps: &[f64], out: &mut [f64]) {
        let line: UniPoly = self.base().restrict_axis(base, axis);
        let pieces = line.monotone_pieces(-half, half);
        let floor = pieces.min_abs();
        for (o, &e) in out.iter_mut().zip(eps) {
            let t = self.threshold(e);
            *o = if floor >= t { 0.0 } else { pieces.sublevel_length(t) };
        }
    }
}

/// Graph function of a boundary chart as a sublevel function of the
/// tangent coordinates.
impl SublevelOracle for BoundaryChart {
    fn dim(&self) -> usize {
        self.dimension()
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.f(x).unwrap_or(f64::INFINITY)
    }
}

/// Knobs of the sublevel-measure estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelOptions {
    /// Transverse sample points per replicate (16 replicates).
    pub lines: usize,
    /// Coordinate along which lines are measured exactly.
    pub axis: usize,
    /// Fail with a budget error when any `stderr / measure` exceeds this.
    pub max_rel_err: Option<f64>,
    /// Stream label; estimates with the same label and seed share samples.
    pub task: String,
}

impl Default for SublevelOptions {
    fn default() -> Self {
        Self { lines: 1 << 14, axis: 0, max_rel_err: None, task: "sublevel".into() }
    }
}

/// Inner radius of the log-radial mixture component, relative to `r`.
const LOG_RADIAL_FLOOR: f64 = 1e-7;

/// Estimates `m{|x| < r, |f(x)| < eps}` for every `eps` in the grid,
/// returning `(measure, stderr)` pairs.
///
/// The ball is sliced into lines parallel to `opts.axis`; each line's
/// sublevel length is computed exactly and the transverse offset `y` is
/// drawn by randomised QMC from a half-uniform, half log-radial mixture on
/// the `(d-1)`-ball, weighted by the inverse mixture density. The
/// log-radial half keeps sublevel sets that shrink onto the axis visible
/// at tiny `eps`. All thresholds share the same samples, so the estimates
/// are monotone in `eps`. In one dimension the measure is exact.
pub fn estimate_sublevel_curve<O: SublevelOracle + ?Sized>(
    f: &O,
    r: f64,
    eps: &[f64],
    seed: u64,
    opts: &SublevelOptions,
) -> Result<Vec<(f64, f64)>> {
    if !(r > 0.0) {
        return Err(Error::InvalidInput("radius must be positive".into()));
    }
    if eps.iter().any(|e| !(*e > 0.0)) {
        return Err(Error::InvalidInput("thresholds must be positive".into()));
    }
    let d = f.dim();
    if opts.axis >= d {
        return Err(Error::DimensionMismatch { expected: d, got: opts.axis + 1 });
    }
    let k = eps.len();
    if d == 1 {
        let mut out = vec![0.0; k];
        f.line_lengths(&[0.0], 0, r, eps, &mut out);
        return Ok(out.into_iter().map(|m| (m, 0.0)).collect());
    }
    let m = d - 1;
    if m + 2 > qmc::MAX_DIM {
        return Err(Error::Unsupported(format!("dimension {d} above QMC limit")));
    }
    let vol = qmc::unit_ball_volume(m) * r.powi(m as i32);
    let sphere = m as f64 * qmc::unit_ball_volume(m);
    let rho_min = r * LOG_RADIAL_FLOOR;
    let log_span = (r / rho_min).ln();
    let axis = opts.axis;
    let results = replicated_mean_vec(m + 2, opts.lines, k, seed, &opts.task, |u, out| {
        let mut y = vec![0.0; m];
        if u[0] < 0.5 {
            qmc::cube_to_ball(&u[1..m + 2], &mut y);
            y.iter_mut().for_each(|v| *v *= r);
        } else {
            qmc::cube_to_ball(&u[1..m + 2], &mut y);
            let n = norm(&y).max(1e-300);
            let rho = rho_min * (log_span * u[m + 1]).exp();
            y.iter_mut().for_each(|v| *v *= rho / n);
        }
        let rho = norm(&y);
        if rho >= r {
            return;
        }
        let mut density = 0.5 / vol;
        if rho >= rho_min {
            density += 0.5 / (log_span * sphere * rho.powi(m as i32));
        }
        let mut base = Vec::with_capacity(d);
        base.extend_from_slice(&y[..axis]);
        base.push(0.0);
        base.extend_from_slice(&y[axis..]);
        let half = (r * r - rho * rho).sqrt();
        f.line_lengths(&base, axis, half, eps, out);
        out.iter_mut().for_each(|o| *o /= density);
    });
    if let Some(limit) = opts.max_rel_err {
        for (i, (mean, se)) in results.iter().enumerate() {
            if *se > limit * mean.abs() {
                return Err(Error::Budget(format!(
                    "relative error {:.3e} at eps = {:e} exceeds {limit:e}",
                    se / mean,
                    eps[i]
                )));
            }
        }
    }
    Ok(results)
}

/// Single-threshold form of [`estimate_sublevel_curve`].
pub fn estimate_sublevel_measure<O: SublevelOracle + ?Sized>(
    f: &O,
    r: f64,
    eps: f64,
    seed: u64,
    opts: &SublevelOptions,
) -> Result<(f64, f64)> {
    Ok(estimate_sublevel_curve(f, r, &[eps], seed, opts)?[0])
}

/// Plain QMC indicator estimate over the ball; no structure assumed.
pub fn estimate_sublevel_blackbox<F>(f: F, dim: usize, r: f64, eps: f64, seed: u64, points: usize) -> (f64, f64)
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let vol = qmc::unit_ball_volume(dim) * r.powi(dim as i32);
    let (m, se) = qmc::replicated_mean(dim + 1, points, seed, "sublevel-blackbox", |u| {
        let mut x = vec![0.0; dim];
        qmc::cube_to_ball(u, &mut x);
        x.iter_mut().for_each(|v| *v *= r);
        if f(&x).abs() < eps {
            1.0
        } else {
            0.0
        }
    });
    (m * vol, se * vol)
}

/// Deterministic oracle for `d <= 2`: adaptive quadrature over the first
/// coordinate of exact sublevel lengths along the last one.
pub fn sublevel_measure_quadrature<O: SublevelOracle + ?Sized>(f: &O, r: f64, eps: f64, tol: f64) -> Result<f64> {
    match f.dim() {
        1 => {
            let mut out = [0.0];
            f.line_lengths(&[0.0], 0, r, &[eps], &mut out);
            Ok(out[0])
        }
        2 => {
            let g = |x1: f64| {
                let half = (r * r - x1 * x1).max(0.0).sqrt();
                let mut out = [0.0];
                f.line_lengths(&[x1, 0.0], 1, half, &[eps], &mut out);
                out[0]
            };
            Ok(quad::adaptive(g, &[-r, 0.0, r], tol, 0.0, 200_000)?.0)
        }
        d => Err(Error::Unsupported(format!("quadrature oracle in dimension {d}"))),
    }
}

/// Measured sublevel curve.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelSamples {
    pub dimension: usize,
    pub radius: f64,
    pub function: String,
    pub seed: u64,
    /// Geometric, decreasing.
    pub epsilons: Vec<f64>,
    pub measures: Vec<f64>,
    pub stderrs: Vec<f64>,
}

impl SublevelSamples {
    /// Measures `f` over the grid (sorted decreasing first).
    pub fn measure<O: SublevelOracle + ?Sized>(
        f: &O,
        label: &str,
        r: f64,
        eps: &[f64],
        seed: u64,
        opts: &SublevelOptions,
    ) -> Result<Self> {
        let mut grid = eps.to_vec();
        grid.sort_by(|a, b| b.total_cmp(a));
        let est = estimate_sublevel_curve(f, r, &grid, seed, opts)?;
        Ok(Self {
            dimension: f.dim(),
            radius: r,
            function: label.to_string(),
            seed,
            epsilons: grid,
            measures: est.iter().map(|e| e.0).collect(),
            stderrs: est.iter().map(|e| e.1).collect(),
        })
    }

    /// `m(eps)` nonincreasing as `eps` decreases, within two standard
    /// errors.
    pub fn is_monotone(&self) -> bool {
        self.measures.windows(2).zip(self.stderrs.windows(2)).all(|(m, s)| m[1] <= m[0] + 2.0 * (s[0] + s[1]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub g_hat: f64,
    pub k_hat: u32,
    pub c_hat: f64,
    /// RMS residual in log space.
    pub residual: f64,
    /// OLS standard error of `g_hat`.
    pub g_stderr: f64,
}

/// Fits `m = c eps^g |ln eps|^k` with `k in 0..dimension` by enumeration.
/// Needs at least 8 positive points spanning at least 3 decades.
pub fn fit_growth(samples: &SublevelSamples) -> Result<FitResult> {
    let pts: Vec<(f64, f64)> =
        samples.epsilons.iter().zip(&samples.measures).filter(|(_, m)| **m > 0.0).map(|(e, m)| (*e, *m)).collect();
    if pts.len() < 8 {
        return Err(Error::SingularFit(format!("{} usable points, need 8", pts.len())));
    }
    let (lo, hi) = pts.iter().fold((f64::INFINITY, 0f64), |(lo, hi), (e, _)| (lo.min(*e), hi.max(*e)));
    if hi / lo < 1e3 * (1.0 - 1e-9) {
        return Err(Error::SingularFit(format!("grid spans {:.2} decades, need 3", (hi / lo).log10())));
    }
    let x: Vec<f64> = pts.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pts.iter().map(|p| p.1).collect();
    let max_k = samples.dimension.saturating_sub(1) as u32;
    let f = fit_power_log(&x, &y, max_k)?;
    Ok(FitResult {
        g_hat: f.slope,
        k_hat: f.log_power,
        c_hat: f.intercept.exp(),
        residual: f.residual,
        g_stderr: f.slope_stderr,
    })
}

/// Truncated distance integrals `I(h, delta) = int_{d > delta} d^{-h} dmu`
/// along rays from the chart origin, on a logarithmic radial grid.
struct RayIntegrals {
    /// Per node: distance and quadrature weight (including the surface
    /// Jacobian).
    nodes: Vec<(f64, f64)>,
}

impl RayIntegrals {
    fn value(&self, h: f64, delta: f64) -> f64 {
        self.nodes.iter().filter(|(d, _)| *d > delta).map(|(d, w)| w * d.powf(-h)).sum()
    }
}

const RAY_NODES: usize = 8000;
const RAY_DECADES: f64 = 9.0;

fn ray_integrals<D>(chart: &BoundaryChart, rho: f64, dirs: &[(Vec<f64>, f64)], dist: D) -> Result<RayIntegrals>
where
    D: Fn(&[f64]) -> Result<f64>,
{
    let n = chart.dimension();
    let lmin = rho.ln() - RAY_DECADES * std::f64::consts::LN_10;
    let dl = (rho.ln() - lmin) / RAY_NODES as f64;
    let mut nodes = Vec::with_capacity(RAY_NODES * dirs.len());
    for (dir, wdir) in dirs {
        for i in 0..RAY_NODES {
            let tau = (lmin + (i as f64 + 0.5) * dl).exp();
            let u: Vec<f64> = dir.iter().map(|v| v * tau).collect();
            let grad = chart.gradient(&u)?;
            let jac = (1.0 + grad.iter().map(|g| g * g).sum::<f64>()).sqrt();
            // du = tau^n dlog(tau) dtheta in polar form
            let w = wdir * dl * tau.powi(n as i32) * jac;
            nodes.push((dist(&u)?, w));
        }
    }
    Ok(RayIntegrals { nodes })
}

/// Growth slope of `ln I(h, delta)` against `ln(1/delta)` on the lower
/// half of the delta grid, for each `h`.
fn divergence_index(rays: &RayIntegrals, h_grid: &[f64]) -> Result<f64> {
    let mut ds: Vec<f64> = rays.nodes.iter().map(|n| n.0).filter(|d| *d > 0.0).collect();
    ds.sort_by(f64::total_cmp);
    let dmax = *ds.last().ok_or_else(|| Error::InvalidInput("empty ray sample".into()))?;
    let dmin = (ds[ds.len() / 200] * 1e3).max(dmax * 1e-13);
    let top = dmax * 1e-3;
    if dmin >= top {
        return Err(Error::InvalidInput("distance range too narrow".into()));
    }
    let deltas = crate::fit::geometric_grid(dmin, top, 24);
    let lower = &deltas[..12];
    let mut convergent = false;
    let mut estimates = Vec::new();
    for &h in h_grid {
        let inv: Vec<f64> = lower.iter().map(|d| 1.0 / d).collect();
        let vals: Vec<f64> = lower.iter().map(|&d| rays.value(h, d)).collect();
        let s = crate::fit::log_log_slope(&inv, &vals)?.slope;
        if s < 0.02 {
            convergent = true;
        } else if s > 0.15 {
            estimates.push(h - s);
        }
    }
    if !convergent || estimates.is_empty() {
        return Err(Error::InvalidInput("h grid does not bracket the divergence onset".into()));
    }
    Ok(estimates.iter().sum::<f64>() / estimates.len() as f64)
}

fn ray_directions(n: usize) -> Vec<(Vec<f64>, f64)> {
    if n == 1 {
        vec![(vec![1.0], 1.0), (vec![-1.0], 1.0)]
    } else {
        let count = 64;
        let w = std::f64::consts::TAU / count as f64;
        crate::geometry::direction_sample(2, count).into_iter().map(|d| (d, w)).collect()
    }
}

/// `sup{h : int d(x, T)^{-h} dmu < inf}` near the chart base point, `T`
/// the tangent plane there: for divergent `h` the truncated integral grows
/// like `delta^{-(h - index)}`, and the index is read off the growth rate.
pub fn tangent_distance_index(chart: &BoundaryChart, h_grid: &[f64]) -> Result<f64> {
    let rho = 0.5 * chart.r_chart();
    let f0 = chart.f(&vec![0.0; chart.dimension()])?;
    let rays = ray_integrals(chart, rho, &ray_directions(chart.dimension()), |u| Ok((chart.f(u)? - f0).abs()))?;
    divergence_index(&rays, h_grid)
}

/// Same as [`tangent_distance_index`] for the hyperplane through the base
/// point with unit normal `nu`. Curves only: in higher dimensions the zero
/// set of the distance is not a point and the ray grid does not resolve it.
pub fn hyperplane_distance_index(chart: &BoundaryChart, nu: &[f64], h_grid: &[f64]) -> Result<f64> {
    if chart.dimension() != 1 {
        return Err(Error::Unsupported("hyperplane distance index for surfaces".into()));
    }
    let x0 = chart.base().to_vec();
    let rho = 0.5 * chart.r_chart();
    let rays = ray_integrals(chart, rho, &ray_directions(1), |u| {
        let x = chart.lift(u)?;
        Ok(x.iter().zip(&x0).zip(nu).map(|((a, b), c)| (a - b) * c).sum::<f64>().abs())
    })?;
    divergence_index(&rays, h_grid)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn vertex_indices() {
        assert_eq!(example1_vertex_index(&[2, 3], 2).unwrap(), GrowthIndex::exact(r(1, 4), 0));
        assert_eq!(example1_vertex_index(&[1, 1, 1, 1], 3).unwrap().g, r(3, 2));
        assert_eq!(example1_vertex_index(&[1, 2, 4], 1).unwrap().g, r(3, 8));
        assert!(example1_vertex_index(&[1, 2], 0).is_err());
        assert!(example1_vertex_index(&[1, 2], 3).is_err());
    }

    #[test]
    fn global_indices() {
        assert_eq!(example1_global_index(&[1, 2, 4]).unwrap(), GrowthIndex::exact(r(3, 8), 0));
        assert_eq!(example1_global_index(&[1, 1]).unwrap(), GrowthIndex::exact(r(1, 2), 0));
        let ball = example1_global_index(&[1, 1, 1]).unwrap();
        assert!(!ball.determinate);
        assert_eq!(ball.lower_bound, Some(r(1, 2)));
    }

    #[test]
    fn powered_sums() {
        assert_eq!(powered_sum_index(3, 1, 1).unwrap().g, r(3, 2));
        assert_eq!(powered_sum_index(6, 2, 3).unwrap().g, r(1, 2));
        assert_eq!(powered_sum_index(1, 1, 1).unwrap().g, r(1, 2));
    }

    #[test]
    fn one_dimensional_measure_is_exact() {
        let f = SublevelFunction::power_sum(&[1]);
        let (m, se) = estimate_sublevel_measure(&f, 1.0, 0.01, 1, &SublevelOptions::default()).unwrap();
        assert!((m - 0.2).abs() < 1e-15);
        assert_eq!(se, 0.0);
    }

    #[test]
    fn disk_sublevel() {
        let f = SublevelFunction::power_sum(&[1, 1]);
        let opts = SublevelOptions { lines: 4096, ..Default::default() };
        let (m, se) = estimate_sublevel_measure(&f, 1.0, 0.1, 3, &opts).unwrap();
        let exact = std::f64::consts::PI * 0.1;
        assert!((m - exact).abs() < 4.0 * se + 1e-6, "{m} {se}");
    }

    #[test]
    fn default_line_scan_matches_exact() {
        struct Square;
        impl SublevelOracle for Square {
            fn dim(&self) -> usize {
                1
            }
            fn eval(&self, x: &[f64]) -> f64 {
                x[0] * x[0] - 0.25
            }
        }
        let mut out = [0.0; 2];
        Square.line_lengths(&[0.0], 0, 1.0, &[0.01, 0.3], &mut out);
        let exact0 = 2.0 * (0.26f64.sqrt() - 0.24f64.sqrt());
        assert!((out[0] - exact0).abs() < 1e-12);
        assert!((out[1] - 2.0 * 0.55f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn fit_needs_enough_points() {
        let s = SublevelSamples {
            dimension: 1,
            radius: 1.0,
            function: "x".into(),
            seed: 0,
            epsilons: vec![1e-1, 1e-2, 1e-3],
            measures: vec![1.0, 0.5, 0.25],
            stderrs: vec![0.0; 3],
        };
        assert!(matches!(fit_growth(&s), Err(Error::SingularFit(_))));
    }
}
