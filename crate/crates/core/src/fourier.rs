//! Fourier transforms of indicator functions (through hyperplane slices)
//! and of graph surface measures, with envelope fits of their decay.

use std::cell::RefCell;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::fit_power_log;
use crate::geometry::{BoundaryChart, Domain};
use crate::indices::GrowthIndex;
use crate::oscint::{
    model_cutoff, osc_integrate, phase_integrate, OscOptions, OscillatoryIntegrand, QuadratureResult, SingularityHint,
};
use crate::poly::bisect_monotone;
use crate::quad;
use crate::{Complex, Rational};

/// Largest log power tried by [`fit_decay`].
pub const MAX_LOG_POWER: u32 = 2;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecaySeries {
    pub direction: Vec<f64>,
    pub r_grid: Vec<f64>,
    pub values: Vec<Complex>,
    pub errors: Vec<f64>,
}

impl DecaySeries {
    pub fn new(direction: Vec<f64>, r_grid: Vec<f64>, results: Vec<QuadratureResult>) -> Result<Self> {
        let n: f64 = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
        if (n - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidInput(format!("direction has norm {n}")));
        }
        if r_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidInput("R grid must be strictly increasing".into()));
        }
        if results.len() != r_grid.len() {
            return Err(Error::DimensionMismatch { expected: r_grid.len(), got: results.len() });
        }
        Ok(Self {
            direction,
            r_grid,
            values: results.iter().map(|r| r.value).collect(),
            errors: results.iter().map(|r| r.error).collect(),
        })
    }

    pub fn magnitudes(&self) -> Vec<f64> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    pub fn len(&self) -> usize {
        self.r_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r_grid.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayFit {
    pub delta_hat: f64,
    pub l_hat: u32,
    pub c_hat: f64,
    pub residual: f64,
}

/// Octave-block maxima `(R, |F|)` of a series, blocks anchored at the
/// first grid point.
pub fn envelope_blocks(series: &DecaySeries) -> Vec<(f64, f64)> {
    let Some(&r0) = series.r_grid.first() else {
        return Vec::new();
    };
    let mut out: Vec<(f64, f64)> = Vec::new();
    let mut current = usize::MAX;
    for (r, v) in series.r_grid.iter().zip(&series.values) {
        let block = (r / r0).log2().floor() as usize;
        let m = v.norm();
        if block != current {
            out.push((*r, m));
            current = block;
        } else if m > out.last().unwrap().1 {
            *out.last_mut().unwrap() = (*r, m);
        }
    }
    out
}

/// Fits `|F(R v)| ~ C R^{-delta} (ln R)^l` on octave-block maxima.
pub fn fit_decay(series: &DecaySeries) -> Result<DecayFit> {
    let (r0, r1) = match (series.r_grid.first(), series.r_grid.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::SingularFit("empty series".into())),
    };
    if series.len() < 16 || r1 / r0 < 99.9 {
        return Err(Error::SingularFit(format!(
            "{} points over {:.2} decades; need 16 over 2",
            series.len(),
            (r1 / r0).log10()
        )));
    }
    let blocks: Vec<(f64, f64)> = envelope_blocks(series).into_iter().filter(|b| b.1 > 0.0).collect();
    if blocks.len() < 4 {
        return Err(Error::SingularFit(format!("{} octave blocks", blocks.len())));
    }
    let (x, y): (Vec<f64>, Vec<f64>) = blocks.into_iter().unzip();
    let f = fit_power_log(&x, &y, MAX_LOG_POWER)?;
    Ok(DecayFit { delta_hat: -f.slope, l_hat: f.log_power, c_hat: f.intercept.exp(), residual: f.residual })
}

/// `F(t v) = int slice(v, r) e^{-itr} dr`, the slice reduction of the
/// indicator transform. `t = 0` returns the volume.
pub fn indicator_ft_slice(domain: &Domain, v: &[f64], t: f64, opts: &OscOptions) -> Result<QuadratureResult> {
    let (lo, hi) = domain.support_interval(v)?;
    if t == 0.0 {
        let vol = domain.volume(0)?;
        return Ok(QuadratureResult { value: Complex::new(vol.value, 0.0), error: vol.stderr, panels: 0 });
    }
    let failure = RefCell::new(None);
    let slice = |r: f64| match domain.slice_measure(v, r) {
        Ok(m) => m,
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let hint = Some(SingularityHint::GENERIC);
    let integrand = OscillatoryIntegrand::new(slice, lo, hi).with_hints(hint, hint);
    let out = osc_integrate(&integrand, t, opts)?;
    match failure.into_inner() {
        Some(e) => Err(e),
        None => Ok(out),
    }
}

/// Indicator transform on a geometric grid of `points` radii in
/// `[r_min, r_max]`, evaluated in parallel.
pub fn decay_sweep(
    domain: &Domain,
    v: &[f64],
    r_min: f64,
    r_max: f64,
    points: usize,
    opts: &OscOptions,
) -> Result<DecaySeries> {
    if !(r_min > 2.0) || r_max < r_min || points == 0 {
        return Err(Error::InvalidInput("need 2 < R_min <= R_max and points >= 1".into()));
    }
    decay_sweep_on(domain, v, &crate::fit::geometric_grid(r_min, r_max, points), opts)
}

/// Indicator transform at each radius of `grid`, evaluated in parallel.
pub fn decay_sweep_on(domain: &Domain, v: &[f64], grid: &[f64], opts: &OscOptions) -> Result<DecaySeries> {
    let results: Vec<QuadratureResult> =
        grid.par_iter().map(|&t| indicator_ft_slice(domain, v, t, opts)).collect::<Result<_>>()?;
    DecaySeries::new(v.to_vec(), grid.to_vec(), results)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CutoffProfile {
    /// Indicator of the disk `|u| <= radius`.
    Indicator,
    /// `beta(|u| / radius)`, equal to 1 up to a quarter of the radius and
    /// vanishing from three quarters on.
    Smooth,
}

/// Cutoff `phi_0` on the tangent coordinates of a chart.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Cutoff {
    pub radius: f64,
    pub profile: CutoffProfile,
}

impl Cutoff {
    pub fn eval(&self, u: &[f64]) -> f64 {
        let r = u.iter().map(|x| x * x).sum::<f64>().sqrt();
        match self.profile {
            CutoffProfile::Indicator => f64::from(r <= self.radius),
            CutoffProfile::Smooth => model_cutoff(r / self.radius),
        }
    }

    /// Radius beyond which the cutoff vanishes.
    pub fn support(&self) -> f64 {
        match self.profile {
            CutoffProfile::Indicator => self.radius,
            CutoffProfile::Smooth => 0.75 * self.radius,
        }
    }

    /// Smooth cutoff on half the validated chart radius.
    pub fn for_chart(chart: &BoundaryChart) -> Self {
        Self { radius: 0.5 * chart.r_chart(), profile: CutoffProfile::Smooth }
    }
}

/// Piecewise Chebyshev interpolant of a curve chart's graph and slope.
struct GraphTable {
    lo: f64,
    width: f64,
    nodes: Vec<f64>,
    weights: Vec<f64>,
    values: Vec<Vec<f64>>,
    slopes: Vec<Vec<f64>>,
}

const TABLE_PANELS: usize = 128;
const TABLE_DEGREE: usize = 16;

impl GraphTable {
    fn new(chart: &BoundaryChart, lo: f64, hi: f64) -> Result<Self> {
        let width = (hi - lo) / TABLE_PANELS as f64;
        let m = TABLE_DEGREE;
        let nodes: Vec<f64> = (0..=m).map(|j| -(std::f64::consts::PI * j as f64 / m as f64).cos()).collect();
        let weights: Vec<f64> = (0..=m)
            .map(|j| {
                let s = if j % 2 == 0 { 1.0 } else { -1.0 };
                if j == 0 || j == m {
                    0.5 * s
                } else {
                    s
                }
            })
            .collect();
        let panels: Vec<(Vec<f64>, Vec<f64>)> = (0..TABLE_PANELS)
            .into_par_iter()
            .map(|p| {
                let c = lo + (p as f64 + 0.5) * width;
                let mut vals = Vec::with_capacity(m + 1);
                let mut slopes = Vec::with_capacity(m + 1);
                for x in &nodes {
                    let u = [c + 0.5 * width * x];
                    vals.push(chart.f(&u)?);
                    slopes.push(chart.gradient(&u)?[0]);
                }
                Ok((vals, slopes))
            })
            .collect::<Result<_>>()?;
        let (values, slopes) = panels.into_iter().unzip();
        Ok(Self { lo, width, nodes, weights, values, slopes })
    }

    fn interp(&self, table: &[Vec<f64>], u: f64) -> f64 {
        let p = (((u - self.lo) / self.width).floor().max(0.0) as usize).min(TABLE_PANELS - 1);
        let c = self.lo + (p as f64 + 0.5) * self.width;
        let x = (u - c) / (0.5 * self.width);
        let (mut num, mut den) = (0.0, 0.0);
        for ((xj, wj), fj) in self.nodes.iter().zip(&self.weights).zip(&table[p]) {
            let d = x - xj;
            if d == 0.0 {
                return *fj;
            }
            let w = wj / d;
            num += w * fj;
            den += w;
        }
        num / den
    }

    fn f(&self, u: f64) -> f64 {
        self.interp(&self.values, u)
    }

    fn slope(&self, u: f64) -> f64 {
        self.interp(&self.slopes, u)
    }
}

fn tolerances() -> OscOptions {
    OscOptions { abs_tol: 1e-16, rel_tol: 1e-12, extra_segments: 400_000 }
}

/// `int phi_0(u) e^{-i(xi_{n+1} f(u) + xi' . u)} du` over the chart's
/// tangent coordinates. `xi` has the tangent components first and the
/// normal component last.
pub fn surface_ft_graph(chart: &BoundaryChart, cutoff: &Cutoff, xi: &[f64]) -> Result<QuadratureResult> {
    let n = chart.dimension();
    if xi.len() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: xi.len() });
    }
    let rho = cutoff.support();
    if rho > chart.r_chart() {
        return Err(Error::InvalidInput(format!("cutoff support {rho} exceeds chart radius {}", chart.r_chart())));
    }
    match n {
        1 => {
            let table = GraphTable::new(chart, -rho, rho)?;
            surface_ft_curve(&table, cutoff, xi)
        }
        2 => surface_ft_surface(chart, cutoff, xi),
        _ => Err(Error::Unsupported(format!("surface transforms for chart dimension {n}"))),
    }
}

fn surface_ft_curve(table: &GraphTable, cutoff: &Cutoff, xi: &[f64]) -> Result<QuadratureResult> {
    let rho = cutoff.support();
    let (x1, x2) = (xi[0], xi[1]);
    phase_integrate(
        |u| -(x2 * table.f(u) + x1 * u),
        |u| -(x2 * table.slope(u) + x1),
        |u| cutoff.eval(&[u]),
        -rho,
        rho,
        &tolerances(),
    )
}

fn surface_ft_surface(chart: &BoundaryChart, cutoff: &Cutoff, xi: &[f64]) -> Result<QuadratureResult> {
    let rho = cutoff.support();
    let failure = RefCell::new(None);
    let record = |e: Error| {
        failure.borrow_mut().get_or_insert(e);
    };
    let inner = |u2: f64| -> Complex {
        let half = (rho * rho - u2 * u2).max(0.0).sqrt();
        if half == 0.0 {
            return Complex::new(0.0, 0.0);
        }
        let f = |u1: f64| chart.f(&[u1, u2]).unwrap_or(f64::NAN);
        let df = |u1: f64| chart.gradient(&[u1, u2]).map(|g| g[0]).unwrap_or(f64::NAN);
        match phase_integrate(
            |u1| -(xi[2] * f(u1) + xi[0] * u1 + xi[1] * u2),
            |u1| -(xi[2] * df(u1) + xi[0]),
            |u1| cutoff.eval(&[u1, u2]),
            -half,
            half,
            &OscOptions { abs_tol: 1e-13, rel_tol: 1e-9, extra_segments: 20_000 },
        ) {
            Ok(r) if r.value.re.is_finite() && r.value.im.is_finite() => r.value,
            Ok(_) => {
                record(Error::RootSolve(format!("graph undefined on the line u2 = {u2}")));
                Complex::new(0.0, 0.0)
            }
            Err(e) => {
                record(e);
                Complex::new(0.0, 0.0)
            }
        }
    };
    // outer partition: phase variation along u2 is at most |xi| (1 + slope)
    let xi_norm = xi.iter().map(|x| x * x).sum::<f64>().sqrt();
    let pieces = ((xi_norm * 3.0 * 2.0 * rho / std::f64::consts::PI).ceil() as usize).max(4);
    let breaks: Vec<f64> = (0..=pieces).map(|i| -rho + 2.0 * rho * i as f64 / pieces as f64).collect();
    let (value, error) = quad::adaptive(inner, &breaks, 1e-11, 1e-8, pieces + 2_000)?;
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(QuadratureResult { value, error, panels: pieces })
}

/// [`surface_ft_graph`] along `xi = t * direction` for each `t`.
pub fn surface_decay_sweep(
    chart: &BoundaryChart,
    cutoff: &Cutoff,
    direction: &[f64],
    t_grid: &[f64],
) -> Result<DecaySeries> {
    let n = chart.dimension();
    if direction.len() != n + 1 {
        return Err(Error::DimensionMismatch { expected: n + 1, got: direction.len() });
    }
    let results: Vec<QuadratureResult> = if n == 1 {
        let table = GraphTable::new(chart, -cutoff.support(), cutoff.support())?;
        t_grid
            .par_iter()
            .map(|&t| {
                let xi: Vec<f64> = direction.iter().map(|d| d * t).collect();
                surface_ft_curve(&table, cutoff, &xi)
            })
            .collect::<Result<_>>()?
    } else {
        t_grid
            .par_iter()
            .map(|&t| {
                let xi: Vec<f64> = direction.iter().map(|d| d * t).collect();
                surface_ft_graph(chart, cutoff, &xi)
            })
            .collect::<Result<_>>()?
    };
    DecaySeries::new(direction.to_vec(), t_grid.to_vec(), results)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IbpReport {
    /// Depth of the boundary cap `{0 <= w <= W}` below the tangent line.
    pub cap: f64,
    pub t: Vec<f64>,
    /// Cap-localised indicator transform `J(t)`.
    pub indicator: Vec<Complex>,
    /// Surface term `S(t)`.
    pub surface: Vec<Complex>,
    /// `J(t) - S(t) / (i t)`.
    pub remainder: Vec<Complex>,
    pub remainder_exponent: Option<f64>,
    pub pass: bool,
}

/// Weight on the cap, `(1 - w/W)^3`.
fn cap_weight(w: f64, cap: f64) -> f64 {
    if w >= cap {
        0.0
    } else {
        (1.0 - w / cap).powi(3)
    }
}

/// Integration by parts in the normal variable, checked numerically.
///
/// With `w` the depth below the tangent line at the chart base point and
/// `beta(w) = (1 - w/W)^3`,
/// `J(t) = int_0^W beta(w) slice(h - w) e^{-itw} dw`
/// (slices from the domain) splits as `S(t)/(it) + R(t)` with
/// `S(t) = int beta(f(u)) e^{-it f(u)} du` (graph from the chart) and
/// `R = O(t^{-2})`. The remainder's decay exponent is fitted on the
/// octave envelope and must reach `2 - 0.1`.
///
/// `cap` defaults to 90% of the lower graph height at 90% of the chart
/// radius; `Some(0.0)` gives identically zero sides.
pub fn ibp_identity_check(
    domain: &Domain,
    chart: &BoundaryChart,
    t_grid: &[f64],
    cap: Option<f64>,
) -> Result<IbpReport> {
    if chart.dimension() != 1 {
        return Err(Error::Unsupported("integration-by-parts check for surfaces".into()));
    }
    let normal = chart.normal().to_vec();
    let height: f64 = chart.base().iter().zip(&normal).map(|(a, b)| a * b).sum();
    let rho = 0.9 * chart.r_chart();
    let table = GraphTable::new(chart, -rho, rho)?;
    let cap = match cap {
        Some(c) => c,
        None => 0.9 * table.f(-rho).min(table.f(rho)),
    };
    if !(cap >= 0.0) {
        return Err(Error::InvalidInput(format!("cap depth {cap} must be nonnegative")));
    }
    let zeros = vec![Complex::new(0.0, 0.0); t_grid.len()];
    if cap == 0.0 {
        return Ok(IbpReport {
            cap,
            t: t_grid.to_vec(),
            indicator: zeros.clone(),
            surface: zeros.clone(),
            remainder: zeros,
            remainder_exponent: None,
            pass: true,
        });
    }
    // cap ends on each side of the base point, from the graph table
    let (u_lo, u_hi) = cap_ends(&table, rho, cap)?;
    let opts = tolerances();
    let rows: Vec<(Complex, Complex)> = t_grid
        .par_iter()
        .map(|&t| {
            let slice = |w: f64| domain.slice_measure(&normal, height - w).unwrap_or(f64::NAN) * cap_weight(w, cap);
            let j = osc_integrate(
                &OscillatoryIntegrand::new(slice, 0.0, cap).with_hints(Some(SingularityHint::GENERIC), None),
                t,
                &opts,
            )?;
            let s = phase_integrate(
                |u| -t * table.f(u),
                |u| -t * table.slope(u),
                |u| cap_weight(table.f(u), cap),
                u_lo,
                u_hi,
                &opts,
            )?;
            if !(j.value.re.is_finite() && j.value.im.is_finite()) {
                return Err(Error::RootSolve("slice measure failed inside the cap".into()));
            }
            Ok((j.value, s.value))
        })
        .collect::<Result<_>>()?;
    let (indicator, surface): (Vec<Complex>, Vec<Complex>) = rows.into_iter().unzip();
    let remainder: Vec<Complex> =
        indicator.iter().zip(&surface).zip(t_grid).map(|((j, s), &t)| j - s / Complex::new(0.0, t)).collect();
    let series = DecaySeries {
        direction: normal,
        r_grid: t_grid.to_vec(),
        values: remainder.clone(),
        errors: vec![0.0; t_grid.len()],
    };
    let fit = fit_decay(&series)?;
    Ok(IbpReport {
        cap,
        t: t_grid.to_vec(),
        indicator,
        surface,
        remainder,
        remainder_exponent: Some(fit.delta_hat),
        pass: fit.delta_hat >= 1.9,
    })
}

fn cap_ends(table: &GraphTable, rho: f64, cap: f64) -> Result<(f64, f64)> {
    let cells = 4096;
    let mut ends = [None, None];
    for (side, sign) in [(0usize, -1.0f64), (1, 1.0)] {
        let mut prev = table.f(0.0);
        if prev >= cap {
            return Err(Error::InvalidInput("cap shallower than the graph at the base point".into()));
        }
        for i in 1..=cells {
            let u = sign * rho * i as f64 / cells as f64;
            let cur = table.f(u);
            if cur < prev - 1e-15 * cap && cur < cap {
                return Err(Error::Unsupported("graph not monotone away from the base point".into()));
            }
            if cur >= cap {
                let back = u - sign * rho / cells as f64;
                let (a, b) = if sign > 0.0 { (back, u) } else { (u, back) };
                let root = if sign > 0.0 {
                    bisect_monotone(|x| table.f(x), a, b, cap)
                } else {
                    bisect_monotone(|x| -table.f(x), a, b, -cap)
                };
                ends[side] = Some(root);
                break;
            }
            prev = cur;
        }
    }
    match ends {
        [Some(a), Some(b)] => Ok((a, b)),
        _ => Err(Error::InvalidInput("cap not reached within the chart".into())),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TransformKind {
    Indicator,
    Surface,
}

/// Predicted `(delta, l)` for a boundary of dimension `n` with growth
/// index `(g, k)`: below the threshold `1/(n+1)` the index passes through,
/// at it the log power goes up by one, above it the exponent saturates at
/// the threshold. Indicator transforms gain one extra power.
pub fn predicted_decay(index: &GrowthIndex, n: u32, kind: TransformKind) -> Result<(Rational, u32)> {
    if n == 0 {
        return Err(Error::InvalidInput("surface dimension must be positive".into()));
    }
    let threshold = Rational::new(1, n as i64 + 1);
    let shift = match kind {
        TransformKind::Indicator => Rational::from_integer(1),
        TransformKind::Surface => Rational::from_integer(0),
    };
    if !index.determinate {
        return match index.lower_bound {
            Some(lb) if lb > threshold => Ok((threshold + shift, 0)),
            _ => Err(Error::Undecidable(format!(
                "index only bounded below by {:?}; threshold is {threshold}",
                index.lower_bound
            ))),
        };
    }
    let g = index.g;
    Ok(if g < threshold {
        (g + shift, index.k)
    } else if g == threshold {
        (g + shift, index.k + 1)
    } else {
        (threshold + shift, 0)
    })
}
