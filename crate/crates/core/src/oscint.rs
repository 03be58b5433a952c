//! Oscillation-resolving quadrature for `int phi(x) e^{-itx} dx` and for
//! general phases, plus numerical stress tests of the Van der Corput
//! inequalities.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::fourier::DecaySeries;
use crate::quad::{self, integrate};
use crate::Complex;

/// Grid size used to verify derivative hypotheses.
pub const HYPOTHESIS_GRID: usize = 4096;

/// Relative slack when comparing derivative bounds on the grid: bounds that
/// hold with equality at a grid point (e.g. `h = t x^2`, `A = 2t`) pass.
const HYPOTHESIS_SLACK: f64 = 1e-12;

/// Envelope constant used for the oscillatory Van der Corput bound.
pub fn vdc_constant(k: u32) -> f64 {
    2.5 * k as f64
}

/// Envelope constant used for the sublevel Van der Corput bound.
pub fn sublevel_constant(k: u32) -> f64 {
    2.0 * k as f64 + 2.0
}

/// Endpoint behaviour `|x - e|^g |ln|x - e||^k` announced to the
/// integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SingularityHint {
    pub g: f64,
    pub k: u32,
}

impl SingularityHint {
    pub const GENERIC: SingularityHint = SingularityHint { g: 0.0, k: 0 };
}

/// Amplitude on `[a, b]` for the linear-phase transform.
pub struct OscillatoryIntegrand<F> {
    pub amplitude: F,
    pub a: f64,
    pub b: f64,
    pub left: Option<SingularityHint>,
    pub right: Option<SingularityHint>,
}

impl<F: Fn(f64) -> f64> OscillatoryIntegrand<F> {
    pub fn new(amplitude: F, a: f64, b: f64) -> Self {
        Self { amplitude, a, b, left: None, right: None }
    }

    pub fn with_hints(mut self, left: Option<SingularityHint>, right: Option<SingularityHint>) -> Self {
        self.left = left;
        self.right = right;
        self
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadratureResult {
    pub value: Complex,
    pub error: f64,
    pub panels: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OscOptions {
    pub abs_tol: f64,
    pub rel_tol: f64,
    /// Adaptive bisections allowed beyond the initial partition.
    pub extra_segments: usize,
}

impl Default for OscOptions {
    fn default() -> Self {
        Self { abs_tol: 1e-15, rel_tol: 1e-11, extra_segments: 200_000 }
    }
}

/// Substitution exponent for the innermost panel at a hinted endpoint:
/// `x = e + delta u^4` turns `|x - e|^g` into a smooth multiple of
/// `u^{4g + 3}`.
const ENDPOINT_POWER: i32 = 4;

fn graded(lo: f64, hi: f64, toward_lo: bool, depth: u32) -> (Vec<f64>, (f64, f64)) {
    let w = hi - lo;
    let mut pts = Vec::with_capacity(depth as usize + 1);
    for j in 0..=depth {
        let d = w * 0.5f64.powi(j as i32);
        pts.push(if toward_lo { lo + d } else { hi - d });
    }
    let inner = w * 0.5f64.powi(depth as i32);
    let inner_panel = if toward_lo { (lo, lo + inner) } else { (hi - inner, hi) };
    (pts, inner_panel)
}

fn resolve_oscillation(breaks: &mut Vec<f64>, t: f64) {
    if t == 0.0 {
        return;
    }
    let max_w = std::f64::consts::PI / t.abs();
    let mut out = Vec::with_capacity(breaks.len());
    for w in breaks.windows(2) {
        out.push(w[0]);
        let pieces = ((w[1] - w[0]) / max_w).ceil() as usize;
        for i in 1..pieces {
            out.push(w[0] + (w[1] - w[0]) * i as f64 / pieces as f64);
        }
    }
    out.push(*breaks.last().unwrap());
    *breaks = out;
}

/// `int_a^b phi(x) e^{-itx} dx`.
///
/// Hinted endpoints get geometrically graded panels (ratio 1/2, depth
/// `ceil(log2(|t|(b-a))) + 8`), with the innermost panel integrated after
/// the substitution `x = e + delta u^4`. Every panel is cut into subpanels
/// no wider than `pi/|t|` and the whole partition is refined adaptively
/// with G7K15 pairs until the summed error estimate meets the tolerance.
pub fn osc_integrate<F: Fn(f64) -> f64>(
    integrand: &OscillatoryIntegrand<F>,
    t: f64,
    opts: &OscOptions,
) -> Result<QuadratureResult> {
    let (a, b) = (integrand.a, integrand.b);
    if !(b > a) {
        return Err(Error::InvalidInput(format!("empty interval [{a}, {b}]")));
    }
    for h in [integrand.left, integrand.right].iter().flatten() {
        if !(h.g > -1.0) {
            return Err(Error::InvalidInput(format!("hinted exponent {} must exceed -1", h.g)));
        }
    }
    let phi = &integrand.amplitude;
    let len = b - a;
    let depth = ((t.abs() * len).max(1.0).log2().ceil() as u32) + 8;
    let mut breaks = vec![a];
    let mut inner: Vec<(f64, f64, bool)> = Vec::new();
    match (integrand.left.is_some(), integrand.right.is_some()) {
        (false, false) => breaks.push(b),
        (true, false) => {
            let (mut pts, p) = graded(a, b, true, depth);
            pts.reverse();
            breaks = pts;
            inner.push((p.0, p.1, true));
        }
        (false, true) => {
            let (pts, p) = graded(a, b, false, depth);
            breaks = pts;
            inner.push((p.0, p.1, false));
        }
        (true, true) => {
            let m = 0.5 * (a + b);
            let (mut left, pl) = graded(a, m, true, depth);
            left.reverse();
            let (right, pr) = graded(m, b, false, depth);
            breaks = left;
            breaks.extend_from_slice(&right[1..]);
            inner.push((pl.0, pl.1, true));
            inner.push((pr.0, pr.1, false));
        }
    }
    resolve_oscillation(&mut breaks, t);
    let panels = breaks.len() - 1;
    let wave = |x: f64| Complex::from_polar(1.0, -t * x);
    let (mut value, mut error) =
        quad::adaptive(|x| wave(x) * phi(x), &breaks, opts.abs_tol, opts.rel_tol, panels + opts.extra_segments)?;
    let inner_panels = inner.len();
    for (lo, hi, at_lo) in inner {
        let delta = hi - lo;
        let p = ENDPOINT_POWER;
        let sub = |u: f64| {
            let s = delta * u.powi(p);
            let x = if at_lo { lo + s } else { hi - s };
            wave(x) * phi(x) * (p as f64 * delta * u.powi(p - 1))
        };
        let (v, e) = quad::adaptive(sub, &[0.0, 0.5, 1.0], opts.abs_tol, opts.rel_tol, 10_000)?;
        value += v;
        error += e;
    }
    Ok(QuadratureResult { value, error, panels: panels + inner_panels })
}

/// Partition of `[a, b]` on which the phase moves by at most `pi/2` per
/// panel, found by stepping with `pi / (2|h'|)` and halving on overshoot.
pub fn phase_partition<H, D>(h: H, dh: D, a: f64, b: f64, max_panels: usize) -> Result<Vec<f64>>
where
    H: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let quarter = std::f64::consts::FRAC_PI_2;
    let cap = (b - a) / 16.0;
    let mut pts = vec![a];
    let mut x = a;
    while x < b {
        let slope = dh(x).abs();
        let mut step = if slope > 0.0 { (quarter / slope).min(cap) } else { cap };
        let hx = h(x);
        loop {
            let y = (x + step).min(b);
            if (h(y) - hx).abs() <= 2.0 * quarter || step < 1e-14 * (b - a) {
                x = y;
                break;
            }
            step *= 0.5;
        }
        pts.push(x);
        if pts.len() > max_panels {
            return Err(Error::Budget(format!("phase partition exceeds {max_panels} panels")));
        }
    }
    Ok(pts)
}

/// `int_a^b e^{i h(x)} phi(x) dx` for a general real phase with derivative
/// `dh`.
pub fn phase_integrate<H, D, P>(h: H, dh: D, phi: P, a: f64, b: f64, opts: &OscOptions) -> Result<QuadratureResult>
where
    H: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
    P: Fn(f64) -> f64,
{
    let breaks = phase_partition(&h, &dh, a, b, 50_000_000)?;
    let panels = breaks.len() - 1;
    let (value, error) = quad::adaptive(
        |x| Complex::from_polar(phi(x), h(x)),
        &breaks,
        opts.abs_tol,
        opts.rel_tol,
        panels + opts.extra_segments,
    )?;
    Ok(QuadratureResult { value, error, panels })
}

/// Smooth cutoff: 1 on `[0, 1/4]`, 0 from `3/4` on, `C^infinity` between.
pub fn model_cutoff(x: f64) -> f64 {
    let psi = |y: f64| if y > 0.0 { (-1.0 / y).exp() } else { 0.0 };
    let y = (0.75 - x) / 0.5;
    if y >= 1.0 {
        1.0
    } else if y <= 0.0 {
        0.0
    } else {
        psi(y) / (psi(y) + psi(1.0 - y))
    }
}

/// `I(t) = int_0^inf x^g |ln x|^k beta(x) e^{-itx} dx` over a `t` grid,
/// with [`model_cutoff`] as `beta`. The decay is `t^{-1-g} (ln t)^k`.
pub fn model_asymptotic_1d(g: f64, k: u32, t_grid: &[f64], opts: &OscOptions) -> Result<DecaySeries> {
    if !(g > 0.0) {
        return Err(Error::InvalidInput("g must be positive".into()));
    }
    let amp = move |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            x.powf(g) * x.ln().abs().powi(k as i32) * model_cutoff(x)
        }
    };
    let integrand = OscillatoryIntegrand::new(amp, 0.0, 0.75).with_hints(Some(SingularityHint { g, k }), None);
    let values: Vec<QuadratureResult> =
        t_grid.par_iter().map(|&t| osc_integrate(&integrand, t, opts)).collect::<Result<_>>()?;
    DecaySeries::new(vec![1.0], t_grid.to_vec(), values)
}

/// Phase, amplitude and their derivatives on `[a, b]`.
pub struct VdcIntegrand<'a> {
    pub phase: &'a (dyn Fn(f64) -> f64 + Sync),
    /// `phase_derivs[j]` is `h^{(j+1)}`.
    pub phase_derivs: Vec<&'a (dyn Fn(f64) -> f64 + Sync)>,
    pub amplitude: &'a (dyn Fn(f64) -> f64 + Sync),
    pub amplitude_deriv: &'a (dyn Fn(f64) -> f64 + Sync),
    pub a: f64,
    pub b: f64,
}

impl VdcIntegrand<'_> {
    fn grid(&self) -> impl Iterator<Item = f64> + '_ {
        let n = HYPOTHESIS_GRID;
        (0..n).map(move |i| self.a + (self.b - self.a) * i as f64 / (n - 1) as f64)
    }

    fn deriv(&self, order: usize) -> Result<&(dyn Fn(f64) -> f64 + Sync)> {
        self.phase_derivs
            .get(order - 1)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("phase derivative of order {order} not supplied")))
    }

    fn lhs(&self) -> Result<f64> {
        let v = phase_integrate(
            self.phase,
            self.deriv(1)?,
            self.amplitude,
            self.a,
            self.b,
            &OscOptions { abs_tol: 1e-14, rel_tol: 1e-10, extra_segments: 200_000 },
        )?;
        Ok(v.value.norm())
    }

    fn total_variation(&self) -> Result<f64> {
        let g = |x: f64| (self.amplitude_deriv)(x).abs();
        let breaks: Vec<f64> = self.grid().step_by(64).chain(std::iter::once(self.b)).collect();
        Ok(quad::adaptive(g, &breaks, 1e-13, 1e-11, 100_000)?.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdcBound {
    pub lhs: f64,
    pub rhs_core: f64,
    pub ratio: f64,
}

/// `|int e^{ih} phi|` against `A^{-1/k} (|phi(b)| + int |phi'|)` under
/// `|h^{(k)}| >= A` (and `h'` monotone when `k = 1`), both checked on a
/// 4096-point grid.
pub fn vdc_bound_check(f: &VdcIntegrand, k: u32, a_bound: f64) -> Result<VdcBound> {
    if k == 0 || !(a_bound > 0.0) {
        return Err(Error::InvalidInput("need k >= 1 and A > 0".into()));
    }
    let dk = f.deriv(k as usize)?;
    let floor = a_bound * (1.0 - HYPOTHESIS_SLACK);
    if let Some(x) = f.grid().find(|&x| dk(x).abs() < floor) {
        return Err(Error::Hypothesis(format!("|h^({k})({x})| = {} below A = {a_bound}", dk(x).abs())));
    }
    if k == 1 {
        let d1: Vec<f64> = f.grid().map(&dk).collect();
        let up = d1.windows(2).all(|w| w[1] >= w[0]);
        let down = d1.windows(2).all(|w| w[1] <= w[0]);
        if !(up || down) {
            return Err(Error::Hypothesis("h' is not monotone".into()));
        }
    }
    let lhs = f.lhs()?;
    let rhs_core = a_bound.powf(-1.0 / k as f64) * ((f.amplitude)(f.b).abs() + f.total_variation()?);
    let ratio = if rhs_core > 0.0 {
        lhs / rhs_core
    } else if lhs == 0.0 {
        0.0
    } else {
        f64::INFINITY
    };
    Ok(VdcBound { lhs, rhs_core, ratio })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FirstOrderCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub pass: bool,
}

/// The first-order bound with explicit constant:
/// `|int e^{ih} phi| <= A^{-1} ((B + 2) sup|phi| + int |phi'|)` under
/// `|h'| >= A` and `|h''| <= B A / (b - a)`. `pass` requires strict
/// inequality.
pub fn vdc_first_order_check(f: &VdcIntegrand, a_bound: f64, b_const: f64) -> Result<FirstOrderCheck> {
    if !(a_bound > 0.0) || !(b_const > 0.0) {
        return Err(Error::InvalidInput("need A > 0 and B > 0".into()));
    }
    let d1 = f.deriv(1)?;
    let d2 = f.deriv(2)?;
    let len = f.b - f.a;
    let floor = a_bound * (1.0 - HYPOTHESIS_SLACK);
    let ceiling = b_const * a_bound / len * (1.0 + HYPOTHESIS_SLACK);
    for x in f.grid() {
        if d1(x).abs() < floor {
            return Err(Error::Hypothesis(format!("|h'({x})| below A")));
        }
        if d2(x).abs() > ceiling {
            return Err(Error::Hypothesis(format!("|h''({x})| above B A / (b - a)")));
        }
    }
    let sup = f.grid().map(|x| (f.amplitude)(x).abs()).fold(0.0, f64::max);
    let lhs = f.lhs()?;
    let rhs = ((b_const + 2.0) * sup + f.total_variation()?) / a_bound;
    Ok(FirstOrderCheck { lhs, rhs, pass: lhs < rhs || (lhs == 0.0 && rhs == 0.0) })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelVdcReport {
    pub epsilons: Vec<f64>,
    pub measures: Vec<f64>,
    /// `B_k A^{-1/k} eps^{1/k}` per threshold.
    pub bounds: Vec<f64>,
    pub max_ratio: f64,
    pub pass: bool,
    /// Log-log slope of measure against `eps` over the thresholds with a
    /// nonempty sublevel set strictly inside the interval.
    pub slope: Option<f64>,
}

/// Length of `{x in [a, b] : |f(x)| < eps}` by a 16384-cell scan with
/// bisection at each crossing of `f = +-eps`.
pub fn sublevel_length_scan<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, eps: f64) -> f64 {
    let cells = 16_384;
    let step = (b - a) / cells as f64;
    let mut breaks = vec![a];
    let mut prev = f(a);
    for i in 1..=cells {
        let x = a + i as f64 * step;
        let cur = f(x);
        for level in [-eps, eps] {
            if (prev < level) != (cur < level) {
                let root = if prev < cur {
                    crate::poly::bisect_monotone(&f, x - step, x, level)
                } else {
                    crate::poly::bisect_monotone(|s| -f(s), x - step, x, -level)
                };
                breaks.push(root);
            }
        }
        prev = cur;
    }
    breaks.push(b);
    breaks.sort_by(f64::total_cmp);
    breaks.windows(2).filter(|w| w[1] > w[0] && f(0.5 * (w[0] + w[1])).abs() < eps).map(|w| w[1] - w[0]).sum()
}

/// Sublevel Van der Corput check for `|f^{(k)}| >= A` on `[a, b]`
/// (grid-verified), with the module constant `B_k`.
pub fn sublevel_vdc_check<F, D>(
    f: F,
    dk: D,
    k: u32,
    a_bound: f64,
    interval: (f64, f64),
    eps: &[f64],
) -> Result<SublevelVdcReport>
where
    F: Fn(f64) -> f64,
    D: Fn(f64) -> f64,
{
    let (a, b) = interval;
    if k == 0 || !(a_bound > 0.0) || !(b > a) {
        return Err(Error::InvalidInput("need k >= 1, A > 0 and a < b".into()));
    }
    let n = HYPOTHESIS_GRID;
    let floor = a_bound * (1.0 - HYPOTHESIS_SLACK);
    for i in 0..n {
        let x = a + (b - a) * i as f64 / (n - 1) as f64;
        if dk(x).abs() < floor {
            return Err(Error::Hypothesis(format!("|f^({k})({x})| below A = {a_bound}")));
        }
    }
    let bk = sublevel_constant(k);
    let measures: Vec<f64> = eps.iter().map(|&e| sublevel_length_scan(&f, a, b, e)).collect();
    let bounds: Vec<f64> = eps.iter().map(|&e| bk * a_bound.powf(-1.0 / k as f64) * e.powf(1.0 / k as f64)).collect();
    let max_ratio = measures.iter().zip(&bounds).map(|(m, bd)| m / bd).fold(0.0, f64::max);
    let interior: Vec<(f64, f64)> = eps
        .iter()
        .zip(&measures)
        .filter(|(&e, &m)| m > 0.0 && f(a).abs() >= e && f(b).abs() >= e)
        .map(|(e, m)| (*e, *m))
        .collect();
    let slope = if interior.len() >= 3 {
        let (x, y): (Vec<f64>, Vec<f64>) = interior.into_iter().unzip();
        Some(log_log_slope(&x, &y)?.slope)
    } else {
        None
    };
    Ok(SublevelVdcReport { epsilons: eps.to_vec(), measures, bounds, max_ratio, pass: max_ratio <= 1.0, slope })
}

/// Plain adaptive quadrature of `phi` on `[a, b]`.
pub fn plain_integral<F: Fn(f64) -> f64>(phi: F, a: f64, b: f64) -> Result<f64> {
    Ok(integrate(phi, a, b, 1e-13)?.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_amplitude_closed_form() {
        let t = 100.0;
        let f = OscillatoryIntegrand::new(|_x: f64| 1.0, 0.0, 1.0);
        let r = osc_integrate(&f, t, &OscOptions::default()).unwrap();
        let exact = (Complex::new(1.0, 0.0) - Complex::from_polar(1.0, -t)) / Complex::new(0.0, t);
        assert!((r.value - exact).norm() < 1e-10);
        assert!(r.error >= 0.0);
    }

    #[test]
    fn zero_frequency_is_plain_quadrature() {
        let f = OscillatoryIntegrand::new(|x: f64| x.sqrt(), 0.0, 1.0)
            .with_hints(Some(SingularityHint { g: 0.5, k: 0 }), None);
        let r = osc_integrate(&f, 0.0, &OscOptions::default()).unwrap();
        assert!((r.value.re - 2.0 / 3.0).abs() < 1e-9);
        assert!(r.value.im.abs() < 1e-15);
    }

    #[test]
    fn cutoff_shape() {
        assert_eq!(model_cutoff(0.1), 1.0);
        assert_eq!(model_cutoff(0.8), 0.0);
        assert!((model_cutoff(0.5) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn linear_phase_first_order() {
        let t = 50.0;
        let h = move |x: f64| t * x;
        let d1 = move |_x: f64| t;
        let d2 = |_x: f64| 0.0;
        let one = |_x: f64| 1.0;
        let zero = |_x: f64| 0.0;
        let f = VdcIntegrand {
            phase: &h,
            phase_derivs: vec![&d1, &d2],
            amplitude: &one,
            amplitude_deriv: &zero,
            a: 0.0,
            b: 1.0,
        };
        let c = vdc_first_order_check(&f, t, 1e-3).unwrap();
        let exact = (Complex::from_polar(1.0, t) - 1.0).norm() / t;
        assert!((c.lhs - exact).abs() < 1e-12);
        assert!(c.pass);
    }

    #[test]
    fn quadratic_sublevel() {
        let r = sublevel_vdc_check(|x| x * x, |_| 2.0, 2, 2.0, (-1.0, 1.0), &[1e-4, 1e-3, 1e-2]).unwrap();
        for (m, e) in r.measures.iter().zip(&r.epsilons) {
            assert!((m - 2.0 * e.sqrt()).abs() < 1e-12);
        }
        assert!(r.pass);
        assert!((r.slope.unwrap() - 0.5).abs() < 1e-9);
    }

    #[test]
    fn hypothesis_violation_reported() {
        let r = sublevel_vdc_check(|x| x * x, |_| 2.0, 2, 3.0, (-1.0, 1.0), &[1e-3]);
        assert!(matches!(r, Err(Error::Hypothesis(_))));
    }
}
