//! Sublevel growth under finite-dimensional perturbations
//! `q + sum eta_i s_i`: uniform sweeps, the degradation construction built
//! from powered sums, and layer-cake integrability estimates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fit::log_log_slope;
use crate::indices::{
    fit_growth, powered_sum_index, FitResult, GrowthIndex, SublevelFunction, SublevelOptions, SublevelSamples,
};
use crate::poly::Polynomial;
use crate::qmc;
use crate::Rational;

/// Tolerance on fitted exponents when deciding whether an index degraded.
pub const DEGRADATION_TOL: f64 = 0.05;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PerturbationFamily {
    pub base: SublevelFunction,
    pub members: Vec<Polynomial>,
    /// Coefficient box `|eta_i| <= delta`.
    pub delta: f64,
    pub radius: f64,
    /// Growth index of `base`, when known in closed form.
    #[serde(default)]
    pub index: Option<GrowthIndex>,
}

impl PerturbationFamily {
    pub fn new(base: SublevelFunction, members: Vec<Polynomial>, delta: f64, radius: f64) -> Result<Self> {
        let fam = Self { base, members, delta, radius, index: None };
        fam.validate()?;
        Ok(fam)
    }

    pub fn with_index(mut self, index: GrowthIndex) -> Self {
        self.index = Some(index);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dimension();
        if !(self.delta >= 0.0) || !(self.radius > 0.0) {
            return Err(Error::InvalidInput("need delta >= 0 and radius > 0".into()));
        }
        for (i, s) in self.members.iter().enumerate() {
            if s.arity() != d {
                return Err(Error::DimensionMismatch { expected: d, got: s.arity() });
            }
            if s.constant_term() != 0.0 {
                return Err(Error::InvalidInput(format!("member {i} does not vanish at the origin")));
            }
        }
        if self.sample_rank() < self.members.len() {
            return Err(Error::InvalidInput("family members are linearly dependent".into()));
        }
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.base.expanded().arity()
    }

    /// Rank of the members' values at `4M + 8` points of the ball, by
    /// Gram-Schmidt with relative tolerance `1e-9`.
    fn sample_rank(&self) -> usize {
        let d = self.dimension();
        let pts = 4 * self.members.len() + 8;
        let mut x = vec![0.0; d];
        let mut u = vec![0.0; d + 1];
        let shift = vec![0.5; d + 1];
        let samples: Vec<Vec<f64>> = (1..=pts as u64)
            .map(|i| {
                qmc::shifted_halton(i, &shift, &mut u);
                qmc::cube_to_ball(&u, &mut x);
                x.iter().map(|v| v * self.radius).collect()
            })
            .collect();
        let mut basis: Vec<Vec<f64>> = Vec::new();
        for s in &self.members {
            let mut v: Vec<f64> = samples.iter().map(|p| s.eval(p)).collect();
            let scale = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            for b in &basis {
                let c: f64 = v.iter().zip(b).map(|(a, b)| a * b).sum();
                v.iter_mut().zip(b).for_each(|(a, b)| *a -= c * b);
            }
            let n = v.iter().map(|a| a * a).sum::<f64>().sqrt();
            if scale > 0.0 && n > 1e-9 * scale {
                basis.push(v.into_iter().map(|a| a / n).collect());
            }
        }
        basis.len()
    }

    /// `q + sum eta_i s_i`; the base itself when `eta = 0`.
    pub fn member_function(&self, eta: &[f64]) -> Result<SublevelFunction> {
        if eta.len() != self.members.len() {
            return Err(Error::DimensionMismatch { expected: self.members.len(), got: eta.len() });
        }
        if eta.iter().all(|&e| e == 0.0) {
            return Ok(self.base.clone());
        }
        let mut p = self.base.expanded();
        for (e, s) in eta.iter().zip(&self.members) {
            if *e != 0.0 {
                p = p.add(&s.scale(*e))?;
            }
        }
        Ok(SublevelFunction::poly(p))
    }

    /// Largest family size covered by uniform bounds for index `h`:
    /// with `1/h = m + gamma`, `0 < gamma <= 1`, this is `m`.
    pub fn uniform_capacity(h: Rational) -> Result<usize> {
        if h <= Rational::from_integer(0) {
            return Err(Error::InvalidInput("index must be positive".into()));
        }
        let inv = h.recip();
        Ok((inv.ceil().to_integer() - 1) as usize)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub etas: Vec<Vec<f64>>,
    pub samples: Vec<SublevelSamples>,
    pub fits: Vec<FitResult>,
    /// `(h, l)` used to normalise the measures.
    pub base_index: (f64, u32),
    /// `max_eps m / (eps^h |ln eps|^l)` per coefficient vector.
    pub uniformity_per_eta: Vec<f64>,
    pub uniformity_stat: f64,
    /// Family size within the uniform-bound capacity of the base index.
    pub within_capacity: Option<bool>,
    /// No fitted exponent fell more than [`DEGRADATION_TOL`] below `h`.
    pub pass: bool,
}

/// Measures `m{|x| < r_1, |q + sum eta_i s_i| < eps}` for each `eta` and
/// compares against the base index.
///
/// All coefficient vectors share the sampling stream (common random
/// numbers), so `eta = 0` reproduces the stand-alone estimate of `q` for
/// the same seed.
pub fn family_sweep(
    family: &PerturbationFamily,
    etas: &[Vec<f64>],
    eps: &[f64],
    seed: u64,
    opts: &SublevelOptions,
) -> Result<StabilityReport> {
    family.validate()?;
    if let Some(e) = etas.iter().flatten().find(|e| e.abs() > family.delta) {
        return Err(Error::InvalidInput(format!("coefficient {e} outside the box |eta| <= {}", family.delta)));
    }
    let zero_at = etas.iter().position(|e| e.iter().all(|&v| v == 0.0));
    let samples: Vec<SublevelSamples> = etas
        .par_iter()
        .map(|eta| {
            let f = family.member_function(eta)?;
            SublevelSamples::measure(&f, &format!("eta={eta:?}"), family.radius, eps, seed, opts)
        })
        .collect::<Result<_>>()?;
    let fits: Vec<FitResult> = samples.iter().map(fit_growth).collect::<Result<_>>()?;
    let base_index = match (&family.index, zero_at) {
        (Some(ix), _) => (ix.g_f64(), ix.k),
        (None, Some(i)) => (fits[i].g_hat, fits[i].k_hat),
        (None, None) => {
            return Err(Error::InvalidInput("coefficient grid must contain eta = 0 or the base index be given".into()))
        }
    };
    let (h, l) = base_index;
    let uniformity_per_eta: Vec<f64> = samples
        .iter()
        .map(|s| {
            s.epsilons
                .iter()
                .zip(&s.measures)
                .map(|(e, m)| m / (e.powf(h) * e.ln().abs().powi(l as i32)))
                .fold(0.0, f64::max)
        })
        .collect();
    let uniformity_stat = uniformity_per_eta.iter().cloned().fold(0.0, f64::max);
    let within_capacity = family
        .index
        .as_ref()
        .map(|ix| PerturbationFamily::uniform_capacity(ix.g).map(|c| family.members.len() <= c))
        .transpose()?;
    let pass = fits.iter().all(|f| f.g_hat >= h - DEGRADATION_TOL);
    Ok(StabilityReport {
        etas: etas.to_vec(),
        samples,
        fits,
        base_index,
        uniformity_per_eta,
        uniformity_stat,
        within_capacity,
        pass,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Counterexample {
    pub t: Rational,
    pub c: u32,
    pub n: u32,
    pub k: u32,
    /// `f = sum_{i <= n} x_i^{2k}`.
    pub f: Polynomial,
    /// `q = f^c`.
    pub q: SublevelFunction,
    pub q_index: GrowthIndex,
    /// `f^j x_1^{c-j}`, `j = 0..c`.
    pub family: Vec<Polynomial>,
    pub h_prime: Rational,
}

/// Powered-sum construction for index `t = a/b`: `c` is the least integer
/// with `ct > 1`, `f` the sum of `x_i^{2b}` over `n = 2ca` variables and
/// `q = f^c` has index `t`, while `(f + delta x_1)^c` only reaches `1/c`.
/// The `c` functions `f^j x_1^{c-j}` span every such perturbation.
pub fn counterexample_construct(t: Rational) -> Result<Counterexample> {
    if t <= Rational::from_integer(0) {
        return Err(Error::InvalidInput(format!("t = {t} must be positive")));
    }
    let (a, b) = (*t.numer(), *t.denom());
    let c = (b / a + 1) as u32;
    if c == 1 {
        return Err(Error::InvalidInput(format!("t = {t} gives c = 1: no room for degradation")));
    }
    let n = 2 * c * a as u32;
    let k = b as u32;
    let f = Polynomial::even_power_sum(&vec![k; n as usize]);
    let q_index = powered_sum_index(n, k, c)?;
    let x1 = Polynomial::variable(n as usize, 0);
    let family = (0..c).map(|j| f.pow(j).mul(&x1.pow(c - j))).collect::<Result<Vec<_>>>()?;
    Ok(Counterexample {
        t,
        c,
        n,
        k,
        q: SublevelFunction::Power { base: f.clone(), power: c },
        f,
        q_index,
        family,
        h_prime: Rational::new(1, c as i64),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegradationReport {
    pub construction: Counterexample,
    pub delta: f64,
    pub unperturbed: SublevelSamples,
    pub perturbed: SublevelSamples,
    pub unperturbed_fit: FitResult,
    pub perturbed_fit: FitResult,
    /// Exponent `h'` strictly between `1/c` and `t` tested for a uniform
    /// bound.
    pub h_test: f64,
    /// `(eps, m(eps)/eps^{h'}, stderr)` for the perturbed function, `eps`
    /// decreasing.
    pub ratios: Vec<(f64, f64, f64)>,
    /// Each ratio exceeds the previous one minus two standard errors.
    pub ratio_increasing: bool,
    /// Last ratio over first.
    pub growth_factor: f64,
}

/// Largest construction dimension swept by Monte Carlo.
pub const MAX_DEMO_DIMENSION: u32 = 6;

/// Fits `q = f^c` and `(f + delta x_1)^c` on one sampling stream and
/// tracks `m(eps) / eps^{h'}` for the perturbed function.
pub fn degradation_demo(
    t: Rational,
    delta: f64,
    eps: &[f64],
    h_test: f64,
    radius: f64,
    seed: u64,
    opts: &SublevelOptions,
) -> Result<DegradationReport> {
    let ce = counterexample_construct(t)?;
    if ce.n > MAX_DEMO_DIMENSION {
        return Err(Error::Unsupported(format!("construction in dimension {} above {MAX_DEMO_DIMENSION}", ce.n)));
    }
    let lo = 1.0 / ce.c as f64;
    let hi = *t.numer() as f64 / *t.denom() as f64;
    if !(h_test > lo && h_test < hi) {
        return Err(Error::InvalidInput(format!("h' = {h_test} must lie in ({lo}, {hi})")));
    }
    let shifted = ce.f.add(&Polynomial::variable(ce.n as usize, 0).scale(delta))?;
    let perturbed_fn = SublevelFunction::Power { base: shifted, power: ce.c };
    let unperturbed = SublevelSamples::measure(&ce.q, "q", radius, eps, seed, opts)?;
    let perturbed = SublevelSamples::measure(&perturbed_fn, "q_delta", radius, eps, seed, opts)?;
    let unperturbed_fit = fit_growth(&unperturbed)?;
    let perturbed_fit = fit_growth(&perturbed)?;
    let ratios: Vec<(f64, f64, f64)> = perturbed
        .epsilons
        .iter()
        .zip(&perturbed.measures)
        .zip(&perturbed.stderrs)
        .map(|((e, m), s)| {
            let w = e.powf(h_test);
            (*e, m / w, s / w)
        })
        .collect();
    let ratio_increasing = ratios.windows(2).all(|w| w[1].1 >= w[0].1 - 2.0 * (w[0].2.powi(2) + w[1].2.powi(2)).sqrt());
    let growth_factor = ratios.last().map(|l| l.1).unwrap_or(0.0) / ratios.first().map(|f| f.1).unwrap_or(1.0);
    Ok(DegradationReport {
        construction: ce,
        delta,
        unperturbed,
        perturbed,
        unperturbed_fit,
        perturbed_fit,
        h_test,
        ratios,
        ratio_increasing,
        growth_factor,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IntegrabilityReport {
    pub t_exp: f64,
    pub etas: Vec<Vec<f64>>,
    pub estimates: Vec<f64>,
    /// Share of each estimate coming from the power-law tail below the
    /// smallest threshold.
    pub tail_fraction: Vec<f64>,
    pub max_min_ratio: f64,
}

/// `int_{|x| < r_1} |q + s|^{-t}` for each `eta` by the layer-cake formula
/// `t int_0^inf m(eps) eps^{-t-1} d eps`, trapezoidal in `ln eps` over
/// `eps`, a power-law tail fitted on the four smallest thresholds below,
/// and the full ball volume above the largest threshold, which must bound
/// `|q + s|` on the ball.
pub fn integrability_bound(
    family: &PerturbationFamily,
    t_exp: f64,
    etas: &[Vec<f64>],
    eps: &[f64],
    seed: u64,
    opts: &SublevelOptions,
) -> Result<IntegrabilityReport> {
    if !(t_exp >= 0.0) {
        return Err(Error::InvalidInput("t must be nonnegative".into()));
    }
    let d = family.dimension();
    let ball = qmc::unit_ball_volume(d) * family.radius.powi(d as i32);
    let mut estimates = Vec::with_capacity(etas.len());
    let mut tail_fraction = Vec::with_capacity(etas.len());
    for eta in etas {
        if t_exp == 0.0 {
            estimates.push(ball);
            tail_fraction.push(0.0);
            continue;
        }
        let f = family.member_function(eta)?;
        let s = SublevelSamples::measure(&f, "integrability", family.radius, eps, seed, opts)?;
        // ascending thresholds
        let mut pts: Vec<(f64, f64)> = s.epsilons.iter().cloned().zip(s.measures.iter().cloned()).collect();
        pts.reverse();
        if pts.len() < 4 {
            return Err(Error::InvalidInput("need at least 4 thresholds".into()));
        }
        let top = *pts.last().unwrap();
        let peak = sampled_sup(&f, family.radius);
        if peak > top.0 * (1.0 + 1e-12) {
            return Err(Error::InvalidInput(format!(
                "largest threshold {} below sup |q + s| >= {peak} on the ball",
                top.0
            )));
        }
        let g = |e: f64, m: f64| t_exp * m * e.powf(-t_exp);
        let mut body = 0.0;
        for w in pts.windows(2) {
            body += 0.5 * (g(w[0].0, w[0].1) + g(w[1].0, w[1].1)) * (w[1].0 / w[0].0).ln();
        }
        let low: Vec<(f64, f64)> = pts.iter().take(4).cloned().filter(|p| p.1 > 0.0).collect();
        let tail = if low.len() == 4 {
            let (x, y): (Vec<f64>, Vec<f64>) = low.into_iter().unzip();
            let fit = log_log_slope(&x, &y)?;
            if fit.slope <= t_exp {
                return Err(Error::Hypothesis(format!(
                    "sublevel growth {:.3} does not exceed t = {t_exp}; integral diverges",
                    fit.slope
                )));
            }
            let e0 = pts[0].0;
            t_exp * fit.intercept.exp() * e0.powf(fit.slope - t_exp) / (fit.slope - t_exp)
        } else {
            0.0
        };
        let cap = ball * top.0.powf(-t_exp);
        let total = body + tail + cap;
        estimates.push(total);
        tail_fraction.push(tail / total);
    }
    let max = estimates.iter().cloned().fold(0.0, f64::max);
    let min = estimates.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(IntegrabilityReport { t_exp, etas: etas.to_vec(), estimates, tail_fraction, max_min_ratio: max / min })
}

/// `max |f|` over 4096 quasi-random points of the ball and its boundary.
fn sampled_sup(f: &SublevelFunction, radius: f64) -> f64 {
    use crate::indices::SublevelOracle;
    let d = f.dim();
    let mut u = vec![0.0; d + 1];
    let mut x = vec![0.0; d];
    let shift = vec![0.25; d + 1];
    let mut peak: f64 = 0.0;
    for i in 1..=4096u64 {
        qmc::shifted_halton(i, &shift, &mut u);
        qmc::cube_to_ball(&u, &mut x);
        let n = x.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
        let y: Vec<f64> = x.iter().map(|v| v * radius).collect();
        let z: Vec<f64> = x.iter().map(|v| v * radius / n).collect();
        peak = peak.max(f.eval(&y).abs()).max(f.eval(&z).abs());
    }
    peak
}
