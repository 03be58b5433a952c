//! Seeded random instances for the Van der Corput bounds.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::fit::{geometric_grid, log_log_slope};
use crate::oscint::{
    phase_integrate, sublevel_constant, sublevel_length_scan, sublevel_vdc_check, vdc_bound_check, vdc_constant,
    vdc_first_order_check, OscOptions, VdcIntegrand,
};
use crate::qmc::stream_rng;

/// One checked instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VdcRow {
    pub instance: usize,
    pub k: u32,
    pub a_bound: f64,
    pub lhs: f64,
    /// Right-hand side including the constant.
    pub bound: f64,
    pub pass: bool,
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(f64::from).product()
}

/// `1 + alpha cos(omega x + theta)` and its derivative.
#[derive(Clone, Copy)]
struct Amplitude {
    alpha: f64,
    omega: f64,
    theta: f64,
}

impl Amplitude {
    fn draw<R: Rng>(rng: &mut R) -> Self {
        Self {
            alpha: rng.gen_range(0.0..0.9),
            omega: rng.gen_range(0.0..10.0),
            theta: rng.gen_range(0.0..std::f64::consts::TAU),
        }
    }

    fn value(&self, x: f64) -> f64 {
        1.0 + self.alpha * (self.omega * x + self.theta).cos()
    }

    fn slope(&self, x: f64) -> f64 {
        -self.alpha * self.omega * (self.omega * x + self.theta).sin()
    }
}

/// `h = sign (A x + c x^2)` on `[0, L]` with `0 <= 2c <= B A / L`, so
/// `|h'| >= A` and `|h''| <= B A / L`. Passing means strict inequality.
pub fn first_order_suite(instances: usize, seed: u64) -> Result<Vec<VdcRow>> {
    let mut rng = stream_rng(seed, "vdc-first-order");
    let params: Vec<_> = (0..instances)
        .map(|_| {
            let len: f64 = rng.gen_range(0.5..2.0);
            let a: f64 = 10f64.powf(rng.gen_range(0.0..2.3));
            let b: f64 = rng.gen_range(0.5..4.0);
            let c = rng.gen_range(0.0..1.0) * b * a / (2.0 * len);
            let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
            (len, a, b, c, sign, Amplitude::draw(&mut rng))
        })
        .collect();
    params
        .par_iter()
        .enumerate()
        .map(|(i, &(len, a, b, c, sign, amp))| {
            let h = move |x: f64| sign * (a * x + c * x * x);
            let h1 = move |x: f64| sign * (a + 2.0 * c * x);
            let h2 = move |_x: f64| sign * 2.0 * c;
            let phi = move |x: f64| amp.value(x);
            let dphi = move |x: f64| amp.slope(x);
            let f = VdcIntegrand {
                phase: &h,
                phase_derivs: vec![&h1, &h2],
                amplitude: &phi,
                amplitude_deriv: &dphi,
                a: 0.0,
                b: len,
            };
            let r = vdc_first_order_check(&f, a, b)?;
            Ok(VdcRow { instance: i, k: 1, a_bound: a, lhs: r.lhs, bound: r.rhs, pass: r.pass })
        })
        .collect()
}

/// `h = lambda ((x + x0)^k / k! + mu (x + x0)^{k+1} / (k+1)!)` on `[0, L]`
/// with `lambda >= A`, `x0, mu >= 0`, so `h^{(k)} >= A` and `h'` is
/// monotone. Passing means `lhs <= c_k A^{-1/k} (|phi(b)| + int |phi'|)`.
pub fn oscillatory_suite(k: u32, instances: usize, seed: u64) -> Result<Vec<VdcRow>> {
    let mut rng = stream_rng(seed, &format!("vdc-oscillatory-{k}"));
    let params: Vec<_> = (0..instances)
        .map(|_| {
            let len: f64 = rng.gen_range(0.5..3.0);
            let a: f64 = 10f64.powf(rng.gen_range(0.0..3.0));
            let lambda = a * rng.gen_range(1.0..2.0);
            let x0: f64 = rng.gen_range(0.0..0.5);
            let mu: f64 = rng.gen_range(0.0..2.0);
            (len, a, lambda, x0, mu, Amplitude::draw(&mut rng))
        })
        .collect();
    let ck = vdc_constant(k);
    params
        .par_iter()
        .enumerate()
        .map(|(i, &(len, a, lambda, x0, mu, amp))| {
            // j-th derivative of the phase, j = 0..=k
            let deriv = move |j: u32, x: f64| {
                let y = x + x0;
                let p = k - j;
                lambda * (y.powi(p as i32) / factorial(p) + mu * y.powi(p as i32 + 1) / factorial(p + 1))
            };
            let derivs: Vec<Box<dyn Fn(f64) -> f64 + Sync>> =
                (1..=k).map(|j| Box::new(move |x: f64| deriv(j, x)) as Box<dyn Fn(f64) -> f64 + Sync>).collect();
            let h = move |x: f64| deriv(0, x);
            let phi = move |x: f64| amp.value(x);
            let dphi = move |x: f64| amp.slope(x);
            let f = VdcIntegrand {
                phase: &h,
                phase_derivs: derivs.iter().map(|d| d.as_ref()).collect(),
                amplitude: &phi,
                amplitude_deriv: &dphi,
                a: 0.0,
                b: len,
            };
            let r = vdc_bound_check(&f, k, a)?;
            let bound = ck * r.rhs_core;
            Ok(VdcRow { instance: i, k, a_bound: a, lhs: r.lhs, bound, pass: r.lhs <= bound })
        })
        .collect()
}

/// Sublevel thresholds relative to `lambda / k!`.
const SUBLEVEL_EPS: (f64, f64, usize) = (1e-9, 1e-2, 15);

/// `f = (lambda / k!) prod (x - r_i)` with real roots drawn in `[0, L]`, so
/// `f^{(k)} = lambda >= A`. Passing means every sublevel length stays below
/// `B_k A^{-1/k} eps^{1/k}`.
pub fn sublevel_suite(k: u32, instances: usize, seed: u64) -> Result<Vec<VdcRow>> {
    let mut rng = stream_rng(seed, &format!("vdc-sublevel-{k}"));
    let params: Vec<_> = (0..instances)
        .map(|_| {
            let len: f64 = rng.gen_range(0.5..3.0);
            let a: f64 = 10f64.powf(rng.gen_range(-1.0..3.0));
            let lambda = a * rng.gen_range(1.0..2.0);
            let roots: Vec<f64> = (0..k).map(|_| rng.gen_range(0.0..len)).collect();
            (len, a, lambda, roots)
        })
        .collect();
    let bk = sublevel_constant(k);
    params
        .par_iter()
        .enumerate()
        .map(|(i, (len, a, lambda, roots))| {
            let scale = lambda / factorial(k);
            let f = |x: f64| scale * roots.iter().map(|r| x - r).product::<f64>();
            let dk = |_x: f64| *lambda;
            let eps: Vec<f64> =
                geometric_grid(SUBLEVEL_EPS.0, SUBLEVEL_EPS.1, SUBLEVEL_EPS.2).iter().map(|e| e * scale).collect();
            let r = sublevel_vdc_check(f, dk, k, *a, (0.0, *len), &eps)?;
            let worst = r
                .measures
                .iter()
                .zip(&r.bounds)
                .max_by(|x, y| (x.0 / x.1).total_cmp(&(y.0 / y.1)))
                .map(|(m, b)| (*m, *b))
                .unwrap_or((0.0, bk));
            Ok(VdcRow { instance: i, k, a_bound: *a, lhs: worst.0, bound: worst.1, pass: r.pass })
        })
        .collect()
}

/// Log-log slopes of the sublevel length of `(A / k!) x^k` on `[-1, 1]`:
/// against `eps` at `A = 1`, and against `A` at `eps = 1e-6`. The laws are
/// `1/k` and `-1/k`.
pub fn sublevel_scaling(k: u32) -> Result<(f64, f64)> {
    let kf = factorial(k);
    let eps = geometric_grid(1e-10, 1e-4, 13);
    let r = sublevel_vdc_check(|x: f64| x.powi(k as i32) / kf, |_x: f64| 1.0, k, 1.0, (-1.0, 1.0), &eps)?;
    let eps_slope = match r.slope {
        Some(s) => s,
        None => log_log_slope(&eps, &r.measures)?.slope,
    };
    let amps = geometric_grid(1.0, 1e4, 9);
    let lengths: Vec<f64> =
        amps.iter().map(|&a| sublevel_length_scan(|x: f64| a * x.powi(k as i32) / kf, -1.0, 1.0, 1e-6)).collect();
    let a_slope = log_log_slope(&amps, &lengths)?.slope;
    Ok((eps_slope, a_slope))
}

/// Log-log slope of `|int_0^1 e^{i lambda x^k / k!} dx|` against `lambda`
/// over `lambda = (2m + 1) pi`, where the endpoint term of the first-order
/// case has full modulus. The law is `-1/k`.
pub fn oscillatory_scaling(k: u32) -> Result<f64> {
    let kf = factorial(k);
    let lambdas: Vec<f64> = geometric_grid(1e3, 1e6, 13)
        .iter()
        .map(|l| (2.0 * (l / std::f64::consts::TAU).round() + 1.0) * std::f64::consts::PI)
        .collect();
    let opts = OscOptions::default();
    let values: Vec<f64> = lambdas
        .par_iter()
        .map(|&l| {
            let h = move |x: f64| l * x.powi(k as i32) / kf;
            let dh = move |x: f64| l * x.powi(k as i32 - 1) / factorial(k - 1);
            Ok(phase_integrate(h, dh, |_x: f64| 1.0, 0.0, 1.0, &opts)?.value.norm())
        })
        .collect::<Result<_>>()?;
    Ok(log_log_slope(&lambdas, &values)?.slope)
}
