//! Log-linear regression with an integer log-power term:
//! `ln y = ln C + s ln x + k ln|ln x|`, `k` chosen by enumeration.

use crate::error::{Error, Result};

/// Residual margin (RMS, natural-log units) within which a smaller log
/// power is preferred over a better-fitting larger one.
pub const LOG_POWER_TIE: f64 = 0.01;

#[derive(Clone, Debug, PartialEq)]
pub struct LogLinearFit {
    /// Coefficient of `ln x`.
    pub slope: f64,
    /// Standard error of `slope` under the OLS noise model.
    pub slope_stderr: f64,
    pub log_power: u32,
    /// `ln C`.
    pub intercept: f64,
    /// RMS residual in log space.
    pub residual: f64,
}

fn ols(x: &[f64], y: &[f64]) -> Result<(f64, f64, f64, f64)> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if !(sxx > 1e-12 * n) {
        return Err(Error::SingularFit("abscissae do not vary".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let rms = (ss / n).sqrt();
    let se = if x.len() > 2 { (ss / (n - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok((slope, intercept, rms, se))
}

/// Fits `y ≈ C x^s |ln x|^k` for each `k` in `0..=max_k` and keeps the
/// smallest `k` whose residual is within [`LOG_POWER_TIE`] of the best.
/// `x` must stay away from 1, where the log term is singular.
pub fn fit_power_log(x: &[f64], y: &[f64], max_k: u32) -> Result<LogLinearFit> {
    fit_power_log_with_tie(x, y, max_k, LOG_POWER_TIE)
}

pub fn fit_power_log_with_tie(x: &[f64], y: &[f64], max_k: u32, tie: f64) -> Result<LogLinearFit> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), got: y.len() });
    }
    if x.len() < 3 {
        return Err(Error::SingularFit(format!("{} points", x.len())));
    }
    if x.iter().chain(y).any(|v| !(v.is_finite() && *v > 0.0)) {
        return Err(Error::InvalidInput("fit data must be positive and finite".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let llx: Vec<f64> = lx.iter().map(|v| v.abs().ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let mut fits = Vec::new();
    for k in 0..=max_k {
        let adj: Vec<f64> =
            if k == 0 { ly.clone() } else { ly.iter().zip(&llx).map(|(a, b)| a - k as f64 * b).collect() };
        let (slope, intercept, residual, slope_stderr) = ols(&lx, &adj)?;
        fits.push(LogLinearFit { slope, slope_stderr, log_power: k, intercept, residual });
    }
    let best = fits.iter().map(|f| f.residual).fold(f64::INFINITY, f64::min);
    fits.into_iter()
        .find(|f| f.residual <= best + tie)
        .ok_or_else(|| Error::SingularFit("no finite residual; is some x equal to 1?".into()))
}

/// Plain least-squares slope of `ln y` on `ln x`.
pub fn log_log_slope(x: &[f64], y: &[f64]) -> Result<LogLinearFit> {
    fit_power_log(x, y, 0)
}

/// Geometric grid of `n` points from `a` to `b` inclusive.
pub fn geometric_grid(a: f64, b: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![a];
    }
    let (la, lb) = (a.ln(), b.ln());
    (0..n).map(|i| (la + (lb - la) * i as f64 / (n - 1) as f64).exp()).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_power_law() {
        let x = geometric_grid(1e-6, 1e-1, 16);
        let y: Vec<f64> = x.iter().map(|e| 2.0 * e.sqrt()).collect();
        let f = fit_power_log(&x, &y, 2).unwrap();
        assert_eq!(f.log_power, 0);
        assert!((f.slope - 0.5).abs() < 1e-12);
        assert!((f.intercept - 2f64.ln()).abs() < 1e-10);
    }

    #[test]
    fn log_factor_identified() {
        let x = geometric_grid(1e-6, 1e-1, 16);
        let y: Vec<f64> = x.iter().map(|e| e * e.ln().abs()).collect();
        let f = fit_power_log(&x, &y, 2).unwrap();
        assert_eq!(f.log_power, 1);
        assert!((f.slope - 1.0).abs() < 1e-10);
    }

    #[test]
    fn degenerate_grid_rejected() {
        assert!(matches!(fit_power_log(&[0.1, 0.1, 0.1], &[1.0, 1.0, 1.0], 0), Err(Error::SingularFit(_))));
    }
}
