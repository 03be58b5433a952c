use crate::error::{Error, Result};
use crate::fourier::{
    decay_sweep_on, fit_decay, predicted_decay, surface_decay_sweep, Cutoff, DecayFit, DecaySeries, TransformKind,
};
use crate::geometry::{Domain, DomainSpec};
use crate::indices::{fit_growth, FitResult, SublevelFunction, SublevelOptions, SublevelSamples};
use crate::lattice::{discrepancy_series_with, fit_discrepancy_exponent, predicted_discrepancy_exponent, CountPath};
use crate::oscint::OscOptions;
use crate::stability::{degradation_demo, family_sweep, PerturbationFamily};
use crate::Rational;

use super::config::{Experiment, ExperimentConfig, Grid, IndexRule, StabilityStudy, VdcBoundKind};
use super::vdc::{self, VdcRow};
use super::{fmt_f64, Check, Output, Table};

pub(crate) fn dispatch(cfg: &ExperimentConfig) -> Result<Output> {
    match &cfg.experiment {
        Experiment::Index { function, radius, epsilons, index } => {
            run_index(cfg, function, *radius, epsilons, index.as_ref())
        }
        Experiment::Fourier { domain, direction, r_grid, index } => {
            run_fourier(cfg, domain, direction, r_grid, index.as_ref())
        }
        Experiment::Surface { domain, point, direction, t_grid, cutoff, index } => {
            run_surface(cfg, domain, point, direction.as_deref(), t_grid, cutoff.as_ref(), index.as_ref())
        }
        Experiment::Lattice { domain, s_grid, index, count_path } => {
            run_lattice(cfg, domain, s_grid, index.as_ref(), *count_path)
        }
        Experiment::Stability { study: StabilityStudy::Sweep { family, etas, epsilons } } => {
            run_sweep(cfg, family, etas, epsilons)
        }
        Experiment::Stability { study: StabilityStudy::Degradation { t, delta, h_test, radius, epsilons } } => {
            run_degradation(cfg, *t, *delta, *h_test, *radius, epsilons)
        }
        Experiment::Vdc { bound, instances } => run_vdc(cfg, *bound, *instances),
    }
}

/// Fit failures caused by too little data become unmeasured checks.
fn optional_fit<T>(r: Result<T>) -> Result<std::result::Result<T, String>> {
    match r {
        Ok(v) => Ok(Ok(v)),
        Err(e @ (Error::SingularFit(_) | Error::InvalidInput(_))) => Ok(Err(e.to_string())),
        Err(e) => Err(e),
    }
}

fn r2f(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

fn ascending(grid: &Grid) -> Vec<f64> {
    let mut v = grid.values();
    v.sort_by(f64::total_cmp);
    v
}

fn sublevel_opts(cfg: &ExperimentConfig) -> SublevelOptions {
    SublevelOptions { lines: cfg.budget.mc_lines, max_rel_err: cfg.budget.max_rel_err, ..SublevelOptions::default() }
}

fn samples_table(file: &str, s: &SublevelSamples) -> Table {
    let mut t = Table::new(file, &["epsilon", "measure", "stderr"]);
    for ((e, m), se) in s.epsilons.iter().zip(&s.measures).zip(&s.stderrs) {
        t.push(vec![fmt_f64(*e), fmt_f64(*m), fmt_f64(*se)]);
    }
    t
}

fn growth_table(fit: Option<&FitResult>) -> Table {
    let mut t = Table::new("fit.csv", &["g_hat", "k_hat", "c_hat", "residual"]);
    if let Some(f) = fit {
        t.push(vec![fmt_f64(f.g_hat), f.k_hat.to_string(), fmt_f64(f.c_hat), fmt_f64(f.residual)]);
    }
    t
}

fn series_table(s: &DecaySeries) -> Table {
    let mut t = Table::new("series.csv", &["R", "re", "im", "abs", "err"]);
    for ((r, v), e) in s.r_grid.iter().zip(&s.values).zip(&s.errors) {
        t.push(vec![fmt_f64(*r), fmt_f64(v.re), fmt_f64(v.im), fmt_f64(v.norm()), fmt_f64(*e)]);
    }
    t
}

fn decay_table(fit: Option<&DecayFit>) -> Table {
    let mut t = Table::new("fit.csv", &["delta_hat", "l_hat", "C_hat", "residual"]);
    if let Some(f) = fit {
        t.push(vec![fmt_f64(f.delta_hat), f.l_hat.to_string(), fmt_f64(f.c_hat), fmt_f64(f.residual)]);
    }
    t
}

fn within(
    quantity: &str,
    rule: &str,
    predicted: f64,
    shown: String,
    measured: Option<f64>,
    tol: f64,
    note: String,
) -> Check {
    Check {
        quantity: quantity.into(),
        rule: rule.into(),
        predicted: shown,
        measured,
        tolerance: tol,
        pass: measured.map(|m| (m - predicted).abs() <= tol),
        note,
    }
}

fn unmeasured(quantity: &str, rule: &str, predicted: String, note: String) -> Check {
    Check { quantity: quantity.into(), rule: rule.into(), predicted, measured: None, tolerance: 0.0, pass: None, note }
}

fn run_index(
    cfg: &ExperimentConfig,
    function: &SublevelFunction,
    radius: f64,
    epsilons: &Grid,
    rule: Option<&IndexRule>,
) -> Result<Output> {
    let samples =
        SublevelSamples::measure(function, &cfg.name, radius, &epsilons.values(), cfg.seed, &sublevel_opts(cfg))?;
    let fit = optional_fit(fit_growth(&samples))?;
    let mut checks = Vec::new();
    if let Some(rule) = rule {
        let ix = rule.index()?;
        let desc = rule.describe();
        checks.push(match &fit {
            Ok(f) => within(
                "growth exponent g",
                &desc,
                ix.g_f64(),
                ix.g.to_string(),
                Some(f.g_hat),
                cfg.tolerances.index,
                format!("k_hat = {}, predicted k = {}", f.k_hat, ix.k),
            ),
            Err(e) => unmeasured("growth exponent g", &desc, ix.g.to_string(), e.clone()),
        });
    }
    let plot = samples.epsilons.iter().copied().zip(samples.measures.iter().copied()).collect();
    Ok(Output {
        tables: vec![samples_table("samples.csv", &samples), growth_table(fit.as_ref().ok())],
        plot: Some(("plot.csv".into(), plot)),
        checks,
    })
}

fn unit(v: &[f64]) -> Result<Vec<f64>> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !(n > 0.0) {
        return Err(Error::Config("direction: must be nonzero".into()));
    }
    Ok(v.iter().map(|x| x / n).collect())
}

/// Axis `j` (1-based) when `v` is a signed coordinate vector.
fn axis_of(v: &[f64]) -> Option<usize> {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    let hits: Vec<usize> = v.iter().enumerate().filter(|(_, x)| x.abs() > 1e-12 * n).map(|(i, _)| i).collect();
    match hits.as_slice() {
        [j] => Some(j + 1),
        _ => None,
    }
}

fn vertex_rule(spec: &DomainSpec, v: &[f64]) -> Option<IndexRule> {
    match spec {
        DomainSpec::Superellipsoid { exponents } => {
            axis_of(v).map(|j| IndexRule::Vertex { exponents: exponents.clone(), j })
        }
        _ => None,
    }
}

fn decay_checks(
    fit: &std::result::Result<DecayFit, String>,
    rule: Option<IndexRule>,
    dim: usize,
    kind: TransformKind,
    tol: f64,
) -> Result<Vec<Check>> {
    let Some(rule) = rule else {
        return Ok(Vec::new());
    };
    let desc = rule.describe();
    let predicted = match predicted_decay(&rule.index()?, dim as u32 - 1, kind) {
        Ok(p) => p,
        Err(e @ Error::Undecidable(_)) => {
            return Ok(vec![unmeasured("decay exponent", &desc, "-".into(), e.to_string())])
        }
        Err(e) => return Err(e),
    };
    let (delta, l) = predicted;
    Ok(match fit {
        Ok(f) => vec![
            within("decay exponent", &desc, r2f(delta), delta.to_string(), Some(f.delta_hat), tol, String::new()),
            Check {
                quantity: "log power".into(),
                rule: desc,
                predicted: format!("<= {l}"),
                measured: Some(f.l_hat as f64),
                tolerance: 0.0,
                pass: Some(f.l_hat <= l),
                note: String::new(),
            },
        ],
        Err(e) => vec![unmeasured("decay exponent", &desc, delta.to_string(), e.clone())],
    })
}

fn run_fourier(
    cfg: &ExperimentConfig,
    spec: &DomainSpec,
    direction: &[f64],
    r_grid: &Grid,
    rule: Option<&IndexRule>,
) -> Result<Output> {
    let domain = Domain::new(spec.clone())?;
    let v = unit(direction)?;
    let opts = OscOptions { extra_segments: cfg.budget.quad_segments, ..OscOptions::default() };
    let series = decay_sweep_on(&domain, &v, &ascending(r_grid), &opts)?;
    let fit = optional_fit(fit_decay(&series))?;
    let rule = rule.cloned().or_else(|| vertex_rule(spec, &v));
    let checks = decay_checks(&fit, rule, domain.dimension(), TransformKind::Indicator, cfg.tolerances.fourier)?;
    Ok(Output {
        plot: Some(("plot.csv".into(), series.r_grid.iter().copied().zip(series.magnitudes()).collect())),
        tables: vec![series_table(&series), decay_table(fit.as_ref().ok())],
        checks,
    })
}

fn run_surface(
    cfg: &ExperimentConfig,
    spec: &DomainSpec,
    point: &[f64],
    direction: Option<&[f64]>,
    t_grid: &Grid,
    cutoff: Option<&Cutoff>,
    rule: Option<&IndexRule>,
) -> Result<Output> {
    let domain = Domain::new(spec.clone())?;
    let chart = domain.chart_at(point)?;
    let cutoff = cutoff.copied().unwrap_or_else(|| Cutoff::for_chart(&chart));
    let dir = match direction {
        Some(d) => unit(d)?,
        None => {
            let mut d = vec![0.0; point.len()];
            d[point.len() - 1] = 1.0;
            d
        }
    };
    let series = surface_decay_sweep(&chart, &cutoff, &dir, &ascending(t_grid))?;
    let fit = optional_fit(fit_decay(&series))?;
    let rule = rule.cloned().or_else(|| vertex_rule(spec, point));
    let checks = decay_checks(&fit, rule, domain.dimension(), TransformKind::Surface, cfg.tolerances.surface)?;
    Ok(Output {
        plot: Some(("plot.csv".into(), series.r_grid.iter().copied().zip(series.magnitudes()).collect())),
        tables: vec![series_table(&series), decay_table(fit.as_ref().ok())],
        checks,
    })
}

fn run_lattice(
    cfg: &ExperimentConfig,
    spec: &DomainSpec,
    s_grid: &Grid,
    rule: Option<&IndexRule>,
    path: Option<CountPath>,
) -> Result<Output> {
    let domain = Domain::new(spec.clone())?;
    let mut grid = s_grid.rationals()?;
    grid.sort();
    grid.dedup();
    let series = discrepancy_series_with(&domain, &grid, cfg.seed, path)?;
    let mut counts = Table::new("counts.csv", &["s", "N", "volume_term", "discrepancy"]);
    for r in &series.results {
        counts.push(vec![r.s.to_string(), r.n.to_string(), fmt_f64(r.volume_term), fmt_f64(r.discrepancy)]);
    }
    let theta = optional_fit(fit_discrepancy_exponent(&series))?;
    let mut fit = Table::new("fit.csv", &["theta_hat", "blocks"]);
    if let Ok(th) = &theta {
        fit.push(vec![fmt_f64(*th), series.blocks.len().to_string()]);
    }
    let rule = rule.cloned().or_else(|| match spec {
        DomainSpec::Superellipsoid { exponents } => Some(IndexRule::Global { exponents: exponents.clone() }),
        _ => None,
    });
    let mut checks = Vec::new();
    if let Some(rule) = rule {
        let desc = rule.describe();
        let q = "discrepancy exponent";
        checks.push(match predicted_discrepancy_exponent(&rule.index()?, domain.dimension() as u32 - 1) {
            Err(e @ Error::Undecidable(_)) => unmeasured(q, &desc, "-".into(), e.to_string()),
            Err(e) => return Err(e),
            Ok((bound, loss)) => match &theta {
                Err(e) => {
                    unmeasured(q, &desc, format!("<= {bound}{}", if loss { " + epsilon" } else { "" }), e.clone())
                }
                Ok(th) => Check {
                    quantity: q.into(),
                    rule: desc,
                    predicted: format!("<= {bound}{}", if loss { " + epsilon" } else { "" }),
                    measured: Some(*th),
                    tolerance: cfg.tolerances.lattice,
                    pass: Some(*th <= r2f(bound) + cfg.tolerances.lattice),
                    note: String::new(),
                },
            },
        });
    }
    Ok(Output { tables: vec![counts, fit], plot: Some(("plot.csv".into(), series.blocks.clone())), checks })
}

fn run_sweep(
    cfg: &ExperimentConfig,
    family: &PerturbationFamily,
    etas: &[Vec<f64>],
    epsilons: &Grid,
) -> Result<Output> {
    let report = family_sweep(family, etas, &epsilons.values(), cfg.seed, &sublevel_opts(cfg))?;
    let m = family.members.len();
    let mut header: Vec<String> = (1..=m).map(|i| format!("eta_{i}")).collect();
    header.extend(["g_hat", "k_hat", "residual", "uniformity_stat"].map(String::from));
    let mut sweep = Table { file: "sweep.csv".into(), header, rows: Vec::new() };
    let mut tables = Vec::new();
    for (i, ((eta, fit), u)) in report.etas.iter().zip(&report.fits).zip(&report.uniformity_per_eta).enumerate() {
        let mut row: Vec<String> = eta.iter().map(|e| fmt_f64(*e)).collect();
        row.extend([fmt_f64(fit.g_hat), fit.k_hat.to_string(), fmt_f64(fit.residual), fmt_f64(*u)]);
        sweep.push(row);
        tables.push(samples_table(&format!("samples_{i}.csv"), &report.samples[i]));
    }
    tables.insert(0, sweep);
    let (h, _) = report.base_index;
    let worst = report.fits.iter().map(|f| f.g_hat).fold(f64::INFINITY, f64::min);
    let tol = cfg.tolerances.stability;
    let rule = match &family.index {
        Some(ix) => format!("base index ({}, {})", ix.g, ix.k),
        None => "fitted index at eta = 0".to_string(),
    };
    let note = match report.within_capacity {
        Some(true) => format!("{m} members within the uniform-bound capacity"),
        Some(false) => format!("{m} members exceed the uniform-bound capacity"),
        None => String::new(),
    };
    let checks = vec![Check {
        quantity: "smallest fitted g over the family".into(),
        rule,
        predicted: format!(">= {}", fmt_f64(h)),
        measured: Some(worst),
        tolerance: tol,
        pass: Some(worst >= h - tol),
        note,
    }];
    let plot = report
        .samples
        .first()
        .map(|s| ("plot.csv".to_string(), s.epsilons.iter().copied().zip(s.measures.iter().copied()).collect()));
    Ok(Output { tables, plot, checks })
}

fn run_degradation(
    cfg: &ExperimentConfig,
    t: Rational,
    delta: f64,
    h_test: f64,
    radius: f64,
    epsilons: &Grid,
) -> Result<Output> {
    let r = degradation_demo(t, delta, &epsilons.values(), h_test, radius, cfg.seed, &sublevel_opts(cfg))?;
    let max_ratio =
        |s: &SublevelSamples| s.epsilons.iter().zip(&s.measures).map(|(e, m)| m / e.powf(h_test)).fold(0.0, f64::max);
    let mut sweep = Table::new("sweep.csv", &["eta_1", "g_hat", "k_hat", "residual", "uniformity_stat"]);
    for (eta, fit, s) in [(0.0, &r.unperturbed_fit, &r.unperturbed), (delta, &r.perturbed_fit, &r.perturbed)] {
        sweep.push(vec![
            fmt_f64(eta),
            fmt_f64(fit.g_hat),
            fit.k_hat.to_string(),
            fmt_f64(fit.residual),
            fmt_f64(max_ratio(s)),
        ]);
    }
    let mut ratios = Table::new("ratios.csv", &["epsilon", "ratio", "stderr"]);
    for (e, q, se) in &r.ratios {
        ratios.push(vec![fmt_f64(*e), fmt_f64(*q), fmt_f64(*se)]);
    }
    let c = r.construction.c;
    let rule = format!("powered sum n={} k={} c={c}", r.construction.n, r.construction.k);
    let tol = cfg.tolerances.stability;
    let inv_c = Rational::new(1, c as i64);
    let checks = vec![
        within("unperturbed g", &rule, r2f(t), t.to_string(), Some(r.unperturbed_fit.g_hat), tol, String::new()),
        within("perturbed g", &rule, r2f(inv_c), inv_c.to_string(), Some(r.perturbed_fit.g_hat), tol, String::new()),
        Check {
            quantity: format!("growth of m / eps^{h_test}"),
            rule,
            predicted: "> 1, increasing".into(),
            measured: Some(r.growth_factor),
            tolerance: 0.0,
            pass: Some(r.ratio_increasing && r.growth_factor > 1.0),
            note: String::new(),
        },
    ];
    let plot = r.perturbed.epsilons.iter().copied().zip(r.perturbed.measures.iter().copied()).collect();
    Ok(Output {
        tables: vec![
            sweep,
            samples_table("samples_unperturbed.csv", &r.unperturbed),
            samples_table("samples_perturbed.csv", &r.perturbed),
            ratios,
        ],
        plot: Some(("plot.csv".into(), plot)),
        checks,
    })
}

fn run_vdc(cfg: &ExperimentConfig, bound: VdcBoundKind, instances: usize) -> Result<Output> {
    let (rows, label): (Vec<VdcRow>, String) = match bound {
        VdcBoundKind::FirstOrder => (vdc::first_order_suite(instances, cfg.seed)?, "first-order bound, B + 2".into()),
        VdcBoundKind::Oscillatory { k } => (
            vdc::oscillatory_suite(k, instances, cfg.seed)?,
            format!("oscillatory bound, c_{k} = {}", crate::oscint::vdc_constant(k)),
        ),
        VdcBoundKind::Sublevel { k } => (
            vdc::sublevel_suite(k, instances, cfg.seed)?,
            format!("sublevel bound, B_{k} = {}", crate::oscint::sublevel_constant(k)),
        ),
    };
    let mut table = Table::new("instances.csv", &["instance", "k", "A", "lhs", "bound", "pass"]);
    for r in &rows {
        table.push(vec![
            r.instance.to_string(),
            r.k.to_string(),
            fmt_f64(r.a_bound),
            fmt_f64(r.lhs),
            fmt_f64(r.bound),
            r.pass.to_string(),
        ]);
    }
    let worst = rows.iter().map(|r| r.lhs / r.bound).fold(0.0, f64::max);
    let failures = rows.iter().filter(|r| !r.pass).count();
    let strict = matches!(bound, VdcBoundKind::FirstOrder);
    let mut checks = vec![Check {
        quantity: "largest lhs / bound".into(),
        rule: label.clone(),
        predicted: if strict { "< 1".into() } else { "<= 1".into() },
        measured: Some(worst),
        tolerance: 0.0,
        pass: Some(failures == 0),
        note: format!("{failures} of {} instances fail", rows.len()),
    }];
    let tol = cfg.tolerances.vdc_slope;
    match bound {
        VdcBoundKind::FirstOrder => {}
        VdcBoundKind::Oscillatory { k } => {
            let s = vdc::oscillatory_scaling(k)?;
            let law = -1.0 / k as f64;
            checks.push(within("slope in A", &label, law, format!("-1/{k}"), Some(s), tol, String::new()));
        }
        VdcBoundKind::Sublevel { k } => {
            let (se, sa) = vdc::sublevel_scaling(k)?;
            let law = 1.0 / k as f64;
            checks.push(within("slope in eps", &label, law, format!("1/{k}"), Some(se), tol, String::new()));
            checks.push(within("slope in A", &label, -law, format!("-1/{k}"), Some(sa), tol, String::new()));
        }
    }
    let plot = rows.iter().map(|r| (r.a_bound, r.lhs / r.bound)).collect();
    Ok(Output { tables: vec![table], plot: Some(("plot.csv".into(), plot)), checks })
}
