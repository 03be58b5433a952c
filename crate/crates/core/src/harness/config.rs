use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::fit::geometric_grid;
use crate::fourier::Cutoff;
use crate::geometry::{Domain, DomainSpec};
use crate::indices::{example1_global_index, example1_vertex_index, powered_sum_index, GrowthIndex, SublevelFunction};
use crate::lattice::{octave_grid, CountPath, GRID_DENOMINATOR};
use crate::stability::PerturbationFamily;
use crate::Rational;

/// One experiment: what to run, on what grid, with which seed.
///
/// The seed has no default; a config without one is rejected at parse time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub seed: u64,
    pub experiment: Experiment,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub budget: Budget,
    /// Overridden by the CLI `--out` flag.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Experiment {
    /// Empirical growth index of a sublevel function on a ball.
    Index {
        function: SublevelFunction,
        radius: f64,
        epsilons: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<IndexRule>,
    },
    /// Indicator transform along a direction.
    Fourier {
        domain: DomainSpec,
        direction: Vec<f64>,
        r_grid: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<IndexRule>,
    },
    /// Surface-measure transform of a boundary chart. `direction` lists the
    /// tangent components first and the normal component last.
    Surface {
        domain: DomainSpec,
        point: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        direction: Option<Vec<f64>>,
        t_grid: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        cutoff: Option<Cutoff>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<IndexRule>,
    },
    /// Exact lattice counts of dilates; grid values must be multiples of
    /// 1/64.
    Lattice {
        domain: DomainSpec,
        s_grid: Grid,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        index: Option<IndexRule>,
        /// Exact integer counting (superellipsoids) or the guarded float
        /// path; by default the exact path wherever it applies.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        count_path: Option<CountPath>,
    },
    Stability {
        study: StabilityStudy,
    },
    Vdc {
        bound: VdcBoundKind,
        instances: usize,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::Index { .. } => "index",
            Experiment::Fourier { .. } => "fourier",
            Experiment::Surface { .. } => "surface",
            Experiment::Lattice { .. } => "lattice",
            Experiment::Stability { .. } => "stability",
            Experiment::Vdc { .. } => "vdc",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case", deny_unknown_fields)]
pub enum StabilityStudy {
    /// Fitted index of `q + sum eta_i s_i` for each coefficient vector.
    Sweep { family: PerturbationFamily, etas: Vec<Vec<f64>>, epsilons: Grid },
    /// The powered-sum construction for target index `t`, perturbed by
    /// `delta x_1` inside the power.
    Degradation { t: Rational, delta: f64, h_test: f64, radius: f64, epsilons: Grid },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "form", rename_all = "snake_case", deny_unknown_fields)]
pub enum VdcBoundKind {
    /// First-order bound with the explicit constant `B + 2`.
    FirstOrder,
    /// Oscillatory bound of order `k` with constant `c_k`.
    Oscillatory { k: u32 },
    /// Sublevel bound of order `k` with constant `B_k`.
    Sublevel { k: u32 },
}

/// Where the predicted growth index comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case", deny_unknown_fields)]
pub enum IndexRule {
    Exact {
        g: Rational,
        k: u32,
    },
    /// Superellipsoid vertex on axis `j` (1-based).
    Vertex {
        exponents: Vec<u32>,
        j: usize,
    },
    /// Worst point of a superellipsoid boundary.
    Global {
        exponents: Vec<u32>,
    },
    /// `(sum_{i <= n} x_i^{2k})^c`.
    PoweredSum {
        n: u32,
        k: u32,
        c: u32,
    },
}

impl IndexRule {
    pub fn index(&self) -> Result<GrowthIndex> {
        match self {
            IndexRule::Exact { g, k } => Ok(GrowthIndex::exact(*g, *k)),
            IndexRule::Vertex { exponents, j } => example1_vertex_index(exponents, *j),
            IndexRule::Global { exponents } => example1_global_index(exponents),
            IndexRule::PoweredSum { n, k, c } => powered_sum_index(*n, *k, *c),
        }
    }

    pub fn describe(&self) -> String {
        match self {
            IndexRule::Exact { g, k } => format!("given index ({g}, {k})"),
            IndexRule::Vertex { exponents, j } => format!("superellipsoid {exponents:?} vertex {j}"),
            IndexRule::Global { exponents } => format!("superellipsoid {exponents:?} worst boundary point"),
            IndexRule::PoweredSum { n, k, c } => format!("powered sum n={n} k={k} c={c}"),
        }
    }
}

/// Parameter grid: an explicit list, `points` geometric values, or
/// `per_octave` geometric values per doubling.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    List(Vec<f64>),
    Geometric { from: f64, to: f64, points: usize },
    Octaves { from: f64, to: f64, per_octave: usize },
}

impl Grid {
    pub fn values(&self) -> Vec<f64> {
        match self {
            Grid::List(v) => v.clone(),
            Grid::Geometric { from, to, points } => geometric_grid(*from, *to, *points),
            Grid::Octaves { from, to, per_octave } => {
                if !(*from > 0.0 && *to > 0.0) {
                    return Vec::new();
                }
                let points = ((to / from).log2().abs() * *per_octave as f64).round() as usize + 1;
                geometric_grid(*from, *to, points)
            }
        }
    }

    /// Dilation parameters on the `1/64` lattice.
    pub fn rationals(&self) -> Result<Vec<Rational>> {
        match self {
            Grid::Octaves { from, to, per_octave } => octave_grid(*from, *to, *per_octave, GRID_DENOMINATOR),
            _ => self
                .values()
                .iter()
                .map(|&s| {
                    let scaled = s * GRID_DENOMINATOR as f64;
                    if (scaled - scaled.round()).abs() > 1e-9 || scaled.round() > i64::MAX as f64 {
                        Err(Error::Config(format!("dilation {s} is not a multiple of 1/{GRID_DENOMINATOR}")))
                    } else {
                        Ok(Rational::new(scaled.round() as i64, GRID_DENOMINATOR))
                    }
                })
                .collect(),
        }
    }

    fn check(&self, field: &str, positive: bool) -> Result<()> {
        if let Grid::Geometric { points: 0, .. } | Grid::Octaves { per_octave: 0, .. } = self {
            return Err(Error::Config(format!("{field}: empty grid")));
        }
        let v = self.values();
        if v.is_empty() {
            return Err(Error::Config(format!("{field}: empty grid")));
        }
        if v.iter().any(|x| !x.is_finite() || (positive && *x <= 0.0)) {
            return Err(Error::Config(format!("{field}: values must be finite and positive")));
        }
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Config(format!("{field}: grid must be strictly ordered")));
        }
        Ok(())
    }
}

/// Comparison tolerances between measured and predicted exponents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Fitted `g` against the predicted index.
    pub index: f64,
    /// Fitted indicator decay exponent.
    pub fourier: f64,
    /// Fitted surface decay exponent.
    pub surface: f64,
    /// Allowed excess of the discrepancy exponent over the prediction.
    pub lattice: f64,
    /// Allowed drop of a fitted index below the base index.
    pub stability: f64,
    /// Scaling-law slopes of the Van der Corput suites.
    pub vdc_slope: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { index: 0.05, fourier: 0.05, surface: 0.02, lattice: 0.05, stability: 0.05, vdc_slope: 0.05 }
    }
}

impl Tolerances {
    /// `acceptance` (the defaults) or `exploratory` (all doubled).
    pub fn profile(name: &str) -> Result<Self> {
        let base = Self::default();
        match name {
            "acceptance" => Ok(base),
            "exploratory" => Ok(Self {
                index: 2.0 * base.index,
                fourier: 2.0 * base.fourier,
                surface: 2.0 * base.surface,
                lattice: 2.0 * base.lattice,
                stability: 2.0 * base.stability,
                vdc_slope: 2.0 * base.vdc_slope,
            }),
            other => Err(Error::Config(format!("unknown tolerance profile {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Budget {
    /// Transverse lines per replicate in sublevel estimates.
    pub mc_lines: usize,
    /// Extra adaptive segments per indicator-transform integral.
    pub quad_segments: usize,
    /// Largest accepted `stderr / measure` of a sublevel estimate; beyond
    /// it the run fails with a budget error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_rel_err: Option<f64>,
}

impl Default for Budget {
    fn default() -> Self {
        Self { mc_lines: 1 << 14, quad_segments: 200_000, max_rel_err: None }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// SHA-256 of the canonical JSON (sorted keys, no whitespace) of
    /// everything except the output directory.
    pub fn hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("output_dir");
        }
        let canonical = serde_json::to_string(&value)?;
        Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
    }

    /// Every field error, so one pass reports all of them.
    pub fn validate(&self) -> Result<()> {
        let mut errs: Vec<String> = Vec::new();
        let mut note = |r: Result<()>| {
            if let Err(e) = r {
                errs.push(match e {
                    Error::Config(m) => m,
                    other => other.to_string(),
                });
            }
        };
        if self.name.trim().is_empty() || self.name.contains(['/', '\\']) {
            note(Err(Error::Config("name: must be a nonempty plain file name".into())));
        }
        let t = &self.tolerances;
        if [t.index, t.fourier, t.surface, t.lattice, t.stability, t.vdc_slope].iter().any(|x| !(*x >= 0.0)) {
            note(Err(Error::Config("tolerances: must be nonnegative".into())));
        }
        if self.budget.mc_lines == 0 {
            note(Err(Error::Config("budget.mc_lines: must be positive".into())));
        }
        if self.budget.max_rel_err.is_some_and(|x| !(x > 0.0)) {
            note(Err(Error::Config("budget.max_rel_err: must be positive".into())));
        }
        match &self.experiment {
            Experiment::Index { function, radius, epsilons, index } => {
                note(epsilons.check("epsilons", true));
                if !(*radius > 0.0) {
                    note(Err(Error::Config("radius: must be positive".into())));
                }
                if let SublevelFunction::Power { power: 0, .. } = function {
                    note(Err(Error::Config("function.power: must be positive".into())));
                }
                if let Some(rule) = index {
                    note(rule.index().map(|_| ()));
                }
            }
            Experiment::Fourier { domain, direction, r_grid, index } => {
                note(r_grid.check("r_grid", true));
                note(check_domain(domain, direction.len(), "direction"));
                if direction.iter().all(|x| *x == 0.0) {
                    note(Err(Error::Config("direction: must be nonzero".into())));
                }
                if let Some(rule) = index {
                    note(rule.index().map(|_| ()));
                }
            }
            Experiment::Surface { domain, point, direction, t_grid, index, .. } => {
                note(t_grid.check("t_grid", true));
                note(check_domain(domain, point.len(), "point"));
                if let Some(d) = direction {
                    if d.len() != point.len() {
                        note(Err(Error::Config("direction: length must match point".into())));
                    }
                }
                if let Some(rule) = index {
                    note(rule.index().map(|_| ()));
                }
            }
            Experiment::Lattice { domain, s_grid, index, count_path } => {
                note(s_grid.check("s_grid", true));
                note(s_grid.rationals().map(|_| ()));
                if let Err(e) = Domain::new(domain.clone()) {
                    note(Err(Error::Config(format!("domain: {e}"))));
                }
                if let Some(rule) = index {
                    note(rule.index().map(|_| ()));
                }
                if *count_path == Some(CountPath::Exact) && !matches!(domain, DomainSpec::Superellipsoid { .. }) {
                    note(Err(Error::Config("count_path: exact counting needs a superellipsoid".into())));
                }
            }
            Experiment::Stability { study } => match study {
                StabilityStudy::Sweep { family, etas, epsilons } => {
                    note(epsilons.check("epsilons", true));
                    if etas.is_empty() {
                        note(Err(Error::Config("etas: empty grid".into())));
                    }
                    if etas.iter().any(|e| e.len() != family.members.len()) {
                        note(Err(Error::Config("etas: each vector needs one entry per family member".into())));
                    }
                    if let Err(e) = family.validate() {
                        note(Err(Error::Config(format!("family: {e}"))));
                    }
                }
                StabilityStudy::Degradation { delta, radius, epsilons, .. } => {
                    note(epsilons.check("epsilons", true));
                    if !(*radius > 0.0) || !delta.is_finite() {
                        note(Err(Error::Config("radius and delta: radius positive, delta finite".into())));
                    }
                }
            },
            Experiment::Vdc { bound, instances } => {
                if *instances == 0 {
                    note(Err(Error::Config("instances: must be positive".into())));
                }
                match bound {
                    VdcBoundKind::Oscillatory { k } | VdcBoundKind::Sublevel { k } if *k == 0 || *k > 6 => {
                        note(Err(Error::Config("bound.k: must lie in 1..=6".into())))
                    }
                    _ => {}
                }
            }
        }
        if errs.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errs.join("; ")))
        }
    }
}

fn check_domain(spec: &DomainSpec, len: usize, field: &str) -> Result<()> {
    let d = Domain::new(spec.clone()).map_err(|e| Error::Config(format!("domain: {e}")))?;
    if d.dimension() != len {
        return Err(Error::Config(format!("{field}: expected {} coordinates, got {len}", d.dimension())));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    const LATTICE: &str = r#"{"name": "disk", "seed": 7,
        "experiment": {"kind": "lattice", "domain": {"kind": "superellipsoid", "exponents": [1, 1]}, "s_grid": [1, 2]}}"#;

    #[test]
    fn round_trip() {
        let c = ExperimentConfig::from_json(LATTICE).unwrap();
        let back = ExperimentConfig::from_json(&c.to_json().unwrap()).unwrap();
        assert_eq!(c, back);
    }

    #[test]
    fn hash_ignores_field_order_and_output_dir() {
        let reordered = r#"{"experiment": {"s_grid": [1, 2], "domain": {"exponents": [1, 1], "kind": "superellipsoid"},
            "kind": "lattice"}, "seed": 7, "name": "disk", "output_dir": "/tmp/x"}"#;
        let a = ExperimentConfig::from_json(LATTICE).unwrap().hash().unwrap();
        let b = ExperimentConfig::from_json(reordered).unwrap().hash().unwrap();
        assert_eq!(a, b);
        let other = ExperimentConfig::from_json(&LATTICE.replace("\"seed\": 7", "\"seed\": 8")).unwrap();
        assert_ne!(a, other.hash().unwrap());
    }

    #[test]
    fn seed_is_mandatory() {
        let e = ExperimentConfig::from_json(&LATTICE.replace("\"seed\": 7,", "")).unwrap_err();
        assert!(matches!(e, Error::Config(_)));
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn grid_validation() {
        let empty = ExperimentConfig::from_json(&LATTICE.replace("[1, 2]", "[]")).unwrap();
        assert!(empty.validate().unwrap_err().to_string().contains("empty grid"));
        let unordered = ExperimentConfig::from_json(&LATTICE.replace("[1, 2]", "[2, 1, 3]")).unwrap();
        assert!(unordered.validate().is_err());
        let off_lattice = ExperimentConfig::from_json(&LATTICE.replace("[1, 2]", "[1, 2.001]")).unwrap();
        assert!(off_lattice.validate().is_err());
    }

    #[test]
    fn profiles() {
        assert_eq!(Tolerances::profile("acceptance").unwrap(), Tolerances::default());
        assert!(Tolerances::profile("exploratory").unwrap().index > Tolerances::default().index);
        assert!(Tolerances::profile("nope").is_err());
    }
}
