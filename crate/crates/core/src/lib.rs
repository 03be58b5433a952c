//! Numerical laboratory for sublevel-set growth indices of real-analytic
//! functions and the decay phenomena they control: Fourier transforms of
//! indicator functions and hypersurface measures, lattice point discrepancy
//! of dilated domains, and stability of sublevel growth under
//! finite-dimensional perturbations.
//!
//! Module map:
//!
//! * [`geometry`]: domain families, boundary charts, slices and volumes.
//! * [`indices`]: analytic and empirical growth indices `(g, k)`.
//! * [`oscint`]: oscillation-resolving quadrature and Van der Corput checks.
//! * [`fourier`]: indicator and surface-measure transforms, decay fits.
//! * [`lattice`]: exact lattice counting and discrepancy exponents.
//! * [`stability`]: perturbation families and the degradation construction.
//! * [`harness`]: experiment configs, runs, manifests and reports.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod fit;
pub mod fourier;
pub mod geometry;
pub mod harness;
pub mod indices;
pub mod lattice;
pub mod oscint;
pub mod poly;
pub mod qmc;
pub mod quad;
pub mod stability;

pub use error::{Error, Result};
pub use fourier::{DecayFit, DecaySeries};
pub use geometry::{BoundaryChart, Domain, DomainSpec, RadiusExpr};
pub use harness::{ExperimentConfig, ResultRecord};
pub use indices::{FitResult, GrowthIndex, SublevelFunction, SublevelSamples};
pub use lattice::{CountResult, DiscrepancySeries};
pub use poly::{Polynomial, UniPoly};
pub use stability::{PerturbationFamily, StabilityReport};

/// Exact rational used for closed-form exponents.
pub type Rational = num_rational::Ratio<i64>;

/// Complex double used for oscillatory integrals.
pub type Complex = num_complex::Complex64;
