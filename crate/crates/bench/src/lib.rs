//! Fixtures shared by the benchmarks under `benches/`.

use sublevel_core::{Domain, DomainSpec, Polynomial, SublevelFunction};

pub fn superellipse(exponents: &[u32]) -> Domain {
    Domain::new(DomainSpec::superellipsoid(exponents)).expect("valid exponents")
}

/// `x^4 + y^2 + z^2`.
pub fn quartic() -> SublevelFunction {
    SublevelFunction::poly(Polynomial::even_power_sum(&[2, 1, 1]))
}
