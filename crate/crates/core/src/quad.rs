//! Gauss-Kronrod (7, 15) rules and a globally adaptive driver.

// nodes and weights are quoted to their published digits
#![allow(clippy::excessive_precision)]

use std::collections::BinaryHeap;
use std::ops::{Add, Mul, Sub};

use crate::error::{Error, Result};
use crate::Complex;

const XGK: [f64; 8] = [
    0.991455371120812639206854697526329,
    0.949107912342758524526189684047851,
    0.864864423359769072789712788640926,
    0.741531185599394439863864773280788,
    0.586087235467691130294144845693013,
    0.405845151377397166906606412076961,
    0.207784955007898467600689403773245,
    0.000000000000000000000000000000000,
];

const WGK: [f64; 8] = [
    0.022935322010529224963732008058970,
    0.063092092629978553290700663189204,
    0.104790010322250183839876322541518,
    0.140653259715525918745189590510238,
    0.169004726639267902826583426598550,
    0.190350578064785409913256402421014,
    0.204432940075298892414161999234649,
    0.209482141084727828012999174891714,
];

const WG: [f64; 4] = [
    0.129484966168869693270611432679082,
    0.279705391489276667901467771423780,
    0.381830050505118944950369775488975,
    0.417959183673469387755102040816327,
];

/// Values a quadrature rule can accumulate.
pub trait Quadrand: Copy + Add<Output = Self> + Sub<Output = Self> + Mul<f64, Output = Self> {
    fn zero() -> Self;
    fn magnitude(&self) -> f64;
}

impl Quadrand for f64 {
    fn zero() -> Self {
        0.0
    }
    fn magnitude(&self) -> f64 {
        self.abs()
    }
}

impl Quadrand for Complex {
    fn zero() -> Self {
        Complex::new(0.0, 0.0)
    }
    fn magnitude(&self) -> f64 {
        self.norm()
    }
}

/// One G7K15 application on `[a, b]`. Returns the Kronrod value and the
/// QUADPACK-style error estimate.
pub fn gk15<T: Quadrand, F: FnMut(f64) -> T>(f: F, a: f64, b: f64) -> (T, f64) {
    let (val, err, _) = gk15_full(f, a, b);
    (val, err)
}

/// [`gk15`] plus the Kronrod integral of `|f|`.
fn gk15_full<T: Quadrand, F: FnMut(f64) -> T>(mut f: F, a: f64, b: f64) -> (T, f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let fc = f(c);
    let mut rk = fc * WGK[7];
    let mut resabs = WGK[7] * fc.magnitude();
    let mut rg = fc * WG[3];
    let mut fv = [T::zero(); 15];
    fv[7] = fc;
    for j in 0..7 {
        let dx = h * XGK[j];
        let f1 = f(c - dx);
        let f2 = f(c + dx);
        fv[j] = f1;
        fv[14 - j] = f2;
        rk = rk + (f1 + f2) * WGK[j];
        resabs += WGK[j] * (f1.magnitude() + f2.magnitude());
        if j % 2 == 1 {
            rg = rg + (f1 + f2) * WG[j / 2];
        }
    }
    let mean = rk * 0.5;
    let mut asc = WGK[7] * (fc - mean).magnitude();
    for j in 0..7 {
        asc += WGK[j] * ((fv[j] - mean).magnitude() + (fv[14 - j] - mean).magnitude());
    }
    asc *= h.abs();
    let val = rk * h;
    let mut err = ((rk - rg) * h).magnitude();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    (val, err, resabs * h.abs())
}

/// Multiple of `eps int |f|` below which error estimates are rounding noise.
const ROUNDING_FLOOR: f64 = 1000.0;

struct Segment<T> {
    a: f64,
    b: f64,
    val: T,
    err: f64,
    resabs: f64,
}

impl<T> PartialEq for Segment<T> {
    fn eq(&self, other: &Self) -> bool {
        self.err == other.err
    }
}
impl<T> Eq for Segment<T> {}
impl<T> PartialOrd for Segment<T> {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl<T> Ord for Segment<T> {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.err.total_cmp(&other.err)
    }
}

/// Globally adaptive G7K15 over the initial partition `breaks`.
///
/// Bisects the interval with the largest error until the summed error
/// falls below `max(abs_tol, rel_tol * |I|)` or `max_segments` is hit.
/// The target never drops below the rounding floor `1000 eps int |f|`.
pub fn adaptive<T: Quadrand, F: FnMut(f64) -> T>(
    mut f: F,
    breaks: &[f64],
    abs_tol: f64,
    rel_tol: f64,
    max_segments: usize,
) -> Result<(T, f64)> {
    let mut heap = BinaryHeap::new();
    let mut total = T::zero();
    let mut err = 0.0;
    let mut resabs = 0.0;
    for w in breaks.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (val, e, r) = gk15_full(&mut f, w[0], w[1]);
        total = total + val;
        err += e;
        resabs += r;
        heap.push(Segment { a: w[0], b: w[1], val, err: e, resabs: r });
    }
    loop {
        let tol = abs_tol.max(rel_tol * total.magnitude()).max(ROUNDING_FLOOR * f64::EPSILON * resabs);
        if err <= tol {
            return Ok((total, err));
        }
        if heap.len() >= max_segments {
            return Err(Error::Budget(format!(
                "adaptive quadrature: error {err:e} above {tol:e} after {max_segments} segments"
            )));
        }
        let Some(seg) = heap.pop() else {
            return Ok((total, err));
        };
        let m = 0.5 * (seg.a + seg.b);
        if m <= seg.a || m >= seg.b {
            // cannot split further; accept what we have
            return Ok((total, err));
        }
        let (v1, e1, r1) = gk15_full(&mut f, seg.a, m);
        let (v2, e2, r2) = gk15_full(&mut f, m, seg.b);
        total = total - seg.val + v1 + v2;
        err += e1 + e2 - seg.err;
        resabs += r1 + r2 - seg.resabs;
        heap.push(Segment { a: seg.a, b: m, val: v1, err: e1, resabs: r1 });
        heap.push(Segment { a: m, b: seg.b, val: v2, err: e2, resabs: r2 });
    }
}

/// Real adaptive integral on `[a, b]`.
pub fn integrate<F: FnMut(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> Result<(f64, f64)> {
    adaptive(f, &[a, b], tol, 0.0, 20_000)
}
