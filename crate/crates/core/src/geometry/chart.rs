//! Boundary charts: near a boundary point the domain boundary is the graph
//! `w = f(u)` over the tangent plane, with `w` measured along the inward
//! normal.

use super::{complement_basis, dot, nearest_descending_root, norm, Domain, GRADIENT_GUARD};
use crate::error::{Error, Result};
use crate::poly::{bisect_monotone, Polynomial};

/// Bracket searched along the normal line.
const NORMAL_BRACKET: f64 = 2.0;

/// Largest accepted graph slope; beyond it the normal line meets the
/// boundary at less than 30 degrees.
const MAX_SLOPE: f64 = 1.732_050_807_568_877_2;

#[derive(Clone, Debug)]
pub struct BoundaryChart {
    domain: Domain,
    base: Vec<f64>,
    /// Tangent vectors followed by the outward normal.
    frame: Vec<Vec<f64>>,
    /// `G(u, w) = Phi(x0 + T u - w n)` for polynomial domains.
    graph: Option<Polynomial>,
    graph_grad: Vec<Polynomial>,
    r_chart: f64,
}

impl BoundaryChart {
    pub(super) fn new(domain: Domain, x0: &[f64]) -> Result<Self> {
        let phi = domain.defining_value(x0)?;
        if phi.abs() >= 1e-10 {
            return Err(Error::InvalidInput(format!("chart base point off the boundary: Phi = {phi:e}")));
        }
        let g = domain.gradient_unchecked(x0);
        let gn = norm(&g);
        if gn < GRADIENT_GUARD {
            return Err(Error::DegenerateBoundary { gradient_norm: gn });
        }
        let normal: Vec<f64> = g.iter().map(|v| v / gn).collect();
        let mut frame = complement_basis(&normal);
        frame.push(normal.clone());
        let graph = domain.defining_polynomial().map(|p| {
            let mut cols: Vec<Vec<f64>> = frame[..frame.len() - 1].to_vec();
            cols.push(normal.iter().map(|v| -v).collect());
            p.compose_affine(x0, &cols)
        });
        let graph_grad = graph.as_ref().map(|q| (0..q.arity()).map(|i| q.partial(i)).collect()).unwrap_or_default();
        let mut chart = BoundaryChart { domain, base: x0.to_vec(), frame, graph, graph_grad, r_chart: 0.0 };
        chart.r_chart = chart.find_radius()?;
        Ok(chart)
    }

    /// Number of tangent coordinates.
    pub fn dimension(&self) -> usize {
        self.base.len() - 1
    }

    pub fn base(&self) -> &[f64] {
        &self.base
    }

    pub fn normal(&self) -> &[f64] {
        self.frame.last().unwrap()
    }

    pub fn tangents(&self) -> &[Vec<f64>] {
        &self.frame[..self.frame.len() - 1]
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    /// Empirically validated radius of the chart.
    pub fn r_chart(&self) -> f64 {
        self.r_chart
    }

    fn ambient(&self, u: &[f64], w: f64) -> Vec<f64> {
        let n = self.normal();
        let mut x: Vec<f64> = self.base.iter().zip(n).map(|(b, ni)| b - w * ni).collect();
        for (uj, t) in u.iter().zip(self.tangents()) {
            x.iter_mut().zip(t).for_each(|(xi, ti)| *xi += uj * ti);
        }
        x
    }

    /// Graph function `f(u)`: the boundary crossing of the normal line over
    /// `u` nearest the tangent plane.
    pub fn f(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dimension() {
            return Err(Error::DimensionMismatch { expected: self.dimension(), got: u.len() });
        }
        match &self.graph {
            Some(g) => {
                let mut point = u.to_vec();
                point.push(0.0);
                let line = g.restrict_axis(&point, u.len());
                nearest_descending_root(&line, -NORMAL_BRACKET, NORMAL_BRACKET)
                    .ok_or_else(|| Error::RootSolve(format!("no boundary crossing over u = {u:?}")))
            }
            None => self.f_stepping(u),
        }
    }

    fn f_stepping(&self, u: &[f64]) -> Result<f64> {
        let g = |w: f64| self.domain.phi_unchecked(&self.ambient(u, w));
        let g0 = g(0.0);
        if g0 == 0.0 {
            return Ok(0.0);
        }
        // walk inward if outside, outward if inside, until the sign flips
        let dir = if g0 > 0.0 { 1.0 } else { -1.0 };
        let mut prev: f64 = 0.0;
        let mut step = 1e-3;
        while prev.abs() < NORMAL_BRACKET {
            let w = (prev + dir * step).clamp(-NORMAL_BRACKET, NORMAL_BRACKET);
            if (g(w) > 0.0) != (g0 > 0.0) {
                let (a, b) = if dir > 0.0 { (prev, w) } else { (w, prev) };
                return Ok(bisect_monotone(|s| -g(s), a, b, 0.0));
            }
            prev = w;
            step *= 1.5;
        }
        Err(Error::RootSolve(format!("no boundary crossing over u = {u:?}")))
    }

    /// `grad f(u)` by implicit differentiation.
    pub fn gradient(&self, u: &[f64]) -> Result<Vec<f64>> {
        let w = self.f(u)?;
        let n = self.dimension();
        let (gu, gw): (Vec<f64>, f64) = if self.graph.is_some() {
            let mut p = u.to_vec();
            p.push(w);
            let all: Vec<f64> = self.graph_grad.iter().map(|q| q.eval(&p)).collect();
            (all[..n].to_vec(), all[n])
        } else {
            let dphi = self.domain.gradient_unchecked(&self.ambient(u, w));
            (self.tangents().iter().map(|t| dot(&dphi, t)).collect(), -dot(&dphi, self.normal()))
        };
        if gw.abs() < 1e-300 {
            return Err(Error::DegenerateBoundary { gradient_norm: gw.abs() });
        }
        Ok(gu.into_iter().map(|v| -v / gw).collect())
    }

    /// The boundary point over `u`.
    pub fn lift(&self, u: &[f64]) -> Result<Vec<f64>> {
        let w = self.f(u)?;
        Ok(self.ambient(u, w))
    }

    fn sample_ok(&self, r: f64) -> bool {
        let n = self.dimension();
        let steps = 16;
        let dirs: Vec<Vec<f64>> = if n == 1 { vec![vec![1.0], vec![-1.0]] } else { super::direction_sample(n, 16) };
        for d in &dirs {
            let mut prev = match self.f(&vec![0.0; n]) {
                Ok(v) => v,
                Err(_) => return false,
            };
            for i in 1..=steps {
                let s = r * i as f64 / steps as f64;
                let u: Vec<f64> = d.iter().map(|x| x * s).collect();
                let (Ok(w), Ok(gf)) = (self.f(&u), self.gradient(&u)) else {
                    return false;
                };
                if norm(&gf) > MAX_SLOPE {
                    return false;
                }
                if (w - prev).abs() > 2.0 * MAX_SLOPE * r / steps as f64 {
                    return false;
                }
                if self.domain.phi_unchecked(&self.ambient(&u, w)).abs() > 1e-10 {
                    return false;
                }
                prev = w;
            }
        }
        true
    }

    fn find_radius(&self) -> Result<f64> {
        let mut r = 0.9;
        while r > 1e-6 {
            if self.sample_ok(r) {
                return Ok(r);
            }
            r *= 0.8;
        }
        Err(Error::RootSolve("chart radius collapsed below 1e-6".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::DomainSpec;

    fn chart(a: &[u32], x0: &[f64]) -> BoundaryChart {
        Domain::new(DomainSpec::superellipsoid(a)).unwrap().chart_at(x0).unwrap()
    }

    #[test]
    fn circle_chart() {
        let c = chart(&[1, 1], &[0.0, 1.0]);
        assert!(c.f(&[0.0]).unwrap().abs() < 1e-15);
        assert!(c.gradient(&[0.0]).unwrap()[0].abs() < 1e-10);
        for u in [-0.5, -0.1, 0.3, 0.6] {
            let expect = 1.0 - (1.0f64 - u * u).sqrt();
            assert!((c.f(&[u]).unwrap() - expect).abs() < 1e-14);
        }
        assert!(c.r_chart() > 0.5);
    }

    #[test]
    fn quartic_chart_leading_term() {
        let c = chart(&[2, 1], &[0.0, 1.0]);
        for u in [0.05, 0.1, 0.2] {
            let f = c.f(&[u]).unwrap();
            let expect = 1.0 - (1.0f64 - u.powi(4)).sqrt();
            assert!((f - expect).abs() < 1e-15);
            assert!((f / (u.powi(4) / 2.0) - 1.0).abs() < u.powi(4));
        }
    }

    #[test]
    fn perturbed_chart_is_normal() {
        let p = Polynomial::new(1, vec![(vec![2], 1.0)]).unwrap();
        let d = Domain::new(DomainSpec::Perturbed { dimension: 2, exponent: 2, perturbation: p, eta: 0.01 }).unwrap();
        let c = d.chart_at(&[0.0, 1.0]).unwrap();
        assert!(c.f(&[0.0]).unwrap().abs() < 1e-14);
        assert!(c.gradient(&[0.0]).unwrap()[0].abs() < 1e-10);
    }

    #[test]
    fn off_boundary_rejected() {
        let d = Domain::new(DomainSpec::disk()).unwrap();
        assert!(d.chart_at(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn three_dimensional_chart_lifts_to_boundary() {
        let c = chart(&[1, 2, 1], &[0.0, 0.0, 1.0]);
        let r = c.r_chart();
        for (a, b) in [(0.3, 0.1), (-0.2, 0.25), (0.0, -0.4)] {
            let u = [a * r, b * r];
            let x = c.lift(&u).unwrap();
            assert!(c.domain().defining_value(&x).unwrap().abs() < 1e-9);
        }
    }
}
