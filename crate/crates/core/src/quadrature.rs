//! Trapezoidal quadrature on uniform 1-D and 2-D tensor grids.
//!
//! Integrands are supplied as log-values and summed with a max shift, so
//! `exp(-f)` never underflows to zero mass or overflows before the guard trips.
//! Every result carries a Richardson error estimate obtained by re-running the
//! rule on the every-other-node subgrid.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::param::ParamVec;

/// Default ceiling on `log Z` before a partition is declared divergent.
pub const DEFAULT_LOG_GUARD: f64 = 600.0;

/// Uniform axis with `n` nodes including both endpoints. `n` must be odd so
/// the half-resolution subgrid exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub lo: f64,
    pub hi: f64,
    pub n: usize,
}

impl Axis {
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
            return Err(Error::Config(format!(
                "axis bounds must satisfy lo < hi, got [{lo}, {hi}]"
            )));
        }
        if n < 3 || n.is_multiple_of(2) {
            return Err(Error::Config(format!("axis node count must be odd and >= 3, got {n}")));
        }
        Ok(Axis { lo, hi, n })
    }

    /// Axis with spacing at most `h`, rounded up to an odd node count.
    pub fn with_spacing(lo: f64, hi: f64, h: f64) -> Result<Self> {
        let mut n = ((hi - lo) / h).ceil() as usize + 1;
        if n.is_multiple_of(2) {
            n += 1;
        }
        Axis::new(lo, hi, n.max(3))
    }

    pub fn step(&self) -> f64 {
        (self.hi - self.lo) / (self.n - 1) as f64
    }

    pub fn node(&self, i: usize) -> f64 {
        if i + 1 == self.n {
            self.hi
        } else {
            self.lo + i as f64 * self.step()
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.node(i))
    }

    fn log_weight(&self, i: usize, stride: usize) -> f64 {
        let h = self.step() * stride as f64;
        if i == 0 || i + 1 == self.n {
            (0.5 * h).ln()
        } else {
            h.ln()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum QuadratureGrid {
    D1(Axis),
    D2(Axis, Axis),
}

impl QuadratureGrid {
    pub fn line(lo: f64, hi: f64, n: usize) -> Result<Self> {
        Ok(QuadratureGrid::D1(Axis::new(lo, hi, n)?))
    }

    pub fn square(lo: f64, hi: f64, n: usize) -> Result<Self> {
        let a = Axis::new(lo, hi, n)?;
        Ok(QuadratureGrid::D2(a, a))
    }

    pub fn dim(&self) -> usize {
        match self {
            QuadratureGrid::D1(_) => 1,
            QuadratureGrid::D2(..) => 2,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            QuadratureGrid::D1(a) => a.n,
            QuadratureGrid::D2(a, b) => a.n * b.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// All nodes in row-major order.
    pub fn points(&self) -> Vec<ParamVec> {
        match self {
            QuadratureGrid::D1(a) => a.nodes().map(|x| ParamVec::from([x])).collect(),
            QuadratureGrid::D2(a, b) => {
                let mut out = Vec::with_capacity(a.n * b.n);
                for x in a.nodes() {
                    for y in b.nodes() {
                        out.push(ParamVec::from([x, y]));
                    }
                }
                out
            }
        }
    }

    /// Trapezoid integral of `exp(log_values)` where `log_values` is aligned
    /// with [`QuadratureGrid::points`].
    pub fn integrate_log_values(&self, log_values: &[f64], log_guard: f64) -> Result<Integral> {
        assert_eq!(log_values.len(), self.len(), "log_values not aligned with grid");
        if let Some(bad) = log_values.iter().find(|v| v.is_nan()) {
            return Err(Error::Config(format!("integrand produced {bad}")));
        }
        let log_max = log_values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        if log_max == f64::INFINITY {
            return Err(Error::DivergedPartition {
                log_z: f64::INFINITY,
                guard: log_guard,
            });
        }

        let fine = self.log_sum(log_values, 1);
        let coarse = self.log_sum(log_values, 2);
        if fine > log_guard {
            return Err(Error::DivergedPartition {
                log_z: fine,
                guard: log_guard,
            });
        }
        let value = fine.exp();
        let error_estimate = (value - coarse.exp()).abs() / 3.0;

        let edge_max = self.edge_max(log_values);
        let edge_ratio = if log_max == f64::NEG_INFINITY {
            0.0
        } else {
            (edge_max - log_max).exp()
        };
        Ok(Integral {
            value,
            log_value: fine,
            error_estimate,
            edge_ratio,
        })
    }

    /// Evaluate `log_f` at every node and integrate `exp(log_f)`.
    pub fn integrate_log<F>(&self, mut log_f: F) -> Result<Integral>
    where
        F: FnMut(&ParamVec) -> f64,
    {
        let values: Vec<f64> = self.points().iter().map(&mut log_f).collect();
        self.integrate_log_values(&values, DEFAULT_LOG_GUARD)
    }

    fn log_sum(&self, log_values: &[f64], stride: usize) -> f64 {
        let mut terms = Vec::new();
        match self {
            QuadratureGrid::D1(a) => {
                for i in (0..a.n).step_by(stride) {
                    terms.push(log_values[i] + a.log_weight(i, stride));
                }
            }
            QuadratureGrid::D2(a, b) => {
                for i in (0..a.n).step_by(stride) {
                    for j in (0..b.n).step_by(stride) {
                        terms.push(log_values[i * b.n + j] + a.log_weight(i, stride) + b.log_weight(j, stride));
                    }
                }
            }
        }
        log_sum_exp(&terms)
    }

    fn edge_max(&self, log_values: &[f64]) -> f64 {
        match self {
            QuadratureGrid::D1(a) => log_values[0].max(log_values[a.n - 1]),
            QuadratureGrid::D2(a, b) => {
                let mut m = f64::NEG_INFINITY;
                for i in 0..a.n {
                    for j in 0..b.n {
                        if i == 0 || j == 0 || i + 1 == a.n || j + 1 == b.n {
                            m = m.max(log_values[i * b.n + j]);
                        }
                    }
                }
                m
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integral {
    pub value: f64,
    pub log_value: f64,
    /// Richardson estimate `|T(h) - T(2h)| / 3`.
    pub error_estimate: f64,
    /// Largest boundary integrand relative to the peak; near zero when the
    /// grid covers the effective support.
    pub edge_ratio: f64,
}

pub fn log_sum_exp(values: &[f64]) -> f64 {
    let m = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + values.iter().map(|v| (v - m).exp()).sum::<f64>().ln()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_integral_1d() {
        let g = QuadratureGrid::line(-10.0, 10.0, 2001).unwrap();
        let r = g.integrate_log(|x| -0.5 * x[0] * x[0]).unwrap();
        assert!((r.value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
        assert!(r.edge_ratio < 1e-20);
    }

    #[test]
    fn gaussian_integral_2d() {
        let g = QuadratureGrid::square(-9.0, 9.0, 301).unwrap();
        let r = g.integrate_log(|x| -0.5 * x.norm_sq()).unwrap();
        assert!((r.value - 2.0 * std::f64::consts::PI).abs() < 1e-10);
    }

    #[test]
    fn richardson_estimate_tracks_polynomial_error() {
        // x^2 on [0,1]: trapezoid error h^2/6 exactly.
        let g = QuadratureGrid::line(0.0, 1.0, 11).unwrap();
        let r = g.integrate_log(|x| (x[0] * x[0]).ln()).unwrap();
        let true_err = (r.value - 1.0 / 3.0).abs();
        assert!((r.error_estimate - true_err).abs() < 1e-12);
    }

    #[test]
    fn guard_trips_on_unbounded_integrand() {
        let g = QuadratureGrid::line(-10.0, 10.0, 201).unwrap();
        let err = g.integrate_log(|x| x[0].powi(4)).unwrap_err();
        assert!(matches!(err, Error::DivergedPartition { .. }));
    }

    #[test]
    fn even_node_count_rejected() {
        assert!(Axis::new(0.0, 1.0, 10).is_err());
        assert!(Axis::new(1.0, 0.0, 11).is_err());
    }

    #[test]
    fn log_sum_exp_stable() {
        let v = [1000.0, 1000.0];
        assert!((log_sum_exp(&v) - (1000.0 + 2f64.ln())).abs() < 1e-12);
        assert_eq!(log_sum_exp(&[f64::NEG_INFINITY]), f64::NEG_INFINITY);
    }
}
