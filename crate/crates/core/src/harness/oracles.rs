//! Independent numerical references used by the verification suites.

use crate::landscapes::Objective;
use crate::param::ParamVec;

/// Central-difference gradient with step `h`.
pub fn fd_gradient(obj: &dyn Objective, x: &ParamVec, h: f64) -> ParamVec {
    let mut g = ParamVec::zeros(x.len());
    let mut p = x.clone();
    for i in 0..x.len() {
        let xi = x[i];
        p[i] = xi + h;
        let fp = obj.eval(&p);
        p[i] = xi - h;
        let fm = obj.eval(&p);
        p[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// `|a - b| / max(|b|, floor)`.
pub fn relative_error(a: &ParamVec, b: &ParamVec, floor: f64) -> f64 {
    a.distance(b) / b.norm().max(floor)
}

/// Least-squares slope of `y` on `x` through the origin.
pub fn fit_through_origin(x: &[f64], y: &[f64]) -> f64 {
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| a * b).sum();
    let sxx: f64 = x.iter().map(|a| a * a).sum();
    sxy / sxx
}

/// Ordinary least-squares `(slope, intercept)`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Slope of `log y` against `log t`.
pub fn loglog_slope(t: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = t.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    linear_fit(&lx, &ly).0
}

/// `log T / sqrt(T)`.
pub fn log_over_sqrt(t: f64) -> f64 {
    t.ln() / t.sqrt()
}

/// Strict local minima of `f` on a regular 2-D grid over `[lo, hi]^2` with
/// spacing `h`: nodes lower than all 8 neighbours. Scans row by row, keeping
/// three rows of values.
pub fn grid_local_minima_2d<F: Fn(f64, f64) -> f64>(f: F, lo: f64, hi: f64, h: f64) -> Vec<([f64; 2], f64)> {
    let n = ((hi - lo) / h).round() as usize + 1;
    let coord = |i: usize| lo + i as f64 * h;
    let row = |j: usize| -> Vec<f64> { (0..n).map(|i| f(coord(i), coord(j))).collect() };
    let mut found = Vec::new();
    let mut prev = row(0);
    let mut cur = row(1);
    for j in 1..n - 1 {
        let next = row(j + 1);
        for i in 1..n - 1 {
            let v = cur[i];
            let lower = [
                prev[i - 1],
                prev[i],
                prev[i + 1],
                cur[i - 1],
                cur[i + 1],
                next[i - 1],
                next[i],
                next[i + 1],
            ]
            .iter()
            .all(|&u| v < u);
            if lower {
                found.push(([coord(i), coord(j)], v));
            }
        }
        prev = std::mem::replace(&mut cur, next);
    }
    found
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fits() {
        let x = [1.0, 2.0, 3.0];
        let y = [2.0, 4.0, 6.0];
        assert!((fit_through_origin(&x, &y) - 2.0).abs() < 1e-15);
        let (m, b) = linear_fit(&x, &[3.0, 5.0, 7.0]);
        assert!((m - 2.0).abs() < 1e-12 && (b - 1.0).abs() < 1e-12);
        let t = [10.0, 100.0, 1000.0];
        let y: Vec<f64> = t.iter().map(|v: &f64| v.powf(-0.5)).collect();
        assert!((loglog_slope(&t, &y) + 0.5).abs() < 1e-12);
    }

    #[test]
    fn finds_single_bowl_minimum() {
        let mins = grid_local_minima_2d(|x, y| (x - 0.3).powi(2) + (y + 0.2).powi(2), -1.0, 1.0, 0.1);
        assert_eq!(mins.len(), 1);
        assert!((mins[0].0[0] - 0.3).abs() < 1e-9);
    }
}
