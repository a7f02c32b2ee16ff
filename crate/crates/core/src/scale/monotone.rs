//! Monotone piecewise-cubic Hermite interpolation with bisection inverse.

use super::spec::cell_index;
use super::ScaleError;

/// Absolute tolerance for [`TabulatedMonotone::invert`].
pub const INVERSION_TOLERANCE: f64 = 1e-12;

/// A strictly increasing tabulated function on `[knots[0], knots[last]]`.
///
/// Slopes are either supplied (exact derivatives) or estimated with the
/// harmonic-mean rule; either way they are limited so that every cubic
/// piece stays monotone.
#[derive(Debug, Clone, PartialEq)]
pub struct TabulatedMonotone {
    knots: Vec<f64>,
    values: Vec<f64>,
    slopes: Vec<f64>,
}

impl TabulatedMonotone {
    /// Non-finite or negative supplied slopes are replaced by estimates.
    pub fn new(knots: Vec<f64>, values: Vec<f64>, slopes: Option<Vec<f64>>) -> Result<Self, ScaleError> {
        let n = knots.len();
        if n < 2 || values.len() != n {
            return Err(ScaleError::InvalidTable(format!(
                "monotone table needs >= 2 knots and matching values (got {n} knots, {} values)",
                values.len()
            )));
        }
        for k in 1..n {
            if !(knots[k] > knots[k - 1]) || !knots[k].is_finite() {
                return Err(ScaleError::InvalidTable(format!("knots not strictly increasing at index {k}")));
            }
            if !(values[k] > values[k - 1]) || !values[k].is_finite() {
                return Err(ScaleError::InvalidTable(format!(
                    "values not strictly increasing at index {k} ({} -> {})",
                    values[k - 1],
                    values[k]
                )));
            }
        }
        if !knots[0].is_finite() || !values[0].is_finite() {
            return Err(ScaleError::InvalidTable("first knot/value must be finite".into()));
        }
        let estimated = estimate_slopes(&knots, &values);
        let mut slopes = match slopes {
            Some(s) if s.len() == n => s
                .iter()
                .zip(&estimated)
                .map(|(&m, &e)| if m.is_finite() && m >= 0.0 { m } else { e })
                .collect(),
            Some(s) => {
                return Err(ScaleError::InvalidTable(format!(
                    "slope count {} does not match knot count {n}",
                    s.len()
                )))
            }
            None => estimated,
        };
        limit_slopes(&knots, &values, &mut slopes);
        Ok(Self { knots, values, slopes })
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn slopes(&self) -> &[f64] {
        &self.slopes
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.knots[0], *self.knots.last().unwrap())
    }

    pub fn range(&self) -> (f64, f64) {
        (self.values[0], *self.values.last().unwrap())
    }

    pub fn eval(&self, x: f64) -> Result<f64, ScaleError> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(ScaleError::Extrapolation { r: x, lo, hi });
        }
        let k = cell_index(&self.knots, x);
        Ok(self.eval_cell(k, x))
    }

    pub fn derivative(&self, x: f64) -> Result<f64, ScaleError> {
        let (lo, hi) = self.domain();
        if !(x >= lo && x <= hi) {
            return Err(ScaleError::Extrapolation { r: x, lo, hi });
        }
        let k = cell_index(&self.knots, x);
        Ok(hermite_derivative(
            self.knots[k],
            self.knots[k + 1],
            self.values[k],
            self.values[k + 1],
            self.slopes[k],
            self.slopes[k + 1],
            x,
        ))
    }

    fn eval_cell(&self, k: usize, x: f64) -> f64 {
        hermite(
            self.knots[k],
            self.knots[k + 1],
            self.values[k],
            self.values[k + 1],
            self.slopes[k],
            self.slopes[k + 1],
            x,
        )
    }

    /// Solves `self(x) = y` by bisection on the interpolant.
    pub fn invert(&self, y: f64) -> Result<f64, ScaleError> {
        let (lo, hi) = self.range();
        if !(y >= lo && y <= hi) {
            return Err(ScaleError::Extrapolation { r: y, lo, hi });
        }
        let k = cell_index(&self.values, y);
        if y == self.values[k] {
            return Ok(self.knots[k]);
        }
        if y == self.values[k + 1] {
            return Ok(self.knots[k + 1]);
        }
        let (mut a, mut b) = (self.knots[k], self.knots[k + 1]);
        while b - a > INVERSION_TOLERANCE {
            let mid = 0.5 * (a + b);
            if mid <= a || mid >= b {
                break;
            }
            if self.eval_cell(k, mid) < y {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(0.5 * (a + b))
    }
}

/// Cubic Hermite interpolant on `[x0, x1]`.
pub(crate) fn hermite(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let s3 = s2 * s;
    let h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    let h10 = s3 - 2.0 * s2 + s;
    let h01 = -2.0 * s3 + 3.0 * s2;
    let h11 = s3 - s2;
    h00 * y0 + h10 * h * m0 + h01 * y1 + h11 * h * m1
}

pub(crate) fn hermite_derivative(x0: f64, x1: f64, y0: f64, y1: f64, m0: f64, m1: f64, x: f64) -> f64 {
    let h = x1 - x0;
    let s = (x - x0) / h;
    let s2 = s * s;
    let d00 = 6.0 * s2 - 6.0 * s;
    let d10 = 3.0 * s2 - 4.0 * s + 1.0;
    let d01 = -6.0 * s2 + 6.0 * s;
    let d11 = 3.0 * s2 - 2.0 * s;
    (d00 * y0 + d01 * y1) / h + d10 * m0 + d11 * m1
}

fn estimate_slopes(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    let h: Vec<f64> = x.windows(2).map(|w| w[1] - w[0]).collect();
    let delta: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    if n == 2 {
        return vec![delta[0]; 2];
    }
    let mut m = vec![0.0; n];
    for k in 1..n - 1 {
        let (d0, d1) = (delta[k - 1], delta[k]);
        if d0 * d1 > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            m[k] = (w1 + w2) / (w1 / d0 + w2 / d1);
        }
    }
    m[0] = end_slope(h[0], h[1], delta[0], delta[1]);
    m[n - 1] = end_slope(h[n - 2], h[n - 3], delta[n - 2], delta[n - 3]);
    m
}

// one-sided three-point estimate, clipped to preserve shape
fn end_slope(h0: f64, h1: f64, d0: f64, d1: f64) -> f64 {
    let m = ((2.0 * h0 + h1) * d0 - h0 * d1) / (h0 + h1);
    if m.signum() != d0.signum() {
        0.0
    } else if d0.signum() != d1.signum() && m.abs() > 3.0 * d0.abs() {
        3.0 * d0
    } else {
        m
    }
}

fn limit_slopes(x: &[f64], y: &[f64], m: &mut [f64]) {
    for k in 0..x.len() - 1 {
        let delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        let a = m[k] / delta;
        let b = m[k + 1] / delta;
        let r2 = a * a + b * b;
        if r2 > 9.0 {
            let tau = 3.0 / r2.sqrt();
            m[k] = tau * a * delta;
            m[k + 1] = tau * b * delta;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reproduces_cubic_with_exact_slopes() {
        let x: Vec<f64> = (0..20).map(|k| k as f64 * 0.5).collect();
        let y: Vec<f64> = x.iter().map(|v| v * v * v).collect();
        let m: Vec<f64> = x.iter().map(|v| 3.0 * v * v).collect();
        let t = TabulatedMonotone::new(x, y, Some(m)).unwrap();
        for &p in &[0.1, 1.37, 4.2, 9.49] {
            assert!((t.eval(p).unwrap() - p * p * p).abs() < 1e-10 * p.powi(3).max(1.0));
        }
    }

    #[test]
    fn estimated_interpolant_stays_monotone() {
        let x = vec![0.0, 1.0, 1.1, 5.0, 6.0];
        let y = vec![0.0, 0.1, 3.0, 3.1, 10.0];
        let t = TabulatedMonotone::new(x, y, None).unwrap();
        let mut prev = -1.0;
        for i in 0..=6000 {
            let v = t.eval(i as f64 * 1e-3).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }

    #[test]
    fn inverse_roundtrip() {
        let x: Vec<f64> = (0..50).map(|k| (k as f64 * 0.2).powi(2)).collect();
        let y: Vec<f64> = x.iter().map(|v| v.sqrt()).collect();
        let t = TabulatedMonotone::new(x, y, None).unwrap();
        for &target in &[0.0, 0.33, 1.0, 7.5, 9.8] {
            let p = t.invert(target).unwrap();
            assert!((t.eval(p).unwrap() - target).abs() < 1e-10);
        }
        assert!(t.invert(10.0).is_err());
    }

    #[test]
    fn rejects_non_monotone_values() {
        assert!(TabulatedMonotone::new(vec![0.0, 1.0, 2.0], vec![0.0, 2.0, 1.0], None).is_err());
    }
}
