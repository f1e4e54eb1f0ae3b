//! Natural cubic spline interpolation.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Natural cubic spline through `(x, y)` knots: piecewise cubics with
/// continuous first and second derivatives, second derivative zero at both
/// ends. Two knots degenerate to straight-line interpolation.
#[derive(Debug, Clone)]
pub struct NaturalCubicSpline {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots.
    y2s: Vec<f64>,
}

impl NaturalCubicSpline {
    /// Build a spline; `xs` must be strictly increasing with at least 2 knots.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid("spline knots and values differ in length"));
        }
        if xs.len() < 2 {
            return Err(Error::invalid("spline needs at least 2 knots"));
        }
        for i in 0..xs.len() {
            if !xs[i].is_finite() || !ys[i].is_finite() {
                return Err(Error::invalid(format!(
                    "spline knot ({}, {}) is not finite",
                    xs[i], ys[i]
                )));
            }
            if i > 0 && xs[i] <= xs[i - 1] {
                return Err(Error::invalid("spline knots must be strictly increasing"));
            }
        }

        let n = xs.len();
        let mut y2s = vec![0.0; n];
        let mut u = vec![0.0; n];
        // Tridiagonal sweep with natural boundary conditions.
        for i in 1..n - 1 {
            let sig = (xs[i] - xs[i - 1]) / (xs[i + 1] - xs[i - 1]);
            let p = sig * y2s[i - 1] + 2.0;
            y2s[i] = (sig - 1.0) / p;
            u[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i])
                - (ys[i] - ys[i - 1]) / (xs[i] - xs[i - 1]);
            u[i] = (6.0 * u[i] / (xs[i + 1] - xs[i - 1]) - sig * u[i - 1]) / p;
        }
        for k in (1..n - 1).rev() {
            y2s[k] = y2s[k] * y2s[k + 1] + u[k];
        }
        Ok(Self { xs, ys, y2s })
    }

    /// Evaluate at `x`; outside the knot range the boundary segment's cubic
    /// is extended.
    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        let hi = self.xs.partition_point(|&p| p < x).clamp(1, n - 1);
        let lo = hi - 1;
        let h = self.xs[hi] - self.xs[lo];
        let a = (self.xs[hi] - x) / h;
        let b = (x - self.xs[lo]) / h;
        a * self.ys[lo]
            + b * self.ys[hi]
            + ((a * a * a - a) * self.y2s[lo] + (b * b * b - b) * self.y2s[hi]) * h * h / 6.0
    }

    /// Evaluate with the argument clamped into the knot range (flat
    /// extrapolation).
    pub fn eval_clamped(&self, x: f64) -> f64 {
        self.eval(x.clamp(self.xs[0], self.xs[self.xs.len() - 1]))
    }
}
