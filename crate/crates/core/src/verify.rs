//! Shared numerical kernel: finite differences, trapezoid quadrature,
//! conservation tracking and convergence-order estimation.
//!
//! Stencils are 2nd-order accurate: centered in the interior, one-sided at
//! the edges.  Quadrature is the trapezoid rule everywhere so that the
//! cumulative (`int_{-inf}^x`) and total (`int_{-inf}^inf`) variants share
//! semantics; for the exponentially decaying fields of this crate the
//! truncation at the grid edge dominates the rule error.

use crate::algebra::ComplexMatrix;
use crate::{Error, Result};

/// First derivative of matrix samples on a uniform grid.
pub fn fd1(values: &[ComplexMatrix], h: f64) -> Result<Vec<ComplexMatrix>> {
    let n = values.len();
    if n < 3 {
        return Err(Error::GridTooSmall(3, n));
    }
    let c = |x: f64| num_complex::Complex64::new(x, 0.0);
    let mut out = Vec::with_capacity(n);
    out.push(
        &(&values[0].scale(c(-3.0 / (2.0 * h))) + &values[1].scale(c(4.0 / (2.0 * h))))
            + &values[2].scale(c(-1.0 / (2.0 * h))),
    );
    for i in 1..n - 1 {
        out.push(
            &values[i + 1].scale(c(1.0 / (2.0 * h))) - &values[i - 1].scale(c(1.0 / (2.0 * h))),
        );
    }
    out.push(
        &(&values[n - 1].scale(c(3.0 / (2.0 * h))) + &values[n - 2].scale(c(-4.0 / (2.0 * h))))
            + &values[n - 3].scale(c(1.0 / (2.0 * h))),
    );
    Ok(out)
}

/// Second derivative.
pub fn fd2(values: &[ComplexMatrix], h: f64) -> Result<Vec<ComplexMatrix>> {
    let n = values.len();
    if n < 4 {
        return Err(Error::GridTooSmall(4, n));
    }
    let c = |x: f64| num_complex::Complex64::new(x / (h * h), 0.0);
    let mut out = Vec::with_capacity(n);
    let combo = |coeffs: &[(usize, f64)]| -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(values[0].rows(), values[0].cols());
        for &(i, w) in coeffs {
            acc = &acc + &values[i].scale(c(w));
        }
        acc
    };
    out.push(combo(&[(0, 2.0), (1, -5.0), (2, 4.0), (3, -1.0)]));
    for i in 1..n - 1 {
        out.push(combo(&[(i - 1, 1.0), (i, -2.0), (i + 1, 1.0)]));
    }
    out.push(combo(&[
        (n - 1, 2.0),
        (n - 2, -5.0),
        (n - 3, 4.0),
        (n - 4, -1.0),
    ]));
    Ok(out)
}

/// Third derivative via 5-point stencils (2nd-order accurate).
pub fn fd3(values: &[ComplexMatrix], h: f64) -> Result<Vec<ComplexMatrix>> {
    let n = values.len();
    if n < 6 {
        return Err(Error::GridTooSmall(6, n));
    }
    let c = |x: f64| num_complex::Complex64::new(x / (2.0 * h * h * h), 0.0);
    let combo = |coeffs: &[(usize, f64)]| -> ComplexMatrix {
        let mut acc = ComplexMatrix::zeros(values[0].rows(), values[0].cols());
        for &(i, w) in coeffs {
            acc = &acc + &values[i].scale(c(w));
        }
        acc
    };
    let mut out = Vec::with_capacity(n);
    // one-sided / skewed stencils near the edges, centered inside
    out.push(combo(&[
        (0, -5.0),
        (1, 18.0),
        (2, -24.0),
        (3, 14.0),
        (4, -3.0),
    ]));
    out.push(combo(&[
        (0, -3.0),
        (1, 10.0),
        (2, -12.0),
        (3, 6.0),
        (4, -1.0),
    ]));
    for i in 2..n - 2 {
        out.push(combo(&[
            (i - 2, -1.0),
            (i - 1, 2.0),
            (i + 1, -2.0),
            (i + 2, 1.0),
        ]));
    }
    out.push(combo(&[
        (n - 5, 1.0),
        (n - 4, -6.0),
        (n - 3, 12.0),
        (n - 2, -10.0),
        (n - 1, 3.0),
    ]));
    out.push(combo(&[
        (n - 5, 3.0),
        (n - 4, -14.0),
        (n - 3, 24.0),
        (n - 2, -18.0),
        (n - 1, 5.0),
    ]));
    Ok(out)
}

/// Derivative of matrix samples of the requested order (1, 2 or 3).
pub fn fd_derivative(values: &[ComplexMatrix], h: f64, order: u8) -> Result<Vec<ComplexMatrix>> {
    match order {
        1 => fd1(values, h),
        2 => fd2(values, h),
        3 => fd3(values, h),
        _ => Err(Error::Invalid(format!(
            "unsupported derivative order {order}"
        ))),
    }
}

/// Trapezoid rule over the full grid.
pub fn trapezoid(samples: &[f64], h: f64) -> f64 {
    if samples.len() < 2 {
        return 0.0;
    }
    let inner: f64 = samples[1..samples.len() - 1].iter().sum();
    h * (0.5 * samples[0] + inner + 0.5 * samples[samples.len() - 1])
}

/// Running trapezoid integral from the left edge.
pub fn cumulative_trapezoid(samples: &[f64], h: f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(samples.len());
    let mut acc = 0.0;
    out.push(0.0);
    for w in samples.windows(2) {
        acc += 0.5 * h * (w[0] + w[1]);
        out.push(acc);
    }
    out
}

/// Running trapezoid integral of matrix samples from the left edge.
pub fn cumulative_trapezoid_matrices(values: &[ComplexMatrix], h: f64) -> Vec<ComplexMatrix> {
    let mut out = Vec::with_capacity(values.len());
    let mut acc = ComplexMatrix::zeros(values[0].rows(), values[0].cols());
    out.push(acc.clone());
    let half = num_complex::Complex64::new(0.5 * h, 0.0);
    for w in values.windows(2) {
        acc = &acc + &(&w[0] + &w[1]).scale(half);
        out.push(acc.clone());
    }
    out
}

/// Relative drift `(max - min) / max(1, |mean|)` of a conserved series.
pub fn conservation_report(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    (max - min) / 1f64.max(mean.abs())
}

/// Residual magnitudes from a nested 2:1 grid pair.
#[derive(Debug, Clone, Copy)]
pub struct ConvergencePair {
    pub coarse_max_abs: f64,
    pub fine_max_abs: f64,
}

impl ConvergencePair {
    pub fn new(coarse_max_abs: f64, fine_max_abs: f64) -> Self {
        Self {
            coarse_max_abs,
            fine_max_abs,
        }
    }

    pub fn estimated_order(&self) -> f64 {
        estimated_order(self.coarse_max_abs, self.fine_max_abs)
    }
}

/// Order estimate `log2(coarse/fine)` from a nested 2:1 grid pair.
pub fn estimated_order(coarse_max_abs: f64, fine_max_abs: f64) -> f64 {
    (coarse_max_abs / fine_max_abs).log2()
}

/// Classic fourth-order Runge-Kutta step for matrix-valued states.
pub fn rk4_step<F>(y: &ComplexMatrix, x: f64, h: f64, f: &F) -> ComplexMatrix
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let c = |w: f64| num_complex::Complex64::new(w, 0.0);
    let k1 = f(x, y);
    let k2 = f(x + 0.5 * h, &(y + &k1.scale(c(0.5 * h))));
    let k3 = f(x + 0.5 * h, &(y + &k2.scale(c(0.5 * h))));
    let k4 = f(x + h, &(y + &k3.scale(c(h))));
    let incr = &(&k1 + &k4) + &(&k2 + &k3).scale(c(2.0));
    y + &incr.scale(c(h / 6.0))
}

/// Integrate `y' = f(x, y)` from `x0` to `x1` with at most `max_step`.
pub fn rk4_integrate<F>(y0: ComplexMatrix, x0: f64, x1: f64, max_step: f64, f: &F) -> ComplexMatrix
where
    F: Fn(f64, &ComplexMatrix) -> ComplexMatrix,
{
    let span = x1 - x0;
    if span == 0.0 {
        return y0;
    }
    let nsteps = (span.abs() / max_step).ceil().max(1.0) as usize;
    let h = span / nsteps as f64;
    let mut y = y0;
    let mut x = x0;
    for _ in 0..nsteps {
        y = rk4_step(&y, x, h, f);
        x += h;
    }
    y
}
