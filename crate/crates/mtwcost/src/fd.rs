//! Central finite differences used by the oracles.

use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};

/// Default relative step.
pub const STEP: f64 = 1e-5;

/// Step `h = base * max(1, scale)`, rejecting underflow.
pub fn step(base: f64, scale: f64) -> Result<f64> {
    let h = base * scale.max(1.0);
    if !(h > 1e3 * f64::MIN_POSITIVE) || !h.is_finite() {
        return Err(Error::cond(format!("finite-difference step {h:e}")));
    }
    Ok(h)
}

/// `(f(h) - f(-h)) / 2h` for a scalar function of a line parameter.
pub fn d1<F: Fn(f64) -> Result<f64>>(f: F, h: f64) -> Result<f64> {
    Ok((f(h)? - f(-h)?) / (2.0 * h))
}

/// Vector-valued version of [`d1`].
pub fn d1v<F: Fn(f64) -> Result<DVector<f64>>>(f: F, h: f64) -> Result<DVector<f64>> {
    Ok((f(h)? - f(-h)?) / (2.0 * h))
}

/// Mixed second difference `d^2 f / ds dt` at the origin.
pub fn d2<F: Fn(f64, f64) -> Result<f64>>(f: F, h: f64) -> Result<f64> {
    Ok((f(h, h)? - f(h, -h)? - f(-h, h)? + f(-h, -h)?) / (4.0 * h * h))
}

/// Jacobian of `f` at `x` by central differences, one column per coordinate.
pub fn jacobian<F: Fn(&DVector<f64>) -> Result<DVector<f64>>>(f: F, x: &DVector<f64>, h: f64) -> Result<DMatrix<f64>> {
    let n = x.len();
    let mut cols = Vec::with_capacity(n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        cols.push(d1v(|t| f(&(x + &e * t)), h)?);
    }
    let m = cols.first().map_or(0, |c| c.len());
    Ok(DMatrix::from_fn(m, n, |i, j| cols[j][i]))
}

/// Gradient of a scalar function by central differences.
pub fn gradient<F: Fn(&DVector<f64>) -> Result<f64>>(f: F, x: &DVector<f64>, h: f64) -> Result<DVector<f64>> {
    let n = x.len();
    let mut g = DVector::zeros(n);
    for j in 0..n {
        let mut e = DVector::zeros(n);
        e[j] = 1.0;
        g[j] = d1(|t| f(&(x + &e * t)), h)?;
    }
    Ok(g)
}
