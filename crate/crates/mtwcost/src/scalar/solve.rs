use crate::error::{Error, Result};
use crate::tol::Tolerance;

/// Root of a monotone `f` on `[lo, hi]`: Newton steps kept inside a shrinking bisection bracket.
/// Expands the bracket geometrically when `f` has no sign change on it.
pub fn solve_monotone<F, D>(f: F, df: D, lo: f64, hi: f64, scale: f64, tol: &Tolerance) -> Result<f64>
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    let mut grow = 0;
    while fa.signum() == fb.signum() && fa != 0.0 && fb != 0.0 {
        // push whichever end has the smaller residual
        let w = (b - a).max(1.0);
        if fa.abs() < fb.abs() {
            a -= w;
            fa = f(a)?;
        } else {
            b += w;
            fb = f(b)?;
        }
        grow += 1;
        if grow > 60 {
            return Err(Error::Range("no sign change in bracket".into()));
        }
    }
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    let mut x = 0.5 * (a + b);
    for _ in 0..tol.max_iter {
        let fx = f(x)?;
        if tol.accepts(fx, scale) || fx == 0.0 {
            return Ok(polish(&f, &df, x, fx));
        }
        if fx.signum() == fa.signum() {
            a = x;
            fa = fx;
        } else {
            b = x;
        }
        let d = df(x).unwrap_or(0.0);
        let newton = x - fx / d;
        x = if d != 0.0 && newton > a.min(b) && newton < a.max(b) { newton } else { 0.5 * (a + b) };
        if (b - a).abs() <= f64::EPSILON * x.abs().max(1e-300) {
            let fx = f(x)?;
            if tol.accepts(fx, scale) {
                return Ok(x);
            }
            return Err(Error::numeric("bracket collapsed", fx));
        }
    }
    let fx = f(x)?;
    Err(Error::numeric("bracketed solve did not converge", fx))
}

/// A few Newton steps kept only while the residual shrinks.
fn polish<F, D>(f: &F, df: &D, mut x: f64, mut fx: f64) -> f64
where
    F: Fn(f64) -> Result<f64>,
    D: Fn(f64) -> Result<f64>,
{
    for _ in 0..3 {
        let Ok(d) = df(x) else { break };
        if d == 0.0 || fx == 0.0 {
            break;
        }
        let y = x - fx / d;
        match f(y) {
            Ok(fy) if fy.abs() < fx.abs() => {
                x = y;
                fx = fy;
            }
            _ => break,
        }
    }
    x
}
