//! Real branches of the Lambert W function by Halley iteration.

use crate::error::{Error, Result};

const INV_E: f64 = 0.367_879_441_171_442_33;

/// Real branch selector for [`lambert_w`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WBranch {
    Principal,
    Lower,
}

impl WBranch {
    pub fn from_index(k: i64) -> Result<Self> {
        match k {
            0 => Ok(WBranch::Principal),
            -1 => Ok(WBranch::Lower),
            _ => Err(Error::Branch(format!("Lambert W branch {k} is not real"))),
        }
    }
}

/// Solves `w * exp(w) = x` on the requested real branch.
pub fn lambert_w(branch: WBranch, x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(Error::domain(format!("lambert_w argument {x}")));
    }
    // distance to the branch point, tolerating one ulp of rounding in -1/e
    let q = x + INV_E;
    if q < -4.0 * f64::EPSILON * INV_E {
        return Err(Error::domain(format!("lambert_w argument {x} below -1/e")));
    }
    if branch == WBranch::Lower && x >= 0.0 {
        return Err(Error::domain(format!("W_-1 needs x < 0, got {x}")));
    }
    if x == 0.0 {
        return Ok(0.0);
    }
    let p = (2.0 * std::f64::consts::E * q.max(0.0)).sqrt();
    if p < 1e-7 {
        let w = match branch {
            WBranch::Principal => -1.0 + p - p * p / 3.0,
            WBranch::Lower => -1.0 - p - p * p / 3.0,
        };
        return Ok(w);
    }
    let mut w = match branch {
        WBranch::Principal => {
            if x < -0.25 {
                -1.0 + p - p * p / 3.0 + 11.0 / 72.0 * p * p * p
            } else if x < 3.0 {
                x.ln_1p()
            } else {
                let l = x.ln();
                l - l.ln()
            }
        }
        WBranch::Lower => {
            if x < -0.25 {
                -1.0 - p - p * p / 3.0 - 11.0 / 72.0 * p * p * p
            } else {
                let l = (-x).ln();
                l - (-l).ln()
            }
        }
    };
    for _ in 0..100 {
        let ew = w.exp();
        let f = w * ew - x;
        let wp1 = w + 1.0;
        let denom = ew * wp1 - (w + 2.0) * f / (2.0 * wp1);
        let step = f / denom;
        w -= step;
        if step.abs() <= 4.0 * f64::EPSILON * w.abs().max(1.0) {
            break;
        }
    }
    let res = w * w.exp() - x;
    if res.abs() > 1e-13 * x.abs().max(1.0) {
        return Err(Error::numeric("lambert_w did not converge", res));
    }
    Ok(w)
}
