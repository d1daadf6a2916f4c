use crate::error::{Error, Result};
use crate::euclid::{BilinearForm, UCost};
use crate::scalar::{Family, ScalarCost};
use serde::{Deserialize, Serialize};

/// `s(u) = p0 e^{-r u} + p2 e^{r u}` with `r > 0`, `p0 > 0 > p2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinhCost {
    pub r: f64,
    pub p0: f64,
    pub p2: f64,
}

impl SinhCost {
    pub fn new(r: f64, p0: f64, p2: f64) -> Result<Self> {
        if !(r > 0.0 && p0 > 0.0 && p2 < 0.0) || !(r.is_finite() && p0.is_finite() && p2.is_finite()) {
            return Err(Error::Validation(format!("sinh cost needs r > 0, p0 > 0 > p2, got {r}, {p0}, {p2}")));
        }
        Ok(SinhCost { r, p0, p2 })
    }

    /// `p0 = -p2 = 1/(2r)`, so that `c(x, xbar) = -asinh(r x^t xbar)/r`.
    pub fn canonical(r: f64) -> Result<Self> {
        Self::new(r, 0.5 / r, -0.5 / r)
    }

    /// Recognizes a hyperbolic family of this shape.
    pub fn from_family(f: &Family) -> Option<Self> {
        match *f {
            Family::GeneralizedHyperbolic { p0, p1, p2, p3 } if p3 > 0.0 && p1 == -p3 => Self::new(p3, p0, p2).ok(),
            _ => None,
        }
    }

    pub fn family(&self) -> Family {
        Family::GeneralizedHyperbolic { p0: self.p0, p1: -self.r, p2: self.p2, p3: self.r }
    }

    pub fn scalar(&self) -> ScalarCost {
        ScalarCost::new(self.family(), 0).expect("validated sinh parameters")
    }

    pub fn ucost(&self, n: usize) -> UCost {
        UCost::new(self.scalar(), BilinearForm::identity(n))
    }

    /// `2 sqrt(-p0 p2)`.
    pub fn amplitude(&self) -> f64 {
        2.0 * (-self.p0 * self.p2).sqrt()
    }

    /// Shift `log(p0 / -p2) / 2` of the sinh argument.
    fn shift(&self) -> f64 {
        0.5 * (self.p0 / -self.p2).ln()
    }

    pub fn s(&self, u: f64) -> f64 {
        -self.amplitude() * (self.r * u - self.shift()).sinh()
    }

    /// Inverse profile `u(s)`, defined on the whole line.
    pub fn u(&self, s: f64) -> f64 {
        (self.shift() - (s / self.amplitude()).asinh()) / self.r
    }

    /// `u'(s) = -1 / (r sqrt(s^2 - 4 p0 p2))`.
    pub fn u1(&self, s: f64) -> f64 {
        -1.0 / (self.r * s.hypot(self.amplitude()))
    }

    /// Scale `-s1(u_nu)` of the c-exponential when `x^t nu = m`; needs `|r m| < 1`.
    pub fn map_factor(&self, m: f64) -> Result<f64> {
        let q = (1.0 - self.r * m) * (1.0 + self.r * m);
        if !(q > 0.0) || m.abs() >= 1.0 / self.r - 1e-12 {
            return Err(Error::domain(format!("|x^t nu| = {} must stay below 1/r = {}", m.abs(), 1.0 / self.r)));
        }
        Ok(self.r * self.amplitude() / q.sqrt())
    }
}
