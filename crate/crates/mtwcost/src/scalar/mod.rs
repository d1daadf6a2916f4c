//! Scalar profiles `s(u)` with closed-form derivatives, inverses and branch data.

mod classify;
mod lambert;
mod ranges;
mod solve;

pub use classify::OdeClassification;
pub use lambert::{lambert_w, WBranch};
pub use ranges::{MonotonicRange, RangeLabel, RangeSet};
pub use solve::solve_monotone;

use crate::error::{Error, Result};
use crate::tol::Tolerance;
use serde::{Deserialize, Serialize};

/// Minimum separation of the two exponents of the hyperbolic family.
pub const DEGENERATE_EXPONENT_GAP: f64 = 1e-8;

/// The parametrized profile families.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "variant", content = "params")]
pub enum Family {
    /// `p0 e^{p1 u} + p2 e^{p3 u}`, `p3 > p1`.
    GeneralizedHyperbolic { p0: f64, p1: f64, p2: f64, p3: f64 },
    /// `(a0 + a1 u) e^{a2 u}`.
    LambertType { a0: f64, a1: f64, a2: f64 },
    /// `b0 e^{b1 u} sin(b2 u + b3)`.
    ExpTrig { b0: f64, b1: f64, b2: f64, b3: f64 },
    /// `(-u)^alpha - 1` on `[-2^{1/alpha}, 0]`.
    PowerSphere { alpha: f64 },
    /// `-(-u)^{1/beta}` for `u < 0`.
    PowerHyperbolic { beta: f64 },
    /// `cos(sqrt(2u))` on `[0, pi^2/2]`.
    SquareDistanceSphere,
    /// `p0 e^{p1 u} + p2`.
    LogType { p0: f64, p1: f64, p2: f64 },
    /// `a0 + a1 u`.
    Affine { a0: f64, a1: f64 },
}

/// Index of the monotonic range a cost is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BranchIndex(pub i64);

/// A validated family together with the monotonic range it lives on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostRecord", into = "CostRecord")]
pub struct ScalarCost {
    family: Family,
    branch: BranchIndex,
    range: MonotonicRange,
}

#[derive(Serialize, Deserialize)]
struct CostRecord {
    #[serde(flatten)]
    family: Family,
    #[serde(default)]
    branch: BranchIndex,
}

impl TryFrom<CostRecord> for ScalarCost {
    type Error = Error;
    fn try_from(r: CostRecord) -> Result<Self> {
        ScalarCost::new(r.family, r.branch.0)
    }
}

impl From<ScalarCost> for CostRecord {
    fn from(c: ScalarCost) -> Self {
        CostRecord { family: c.family, branch: c.branch }
    }
}

fn finite(vals: &[f64]) -> Result<()> {
    if vals.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Validation("non-finite family parameter".into()))
    }
}

impl Family {
    /// Checks the parameter invariants of each variant.
    pub fn validate(&self) -> Result<()> {
        use Family::*;
        match *self {
            GeneralizedHyperbolic { p0, p1, p2, p3 } => {
                finite(&[p0, p1, p2, p3])?;
                if p3 <= p1 {
                    return Err(Error::Validation(format!("need p3 > p1, got p1={p1}, p3={p3}")));
                }
                if p3 - p1 < DEGENERATE_EXPONENT_GAP {
                    return Err(Error::cond(format!("|p1 - p3| = {} is degenerate", p3 - p1)));
                }
                if p0 == 0.0 || p2 == 0.0 {
                    return Err(Error::Validation("need p0 p2 != 0".into()));
                }
            }
            LambertType { a0, a1, a2 } => {
                finite(&[a0, a1, a2])?;
                if a1 == 0.0 {
                    return Err(Error::Validation("need a1 != 0".into()));
                }
            }
            ExpTrig { b0, b1, b2, b3 } => {
                finite(&[b0, b1, b2, b3])?;
                if b0 <= 0.0 || b2 <= 0.0 {
                    return Err(Error::Validation("need b0 > 0 and b2 > 0".into()));
                }
            }
            PowerSphere { alpha } => {
                finite(&[alpha])?;
                if alpha < 2.0 {
                    return Err(Error::Validation(format!("need alpha >= 2, got {alpha}")));
                }
            }
            PowerHyperbolic { beta } => {
                finite(&[beta])?;
                if !(1.0..=2.0).contains(&beta) {
                    return Err(Error::Validation(format!("need beta in [1, 2], got {beta}")));
                }
            }
            SquareDistanceSphere => {}
            LogType { p0, p1, p2 } => {
                finite(&[p0, p1, p2])?;
                if p0 == 0.0 || p1 == 0.0 {
                    return Err(Error::Validation("need p0 != 0 and p1 != 0".into()));
                }
            }
            Affine { a0, a1 } => {
                finite(&[a0, a1])?;
                if a1 == 0.0 {
                    return Err(Error::Validation("need a1 != 0".into()));
                }
            }
        }
        Ok(())
    }

    /// `s1^2 - s s2` in closed form for the families solving `s'' = S s' - P s`.
    pub fn wronskian(&self, u: f64) -> Option<f64> {
        use Family::*;
        match *self {
            GeneralizedHyperbolic { p0, p1, p2, p3 } => Some(-p0 * p2 * (p1 - p3).powi(2) * ((p1 + p3) * u).exp()),
            LambertType { a1, a2, .. } => Some(a1 * a1 * (2.0 * a2 * u).exp()),
            ExpTrig { b0, b1, b2, .. } => Some((b0 * b2).powi(2) * (2.0 * b1 * u).exp()),
            LogType { p0, p1, p2 } => Some(-p0 * p1 * p1 * p2 * (p1 * u).exp()),
            Affine { a1, .. } => Some(a1 * a1),
            _ => None,
        }
    }

    /// `s^{(order)}(u)` in closed form, `order <= 4`.
    pub fn eval_s(&self, u: f64, order: usize) -> Result<f64> {
        use Family::*;
        if order > 4 {
            return Err(Error::domain(format!("derivative order {order} > 4")));
        }
        if !u.is_finite() {
            return Err(Error::domain(format!("u = {u}")));
        }
        let k = order as i32;
        let v = match *self {
            GeneralizedHyperbolic { p0, p1, p2, p3 } => {
                p0 * p1.powi(k) * (p1 * u).exp() + p2 * p3.powi(k) * (p3 * u).exp()
            }
            LambertType { a0, a1, a2 } => {
                let lin = a2.powi(k) * (a0 + a1 * u)
                    + if k > 0 { k as f64 * a1 * a2.powi(k - 1) } else { 0.0 };
                lin * (a2 * u).exp()
            }
            ExpTrig { b0, b1, b2, b3 } => {
                let rho = b1.hypot(b2);
                let theta = b2.atan2(b1);
                b0 * (b1 * u).exp() * rho.powi(k) * (b2 * u + b3 + k as f64 * theta).sin()
            }
            PowerSphere { alpha } => {
                let lo = -(2f64.powf(1.0 / alpha));
                if u < lo * (1.0 + 1e-14) || u > 0.0 {
                    return Err(Error::domain(format!("PowerSphere needs u in [{lo}, 0], got {u}")));
                }
                power_derivative(alpha, u, k) - if k == 0 { 1.0 } else { 0.0 }
            }
            PowerHyperbolic { beta } => {
                if u >= 0.0 {
                    return Err(Error::domain(format!("PowerHyperbolic needs u < 0, got {u}")));
                }
                -power_derivative(1.0 / beta, u, k)
            }
            SquareDistanceSphere => {
                let top = std::f64::consts::PI.powi(2) / 2.0;
                if !(0.0..=top * (1.0 + 1e-14)).contains(&u) {
                    return Err(Error::domain(format!("SquareDistanceSphere needs u in [0, pi^2/2], got {u}")));
                }
                square_distance_derivative(u.min(top), order)
            }
            LogType { p0, p1, p2 } => {
                p0 * p1.powi(k) * (p1 * u).exp() + if k == 0 { p2 } else { 0.0 }
            }
            Affine { a0, a1 } => match k {
                0 => a0 + a1 * u,
                1 => a1,
                _ => 0.0,
            },
        };
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain(format!("s^({order})({u}) is not finite")))
        }
    }

    /// `[s, s', s'', s''', s'''']` at `u`.
    pub fn derivatives(&self, u: f64) -> Result<[f64; 5]> {
        let mut out = [0.0; 5];
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.eval_s(u, k)?;
        }
        Ok(out)
    }

    /// Rough exponential growth rate, used to clip infinite brackets.
    pub(crate) fn growth_rate(&self) -> f64 {
        use Family::*;
        let r = match *self {
            GeneralizedHyperbolic { p1, p3, .. } => p1.abs().max(p3.abs()),
            LambertType { a2, .. } => a2.abs(),
            ExpTrig { b1, b2, .. } => b1.abs().max(b2.abs()),
            LogType { p1, .. } => p1.abs(),
            _ => 1.0,
        };
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }
}

/// k-th derivative of `(-u)^a` for `u <= 0`.
fn power_derivative(a: f64, u: f64, k: i32) -> f64 {
    let mut c = 1.0;
    for j in 0..k {
        c *= a - j as f64;
    }
    if c == 0.0 {
        return 0.0;
    }
    let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
    sign * c * (-u).powf(a - k as f64)
}

/// Derivatives of `cos(sqrt(2u))`: power series near 0, trigonometric closed forms elsewhere.
fn square_distance_derivative(u: f64, order: usize) -> f64 {
    let w = (2.0 * u).sqrt();
    if w < 1.0 {
        // s^{(m)}(u) = sum_{k>=m} (-1)^k 2^k k! / ((k-m)! (2k)!) u^{k-m}
        let m = order;
        let mut sum = 0.0;
        for k in m..m + 30 {
            let mut coef = if k % 2 == 0 { 1.0 } else { -1.0 };
            // 2^k k! / (2k)! = 1 / prod_{j=1..k} (2j - 1)
            for j in 1..=k {
                coef /= (2 * j - 1) as f64;
            }
            for j in 1..=k - m {
                coef /= j as f64;
            }
            sum += coef * u.powi((k - m) as i32);
        }
        return sum;
    }
    let (sn, cs) = w.sin_cos();
    match order {
        0 => cs,
        1 => -sn / w,
        2 => (sn - w * cs) / w.powi(3),
        3 => (w * w * sn - 3.0 * sn + 3.0 * w * cs) / w.powi(5),
        _ => (w.powi(3) * cs - 6.0 * w * w * sn - 15.0 * w * cs + 15.0 * sn) / w.powi(7),
    }
}

impl ScalarCost {
    /// Validates the family and selects monotonic range `branch`.
    pub fn new(family: Family, branch: i64) -> Result<Self> {
        family.validate()?;
        let range = ranges::range_for(&family, branch)?;
        Ok(ScalarCost { family, branch: BranchIndex(branch), range })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn branch(&self) -> i64 {
        self.branch.0
    }

    pub fn range(&self) -> &MonotonicRange {
        &self.range
    }

    pub fn eval_s(&self, u: f64, order: usize) -> Result<f64> {
        self.family.eval_s(u, order)
    }

    pub fn derivatives(&self, u: f64) -> Result<[f64; 5]> {
        self.family.derivatives(u)
    }

    /// Derivatives at `u(s_val)`.
    pub fn derivatives_at_s(&self, s_val: f64) -> Result<[f64; 5]> {
        let u = self.eval_u(s_val)?;
        let mut d = self.family.derivatives(u)?;
        d[0] = s_val;
        Ok(d)
    }

    pub fn wronskian(&self, u: f64) -> Option<f64> {
        self.family.wronskian(u)
    }

    /// `u` with `s(u) = s_val` on the selected branch.
    pub fn eval_u(&self, s_val: f64) -> Result<f64> {
        self.eval_u_tol(s_val, &Tolerance::default())
    }

    pub fn eval_u_tol(&self, s_val: f64, tol: &Tolerance) -> Result<f64> {
        if !s_val.is_finite() {
            return Err(Error::Range(format!("s = {s_val}")));
        }
        if !self.range.contains_s(s_val, tol) {
            return Err(Error::Range(format!(
                "s = {s_val} outside branch range [{}, {}]",
                self.range.s_lo, self.range.s_hi
            )));
        }
        let u = match self.closed_inverse(s_val)? {
            Some(u) => u,
            None => self.numeric_inverse(s_val, tol)?,
        };
        let res = self.family.eval_s(u, 0)? - s_val;
        if tol.accepts(res, s_val) {
            return Ok(u);
        }
        // polish a slightly inaccurate closed form with the bracketed solver
        self.numeric_inverse(s_val, tol)
    }

    fn numeric_inverse(&self, s_val: f64, tol: &Tolerance) -> Result<f64> {
        let (lo, hi) = self.range.clipped_u(self.family.growth_rate());
        let f = |u: f64| self.family.eval_s(u, 0).map(|s| s - s_val);
        let df = |u: f64| self.family.eval_s(u, 1);
        solve_monotone(f, df, lo, hi, s_val.abs(), tol)
    }

    fn closed_inverse(&self, s: f64) -> Result<Option<f64>> {
        use Family::*;
        let pick = |cands: &[f64]| -> Option<f64> {
            cands
                .iter()
                .copied()
                .filter(|u| u.is_finite())
                .min_by(|a, b| {
                    self.range.u_distance(*a).total_cmp(&self.range.u_distance(*b))
                })
        };
        let u = match self.family {
            Affine { a0, a1 } => Some((s - a0) / a1),
            LogType { p0, p1, p2 } => {
                let z = (s - p2) / p0;
                if z <= 0.0 {
                    return Err(Error::Range(format!("log argument {z} for s = {s}")));
                }
                Some(z.ln() / p1)
            }
            PowerSphere { alpha } => Some(-(s + 1.0).max(0.0).powf(1.0 / alpha)),
            PowerHyperbolic { beta } => {
                if s >= 0.0 {
                    return Err(Error::Range(format!("PowerHyperbolic needs s < 0, got {s}")));
                }
                Some(-(-s).powf(beta))
            }
            SquareDistanceSphere => Some(s.clamp(-1.0, 1.0).acos().powi(2) / 2.0),
            GeneralizedHyperbolic { p0, p1, p2, p3 } => {
                let scale = p1.abs().max(p3.abs());
                if (p1 + p3).abs() <= 1e-14 * scale {
                    // p2 z^2 - s z + p0 = 0 with z = e^{p3 u}
                    quadratic_roots(p2, -s, p0).and_then(|zs| {
                        pick(&zs.iter().filter(|z| **z > 0.0).map(|z| z.ln() / p3).collect::<Vec<_>>())
                    })
                } else if (p1 - 2.0 * p3).abs() <= 1e-14 * scale {
                    // p0 z^2 + p2 z - s = 0 with z = e^{p3 u}
                    quadratic_roots(p0, p2, -s).and_then(|zs| {
                        pick(&zs.iter().filter(|z| **z > 0.0).map(|z| z.ln() / p3).collect::<Vec<_>>())
                    })
                } else {
                    None
                }
            }
            LambertType { a0, a1, a2 } => {
                if a2 == 0.0 {
                    Some((s - a0) / a1)
                } else {
                    let arg = s * a2 / a1 * (a0 * a2 / a1).exp();
                    let mut cands = Vec::new();
                    for b in [WBranch::Principal, WBranch::Lower] {
                        if let Ok(w) = lambert_w(b, arg) {
                            cands.push(w / a2 - a0 / a1);
                        }
                    }
                    pick(&cands)
                }
            }
            ExpTrig { .. } => None,
        };
        Ok(u.filter(|u| self.range.u_distance(*u) <= 1e-9 * u.abs().max(1.0)))
    }

    /// Ordinary-differential-equation constants; `None` pointwise families.
    pub fn classify_ode(&self) -> Option<OdeClassification> {
        classify::classify_ode(&self.family)
    }

    pub fn ode_pointwise(&self, u: f64) -> Result<OdeClassification> {
        classify::ode_pointwise(&self.family, u)
    }
}

/// Real roots of `a z^2 + b z + c`, numerically stable.
fn quadratic_roots(a: f64, b: f64, c: f64) -> Option<Vec<f64>> {
    let disc = b * b - 4.0 * a * c;
    if disc < 0.0 {
        return None;
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut out = Vec::with_capacity(2);
    if q != 0.0 {
        out.push(c / q);
    }
    if a != 0.0 {
        out.push(q / a);
    }
    Some(out)
}
