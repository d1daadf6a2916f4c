//! Maximal intervals of strict monotonicity for each family.

use super::Family;
use crate::error::{Error, Result};
use crate::tol::Tolerance;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RangeLabel {
    SinhLike,
    AntennaLike,
    OneDecayingArm,
    CoshLike,
    LambertArm,
    ExpTrigArc,
    Power,
    Whole,
}

/// An interval `u_lo < u < u_hi` on which `s` is strictly monotone.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MonotonicRange {
    pub u_lo: f64,
    pub u_hi: f64,
    pub s_lo: f64,
    pub s_hi: f64,
    pub increasing: bool,
    pub label: RangeLabel,
}

/// All monotonic ranges; the trigonometric family has infinitely many.
#[derive(Debug, Clone, PartialEq)]
pub enum RangeSet {
    Finite(Vec<MonotonicRange>),
    Periodic { family: Family, period: f64 },
}

impl RangeSet {
    pub fn get(&self, k: i64) -> Result<MonotonicRange> {
        match self {
            RangeSet::Finite(v) => usize::try_from(k)
                .ok()
                .and_then(|i| v.get(i))
                .copied()
                .ok_or_else(|| Error::Branch(format!("branch {k} of {} ranges", v.len()))),
            RangeSet::Periodic { family, .. } => exp_trig_range(family, k),
        }
    }
}

impl MonotonicRange {
    pub fn contains_u(&self, u: f64) -> bool {
        u >= self.u_lo && u <= self.u_hi
    }

    pub(crate) fn u_distance(&self, u: f64) -> f64 {
        if u < self.u_lo {
            self.u_lo - u
        } else if u > self.u_hi {
            u - self.u_hi
        } else {
            0.0
        }
    }

    pub fn contains_s(&self, s: f64, tol: &Tolerance) -> bool {
        let slack = tol.atol + tol.rtol * s.abs();
        s >= self.s_lo - slack && s <= self.s_hi + slack
    }

    /// u-bracket with infinite ends clipped at 50 / growth rate.
    pub(crate) fn clipped_u(&self, rate: f64) -> (f64, f64) {
        let w = 50.0 / rate;
        let lo = if self.u_lo.is_finite() { self.u_lo } else { self.u_hi.min(0.0) - w };
        let hi = if self.u_hi.is_finite() { self.u_hi } else { self.u_lo.max(0.0) + w };
        (lo, hi)
    }
}

fn make(family: &Family, u_lo: f64, u_hi: f64, label: RangeLabel) -> MonotonicRange {
    let a = limit(family, u_lo);
    let b = limit(family, u_hi);
    let increasing = b > a;
    MonotonicRange { u_lo, u_hi, s_lo: a.min(b), s_hi: a.max(b), increasing, label }
}

/// `s` at a finite point, or its limit at plus or minus infinity.
fn limit(family: &Family, u: f64) -> f64 {
    use Family::*;
    if u.is_finite() {
        return family.eval_s(u, 0).unwrap_or(f64::NAN);
    }
    let up = u > 0.0;
    let exp_lim = |c: f64, p: f64| -> f64 {
        let grows = if up { p > 0.0 } else { p < 0.0 };
        if p == 0.0 {
            c
        } else if grows {
            c.signum() * f64::INFINITY
        } else {
            0.0
        }
    };
    match *family {
        GeneralizedHyperbolic { p0, p1, p2, p3 } => {
            let (a, b) = (exp_lim(p0, p1), exp_lim(p2, p3));
            if a.is_infinite() && b.is_infinite() {
                // the faster exponent dominates
                if up { b } else { a }
            } else {
                a + b
            }
        }
        LambertType { a0, a1, a2 } => {
            let lin = (if up { a1.signum() } else { -a1.signum() }) * f64::INFINITY;
            if a2 == 0.0 {
                a0 + lin
            } else if (a2 > 0.0) == up {
                lin
            } else {
                0.0
            }
        }
        LogType { p0, p1, p2 } => exp_lim(p0, p1) + p2,
        Affine { a1, .. } => (if up { a1.signum() } else { -a1.signum() }) * f64::INFINITY,
        PowerHyperbolic { .. } => f64::NEG_INFINITY,
        _ => f64::NAN,
    }
}

/// All maximal monotonic ranges, ordered by `u`.
pub fn monotonic_ranges(family: &Family) -> RangeSet {
    use Family::*;
    use RangeLabel::*;
    let inf = f64::INFINITY;
    let v = match *family {
        GeneralizedHyperbolic { p0, p1, p2, p3 } => {
            if p0 * p1 * p2 * p3 >= 0.0 {
                let label = if p1 * p3 < 0.0 { SinhLike } else { AntennaLike };
                vec![make(family, -inf, inf, label)]
            } else {
                let uc = (-p2 * p3 / (p0 * p1)).ln() / (p1 - p3);
                let label = if p1 * p3 > 0.0 { OneDecayingArm } else { CoshLike };
                vec![make(family, -inf, uc, label), make(family, uc, inf, label)]
            }
        }
        LambertType { a0, a1, a2 } => {
            if a2 == 0.0 {
                vec![make(family, -inf, inf, Whole)]
            } else {
                let uc = -(a0 * a2 + a1) / (a1 * a2);
                vec![make(family, -inf, uc, LambertArm), make(family, uc, inf, LambertArm)]
            }
        }
        ExpTrig { b2, .. } => return RangeSet::Periodic { family: *family, period: PI / b2 },
        PowerSphere { alpha } => vec![make(family, -(2f64.powf(1.0 / alpha)), 0.0, Power)],
        PowerHyperbolic { .. } => {
            let mut r = make(family, -inf, 0.0, Power);
            r.s_hi = 0.0;
            r.increasing = true;
            vec![r]
        }
        SquareDistanceSphere => vec![make(family, 0.0, PI * PI / 2.0, Whole)],
        LogType { .. } | Affine { .. } => vec![make(family, -inf, inf, Whole)],
    };
    RangeSet::Finite(v)
}

/// Arc `k` of the trigonometric family, of length `pi / b2`.
pub fn exp_trig_range(family: &Family, k: i64) -> Result<MonotonicRange> {
    let Family::ExpTrig { b1, b2, b3, .. } = *family else {
        return Err(Error::Capability("exp_trig_range on a non-trigonometric family".into()));
    };
    let theta0 = if b1 == 0.0 { -PI / 2.0 } else { (-b2 / b1).atan() };
    let start = (theta0 - b3 + k as f64 * PI) / b2;
    let end = start + PI / b2;
    Ok(make(family, start.min(end), start.max(end), RangeLabel::ExpTrigArc))
}

pub(crate) fn range_for(family: &Family, branch: i64) -> Result<MonotonicRange> {
    monotonic_ranges(family).get(branch)
}

impl Family {
    pub fn monotonic_ranges(&self) -> RangeSet {
        monotonic_ranges(self)
    }
}
