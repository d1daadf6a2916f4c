use super::Family;
use crate::error::{Error, Result};
use serde::Serialize;

/// Constants of the second-order equation `s'' - S s' + P s = 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OdeClassification {
    pub s: f64,
    pub p: f64,
    pub delta: f64,
    /// False when the values were evaluated pointwise for a family without constant coefficients.
    pub constant: bool,
}

impl OdeClassification {
    fn new(s: f64, p: f64, constant: bool) -> Self {
        OdeClassification { s, p, delta: s * s - 4.0 * p, constant }
    }
}

pub(crate) fn classify_ode(family: &Family) -> Option<OdeClassification> {
    use Family::*;
    match *family {
        GeneralizedHyperbolic { p1, p3, .. } => Some(OdeClassification::new(p1 + p3, p1 * p3, true)),
        LambertType { a2, .. } => Some(OdeClassification::new(2.0 * a2, a2 * a2, true)),
        ExpTrig { b1, b2, .. } => Some(OdeClassification::new(2.0 * b1, b1 * b1 + b2 * b2, true)),
        LogType { p1, .. } => Some(OdeClassification::new(p1, 0.0, true)),
        Affine { .. } => Some(OdeClassification::new(0.0, 0.0, true)),
        _ => None,
    }
}

/// `S = (s1 s2 - s s3)/(s1^2 - s s2)`, `P = (s2^2 - s3 s1)/(s1^2 - s s2)` at `u`.
pub(crate) fn ode_pointwise(family: &Family, u: f64) -> Result<OdeClassification> {
    let [s, s1, s2, s3, _] = family.derivatives(u)?;
    let den = s1 * s1 - s * s2;
    if den.abs() <= 1e-14 * (s1 * s1).max((s * s2).abs()) {
        return Err(Error::cond(format!("s1^2 - s s2 = {den:e} at u = {u}")));
    }
    let constant = classify_ode(family).is_some();
    Ok(OdeClassification::new((s1 * s2 - s * s3) / den, (s2 * s2 - s3 * s1) / den, constant))
}
