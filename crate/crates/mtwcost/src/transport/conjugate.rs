use super::potential::{Potential, Quadratic};
use super::sinh::SinhCost;
use crate::error::{Error, Result};
use crate::euclid::Vector;
use crate::scalar::solve_monotone;
use crate::tol::Tolerance;

/// `phi^cbar(xbar)` with its maximizer.
#[derive(Debug, Clone, PartialEq)]
pub struct Conjugate {
    pub value: f64,
    /// `x` attaining the supremum; this is `T^cbar(xbar)`.
    pub x_opt: Vector,
    /// Level `Delta` of the maximizer (`alpha phi(x_opt)`, or `phi(x_opt)` at order one).
    pub delta: f64,
}

fn order_of<P: Potential + ?Sized>(phi: &P, need_above_one: bool) -> Result<f64> {
    match phi.homogeneity() {
        Some(a) if !need_above_one || a > 1.0 => Ok(a),
        Some(a) => Err(Error::Capability(format!("homogeneity order {a} must exceed 1"))),
        None => Err(Error::Capability("potential is not tagged homogeneous".into())),
    }
}

/// `xbar^t grad^{-1}(xbar)` and `grad^{-1}(xbar)`.
fn dual_pair<P: Potential + ?Sized>(phi: &P, xb: &Vector) -> Result<(f64, Vector)> {
    let y = phi.gradient_inverse(xb)?;
    let q = xb.dot(&y);
    if !(q > 0.0) {
        return Err(Error::domain(format!("xbar^t grad^-1(xbar) = {q} is not positive")));
    }
    Ok((q, y))
}

/// c-conjugate of an absolutely homogeneous potential of order `alpha > 1` under a sinh cost.
pub fn conjugate_homogeneous<P: Potential + ?Sized>(phi: &P, cost: &SinhCost, xb: &Vector) -> Result<Conjugate> {
    let alpha = order_of(phi, true)?;
    if xb.iter().all(|v| *v == 0.0) {
        return Ok(Conjugate { value: -cost.u(0.0), x_opt: Vector::zeros(xb.len()), delta: 0.0 });
    }
    let (q, y) = dual_pair(phi, xb)?;
    let k = q.powf((alpha - 1.0) / alpha);
    let r = cost.r;
    let b = -4.0 * r * r * cost.p0 * cost.p2;
    let e = 2.0 - 2.0 / alpha;
    // r^2 K^2 D^2 + b D^e = K^2, solved in t = log D after dividing by K^2
    let h = |t: f64| Ok(r * r * (2.0 * t).exp() + b / (k * k) * (e * t).exp() - 1.0);
    let dh = |t: f64| Ok(2.0 * r * r * (2.0 * t).exp() + e * b / (k * k) * (e * t).exp());
    let da = 1.0 / r;
    let db = (k * k / b).powf(1.0 / e);
    let hi = da.min(db);
    let lo = (da / 2f64.sqrt()).min(db * 2f64.powf(-1.0 / e));
    let t = solve_monotone(h, dh, lo.ln(), hi.ln(), 1.0, &Tolerance::default())?;
    let delta = t.exp();
    let s = delta.powf(1.0 / alpha) * k;
    let x_opt = &y * (delta / q).powf(1.0 / alpha);
    Ok(Conjugate { value: -cost.u(s) - delta / alpha, x_opt, delta })
}

/// `phi^{cbar c}` for order `alpha > 1`.
pub fn double_conjugate<P: Potential + ?Sized>(phi: &P, cost: &SinhCost, x: &Vector) -> Result<f64> {
    let alpha = order_of(phi, true)?;
    Ok(hom_double(phi.value(x), cost.r * alpha))
}

fn hom_double(v: f64, ra: f64) -> f64 {
    if v < 1.0 / ra {
        v
    } else {
        (1.0 + (ra * v).ln()) / ra
    }
}

/// c-conjugate of `phi = F^{1/p}` (order one) from `F`, homogeneous of order `p > 1`.
pub fn conjugate_order1<P: Potential + ?Sized>(f: &P, cost: &SinhCost, xb: &Vector) -> Result<Conjugate> {
    let p = order_of(f, true)?;
    let n = xb.len();
    let at_origin = || Conjugate { value: -cost.u(0.0), x_opt: Vector::zeros(n), delta: 0.0 };
    if xb.iter().all(|v| *v == 0.0) {
        return Ok(at_origin());
    }
    let y = f.gradient_inverse(xb)?;
    let fy = f.value(&y);
    if !(fy > 0.0) {
        return Err(Error::domain("F(grad_F^-1(xbar)) must be positive"));
    }
    let k = p * fy.powf((p - 1.0) / p);
    let rhs = k * k / (cost.r * cost.r) + 4.0 * cost.p0 * cost.p2;
    if rhs <= 0.0 {
        return Ok(at_origin());
    }
    let delta = rhs.sqrt() / k;
    let x_opt = &y * (delta / fy.powf(1.0 / p));
    Ok(Conjugate { value: -cost.u(k * delta) - delta, x_opt, delta })
}

/// `phi^{cbar c}` for `phi` of order one.
pub fn double_conjugate_order1<P: Potential + ?Sized>(phi: &P, cost: &SinhCost, x: &Vector) -> Result<f64> {
    order_of(phi, false)?;
    Ok(hom_double(phi.value(x), cost.r))
}

/// Closed-form conjugate of `x^t C x / 2`, with `W = xbar^t C^{-1} xbar / 2`.
pub fn quadratic_conjugate_closed(phi: &Quadratic, cost: &SinhCost, xb: &Vector) -> f64 {
    let w = 0.5 * xb.dot(&(phi.inverse_matrix() * xb));
    let (r, p0, p2) = (cost.r, cost.p0, cost.p2);
    let a = p0 * p2 * r * r;
    let root = a.hypot(r * w);
    // sqrt((r p0 p2)^2 + W^2) - W, rewritten to avoid cancellation for large W
    let gap = (r * p0 * p2).powi(2) / ((r * p0 * p2).hypot(w) + w);
    -(gap / (p2 * p2 * r)).ln() / (2.0 * r) - w / (2.0 * (-a + root))
}
