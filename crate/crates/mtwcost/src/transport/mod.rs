//! c-exponential, optimal maps, c-Hessians and c-conjugates.

mod conjugate;
mod potential;
mod sinh;

pub use conjugate::{
    conjugate_homogeneous, conjugate_order1, double_conjugate, double_conjugate_order1, quadratic_conjugate_closed,
    Conjugate,
};
pub use potential::{PNorm, Potential, PotentialTag, PowerSum, Quadratic};
pub use sinh::SinhCost;

use crate::error::{Error, Result};
use crate::euclid::{Point, UCost, Vector};
use crate::scalar::{solve_monotone, Family, ScalarCost};
use crate::tol::Tolerance;
use nalgebra::DMatrix;
use std::f64::consts::PI;

/// `u` with `s(u) + s'(u) m = 0`, where `m = x^t nu`.
///
/// `branch` is the integer `k` of the trigonometric family; it is ignored by the others.
/// Without it the shift is chosen to land in the cost's own range.
pub fn solve_u_nu(cost: &ScalarCost, m: f64, branch: Option<i64>) -> Result<f64> {
    use Family::*;
    let positive_log = |arg: f64, what: &str| -> Result<f64> {
        if arg > 0.0 && arg.is_finite() {
            Ok(arg.ln())
        } else {
            Err(Error::domain(format!("{what}: no solution for x^t nu = {m}")))
        }
    };
    let u = match *cost.family() {
        GeneralizedHyperbolic { p0, p1, p2, p3 } => {
            positive_log(p0 * (1.0 + p1 * m) / (-p2 * (1.0 + p3 * m)), "hyperbolic")? / (p3 - p1)
        }
        LambertType { a0, a1, a2 } => {
            let den = a1 * (1.0 + a2 * m);
            if den == 0.0 {
                return Err(Error::domain(format!("Lambert: 1 + a2 x^t nu = 0 at {m}")));
            }
            (-(a1 + a0 * a2) * m - a0) / den
        }
        ExpTrig { b1, b2, b3, .. } => {
            let den = 1.0 + b1 * m;
            let phase = if den == 0.0 { PI / 2.0 } else { (-b2 * m / den).atan() };
            let base = (phase - b3) / b2;
            match branch {
                Some(k) => base + k as f64 * PI / b2,
                None => {
                    let period = PI / b2.abs();
                    let r = cost.range();
                    let k = ((r.u_lo - base) / period).ceil();
                    base + k * period
                }
            }
        }
        LogType { p0, p1, p2 } => positive_log(-p2 / (p0 * (1.0 + p1 * m)), "log")? / p1,
        Affine { a0, a1 } => -m - a0 / a1,
        _ => return numeric_u_nu(cost, m),
    };
    if !u.is_finite() {
        return Err(Error::domain(format!("no finite u for x^t nu = {m}")));
    }
    if !cost.range().contains_u(u) {
        return Err(Error::Branch(format!("u = {u} lies outside the selected range")));
    }
    Ok(u)
}

fn numeric_u_nu(cost: &ScalarCost, m: f64) -> Result<f64> {
    let g = |u: f64| -> Result<f64> { Ok(cost.eval_s(u, 0)? + cost.eval_s(u, 1)? * m) };
    let dg = |u: f64| -> Result<f64> { Ok(cost.eval_s(u, 1)? + cost.eval_s(u, 2)? * m) };
    let r = cost.range();
    let (lo, hi) = r.clipped_u(cost.family().growth_rate());
    // stay off endpoints where the profile may be singular
    let pad = 1e-12 * (hi - lo);
    let grid: Vec<f64> = (0..=256).map(|i| lo + pad + (hi - lo - 2.0 * pad) * i as f64 / 256.0).collect();
    let vals: Vec<Option<f64>> = grid.iter().map(|&u| g(u).ok()).collect();
    let mut roots = Vec::new();
    for i in 0..256 {
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a == 0.0 || a.signum() != b.signum() {
                roots.push(solve_monotone(g, dg, grid[i], grid[i + 1], 1.0, &Tolerance::default())?);
            }
        }
    }
    match roots.as_slice() {
        [u] => Ok(*u),
        [] => Err(Error::domain(format!("no solution of s + s' m = 0 for m = {m} in range"))),
        _ => Err(Error::Branch(format!("{} solutions of s + s' m = 0 in range", roots.len()))),
    }
}

fn form_solve(cost: &UCost, v: &Vector) -> Result<Vector> {
    cost.form.matrix().clone().lu().solve(v).ok_or_else(|| Error::cond("singular bilinear form"))
}

/// `xbar` with `D_x c(x, xbar) = -nu`.
pub fn cexp(cost: &UCost, x: &Vector, nu: &Vector, branch: Option<i64>) -> Result<Vector> {
    let u = solve_u_nu(&cost.scalar, x.dot(nu), branch)?;
    let s1 = cost.scalar.eval_s(u, 1)?;
    let xb = form_solve(cost, nu)? * (-s1);
    if nu.norm() > 0.0 {
        let res = cost.grad_x(x, &xb).map_err(|e| Error::Branch(format!("c-exponential: {e}")))? + nu;
        if !(res.norm() <= 1e-9 * nu.norm().max(1.0)) {
            return Err(Error::numeric("c-exponential residual", res.norm()));
        }
    }
    Ok(xb)
}

/// Data of the optimal map at one point.
#[derive(Debug, Clone)]
pub struct MapPoint {
    pub x: Vector,
    pub grad: Vector,
    pub xb: Vector,
    pub u: f64,
    /// `s, s', ..., s''''` at `u`.
    pub ds: [f64; 5],
}

/// `T(x)` together with the scalar data it was built from.
pub fn map_point<P: Potential + ?Sized>(phi: &P, cost: &UCost, x: &Vector) -> Result<MapPoint> {
    if !phi.in_domain(x) {
        return Err(Error::domain("x outside the potential's domain"));
    }
    let g = phi.gradient(x);
    let m = x.dot(&g);
    let (u, xb) = match SinhCost::from_family(cost.scalar.family()) {
        Some(sc) => {
            let factor = sc.map_factor(m)?;
            let u = ((sc.p0 * (1.0 - sc.r * m)) / (-sc.p2 * (1.0 + sc.r * m))).ln() / (2.0 * sc.r);
            (u, form_solve(cost, &g)? * factor)
        }
        None => {
            let u = solve_u_nu(&cost.scalar, m, None)?;
            (u, cexp(cost, x, &g, None)?)
        }
    };
    let mut ds = cost.scalar.derivatives(u)?;
    ds[0] = cost.form.pair(x, &xb);
    Ok(MapPoint { x: x.clone(), grad: g, xb, u, ds })
}

/// Optimal map `T(x) = -s'(u_phi) grad phi(x)`.
pub fn optimal_map<P: Potential + ?Sized>(phi: &P, cost: &UCost, x: &Vector) -> Result<Vector> {
    Ok(map_point(phi, cost, x)?.xb)
}

/// `hess phi + scale v v^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CHessian {
    pub base: DMatrix<f64>,
    pub scale: f64,
    pub vector: Vector,
}

impl CHessian {
    pub fn matrix(&self) -> DMatrix<f64> {
        &self.base + &self.vector * self.vector.transpose() * self.scale
    }

    pub fn apply(&self, xi: &Vector) -> Vector {
        &self.base * xi + &self.vector * (self.scale * self.vector.dot(xi))
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = self.matrix();
        let sym = (&m + m.transpose()) * 0.5;
        sym.symmetric_eigenvalues().min()
    }

    pub fn is_positive_definite(&self) -> bool {
        self.matrix().cholesky().is_some()
    }

    pub fn determinant(&self) -> f64 {
        self.matrix().determinant()
    }
}

/// c-Hessian at `x`: `hess phi(x) - (s''/s')(u_phi) grad phi grad phi^t`.
pub fn c_hessian<P: Potential + ?Sized>(phi: &P, cost: &UCost, x: &Vector) -> Result<CHessian> {
    let mp = map_point(phi, cost, x)?;
    c_hessian_at(phi, &mp)
}

pub fn c_hessian_at<P: Potential + ?Sized>(phi: &P, mp: &MapPoint) -> Result<CHessian> {
    let [_, s1, s2, _, _] = mp.ds;
    Ok(CHessian { base: phi.hessian(&mp.x), scale: -s2 / s1, vector: mp.grad.clone() })
}

/// Mixed derivative `Dbar D c(x, xbar) = u' A + u'' (A xbar)(A x)^t`.
pub fn mixed_derivative(cost: &UCost, x: &Vector, xb: &Vector) -> Result<DMatrix<f64>> {
    let ctx = cost.at(&Point::new(x.clone(), xb.clone()))?;
    let a = cost.form.matrix();
    Ok(a * ctx.du[1] + (a * xb) * (a * x).transpose() * ctx.du[2])
}

/// `dT(x) = -(Dbar D c)^{-1} hess^c`.
pub fn differential_of_map<P: Potential + ?Sized>(phi: &P, cost: &UCost, x: &Vector) -> Result<DMatrix<f64>> {
    let mp = map_point(phi, cost, x)?;
    let h = c_hessian_at(phi, &mp)?.matrix();
    let m = mixed_derivative(cost, x, &mp.xb)?;
    let sol = m.lu().solve(&h).ok_or_else(|| Error::cond("singular mixed derivative"))?;
    Ok(-sol)
}

/// `det(-(Dbar D c)^{-1}) = (-s1)^{n+2} / ((s1^2 - s s2) det A)`.
pub fn mixed_determinant_factor(cost: &UCost, ds: &[f64; 5]) -> Result<f64> {
    let [s, s1, s2, _, _] = *ds;
    let n = cost.dim() as i32;
    let k = s1 * s1 - s * s2;
    let det_a = cost.form.matrix().determinant();
    if k == 0.0 || det_a == 0.0 {
        return Err(Error::cond("degenerate mixed derivative"));
    }
    Ok((-s1).powi(n + 2) / (k * det_a))
}

/// `det dT(x)` from the scalar factor and `det hess^c`.
pub fn det_dt<P: Potential + ?Sized>(phi: &P, cost: &UCost, x: &Vector) -> Result<f64> {
    let mp = map_point(phi, cost, x)?;
    Ok(mixed_determinant_factor(cost, &mp.ds)? * c_hessian_at(phi, &mp)?.determinant())
}
