//! c-divergences of a potential, their metric and dualistic connections, primal geodesics,
//! and local alpha-divergences on finite sets.

mod local;

pub use local::{
    blank_local, comparison_statistic, jensen_local, local_alpha_divergence, partition_product, ComparisonStats,
    FiniteMeasurePair, LocalDivergences,
};

use crate::error::{Error, Result};
use crate::euclid::{UCost, Vector};
use crate::scalar::Family;
use crate::transport::{c_hessian, c_hessian_at, map_point, mixed_derivative, CHessian, Potential, SinhCost};
use nalgebra::DMatrix;

/// A cost together with a potential, defining `D(x, x') = c(x, T x') - c(x', T x') + phi(x) - phi(x')`.
#[derive(Clone, Copy)]
pub struct DivergenceContext<'a> {
    pub cost: &'a UCost,
    pub phi: &'a dyn Potential,
}

impl<'a> DivergenceContext<'a> {
    pub fn new(cost: &'a UCost, phi: &'a dyn Potential) -> Result<Self> {
        if cost.dim() != phi.dim() {
            return Err(Error::Validation(format!("cost dimension {} vs potential dimension {}", cost.dim(), phi.dim())));
        }
        Ok(Self { cost, phi })
    }

    /// `r` of a hyperbolic cost in the standard pairing, `0` for `-x^t xbar`, otherwise `None`.
    pub fn hyperbolic_r(&self) -> Option<f64> {
        let n = self.cost.dim();
        if self.cost.form.matrix() != &DMatrix::identity(n, n) {
            return None;
        }
        match *self.cost.scalar.family() {
            Family::Affine { a1, .. } if a1 == -1.0 => Some(0.0),
            ref f => SinhCost::from_family(f).map(|s| s.r),
        }
    }

    fn third(&self, x: &Vector, a: &Vector, b: &Vector) -> Result<Vector> {
        self.phi
            .third(x, a, b)
            .ok_or_else(|| Error::Capability("potential has no third derivative".into()))
    }

    fn closed_r(&self) -> Result<f64> {
        self.hyperbolic_r()
            .ok_or_else(|| Error::Capability("closed dual connection needs a hyperbolic or classical cost".into()))
    }
}

/// The c-divergence; closed form for hyperbolic costs.
pub fn c_divergence(ctx: &DivergenceContext, x: &Vector, xp: &Vector) -> Result<f64> {
    match ctx.hyperbolic_r() {
        Some(r) if r > 0.0 => hyperbolic_divergence(ctx.phi, r, x, xp),
        _ => c_divergence_general(ctx, x, xp),
    }
}

/// `c(x, T x') - c(x', T x') + phi(x) - phi(x')` for any cost.
pub fn c_divergence_general(ctx: &DivergenceContext, x: &Vector, xp: &Vector) -> Result<f64> {
    let t = map_point(ctx.phi, ctx.cost, xp)?.xb;
    Ok(ctx.cost.cost(x, &t)? - ctx.cost.cost(xp, &t)? + ctx.phi.value(x) - ctx.phi.value(xp))
}

fn pairing_terms<P: Potential + ?Sized>(phi: &P, r: f64, x: &Vector, xp: &Vector) -> Result<(f64, f64)> {
    let g = phi.gradient(xp);
    let (v, w) = (x.dot(&g), xp.dot(&g));
    if !(r * w.abs() < 1.0) {
        return Err(Error::domain(format!("|r x'^t grad phi(x')| = {} is not below 1", r * w.abs())));
    }
    Ok((v, w))
}

/// `phi(x) - phi(x') - log((r v + sqrt(r^2 v^2 - r^2 w^2 + 1)) / (r w + 1)) / r`
/// with `v = x^t grad phi(x')`, `w = x'^t grad phi(x')`.
pub fn hyperbolic_divergence<P: Potential + ?Sized>(phi: &P, r: f64, x: &Vector, xp: &Vector) -> Result<f64> {
    let (v, w) = pairing_terms(phi, r, x, xp)?;
    let d = r * r * (v - w) * (v + w);
    let arg = 1.0 + d;
    if !(arg >= 0.0) {
        return Err(Error::domain("negative square-root argument"));
    }
    // ratio - 1, kept free of cancellation as r -> 0
    let excess = (r * (v - w) + d / (arg.sqrt() + 1.0)) / (1.0 + r * w);
    Ok(phi.value(x) - phi.value(xp) - excess.ln_1p() / r)
}

/// `sinh(r dphi) / r + cosh(r dphi) w - v`, which has the sign of the hyperbolic divergence.
pub fn hyperbolic_divergence_sinh_form<P: Potential + ?Sized>(phi: &P, r: f64, x: &Vector, xp: &Vector) -> Result<f64> {
    let (v, w) = pairing_terms(phi, r, x, xp)?;
    let dp = phi.value(x) - phi.value(xp);
    Ok((r * dp).sinh() / r + (r * dp).cosh() * w - v)
}

/// Divergence metric, the c-Hessian of the potential.
pub fn divergence_metric(ctx: &DivergenceContext, x: &Vector) -> Result<CHessian> {
    c_hessian(ctx.phi, ctx.cost, x)
}

/// Primal connection; closed form for hyperbolic costs.
pub fn primal_connection(ctx: &DivergenceContext, x: &Vector, a: &Vector, b: &Vector) -> Result<Vector> {
    match ctx.hyperbolic_r() {
        Some(r) => {
            let g = ctx.phi.gradient(x);
            if !(r * x.dot(&g).abs() < 1.0) {
                return Err(Error::domain("x outside the domain of the optimal map"));
            }
            Ok(hyperbolic_primal_connection(&g, r, x, a, b))
        }
        None => primal_connection_general(ctx, x, a, b),
    }
}

/// `(D Dbar c)^{-1} D_a D_b Dbar c` at `(x, T x)`.
pub fn primal_connection_general(ctx: &DivergenceContext, x: &Vector, a: &Vector, b: &Vector) -> Result<Vector> {
    let xb = map_point(ctx.phi, ctx.cost, x)?.xb;
    let q = crate::euclid::Point::new(x.clone(), xb.clone());
    let du = ctx.cost.at(&q)?.du;
    let am = ctx.cost.form.matrix();
    let (axb, atx) = (am * &xb, am.transpose() * x);
    let (pa, pb) = (a.dot(&axb), b.dot(&axb));
    let rhs = &atx * (du[3] * (pa * pb)) + (am.transpose() * a * (du[2] * pb) + am.transpose() * b * (du[2] * pa));
    let m = am.transpose() * du[1] + &atx * axb.transpose() * du[2];
    m.lu().solve(&rhs).ok_or_else(|| Error::cond("singular mixed derivative in primal connection"))
}

/// `-r^2 ((g^t a)(g^t b) x + (x^t g)(g^t b) a + (x^t g)(g^t a) b)`.
pub fn hyperbolic_primal_connection(g: &Vector, r: f64, x: &Vector, a: &Vector, b: &Vector) -> Vector {
    let (ga, gb, xg) = (g.dot(a), g.dot(b), x.dot(g));
    (x * (ga * gb) + (a * (xg * gb) + b * (xg * ga))) * (-r * r)
}

fn dual_bracket(ctx: &DivergenceContext, r: f64, x: &Vector, a: &Vector, b: &Vector) -> Result<Vector> {
    let g = ctx.phi.gradient(x);
    let h = ctx.phi.hessian(x);
    let (ga, gb, xg) = (g.dot(a), g.dot(b), x.dot(&g));
    let (ha, hb) = (&h * a, &h * b);
    let r2 = r * r;
    let gcoef = r2 * ((1.0 + 3.0 * r2 * xg * xg) * ga * gb + 2.0 * a.dot(&hb) * xg + gb * x.dot(&ha) + ga * x.dot(&hb));
    Ok(ctx.third(x, a, b)? + hb * (r2 * xg * ga) + ha * (r2 * gb * xg) + g * gcoef)
}

/// Dual connection of a hyperbolic (or classical) divergence.
pub fn dual_connection(ctx: &DivergenceContext, x: &Vector, a: &Vector, b: &Vector) -> Result<Vector> {
    let r = ctx.closed_r()?;
    let rhs = dual_bracket(ctx, r, x, a, b)?;
    divergence_metric(ctx, x)?
        .matrix()
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::cond("singular divergence metric"))
}

/// Cubic Amari-Chentsov tensor of a hyperbolic (or classical) divergence.
pub fn amari_chentsov(ctx: &DivergenceContext, x: &Vector, a: &Vector, b: &Vector, c: &Vector) -> Result<f64> {
    let r = ctx.closed_r()?;
    let g = ctx.phi.gradient(x);
    let h = ctx.phi.hessian(x);
    let (ga, gb, gc, xg) = (g.dot(a), g.dot(b), g.dot(c), x.dot(&g));
    let hx = &h * x;
    let (hab, hac, hbc) = (a.dot(&(&h * b)), a.dot(&(&h * c)), b.dot(&(&h * c)));
    let cubic = c.dot(&ctx.third(x, a, b)?);
    let r2 = r * r;
    Ok(cubic
        + r2 * (2.0 * xg * (ga * hbc + gb * hac + gc * hab)
            + (1.0 + 6.0 * r2 * xg * xg) * ga * gb * gc
            + gc * gb * hx.dot(a)
            + ga * gb * hx.dot(c)
            + gc * ga * hx.dot(b)))
}

/// The connections and cubic tensor at one point.
pub struct DualisticData<'c, 'a> {
    ctx: &'c DivergenceContext<'a>,
    pub x: Vector,
    pub metric: CHessian,
}

impl<'c, 'a> DualisticData<'c, 'a> {
    pub fn new(ctx: &'c DivergenceContext<'a>, x: &Vector) -> Result<Self> {
        Ok(Self { ctx, x: x.clone(), metric: divergence_metric(ctx, x)? })
    }

    pub fn gamma1(&self, a: &Vector, b: &Vector) -> Result<Vector> {
        primal_connection(self.ctx, &self.x, a, b)
    }

    pub fn gamma_minus1(&self, a: &Vector, b: &Vector) -> Result<Vector> {
        dual_connection(self.ctx, &self.x, a, b)
    }

    pub fn ac_tensor(&self, a: &Vector, b: &Vector, c: &Vector) -> Result<f64> {
        amari_chentsov(self.ctx, &self.x, a, b, c)
    }
}

/// `R(a, b) c = (D_a G)(b, c) - (D_b G)(a, c) + G(a, G(b, c)) - G(b, G(a, c))` for the primal
/// connection `G`, with the derivatives by central differences of step `h`.
pub fn primal_curvature(ctx: &DivergenceContext, x: &Vector, a: &Vector, b: &Vector, c: &Vector, h: f64) -> Result<Vector> {
    let g = |y: &Vector, p: &Vector, q: &Vector| primal_connection(ctx, y, p, q);
    let dir = |p: &Vector, q: &Vector, w: &Vector| -> Result<Vector> {
        Ok((g(&(x + w * h), p, q)? - g(&(x - w * h), p, q)?) / (2.0 * h))
    };
    Ok(dir(b, c, a)? - dir(a, c, b)? + g(x, a, &g(x, b, c)?)? - g(x, b, &g(x, a, c)?)?)
}

/// c-Hessian of the conjugate at `T x`, `(D cbar)(hess^c)^{-1}(Dbar D c)`, from the mixed derivative.
pub fn conjugate_c_hessian(ctx: &DivergenceContext, x: &Vector) -> Result<DMatrix<f64>> {
    let mp = map_point(ctx.phi, ctx.cost, x)?;
    let m1 = mixed_derivative(ctx.cost, x, &mp.xb)?;
    let hc = c_hessian_at(ctx.phi, &mp)?.matrix();
    let sol = hc.lu().solve(&m1).ok_or_else(|| Error::cond("singular c-Hessian"))?;
    Ok(m1.transpose() * sol)
}

/// `c`-Hessian of a conjugate `psi` at `xbar = T x` from its ordinary Hessian there.
pub fn conjugate_c_hessian_from(ctx: &DivergenceContext, x: &Vector, hess_psi: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mp = map_point(ctx.phi, ctx.cost, x)?;
    let q = crate::euclid::Point::new(x.clone(), mp.xb.clone());
    let du = ctx.cost.at(&q)?.du;
    let atx = ctx.cost.form.matrix().transpose() * x;
    Ok(hess_psi + &atx * atx.transpose() * du[2])
}

/// `(Dbar D c)^{-1} hess^c (D Dbar c)^{-1} hess^cbar` at `(x, T x)`; the identity for a Legendre pair.
pub fn crouzeix_product(ctx: &DivergenceContext, x: &Vector, conj_c_hessian: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mp = map_point(ctx.phi, ctx.cost, x)?;
    let m1 = mixed_derivative(ctx.cost, x, &mp.xb)?;
    let hc = c_hessian_at(ctx.phi, &mp)?.matrix();
    let lu1 = m1.clone().lu();
    let lu2 = m1.transpose().lu();
    let inner = lu2.solve(conj_c_hessian).ok_or_else(|| Error::cond("singular mixed derivative"))?;
    lu1.solve(&(hc * inner)).ok_or_else(|| Error::cond("singular mixed derivative"))
}

/// Sampled primal geodesic.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<Vector>,
    pub v: Vec<Vector>,
    /// Set when the path left the domain before `t_end`.
    pub exited: bool,
}

/// Integrates `x'' + G(x; x', x') = 0` by fixed-step RK4.
pub fn primal_geodesic(ctx: &DivergenceContext, x0: &Vector, v0: &Vector, t_end: f64, steps: usize) -> Result<Trajectory> {
    if steps == 0 || !t_end.is_finite() {
        return Err(Error::Validation("geodesic needs a positive step count and finite end time".into()));
    }
    let h = t_end / steps as f64;
    let acc = |x: &Vector, v: &Vector| primal_connection(ctx, x, v, v).map(|g| -g);
    let mut tr = Trajectory { t: vec![0.0], x: vec![x0.clone()], v: vec![v0.clone()], exited: false };
    let (mut x, mut v) = (x0.clone(), v0.clone());
    for i in 1..=steps {
        let step = || -> Result<(Vector, Vector)> {
            let a1 = acc(&x, &v)?;
            let (x2, v2) = (&x + &v * (h / 2.0), &v + &a1 * (h / 2.0));
            let a2 = acc(&x2, &v2)?;
            let (x3, v3) = (&x + &v2 * (h / 2.0), &v + &a2 * (h / 2.0));
            let a3 = acc(&x3, &v3)?;
            let (x4, v4) = (&x + &v3 * h, &v + &a3 * h);
            let a4 = acc(&x4, &v4)?;
            let xn = &x + (&v + &v2 * 2.0 + &v3 * 2.0 + &v4) * (h / 6.0);
            let vn = &v + (a1 + a2 * 2.0 + a3 * 2.0 + a4) * (h / 6.0);
            Ok((xn, vn))
        };
        match step() {
            Ok((xn, vn)) if xn.iter().chain(vn.iter()).all(|c| c.is_finite()) && ctx.phi.in_domain(&xn) => {
                x = xn;
                v = vn;
            }
            Ok(_) | Err(Error::Domain(_)) | Err(Error::Branch(_)) | Err(Error::Range(_)) => {
                tr.exited = true;
                break;
            }
            Err(e) => return Err(e),
        }
        tr.t.push(h * i as f64);
        tr.x.push(x.clone());
        tr.v.push(v.clone());
    }
    Ok(tr)
}
