//! Kim–McCann geometry of `c(x, xbar) = u(x^t xbar)` on open subsets of `R^n x R^n`.
//!
//! Sign convention: the cross-curvature is `+<R(a, b) b, a>` with `a = (w, 0)`, `b = (0, wbar)`.

use crate::error::{Error, Result};
use crate::fd;
use crate::scalar::ScalarCost;
use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub type Vector = DVector<f64>;

/// Symmetric nonsingular matrix `A` with `x^t xbar = x^T A xbar`.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearForm(DMatrix<f64>);

impl BilinearForm {
    pub fn new(a: DMatrix<f64>) -> Result<Self> {
        if !a.is_square() || a.nrows() == 0 {
            return Err(Error::Validation("bilinear form must be a nonempty square matrix".into()));
        }
        let scale = a.amax().max(f64::MIN_POSITIVE);
        if (&a - a.transpose()).amax() > 1e-12 * scale {
            return Err(Error::Validation("bilinear form must be symmetric".into()));
        }
        if a.clone().lu().determinant().abs() <= 1e-14 * scale.powi(a.nrows() as i32) {
            return Err(Error::Validation("bilinear form must be nonsingular".into()));
        }
        Ok(BilinearForm(a))
    }

    pub fn identity(n: usize) -> Self {
        BilinearForm(DMatrix::identity(n, n))
    }

    /// `diag(-1, 1, ..., 1)` on `R^{n}`.
    pub fn minkowski(n: usize) -> Self {
        let mut a = DMatrix::identity(n, n);
        a[(0, 0)] = -1.0;
        BilinearForm(a)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn pair(&self, x: &Vector, y: &Vector) -> f64 {
        (x.transpose() * &self.0 * y)[(0, 0)]
    }

    pub fn apply(&self, x: &Vector) -> Vector {
        &self.0 * x
    }
}

/// A point `q = (x, xbar)` of the product space.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    pub x: Vector,
    pub xb: Vector,
}

/// A tangent vector `(w, wbar)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Tangent {
    pub w: Vector,
    pub wb: Vector,
}

impl Point {
    pub fn new(x: Vector, xb: Vector) -> Self {
        Point { x, xb }
    }

    pub fn shifted(&self, t: &Tangent, h: f64) -> Point {
        Point { x: &self.x + &t.w * h, xb: &self.xb + &t.wb * h }
    }
}

impl Tangent {
    pub fn new(w: Vector, wb: Vector) -> Self {
        Tangent { w, wb }
    }

    pub fn zeros(n: usize) -> Self {
        Tangent { w: Vector::zeros(n), wb: Vector::zeros(n) }
    }

    /// `(w, 0)`.
    pub fn first(&self) -> Tangent {
        Tangent { w: self.w.clone(), wb: Vector::zeros(self.wb.len()) }
    }

    /// `(0, wbar)`.
    pub fn second(&self) -> Tangent {
        Tangent { w: Vector::zeros(self.w.len()), wb: self.wb.clone() }
    }

    pub fn add(&self, o: &Tangent) -> Tangent {
        Tangent { w: &self.w + &o.w, wb: &self.wb + &o.wb }
    }

    pub fn sub(&self, o: &Tangent) -> Tangent {
        Tangent { w: &self.w - &o.w, wb: &self.wb - &o.wb }
    }

    pub fn scale(&self, a: f64) -> Tangent {
        Tangent { w: &self.w * a, wb: &self.wb * a }
    }

    pub fn norm(&self) -> f64 {
        (self.w.norm_squared() + self.wb.norm_squared()).sqrt()
    }
}

/// Outcome of the two nondegeneracy tests.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Nondegeneracy {
    Ok,
    FailsS1,
    FailsDiscriminant,
}

/// A scalar profile paired with a bilinear form.
#[derive(Debug, Clone, PartialEq)]
pub struct UCost {
    pub scalar: ScalarCost,
    pub form: BilinearForm,
}

impl UCost {
    pub fn new(scalar: ScalarCost, form: BilinearForm) -> Self {
        UCost { scalar, form }
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// `c(x, xbar) = u(x^t xbar)`.
    pub fn cost(&self, x: &Vector, xb: &Vector) -> Result<f64> {
        self.scalar.eval_u(self.form.pair(x, xb))
    }

    /// Evaluation context with cached derivatives at `q`.
    pub fn at(&self, q: &Point) -> Result<CostContext<'_>> {
        let s = self.form.pair(&q.x, &q.xb);
        let u = self.scalar.eval_u(s)?;
        let mut ds = self.scalar.derivatives(u)?;
        ds[0] = s;
        Ok(CostContext::from_derivatives(self, q.clone(), u, ds))
    }

    /// `grad_x c = u'(s) A xbar`.
    pub fn grad_x(&self, x: &Vector, xb: &Vector) -> Result<Vector> {
        let ctx = self.at(&Point::new(x.clone(), xb.clone()))?;
        Ok(self.form.apply(xb) * ctx.du[1])
    }

    /// `grad_xbar c = u'(s) A x`.
    pub fn grad_xb(&self, x: &Vector, xb: &Vector) -> Result<Vector> {
        let ctx = self.at(&Point::new(x.clone(), xb.clone()))?;
        Ok(self.form.apply(x) * ctx.du[1])
    }
}

/// Derivatives `u', u'', u''', u''''` of the inverse function from those of `s`.
pub fn inverse_derivatives(ds: &[f64; 5], u: f64) -> [f64; 5] {
    let [_, s1, s2, s3, s4] = *ds;
    [
        u,
        1.0 / s1,
        -s2 / s1.powi(3),
        -(s1 * s3 - 3.0 * s2 * s2) / s1.powi(5),
        -(s1 * s1 * s4 - 10.0 * s1 * s2 * s3 + 15.0 * s2.powi(3)) / s1.powi(7),
    ]
}

/// Cost data frozen at one point `q`.
#[derive(Debug, Clone)]
pub struct CostContext<'a> {
    pub cost: &'a UCost,
    pub q: Point,
    pub u: f64,
    /// `s, s', s'', s''', s''''` at `u`.
    pub ds: [f64; 5],
    /// `u, u', u'', u''', u''''` at `s`.
    pub du: [f64; 5],
}

impl<'a> CostContext<'a> {
    pub fn from_derivatives(cost: &'a UCost, q: Point, u: f64, ds: [f64; 5]) -> Self {
        let du = inverse_derivatives(&ds, u);
        CostContext { cost, q, u, ds, du }
    }

    pub fn s(&self) -> f64 {
        self.ds[0]
    }

    fn pair(&self, a: &Vector, b: &Vector) -> f64 {
        self.cost.form.pair(a, b)
    }

    pub fn check_nondegenerate(&self) -> Nondegeneracy {
        let [s0, s1, s2, _, _] = self.ds;
        let scale = s0.abs().max(s2.abs()).max(1.0);
        if s1.abs() <= 1e-12 * scale {
            return Nondegeneracy::FailsS1;
        }
        let disc = s1 * s1 - s0 * s2;
        if disc.abs() <= 1e-12 * (s1 * s1).max((s0 * s2).abs()) {
            return Nondegeneracy::FailsDiscriminant;
        }
        Nondegeneracy::Ok
    }

    pub fn require_nondegenerate(&self) -> Result<()> {
        match self.check_nondegenerate() {
            Nondegeneracy::Ok => Ok(()),
            other => Err(Error::cond(format!("Kim-McCann metric degenerate ({other:?}) at s = {}", self.s()))),
        }
    }

    /// Kim–McCann pairing of two tangent vectors.
    pub fn km_pairing(&self, a: &Tangent, b: &Tangent) -> f64 {
        let (x, xb) = (&self.q.x, &self.q.xb);
        let [_, u1, u2, _, _] = self.du;
        let mixed = self.pair(&a.w, xb) * self.pair(&b.wb, x) + self.pair(&a.wb, x) * self.pair(&b.w, xb);
        let flat = self.pair(&a.w, &b.wb) + self.pair(&a.wb, &b.w);
        -0.5 * (u2 * mixed + u1 * flat)
    }

    /// Applies `(D Dbar c)^{-1}` in the `x` slot: solves `(u1 I + u2 x (A xbar)^T) y = v`.
    pub fn solve_x(&self, v: &Vector) -> Vector {
        let [_, u1, u2, _, _] = self.du;
        let den = u1 + u2 * self.s();
        let k = u2 * self.pair(&self.q.xb, v) / den;
        (v - &self.q.x * k) / u1
    }

    /// Same for the `xbar` slot.
    pub fn solve_xb(&self, v: &Vector) -> Vector {
        let [_, u1, u2, _, _] = self.du;
        let den = u1 + u2 * self.s();
        let k = u2 * self.pair(&self.q.x, v) / den;
        (v - &self.q.xb * k) / u1
    }

    /// Christoffel function of the Kim–McCann metric in closed form.
    ///
    /// For the log family `s1 s3 = s2^2` identically, so the `x`-coefficient is dropped; this is
    /// the limiting connection, which stays finite where `s1^2 - s s2 = 0` (`p2 = 0`).
    pub fn christoffel(&self, a: &Tangent, b: &Tangent) -> Result<Tangent> {
        let [s0, s1, s2, s3, _] = self.ds;
        let kx = if matches!(self.cost.scalar.family(), crate::scalar::Family::LogType { .. }) {
            if self.check_nondegenerate() == Nondegeneracy::FailsS1 {
                return Err(Error::cond("s1 = 0"));
            }
            0.0
        } else {
            self.require_nondegenerate()?;
            (s1 * s3 - s2 * s2) / (s1 * s1 * (s0 * s2 - s1 * s1))
        };
        let (x, xb) = (&self.q.x, &self.q.xb);
        let k1 = s2 / (s1 * s1);
        let (a1, a2) = (self.pair(xb, &a.w), self.pair(xb, &b.w));
        let (b1, b2) = (self.pair(x, &a.wb), self.pair(x, &b.wb));
        let gx = x * (kx * (a1 * a2)) - (&a.w * (k1 * a2) + &b.w * (k1 * a1));
        let gxb = xb * (kx * (b1 * b2)) - (&a.wb * (k1 * b2) + &b.wb * (k1 * b1));
        Ok(Tangent { w: gx, wb: gxb })
    }

    /// Cross-curvature in the closed three-term form.
    pub fn cross_curvature_closed(&self, t: &Tangent) -> Result<f64> {
        self.require_nondegenerate()?;
        let [s0, s1, s2, s3, s4] = self.ds;
        let disc = s1 * s1 - s0 * s2;
        let f = self.pair(&t.w, &self.q.xb) * self.pair(&t.wb, &self.q.x);
        let j = self.km_pairing(t, t);
        let ode = disc * s4 + s0 * s3 * s3 - 2.0 * s1 * s2 * s3 + s2.powi(3);
        Ok(ode / (2.0 * disc * s1.powi(5)) * f * f - 2.0 * (s1 * s3 - s2 * s2) / s1.powi(4) * f * j
            + s2 / s1 * j * j)
    }

    /// Linear functional `v -> J((w, wbar0 + v))` minus its constant part.
    fn null_linear(&self, w: &Vector, v: &Vector) -> f64 {
        let [_, u1, u2, _, _] = self.du;
        -(u2 * self.pair(w, &self.q.xb) * self.pair(v, &self.q.x) + u1 * self.pair(w, v))
    }

    /// `wbar = wbar0 + t delta` with zero Kim–McCann self-pairing of `(w, wbar)`.
    pub fn make_null_vector(&self, w: &Vector, wb0: &Vector, delta: &Vector) -> Result<Vector> {
        if w.norm() == 0.0 {
            return Err(Error::Validation("null vector needs w != 0".into()));
        }
        let j0 = self.null_linear(w, wb0);
        let scale0 = self.du[1].abs().max(self.du[2].abs()) * w.norm() * wb0.norm();
        if j0.abs() <= 1e-14 * scale0 {
            return Ok(wb0.clone());
        }
        let lin = self.null_linear(w, delta);
        let scale = self.du[1].abs() * w.norm() * delta.norm();
        if lin.abs() <= 1e-10 * scale {
            return Err(Error::cond("search direction gives no null solution; retry with another"));
        }
        let t = -j0 / lin;
        Ok(wb0 + delta * t)
    }

    /// Random null tangent at `q`, retrying search directions.
    pub fn random_null<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Tangent> {
        let n = self.q.x.len();
        let w = gaussian(rng, n);
        let wb0 = gaussian(rng, n);
        for _ in 0..16 {
            let delta = gaussian(rng, n);
            if let Ok(wb) = self.make_null_vector(&w, &wb0, &delta) {
                return Ok(Tangent::new(w, wb));
            }
        }
        Err(Error::cond("no null direction found"))
    }
}

/// Standard normal vector.
pub fn gaussian<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vector {
    Vector::from_fn(n, |_, _| rng.sample(StandardNormal))
}

/// `<R(a, b) c, d>` from a Christoffel function by finite differences of `Gamma` along `a`, `b`.
pub fn curvature_from_christoffel<G, P>(gamma: G, pairing: P, q: &Point, a: &Tangent, b: &Tangent, c: &Tangent, d: &Tangent, h: f64) -> Result<f64>
where
    G: Fn(&Point, &Tangent, &Tangent) -> Result<Tangent>,
    P: Fn(&Point, &Tangent, &Tangent) -> Result<f64>,
{
    let d_gamma = |dir: &Tangent, u: &Tangent, v: &Tangent| -> Result<Tangent> {
        let plus = gamma(&q.shifted(dir, h), u, v)?;
        let minus = gamma(&q.shifted(dir, -h), u, v)?;
        Ok(plus.sub(&minus).scale(0.5 / h))
    };
    let r = d_gamma(a, b, c)?
        .sub(&d_gamma(b, a, c)?)
        .add(&gamma(q, a, &gamma(q, b, c)?)?)
        .sub(&gamma(q, b, &gamma(q, a, c)?)?);
    pairing(q, &r, d)
}

/// Finite-difference cross-curvature `<R(w*0, 0wbar) 0wbar, w*0>`; a test oracle.
pub fn curvature_oracle(cost: &UCost, q: &Point, t: &Tangent, h_base: f64) -> Result<f64> {
    let qn = (q.x.norm_squared() + q.xb.norm_squared()).sqrt();
    let h = fd::step(h_base, qn)?;
    let a = t.first();
    let b = t.second();
    curvature_from_christoffel(
        |p, u, v| cost.at(p)?.christoffel(u, v),
        |p, u, v| Ok(cost.at(p)?.km_pairing(u, v)),
        q,
        &a,
        &b,
        &b,
        &a,
        h,
    )
}
