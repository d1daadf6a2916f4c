//! Cross-curvature on the sphere and hyperboloid: projection, second fundamental form,
//! the coefficients `R1, R23, R4` and regularity verdicts.

use crate::error::{Error, Result};
use crate::euclid::{gaussian, BilinearForm, CostContext, Point, Tangent, UCost, Vector};
use crate::scalar::{Family, ScalarCost};
use rand::Rng;
use serde::{Deserialize, Serialize};

/// Threshold on `|1 - s^2|` below which the coincident-point formula is used.
/// Relative rounding allowance used for sign decisions.
const NOISE: f64 = 64.0 * f64::EPSILON;

pub const COINCIDENT: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ManifoldKind {
    Sphere,
    Hyperboloid,
    SemiSphere,
}

/// The level set `{x^t x = eps}` in `R^{n+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldSpec {
    pub kind: ManifoldKind,
    pub eps: f64,
    pub form: BilinearForm,
}

impl ManifoldSpec {
    /// Unit sphere in `R^{dim}`.
    pub fn sphere(dim: usize) -> Self {
        ManifoldSpec { kind: ManifoldKind::Sphere, eps: 1.0, form: BilinearForm::identity(dim) }
    }

    /// Upper sheet of `-x0^2 + |x'|^2 = -1` in `R^{dim}`.
    pub fn hyperboloid(dim: usize) -> Self {
        ManifoldSpec { kind: ManifoldKind::Hyperboloid, eps: -1.0, form: BilinearForm::minkowski(dim) }
    }

    /// General level set of a symmetric form.
    pub fn semi_sphere(form: BilinearForm, eps: f64) -> Result<Self> {
        if eps != 1.0 && eps != -1.0 {
            return Err(Error::Validation(format!("eps must be +-1, got {eps}")));
        }
        Ok(ManifoldSpec { kind: ManifoldKind::SemiSphere, eps, form })
    }

    pub fn dim(&self) -> usize {
        self.form.dim()
    }

    /// Checks `x^t x = eps` and, on the hyperboloid, `x0 > 0`.
    pub fn check_point(&self, x: &Vector) -> Result<()> {
        let v = self.form.pair(x, x);
        if (v - self.eps).abs() > 1e-9 * x.norm_squared().max(1.0) {
            return Err(Error::domain(format!("x^t x = {v}, expected {}", self.eps)));
        }
        if self.kind == ManifoldKind::Hyperboloid && x[0] <= 0.0 {
            return Err(Error::domain("hyperboloid point must have x0 > 0"));
        }
        Ok(())
    }

    /// Removes the normal component: `xi - eps (x^t xi) x`.
    pub fn tangent_part(&self, x: &Vector, xi: &Vector) -> Vector {
        xi - x * (self.eps * self.form.pair(x, xi))
    }

    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Vector {
        let n = self.dim();
        match self.kind {
            ManifoldKind::Hyperboloid => {
                let mut y = gaussian(rng, n);
                y[0] = 0.0;
                y[0] = (1.0 + y.norm_squared()).sqrt();
                y
            }
            _ => loop {
                let y = gaussian(rng, n);
                let v = self.form.pair(&y, &y);
                if v * self.eps > 1e-3 {
                    break y / (v * self.eps).sqrt();
                }
            },
        }
    }

    pub fn random_tangent<R: Rng + ?Sized>(&self, rng: &mut R, x: &Vector) -> Vector {
        self.tangent_part(x, &gaussian(rng, self.dim()))
    }

    /// A pair `(x, xbar)` with `x^t xbar = s` (sphere: `|s| <= 1`; hyperboloid: `s <= -1`).
    pub fn point_with_s(&self, s: f64) -> Result<Point> {
        let n = self.dim();
        if n < 2 {
            return Err(Error::Validation("ambient dimension must be at least 2".into()));
        }
        let mut x = Vector::zeros(n);
        let mut xb = Vector::zeros(n);
        x[0] = 1.0;
        match self.kind {
            ManifoldKind::Sphere => {
                if s.abs() > 1.0 {
                    return Err(Error::domain(format!("sphere needs |s| <= 1, got {s}")));
                }
                xb[0] = s;
                xb[1] = (1.0 - s * s).sqrt();
            }
            ManifoldKind::Hyperboloid => {
                if s > -1.0 {
                    return Err(Error::domain(format!("hyperboloid needs s <= -1, got {s}")));
                }
                let t = (-s).acosh();
                xb[0] = t.cosh();
                xb[1] = t.sinh();
            }
            ManifoldKind::SemiSphere => {
                return Err(Error::Capability("point_with_s needs a sphere or hyperboloid".into()))
            }
        }
        Ok(Point::new(x, xb))
    }
}

/// Cost restricted to a manifold product.
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldCost {
    pub spec: ManifoldSpec,
    pub cost: UCost,
}

/// `R1, R23, R4` and the common denominator `D`, with closed forms where known.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RCoefficients {
    pub s: f64,
    pub d: f64,
    pub r1: f64,
    pub r23: f64,
    pub r4: f64,
    /// Rounding-error bounds on `r1, r23, r4`; values inside them have no reliable sign.
    pub noise: [f64; 3],
    /// Specialized closed forms for the power and square-distance sphere costs.
    pub closed: Option<[f64; 3]>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    A3s,
    A3w,
    Fails,
}

/// One grid row of a regularity report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RegularityRow {
    pub s: f64,
    pub r1: f64,
    pub r23: f64,
    pub r4: f64,
    pub d: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegularityReport {
    pub verdict: Verdict,
    pub rows: Vec<RegularityRow>,
    /// First grid point (and sampled cross-curvature) contradicting A3w, if any.
    pub witness: Option<(f64, f64)>,
    /// Most negative sampled null cross-curvature.
    pub min_null_cross: f64,
}

fn is_log(f: &Family) -> Option<(f64, f64, f64)> {
    match *f {
        Family::LogType { p0, p1, p2 } => Some((p0, p1, p2)),
        _ => None,
    }
}

impl ManifoldCost {
    pub fn new(spec: ManifoldSpec, scalar: ScalarCost) -> Self {
        let cost = UCost::new(scalar, spec.form.clone());
        ManifoldCost { spec, cost }
    }

    fn eps(&self) -> f64 {
        self.spec.eps
    }

    /// Context at a point of the manifold product.
    pub fn at(&self, q: &Point) -> Result<CostContext<'_>> {
        self.spec.check_point(&q.x)?;
        self.spec.check_point(&q.xb)?;
        self.cost.at(q)
    }

    /// Context without the on-manifold check, for difference quotients.
    pub fn at_unchecked(&self, q: &Point) -> Result<CostContext<'_>> {
        self.cost.at(q)
    }

    fn pair(&self, a: &Vector, b: &Vector) -> f64 {
        self.spec.form.pair(a, b)
    }

    /// `s s1^2 - (s^2 - 1) s2`.
    pub fn proj_den(&self, ctx: &CostContext) -> Result<f64> {
        let [s, s1, s2, _, _] = ctx.ds;
        let one = one_minus_sq(s);
        let den = s * s1 * s1 + one * s2;
        if den.abs() <= 64.0 * f64::EPSILON * (s * s1 * s1).abs().max((one * s2).abs()) {
            return Err(Error::cond(format!("projection denominator {den:e} at s = {s}")));
        }
        Ok(den)
    }

    /// Normal directions `((s1^2 - s s2) xbar + eps s2 x, (s1^2 - s s2) x + eps s2 xbar) / den`.
    fn normals(&self, ctx: &CostContext) -> Result<(Vector, Vector)> {
        let den = self.proj_den(ctx)?;
        let [s, s1, s2, _, _] = ctx.ds;
        let k = s1 * s1 - s * s2;
        let e = self.eps();
        let nx = (&ctx.q.xb * k + &ctx.q.x * (e * s2)) / den;
        let nxb = (&ctx.q.x * k + &ctx.q.xb * (e * s2)) / den;
        Ok((nx, nxb))
    }

    /// Metric-compatible projection onto the tangent space of the product.
    pub fn project(&self, ctx: &CostContext, t: &Tangent) -> Result<Tangent> {
        let (nx, nxb) = self.normals(ctx)?;
        let w = &t.w - nx * self.pair(&ctx.q.x, &t.w);
        let wb = &t.wb - nxb * self.pair(&ctx.q.xb, &t.wb);
        Ok(Tangent::new(w, wb))
    }

    /// Directional derivative of the projection, `Pi'(q; xi) eta`, for tangent `eta`.
    pub fn project_derivative(&self, ctx: &CostContext, xi: &Tangent, eta: &Tangent) -> Result<Tangent> {
        let (nx, nxb) = self.normals(ctx)?;
        Ok(Tangent::new(nx * -self.pair(&xi.w, &eta.w), nxb * -self.pair(&xi.wb, &eta.wb)))
    }

    /// Second fundamental form `II(xi*0, xi*0)` in closed form (its second slot is zero).
    pub fn second_fundamental_first(&self, ctx: &CostContext, xi: &Vector) -> Result<Tangent> {
        let den = self.proj_den(ctx)?;
        let [s, s1, s2, s3, _] = ctx.ds;
        let k = s1 * s1 - s * s2;
        let e = self.eps();
        let sx = self.pair(&ctx.q.xb, xi);
        let coef = if is_log(self.cost.scalar.family()).is_some() {
            -self.pair(xi, xi) / den
        } else {
            (e * (s2 * s2 - s3 * s1) * sx * sx - k * s1 * s1 * self.pair(xi, xi)) / (k * s1 * s1 * den)
        };
        let n = &ctx.q.xb * k + &ctx.q.x * (e * s2);
        Ok(Tangent::new(n * coef, Vector::zeros(xi.len())))
    }

    /// Contribution `<II(xi*0, xi*0), II(0xibar, 0xibar)>` of the second fundamental form.
    pub fn second_fundamental_contribution(&self, ctx: &CostContext, t: &Tangent) -> Result<f64> {
        let [s, s1, s2, s3, _] = ctx.ds;
        let e = self.eps();
        let k = s1 * s1 - s * s2;
        let pden = -s * s1 * s1 - one_minus_sq(s) * s2;
        self.proj_den(ctx)?;
        let (xx, bb) = (self.pair(&t.w, &t.w), self.pair(&t.wb, &t.wb));
        if is_log(self.cost.scalar.family()).is_some() {
            // s2^2 - s3 s1 vanishes identically; cancel the common factor
            return Ok(k * s1.powi(4) * xx * bb / (2.0 * s1.powi(5) * pden));
        }
        let sx = self.pair(&ctx.q.xb, &t.w);
        let sxb = self.pair(&ctx.q.x, &t.wb);
        let a = -k * s1 * s1 * xx + e * (s2 * s2 - s3 * s1) * sx * sx;
        let b = -k * s1 * s1 * bb + e * (s2 * s2 - s3 * s1) * sxb * sxb;
        if k.abs() <= 1e-14 * (s1 * s1).max((s * s2).abs()) {
            return Err(Error::cond(format!("s1^2 - s s2 = {k:e}")));
        }
        Ok(a * b / (2.0 * s1.powi(5) * k * pden))
    }

    /// Ambient cross-curvature; the log family uses its cancelled form so `p2 = 0` is allowed.
    pub fn ambient_cross(&self, ctx: &CostContext, t: &Tangent) -> Result<f64> {
        if is_log(self.cost.scalar.family()).is_some() {
            let [_, s1, s2, _, _] = ctx.ds;
            let j = ctx.km_pairing(t, t);
            return Ok(s2 / s1 * j * j);
        }
        ctx.cross_curvature_closed(t)
    }

    /// Gauss–Codazzi form: ambient cross-curvature plus the second fundamental form term.
    pub fn cross_gauss_codazzi(&self, ctx: &CostContext, t: &Tangent) -> Result<f64> {
        Ok(self.ambient_cross(ctx, t)? + self.second_fundamental_contribution(ctx, t)?)
    }

    /// Cross-curvature on the manifold product through `R1, R23, R4`.
    pub fn cross_curvature_manifold(&self, ctx: &CostContext, t: &Tangent) -> Result<f64> {
        let [s, s1, s2, s3, _] = ctx.ds;
        let e = self.eps();
        let j = ctx.km_pairing(t, t);
        let sx = self.pair(&ctx.q.xb, &t.w);
        let sxb = self.pair(&ctx.q.x, &t.wb);
        let (xx, bb) = (self.pair(&t.w, &t.w), self.pair(&t.wb, &t.wb));
        let nj = -2.0 * (s1 * s3 - s2 * s2) / s1.powi(4) * sxb * sx * j + s2 / s1 * j * j;
        let one = one_minus_sq(s);
        if one.abs() <= COINCIDENT {
            return Ok(-0.5 * (s1 * s1 - s * s2) * xx * bb / (s * s1.powi(3)) + s2 / s1 * j * j);
        }
        let r = self.r_from_derivatives(&ctx.ds, ctx.u)?;
        let px = xx - e * sx * sx / one;
        let pxb = bb - e * sxb * sxb / one;
        Ok(0.5
            * (r.r1 / (one * one) * sx * sx * sxb * sxb
                + e * r.r23 / one * (pxb * sx * sx + sxb * sxb * px)
                + r.r4 * px * pxb)
            + nj)
    }

    /// Perpendicular residuals `S_xi_perp^2`, `S_xibar_perp^2`.
    pub fn perp_residuals(&self, ctx: &CostContext, t: &Tangent) -> (f64, f64) {
        let s = ctx.s();
        let e = self.eps();
        let sx = self.pair(&ctx.q.xb, &t.w);
        let sxb = self.pair(&ctx.q.x, &t.wb);
        let one = one_minus_sq(s);
        (self.pair(&t.w, &t.w) - e * sx * sx / one, self.pair(&t.wb, &t.wb) - e * sxb * sxb / one)
    }

    fn r_from_derivatives(&self, ds: &[f64; 5], u: f64) -> Result<RCoefficients> {
        let [s, s1, s2, s3, s4] = *ds;
        if let Some((_, p1, p2)) = is_log(self.cost.scalar.family()) {
            let e = s - p2;
            let r = -p2 / (p1 * e * (p2 * s - 1.0));
            let d = -p2 * p1.powi(9) * e.powi(7) * (p2 * s - 1.0);
            let noise = [NOISE * r.abs(); 3];
            return Ok(RCoefficients { s, d, r1: r, r23: r, r4: r, noise, closed: None });
        }
        let one = one_minus_sq(s);
        // k = s1^2 - s s2 and w = s2^2 - s1 s3, exact where the family has them in closed form;
        // the fourth-order expression is then identically zero
        let closed = self.cost.scalar.classify_ode().zip(self.cost.scalar.wronskian(u));
        let (k, k_err, w, w_err, ode, ode_err) = match closed {
            Some((c, k)) => (k, NOISE * k.abs(), c.p * k, NOISE * (c.p * k).abs(), 0.0, 0.0),
            None => {
                let terms = [(s1 * s1 - s * s2) * s4, s * s3 * s3, -2.0 * s1 * s2 * s3, s2.powi(3)];
                (
                    s1 * s1 - s * s2,
                    NOISE * (s1 * s1).max((s * s2).abs()),
                    s2 * s2 - s1 * s3,
                    NOISE * (s2 * s2).max((s1 * s3).abs()),
                    terms.iter().sum::<f64>(),
                    NOISE * terms.iter().map(|t| t.abs()).sum::<f64>(),
                )
            }
        };
        let f = -s * s1 * s1 - s2 * one;
        let d = f * k * s1.powi(5);
        // both factors must survive their own cancellation
        if f.abs() <= NOISE * (s * s1 * s1).abs().max((s2 * one).abs()) || k.abs() <= k_err || d == 0.0 {
            return Err(Error::cond(format!("D = {d:e} at s = {s}")));
        }
        let m = s1 * s1 * k - w * one;
        let m_err = NOISE * (s1 * s1 * k).abs().max((w * one).abs()) + s1 * s1 * k_err + w_err * one.abs();
        let r1 = (ode * f * one * one + m * m) / d;
        let r23 = m * s1 * s1 * k / d;
        let r4 = s1.powi(4) * k * k / d;
        let noise = [
            (ode_err * (f * one * one).abs() + 2.0 * m.abs() * m_err + m_err * m_err) / d.abs(),
            (m_err * s1 * s1 * k / d).abs(),
            NOISE * r4.abs(),
        ];
        Ok(RCoefficients { s, d, r1, r23, r4, noise, closed: None })
    }

    /// `R1, R23, R4, D` at `s` from the general derivative formulas.
    pub fn r_coefficients(&self, s: f64) -> Result<RCoefficients> {
        let u = self.cost.scalar.eval_u(s)?;
        let mut ds = self.cost.scalar.derivatives(u)?;
        ds[0] = s;
        let mut r = self.r_from_derivatives(&ds, u)?;
        r.closed = match *self.cost.scalar.family() {
            Family::PowerSphere { alpha } => Some(power_sphere_closed(alpha, s)),
            Family::SquareDistanceSphere => Some(square_distance_closed(s.clamp(-1.0, 1.0).acos())),
            _ => None,
        };
        Ok(r)
    }

    /// Sign pattern of the coefficients over `s_grid`, cross-checked on `samples` random null
    /// tangents per grid point.
    pub fn classify_regularity<R: Rng + ?Sized>(&self, s_grid: &[f64], samples: usize, rng: &mut R) -> Result<RegularityReport> {
        if self.spec.dim() < 3 {
            return Err(Error::Validation("coefficient criterion needs n >= 2".into()));
        }
        let mut rows = Vec::with_capacity(s_grid.len());
        let mut witness = None;
        let mut min_cross = f64::INFINITY;
        let mut overall = Verdict::A3s;
        for &s in s_grid {
            let r = self.r_coefficients(s)?;
            let vals = [r.r1, r.r23, r.r4];
            let scale = vals.iter().fold(0f64, |m, v| m.max(v.abs())).max(f64::MIN_POSITIVE);
            let verdict = if vals.iter().zip(r.noise).all(|(v, e)| *v > e) {
                Verdict::A3s
            } else if vals.iter().zip(r.noise).all(|(v, e)| *v >= -e) {
                Verdict::A3w
            } else {
                Verdict::Fails
            };
            let q = self.spec.point_with_s(s)?;
            let ctx = self.at(&q)?;
            for _ in 0..samples {
                let t = self.random_null_tangent(&ctx, rng)?;
                let t = t.scale(1.0 / t.norm());
                let c = self.cross_curvature_manifold(&ctx, &t)?;
                let cscale = scale.max(1.0);
                min_cross = min_cross.min(c / cscale);
                if verdict != Verdict::Fails && c < -1e-9 * cscale && witness.is_none() {
                    witness = Some((s, c));
                }
            }
            if verdict == Verdict::Fails && witness.is_none() {
                witness = Some((s, vals.iter().copied().fold(f64::INFINITY, f64::min)));
            }
            overall = match (overall, verdict) {
                (_, Verdict::Fails) | (Verdict::Fails, _) => Verdict::Fails,
                (Verdict::A3w, _) | (_, Verdict::A3w) => Verdict::A3w,
                _ => Verdict::A3s,
            };
            rows.push(RegularityRow { s, r1: r.r1, r23: r.r23, r4: r.r4, d: r.d, verdict });
        }
        if witness.is_some() {
            overall = Verdict::Fails;
        }
        Ok(RegularityReport { verdict: overall, rows, witness, min_null_cross: min_cross })
    }

    /// Random tangent `(xi, xibar)` with zero Kim–McCann self-pairing.
    pub fn random_null_tangent<R: Rng + ?Sized>(&self, ctx: &CostContext, rng: &mut R) -> Result<Tangent> {
        let w = self.spec.random_tangent(rng, &ctx.q.x);
        let wb0 = self.spec.random_tangent(rng, &ctx.q.xb);
        for _ in 0..16 {
            let delta = self.spec.random_tangent(rng, &ctx.q.xb);
            if let Ok(wb) = ctx.make_null_vector(&w, &wb0, &delta) {
                return Ok(Tangent::new(w, wb));
            }
        }
        Err(Error::cond("no tangent null direction found"))
    }

    /// Random tangent at `q`.
    pub fn random_tangent<R: Rng + ?Sized>(&self, q: &Point, rng: &mut R) -> Tangent {
        Tangent::new(self.spec.random_tangent(rng, &q.x), self.spec.random_tangent(rng, &q.xb))
    }

    /// Random point of the product with `s` on the selected branch.
    pub fn random_point<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Point> {
        for _ in 0..1000 {
            let q = Point::new(self.spec.random_point(rng), self.spec.random_point(rng));
            if self.at(&q).is_ok() {
                return Ok(q);
            }
        }
        Err(Error::Range("no sampled point lies on the selected branch".into()))
    }
}

/// Closed-form `R1, R23, R4` for `s = (-u)^alpha - 1` on the sphere.
pub fn power_sphere_closed(a: f64, s: f64) -> [f64; 3] {
    let t = s + 1.0;
    let root = t.powf(1.0 / a);
    let den = t * t * (s + a - 1.0);
    // the cubic in s, expanded about s = -1 (it has a double root there when alpha = 2)
    let f0 = -2.0 * (a - 1.0) * t.powi(3) + (a - 1.0) * (a * a - 3.0 * a + 12.0) * t * t
        - (a - 2.0) * (a * a - 12.0 * a + 12.0) * t
        + (a - 2.0).powi(2) * (a - 1.0) * (a + 4.0);
    [
        root * f0 / (a.powi(4) * den),
        root * ((2.0 * a - 1.0) * s + a * a - a + 1.0) / (a * a * den),
        (s + a) * root / (a * den),
    ]
}

/// Closed-form `R1, R23, R4` for the squared Riemannian distance at angle `w`.
pub fn square_distance_closed(w: f64) -> [f64; 3] {
    if w < 0.2 {
        // the trigonometric forms cancel to O(w^4) here
        let z = w * w;
        let poly = |c: [f64; 6]| c.iter().rev().fold(0.0, |acc, ci| acc * z + ci);
        return [
            poly([2.0 / 3.0, 2.0 / 9.0, 4.0 / 105.0, 26.0 / 4725.0, 68.0 / 93555.0, 2764.0 / 30405375.0]),
            poly([2.0 / 3.0, 4.0 / 15.0, 4.0 / 63.0, 8.0 / 675.0, 4.0 / 2079.0, 5528.0 / 19348875.0]),
            poly([2.0 / 3.0, 14.0 / 45.0, 82.0 / 945.0, 268.0 / 14175.0, 554.0 / 155925.0, 77188.0 / 127702575.0]),
        ];
    }
    let (sn, cs) = w.sin_cos();
    let (s2w, c2w) = (2.0 * w).sin_cos();
    [
        (4.0 * w * w + w * s2w - 3.0 + 3.0 * c2w) / (w * w * sn * sn),
        2.0 * (sn - w * cs) / sn.powi(3),
        w * (2.0 * w - s2w) / (2.0 * sn.powi(4)),
    ]
}

/// Geometric grid on `[lo, hi]` clustered toward `toward` (one of the ends).
pub fn geometric_grid(lo: f64, hi: f64, toward: f64, margin: f64, count: usize) -> Vec<f64> {
    let (near, far) = if (toward - lo).abs() <= (toward - hi).abs() { (lo, hi) } else { (hi, lo) };
    let dir = (far - near).signum();
    let span = (far - near).abs();
    let first = margin.max(f64::MIN_POSITIVE);
    if count < 2 {
        return vec![near + dir * first];
    }
    let ratio = (span / first).ln() / (count - 1) as f64;
    (0..count).map(|i| near + dir * first * (ratio * i as f64).exp()).collect()
}

/// `1 - s^2` without the cancellation of `1 - s * s` near `|s| = 1`.
fn one_minus_sq(s: f64) -> f64 {
    (1.0 - s) * (1.0 + s)
}
