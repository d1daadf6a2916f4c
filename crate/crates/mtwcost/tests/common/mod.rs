#![allow(dead_code)]

use mtwcost::euclid::{BilinearForm, Point, Tangent, UCost, Vector};
use mtwcost::scalar::{Family, ScalarCost};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn uniform<R: Rng>(rng: &mut R, lo: f64, hi: f64) -> f64 {
    rng.random_range(lo..hi)
}

/// Bisection on a monotone function; independent of the library solver.
pub fn bisect<F: Fn(f64) -> f64>(f: F, mut a: f64, mut b: f64) -> f64 {
    let fa = f(a);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if (f(m) > 0.0) == (fa > 0.0) {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

pub fn random_gh<R: Rng>(rng: &mut R) -> Family {
    let p1 = uniform(rng, -1.5, 1.0);
    let p3 = p1 + uniform(rng, 0.2, 1.5);
    let sign = |r: &mut R| if r.random_bool(0.5) { 1.0 } else { -1.0 };
    Family::GeneralizedHyperbolic {
        p0: sign(rng) * uniform(rng, 0.3, 2.0),
        p1,
        p2: sign(rng) * uniform(rng, 0.3, 2.0),
        p3,
    }
}

pub fn random_lambert<R: Rng>(rng: &mut R) -> Family {
    let a1 = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * uniform(rng, 0.3, 2.0);
    let a2 = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * uniform(rng, 0.3, 1.5);
    Family::LambertType { a0: uniform(rng, -1.0, 1.0), a1, a2 }
}

pub fn random_exptrig<R: Rng>(rng: &mut R) -> Family {
    Family::ExpTrig {
        b0: uniform(rng, 0.3, 2.0),
        b1: uniform(rng, -1.0, 1.0),
        b2: uniform(rng, 0.3, 1.5),
        b3: uniform(rng, -1.0, 1.0),
    }
}

/// A `u` strictly inside the selected range, away from infinite ends.
pub fn interior_u<R: Rng>(rng: &mut R, c: &ScalarCost, span: f64) -> f64 {
    let r = c.range();
    let (lo, hi) = match (r.u_lo.is_finite(), r.u_hi.is_finite()) {
        (true, true) => (r.u_lo, r.u_hi),
        (true, false) => (r.u_lo, r.u_lo + span),
        (false, true) => (r.u_hi - span, r.u_hi),
        (false, false) => (-span / 2.0, span / 2.0),
    };
    let w = hi - lo;
    uniform(rng, lo + 0.05 * w, hi - 0.05 * w)
}

pub fn random_vec<R: Rng>(rng: &mut R, n: usize) -> Vector {
    mtwcost::euclid::gaussian(rng, n)
}

/// Random `q` in `R^n x R^n` with `x^T xbar = s(u)` for a random interior `u`.
pub fn point_with_u<R: Rng>(rng: &mut R, cost: &UCost, u: f64) -> Point {
    let n = cost.dim();
    let s = cost.scalar.eval_s(u, 0).unwrap();
    let x = random_vec(rng, n);
    let mut xb = random_vec(rng, n);
    let ax = cost.form.apply(&x);
    let k = (s - xb.dot(&ax)) / ax.norm_squared();
    xb += ax * k;
    Point::new(x, xb)
}

pub fn euclid_cost(f: Family, branch: i64, n: usize) -> UCost {
    UCost::new(ScalarCost::new(f, branch).unwrap(), BilinearForm::identity(n))
}

/// Definitional mixed pairing, Richardson-extrapolated, `-1/2 (D_{w1} Dbar_{wb2} c + Dbar_{wb1} D_{w2} c)` by differences of `c`.
pub fn km_pairing_fd(cost: &UCost, q: &Point, a: &Tangent, b: &Tangent, h: f64) -> f64 {
    let r1 = km_pairing_fd_once(cost, q, a, b, h);
    let r2 = km_pairing_fd_once(cost, q, a, b, h / 2.0);
    (4.0 * r2 - r1) / 3.0
}

fn km_pairing_fd_once(cost: &UCost, q: &Point, a: &Tangent, b: &Tangent, h: f64) -> f64 {
    let c = |x: &Vector, xb: &Vector| cost.cost(x, xb).unwrap();
    let mixed = |w: &Vector, wb: &Vector| {
        (c(&(&q.x + w * h), &(&q.xb + wb * h)) - c(&(&q.x + w * h), &(&q.xb - wb * h))
            - c(&(&q.x - w * h), &(&q.xb + wb * h))
            + c(&(&q.x - w * h), &(&q.xb - wb * h)))
            / (4.0 * h * h)
    };
    -0.5 * (mixed(&a.w, &b.wb) + mixed(&b.w, &a.wb))
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + b.abs())
}

/// A random cost on `R^n` from any family, and a point on its selected branch.
pub fn random_case<R: Rng>(rng: &mut R, n: usize) -> (UCost, Point) {
    loop {
        let f = match rng.random_range(0..7) {
            0 => random_gh(rng),
            1 => random_lambert(rng),
            2 => random_exptrig(rng),
            3 => Family::PowerSphere { alpha: uniform(rng, 2.0, 5.0) },
            4 => Family::SquareDistanceSphere,
            5 => Family::LogType { p0: -uniform(rng, 0.3, 2.0), p1: -uniform(rng, 0.3, 2.0), p2: 1.0 },
            _ => Family::Affine { a0: uniform(rng, -1.0, 1.0), a1: uniform(rng, -2.0, 2.0) },
        };
        let branch = match f.monotonic_ranges() {
            mtwcost::scalar::RangeSet::Finite(v) => rng.random_range(0..v.len()) as i64,
            _ => rng.random_range(-2..3),
        };
        let cost = euclid_cost(f, branch, n);
        let u = interior_u(rng, &cost.scalar, 4.0);
        let q = point_with_u(rng, &cost, u);
        let Ok(ctx) = cost.at(&q) else { continue };
        let [s0, s1, s2, _, _] = ctx.ds;
        // keep away from degenerate metrics so difference oracles stay accurate
        if s1.abs() < 0.05 * (s0.abs() + s2.abs()).max(1.0) || (s1 * s1 - s0 * s2).abs() < 0.05 * s1 * s1 {
            continue;
        }
        if ctx.du[1..].iter().any(|d| d.abs() > 100.0) {
            continue;
        }
        if q.x.norm() > 3.0 || q.xb.norm() > 3.0 {
            continue;
        }
        return (cost, q);
    }
}

use mtwcost::manifold::{ManifoldCost, ManifoldSpec};

/// Draw for a hyperboloid family with a regularity guarantee: `(family, branch, expect_strict)`.
pub fn hyperboloid_family<R: Rng>(rng: &mut R, which: usize) -> (Family, i64, bool) {
    match which {
        0 => {
            let p1 = -uniform(rng, 0.3, 2.0);
            let f = Family::GeneralizedHyperbolic {
                p0: -uniform(rng, 0.3, 2.0),
                p1,
                p2: uniform(rng, 0.3, 2.0),
                p3: uniform(rng, 0.0, -p1),
            };
            (f, 0, true)
        }
        1 => {
            let p1 = -uniform(rng, 0.8, 2.0);
            let p3 = uniform(rng, p1 + 0.2, -0.05);
            let f = Family::GeneralizedHyperbolic { p0: -uniform(rng, 0.3, 2.0), p1, p2: uniform(rng, 0.3, 2.0), p3 };
            (f, 0, true)
        }
        2 => {
            let f = Family::LambertType { a0: uniform(rng, -1.0, 1.0), a1: uniform(rng, 0.3, 2.0), a2: -uniform(rng, 0.3, 1.5) };
            (f, 0, true)
        }
        3 => (Family::Affine { a0: uniform(rng, -1.0, 1.0), a1: uniform(rng, 0.3, 2.0) }, 0, true),
        4 => (Family::LogType { p0: -uniform(rng, 0.3, 2.0), p1: -uniform(rng, 0.3, 2.0), p2: 1.0 }, 0, true),
        _ => {
            let p1 = if rng.random_bool(0.5) { 1.0 } else { -1.0 } * uniform(rng, 0.3, 2.0);
            (Family::LogType { p0: -uniform(rng, 0.3, 2.0), p1, p2: 0.0 }, 0, false)
        }
    }
}

/// Random sphere or hyperboloid cost with a point on its branch.
pub fn random_manifold_case<R: Rng>(rng: &mut R, dim: usize) -> (ManifoldCost, Point) {
    loop {
        let mc = if rng.random_bool(0.5) {
            let f = match rng.random_range(0..5) {
                0 => Family::PowerSphere { alpha: uniform(rng, 2.0, 5.0) },
                1 => Family::SquareDistanceSphere,
                2 => Family::LogType { p0: -uniform(rng, 0.3, 2.0), p1: -uniform(rng, 0.3, 2.0), p2: 1.0 },
                3 => random_gh(rng),
                _ => random_lambert(rng),
            };
            let nb = match f.monotonic_ranges() {
                mtwcost::scalar::RangeSet::Finite(v) => v.len(),
                _ => 1,
            };
            ManifoldCost::new(ManifoldSpec::sphere(dim), ScalarCost::new(f, rng.random_range(0..nb) as i64).unwrap())
        } else {
            let (f, b, _) = if rng.random_bool(0.8) {
                {
                let k = rng.random_range(0..6);
                hyperboloid_family(rng, k)
            }
            } else {
                (Family::PowerHyperbolic { beta: uniform(rng, 1.0, 2.0) }, 0, true)
            };
            ManifoldCost::new(ManifoldSpec::hyperboloid(dim), ScalarCost::new(f, b).unwrap())
        };
        let Ok(q) = mc.random_point(rng) else { continue };
        if q.x.norm() > 4.0 || q.xb.norm() > 4.0 {
            continue;
        }
        let ctx = mc.at(&q).unwrap();
        let [s, s1, s2, _, _] = ctx.ds;
        if ctx.du[1..].iter().any(|d| d.abs() > 100.0) || (1.0 - s * s).abs() < 1e-3 {
            continue;
        }
        let den = s * s1 * s1 - (s * s - 1.0) * s2;
        if den.abs() < 1e-2 * (s1 * s1) {
            continue;
        }
        return (mc, q);
    }
}

pub fn random_spd<R: Rng>(rng: &mut R, n: usize) -> nalgebra::DMatrix<f64> {
    let a = nalgebra::DMatrix::from_fn(n, n, |_, _| uniform(rng, -1.0, 1.0));
    &a * a.transpose() + nalgebra::DMatrix::identity(n, n) * 0.5
}
