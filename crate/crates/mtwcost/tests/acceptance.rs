//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit on any failure.
//! Set `MTWCOST_EXTENDED=1` to also report the larger table entries, and
//! `MTWCOST_ONLY=1,7` to run a subset of criteria.

mod common;

use common::*;
use mtwcost::divergence::*;
use mtwcost::euclid::{curvature_oracle, Nondegeneracy, UCost, Vector};
use mtwcost::fd;
use mtwcost::manifold::{geometric_grid, power_sphere_closed, square_distance_closed, ManifoldCost, ManifoldSpec, Verdict};
use mtwcost::sampler::{box_probability, EstimateResult, MirrorConfig, MvtSpec};
use mtwcost::scalar::{Family, ScalarCost};
use mtwcost::transport::*;
use nalgebra::DMatrix;
use rand::Rng;
use std::f64::consts::PI;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::process::ExitCode;
use std::time::Instant;

type Outcome = Result<String, String>;

fn check(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn e(n: usize, i: usize) -> Vector {
    let mut v = Vector::zeros(n);
    v[i] = 1.0;
    v
}

/// A random point of `cost` away from degenerate metrics and steep inverse derivatives.
fn usable_point<R: Rng>(r: &mut R, cost: &UCost, tries: usize) -> Option<mtwcost::euclid::Point> {
    for _ in 0..tries {
        let u = interior_u(r, &cost.scalar, 4.0);
        let q = point_with_u(r, cost, u);
        if q.x.norm() > 3.0 || q.xb.norm() > 3.0 {
            continue;
        }
        let Ok(ctx) = cost.at(&q) else { continue };
        if ctx.check_nondegenerate() == Nondegeneracy::Ok && ctx.du[1..].iter().all(|d| d.abs() <= 100.0) {
            return Some(q);
        }
    }
    None
}

fn c1_zero_mtw() -> Outcome {
    let mut r = rng(1001);
    let (mut worst_closed, mut worst_oracle) = (0f64, 0f64);
    for fam in 0..3 {
        for _ in 0..20 {
            // parameterizations whose selected branch has no well-conditioned points are redrawn
            let (cost, picked) = loop {
                let f = match fam {
                    0 => random_gh(&mut r),
                    1 => random_lambert(&mut r),
                    _ => random_exptrig(&mut r),
                };
                let cost = euclid_cost(f, 0, 3);
                if usable_point(&mut r, &cost, 200).is_some() {
                    break (cost, f);
                }
            };
            for _ in 0..50 {
                let q = usable_point(&mut r, &cost, 100_000).ok_or_else(|| format!("{picked:?}: no usable points"))?;
                let ctx = cost.at(&q).map_err(|e| e.to_string())?;
                let t = ctx.random_null(&mut r).map_err(|e| e.to_string())?;
                let t = t.scale(1.0 / t.norm());
                let closed = ctx.cross_curvature_closed(&t).map_err(|e| e.to_string())?;
                let oracle = curvature_oracle(&cost, &q, &t, fd::STEP).map_err(|e| e.to_string())?;
                worst_closed = worst_closed.max(closed.abs());
                worst_oracle = worst_oracle.max(oracle.abs());
                check(closed.abs() <= 1e-9, || format!("{picked:?}: closed cross {closed:e}"))?;
                check(oracle.abs() <= 1e-4, || format!("{picked:?}: oracle {oracle:e}"))?;
            }
        }
    }
    Ok(format!("max |closed| {worst_closed:.1e}, max |oracle| {worst_oracle:.1e}"))
}

fn c2_ode_classification() -> Outcome {
    let mut r = rng(1002);
    let mut worst = 0f64;
    for fam in 0..3 {
        for _ in 0..20 {
            let f = match fam {
                0 => random_gh(&mut r),
                1 => random_lambert(&mut r),
                _ => random_exptrig(&mut r),
            };
            let c = ScalarCost::new(f, 0).map_err(|e| e.to_string())?;
            let cl = c.classify_ode().ok_or("no classification")?;
            let sign_ok = match fam {
                0 => cl.delta > 0.0,
                1 => cl.delta == 0.0,
                _ => cl.delta < 0.0,
            };
            check(sign_ok, || format!("{f:?}: delta {}", cl.delta))?;
            let (mut smin, mut smax, mut pmin, mut pmax) = (f64::MAX, f64::MIN, f64::MAX, f64::MIN);
            for _ in 0..100 {
                let u = interior_u(&mut r, &c, 6.0);
                let pw = c.ode_pointwise(u).map_err(|e| e.to_string())?;
                smin = smin.min(pw.s);
                smax = smax.max(pw.s);
                pmin = pmin.min(pw.p);
                pmax = pmax.max(pw.p);
            }
            let var = (smax - smin).max(pmax - pmin);
            worst = worst.max(var);
            check(var <= 1e-10, || format!("{f:?}: pointwise variation {var:e}"))?;
        }
    }
    Ok(format!("max variation {worst:.1e}"))
}

fn c3_hyperboloid_regularity() -> Outcome {
    let mut r = rng(1003);
    let grid = geometric_grid(-1e4, -1.0 - 1e-6, -1.0, 1e-6, 200);
    let mut count = 0;
    for kind in 0..6 {
        for _ in 0..5 {
            let (f, b, strict) = hyperboloid_family(&mut r, kind);
            let mc = ManifoldCost::new(ManifoldSpec::hyperboloid(4), ScalarCost::new(f, b).map_err(|e| e.to_string())?);
            let rep = mc.classify_regularity(&grid, 32, &mut r).map_err(|e| format!("{f:?}: {e}"))?;
            let want = if strict { Verdict::A3s } else { Verdict::A3w };
            check(rep.verdict == want, || format!("{f:?}: {:?}, witness {:?}", rep.verdict, rep.witness))?;
            count += 1;
        }
    }
    Ok(format!("{count} draws over {} grid points", grid.len()))
}

fn c4_power_sphere() -> Outcome {
    let mut worst = 0f64;
    for alpha in [2.0, 2.5, 3.0, 5.0] {
        let mc = ManifoldCost::new(ManifoldSpec::sphere(4), ScalarCost::new(Family::PowerSphere { alpha }, 0).unwrap());
        for s in geometric_grid(-1.0, 1.0, -1.0, 1e-4, 2000) {
            let rc = mc.r_coefficients(s).map_err(|e| e.to_string())?;
            let closed = rc.closed.ok_or("no closed form")?;
            for (g, w) in [rc.r1, rc.r23, rc.r4].iter().zip(closed) {
                let err = (g - w).abs() / w.abs().max(1.0);
                worst = worst.max(err);
                check(err <= 1e-9, || format!("alpha {alpha} s {s}: {g} vs {w}"))?;
                check(w > 0.0 && *g > 0.0, || format!("alpha {alpha} s {s}: nonpositive coefficient"))?;
            }
        }
    }
    // the approach to the antenna limit is not uniform: the gap grows like |1 + ln(1 + s)| / alpha,
    // so the bound is asserted at fixed s away from -1 and the full-range gap is reported
    let alpha = 1e3;
    let (mut worst_ratio, mut full_ratio) = (0f64, 0f64);
    for s in geometric_grid(-1.0, 1.0, -1.0, 1e-4, 2000) {
        let target = (s + 1.0).powi(-2);
        for v in power_sphere_closed(alpha, s) {
            let rel = (alpha * v / target - 1.0).abs();
            full_ratio = full_ratio.max(rel);
            if s >= -0.5 {
                worst_ratio = worst_ratio.max(rel);
                check(rel <= 2e-3, || format!("antenna limit at s {s}: relative {rel:e}"))?;
            }
        }
    }
    Ok(format!(
        "max closed-form error {worst:.1e}, antenna relative {worst_ratio:.1e} on [-0.5, 1] ({full_ratio:.1e} down to s = -1 + 1e-4)"
    ))
}

fn c5_square_distance() -> Outcome {
    let mc = ManifoldCost::new(ManifoldSpec::sphere(4), ScalarCost::new(Family::SquareDistanceSphere, 0).unwrap());
    let mut worst = 0f64;
    for i in 0..=5000 {
        let w = 1e-3 + (PI - 2e-3) * i as f64 / 5000.0;
        let rc = mc.r_coefficients(w.cos()).map_err(|e| e.to_string())?;
        for (g, want) in [rc.r1, rc.r23, rc.r4].iter().zip(square_distance_closed(w)) {
            let err = (g - want).abs() / want.abs().max(1.0);
            worst = worst.max(err);
            check(err <= 1e-8, || format!("w {w}: {g} vs {want}"))?;
        }
    }
    Ok(format!("max error {worst:.1e}"))
}

fn c6_gauss_codazzi() -> Outcome {
    let mut r = rng(1006);
    let mut worst = 0f64;
    for _ in 0..300 {
        let (mc, q) = random_manifold_case(&mut r, 4);
        let ctx = mc.at(&q).map_err(|e| e.to_string())?;
        let t = mc.random_tangent(&q, &mut r);
        let gc = mc.cross_gauss_codazzi(&ctx, &t).map_err(|e| e.to_string())?;
        let rf = mc.cross_curvature_manifold(&ctx, &t).map_err(|e| e.to_string())?;
        let err = (gc - rf).abs() / (1.0 + gc.abs());
        worst = worst.max(err);
        check(err <= 1e-8, || format!("{:?}: {gc} vs {rf}", mc.cost.scalar.family()))?;
    }
    Ok(format!("max relative gap {worst:.1e}"))
}

fn inside_ball<R: Rng>(rng: &mut R, c: &DMatrix<f64>, r: f64, frac: f64) -> Vector {
    let v = random_vec(rng, c.nrows());
    let q = v.dot(&(c * &v));
    v * (uniform(rng, 0.0, frac) / (r * q).sqrt())
}

fn grid_sup<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, count: usize) -> f64 {
    (0..=count).map(|i| f(lo + (hi - lo) * i as f64 / count as f64)).fold(f64::NEG_INFINITY, f64::max)
}

fn c7_duality() -> Outcome {
    let mut r = rng(1007);
    let err = |e: mtwcost::Error| e.to_string();
    let (mut crz, mut inv, mut env_min, mut quad) = (0f64, 0f64, f64::INFINITY, 0f64);
    for _ in 0..100 {
        let n = r.random_range(1..5);
        let sc = SinhCost::new(uniform(&mut r, 0.2, 1.5), uniform(&mut r, 0.3, 2.0), -uniform(&mut r, 0.3, 2.0)).unwrap();
        let cost = sc.ucost(n);
        let phi = Quadratic::new(random_spd(&mut r, n)).unwrap();
        let ctx = DivergenceContext::new(&cost, &phi).map_err(err)?;
        let x = inside_ball(&mut r, phi.matrix(), sc.r, 0.95);
        let xb = optimal_map(&phi, &cost, &x).map_err(err)?;
        let grad_conj = |y: &Vector| -> mtwcost::Result<Vector> {
            let c = conjugate_homogeneous(&phi, &sc, y)?;
            Ok(&c.x_opt * (-sc.u1(c.x_opt.dot(y))))
        };
        let hess_psi = fd::jacobian(grad_conj, &xb, 1e-6).map_err(err)?;
        let hcbar = conjugate_c_hessian_from(&ctx, &x, &hess_psi).map_err(err)?;
        let prod = crouzeix_product(&ctx, &x, &hcbar).map_err(err)?;
        crz = crz.max((prod - DMatrix::identity(n, n)).amax());
        let back = conjugate_homogeneous(&phi, &sc, &xb).map_err(err)?.x_opt;
        inv = inv.max((back - &x).norm() / x.norm().max(1.0));
        let xbar = random_vec(&mut r, n) * uniform(&mut r, 0.01, 10.0);
        let got = conjugate_homogeneous(&phi, &sc, &xbar).map_err(err)?.value;
        let want = quadratic_conjugate_closed(&phi, &sc, &xbar);
        quad = quad.max((got - want).abs() / want.abs().max(1.0));
    }
    check(crz <= 1e-7, || format!("Crouzeix residual {crz:e}"))?;
    check(inv <= 1e-7, || format!("T o T^-1 residual {inv:e}"))?;
    check(quad <= 1e-9, || format!("quadratic conjugate gap {quad:e}"))?;
    for _ in 0..10_000 {
        let n = r.random_range(1..5);
        let sc = SinhCost::new(uniform(&mut r, 0.1, 2.0), uniform(&mut r, 0.2, 2.0), -uniform(&mut r, 0.2, 2.0)).unwrap();
        let phi: Box<dyn Potential> = if r.random_bool(0.5) {
            Box::new(Quadratic::new(random_spd(&mut r, n)).unwrap())
        } else {
            Box::new(PowerSum::new(uniform(&mut r, 1.3, 4.0), n).unwrap())
        };
        let y = random_vec(&mut r, n) * uniform(&mut r, 0.0, 3.0);
        let xb = random_vec(&mut r, n) * uniform(&mut r, 0.01, 5.0);
        let v = sc.u(y.dot(&xb)) + phi.value(&y) + conjugate_homogeneous(phi.as_ref(), &sc, &xb).map_err(err)?.value;
        env_min = env_min.min(v);
    }
    check(env_min >= -1e-10, || format!("envelope minimum {env_min:e}"))?;
    let mut grid_gap = 0f64;
    let alpha = 1.8;
    let phi = PowerSum::new(alpha, 1).unwrap();
    for rr in [0.1, 0.5, 2.0] {
        let sc = SinhCost::canonical(rr).unwrap();
        let b = (rr * alpha).powf(-1.0 / alpha);
        for xb in [-3.0, -0.7, 0.05, 0.4, 1.3, 5.0] {
            let got = conjugate_homogeneous(&phi, &sc, &Vector::from_element(1, xb)).map_err(err)?.value;
            let sup = grid_sup(|x| -sc.u(x * xb) - x.abs().powf(alpha), -b, b, 100_000);
            grid_gap = grid_gap.max((got - sup).abs());
        }
    }
    let sc = SinhCost::canonical(0.5).unwrap();
    let conj = |xb: f64| conjugate_homogeneous(&phi, &sc, &Vector::from_element(1, xb)).unwrap().value;
    for x in [0.1f64, 0.5, 0.8, -0.9] {
        let want = double_conjugate(&phi, &sc, &Vector::from_element(1, x)).map_err(err)?;
        let sup = grid_sup(|xb| -sc.u(x * xb) - conj(xb), -30.0, 30.0, 20_000);
        grid_gap = grid_gap.max((want - sup).abs());
    }
    check(grid_gap <= 1e-3, || format!("grid supremum gap {grid_gap:e}"))?;
    Ok(format!(
        "Crouzeix {crz:.1e}, inverse {inv:.1e}, envelope min {env_min:.1e}, quadratic {quad:.1e}, grid {grid_gap:.1e}"
    ))
}

/// Point with `r x^t grad phi(x) = frac` along a random direction.
fn at_level<R: Rng>(rng: &mut R, phi: &dyn Potential, r: f64, frac: f64) -> Vector {
    let v = random_vec(rng, phi.dim());
    let a = phi.homogeneity().unwrap();
    let m = v.dot(&phi.gradient(&v));
    v * (frac / (r * m)).powf(1.0 / a)
}

/// `d^3/ds dt du D(x + s a + t b, x + u c)` (`second = false`) or `D(x + u c, x + s a + t b)` (`second = true`),
/// Richardson-extrapolated over `h` and `h/2`.
fn third_fd(ctx: &DivergenceContext, x: &Vector, a: &Vector, b: &Vector, c: &Vector, second: bool, h: f64) -> f64 {
    (4.0 * third_fd_once(ctx, x, a, b, c, second, h / 2.0) - third_fd_once(ctx, x, a, b, c, second, h)) / 3.0
}

fn third_fd_once(ctx: &DivergenceContext, x: &Vector, a: &Vector, b: &Vector, c: &Vector, second: bool, h: f64) -> f64 {
    let mut acc = 0.0;
    for (s, t, u) in [(1., 1., 1.), (1., 1., -1.), (1., -1., 1.), (1., -1., -1.), (-1., 1., 1.), (-1., 1., -1.), (-1., -1., 1.), (-1., -1., -1.)] {
        let p = x + a * (s * h) + b * (t * h);
        let q = x + c * (u * h);
        let v = if second { c_divergence_general(ctx, &q, &p) } else { c_divergence_general(ctx, &p, &q) };
        acc += s * t * u * v.unwrap();
    }
    acc / (8.0 * h * h * h)
}

/// Connection from third derivatives of the divergence: `g^{-1} (-D_a D_b D'_k D)` or its mirror.
fn connection_fd(ctx: &DivergenceContext, x: &Vector, a: &Vector, b: &Vector, dual: bool) -> Vector {
    let n = x.len();
    let v = Vector::from_fn(n, |k, _| -third_fd(ctx, x, a, b, &e(n, k), dual, 1e-3));
    let g = divergence_metric(ctx, x).unwrap().matrix();
    g.lu().solve(&v).unwrap()
}

fn c8_dualistic() -> Outcome {
    let mut r = rng(1008);
    let err = |e: mtwcost::Error| e.to_string();
    let (mut gm, mut g1, mut gd, mut ac, mut sym) = (0f64, 0f64, 0f64, 0f64, 0f64);
    for _ in 0..40 {
        let n = r.random_range(1..4);
        let sc = SinhCost::new(uniform(&mut r, 0.2, 1.5), uniform(&mut r, 0.3, 2.0), -uniform(&mut r, 0.3, 2.0)).unwrap();
        let cost = sc.ucost(n);
        let pots: Vec<Box<dyn Potential>> =
            vec![Box::new(Quadratic::new(random_spd(&mut r, n)).unwrap()), Box::new(PowerSum::new(uniform(&mut r, 1.5, 4.0), n).unwrap())];
        for phi in pots {
            let ctx = DivergenceContext::new(&cost, phi.as_ref()).map_err(err)?;
            let frac = uniform(&mut r, 0.05, 0.8);
            let x = at_level(&mut r, phi.as_ref(), sc.r, frac);
            let (a, b, c) = (random_vec(&mut r, n), random_vec(&mut r, n), random_vec(&mut r, n));
            let data = DualisticData::new(&ctx, &x).map_err(err)?;
            let want = -fd::d2(|s, t| c_divergence_general(&ctx, &(&x + &a * s), &(&x + &b * t)), 1e-4).map_err(err)?;
            let got = a.dot(&data.metric.apply(&b));
            gm = gm.max((got - want).abs() / (1.0 + want.abs()));
            let p = data.gamma1(&a, &b).map_err(err)?;
            let po = connection_fd(&ctx, &x, &a, &b, false);
            g1 = g1.max((&p - &po).norm() / (1.0 + po.norm()));
            let d = data.gamma_minus1(&a, &b).map_err(err)?;
            let dor = connection_fd(&ctx, &x, &a, &b, true);
            gd = gd.max((&d - &dor).norm() / (1.0 + dor.norm()));
            let t = data.ac_tensor(&a, &b, &c).map_err(err)?;
            let to = -third_fd(&ctx, &x, &a, &b, &c, true, 1e-3) + third_fd(&ctx, &x, &a, &b, &c, false, 1e-3);
            ac = ac.max((t - to).abs() / (1.0 + to.abs()));
            let v = [&a, &b, &c];
            for pm in [[0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]] {
                let tp = data.ac_tensor(v[pm[0]], v[pm[1]], v[pm[2]]).map_err(err)?;
                sym = sym.max((tp - t).abs() / (1.0 + t.abs()));
            }
        }
    }
    check(gm <= 1e-4, || format!("metric gap {gm:e}"))?;
    check(g1 <= 1e-4, || format!("primal connection gap {g1:e}"))?;
    check(gd <= 1e-4, || format!("dual connection gap {gd:e}"))?;
    check(ac <= 1e-4, || format!("Amari-Chentsov gap {ac:e}"))?;
    check(sym <= 1e-10, || format!("Amari-Chentsov asymmetry {sym:e}"))?;
    // r -> 0: Bregman divergence, Hessian metric, flat primal and Hessian-third dual structure
    let mut lim = 0f64;
    let rr = 1e-4;
    let cost = SinhCost::canonical(rr).unwrap().ucost(3);
    let pots: Vec<Box<dyn Potential>> =
        vec![Box::new(Quadratic::new(random_spd(&mut r, 3)).unwrap()), Box::new(PowerSum::new(2.6, 3).unwrap())];
    for phi in &pots {
        let ctx = DivergenceContext::new(&cost, phi.as_ref()).map_err(err)?;
        for _ in 0..50 {
            let (x, xp) = (random_vec(&mut r, 3), random_vec(&mut r, 3));
            let (a, b, c) = (random_vec(&mut r, 3), random_vec(&mut r, 3), random_vec(&mut r, 3));
            let d = c_divergence(&ctx, &x, &xp).map_err(err)?;
            let bregman = phi.value(&x) - phi.value(&xp) - phi.gradient(&xp).dot(&(&x - &xp));
            lim = lim.max((d - bregman).abs() / bregman.abs().max(1e-6));
            let data = DualisticData::new(&ctx, &x).map_err(err)?;
            let h = phi.hessian(&x);
            lim = lim.max((data.metric.matrix() - &h).amax() / h.amax());
            let p = data.gamma1(&a, &b).map_err(err)?;
            lim = lim.max(p.norm() / (1.0 + a.norm() * b.norm()));
            let third = phi.third(&x, &a, &b).ok_or("potential lacks third derivatives")?;
            let dual_want = h.clone().lu().solve(&third).unwrap();
            let dual = data.gamma_minus1(&a, &b).map_err(err)?;
            lim = lim.max((&dual - &dual_want).norm() / (1.0 + dual_want.norm()));
            let t = data.ac_tensor(&a, &b, &c).map_err(err)?;
            let tw = c.dot(&third);
            lim = lim.max((t - tw).abs() / (1.0 + tw.abs()));
        }
    }
    check(lim <= 1e-3, || format!("small-r limit gap {lim:e}"))?;
    Ok(format!(
        "metric {gm:.1e}, primal {g1:.1e}, dual {gd:.1e}, AC {ac:.1e}, symmetry {sym:.1e}, small r {lim:.1e}"
    ))
}

fn c9_geodesic_span() -> Outcome {
    let mut r = rng(1009);
    let err = |e: mtwcost::Error| e.to_string();
    let mut worst = 0f64;
    for _ in 0..20 {
        let sc = SinhCost::new(uniform(&mut r, 0.2, 1.5), uniform(&mut r, 0.3, 2.0), -uniform(&mut r, 0.3, 2.0)).unwrap();
        let cost = sc.ucost(4);
        let phi: Box<dyn Potential> = if r.random_bool(0.5) {
            Box::new(Quadratic::new(random_spd(&mut r, 4)).unwrap())
        } else {
            Box::new(PowerSum::new(uniform(&mut r, 1.5, 4.0), 4).unwrap())
        };
        let ctx = DivergenceContext::new(&cost, phi.as_ref()).map_err(err)?;
        let frac = uniform(&mut r, 0.05, 0.4);
        let x0 = at_level(&mut r, phi.as_ref(), sc.r, frac);
        let v0 = random_vec(&mut r, 4) * (0.2 * x0.norm());
        let q = DMatrix::from_columns(&[x0.clone(), v0.clone()]).qr().q();
        let tr = primal_geodesic(&ctx, &x0, &v0, 1.0, 1000).map_err(err)?;
        for x in &tr.x {
            worst = worst.max((x - &q * (q.transpose() * x)).norm());
        }
    }
    check(worst <= 1e-8, || format!("orthogonal residual {worst:e}"))?;
    Ok(format!("max orthogonal residual {worst:.1e}"))
}

fn random_simplex<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| uniform(rng, 0.0, 1.0).powi(3)).collect();
    let t: f64 = w.iter().sum();
    w.iter().map(|v| v / t).collect()
}

fn c10_local_divergences() -> Outcome {
    let mut r = rng(1010);
    let (mut low, mut prod) = (f64::INFINITY, 0f64);
    for _ in 0..10_000 {
        let n = r.random_range(2..21);
        let (p, q) = (random_simplex(&mut r, n), random_simplex(&mut r, n));
        let mask: Vec<bool> = (0..n).map(|_| r.random_bool(0.5)).collect();
        let alpha = uniform(&mut r, 0.01, 0.99);
        let f = FiniteMeasurePair::new(p.clone(), q.clone(), mask, alpha).map_err(|e| e.to_string())?;
        let d = LocalDivergences::of(&f);
        low = low.min(d.hyperbolic).min(d.blank).min(d.jensen.unwrap_or(0.0));
        let labels: Vec<usize> = (0..n).map(|_| r.random_range(0..4)).collect();
        prod = prod.max(partition_product(&p, &q, &labels, alpha).map_err(|e| e.to_string())?);
    }
    check(low >= -1e-12, || format!("minimum divergence {low:e}"))?;
    check(prod <= 1.0 + 1e-12, || format!("partition product {prod}"))?;
    let stats = comparison_statistic(10_000, 10, 0.5, 2024).map_err(|e| e.to_string())?;
    check((stats.jensen_below - 0.18).abs() <= 0.03, || format!("comparison frequency {:.4}", stats.jensen_below))?;
    Ok(format!(
        "min divergence {low:.1e}, max partition product {prod:.6}, comparison frequency {:.4} (target 0.18)",
        stats.jensen_below
    ))
}

struct TableRow {
    label: &'static str,
    n: usize,
    target: f64,
    std: f64,
    asserted: bool,
}

fn table_one(n: usize) -> MvtSpec {
    let sigma = (DMatrix::identity(n, n) + DMatrix::from_element(n, n, 1.0)).try_inverse().unwrap() * 2.0;
    MvtSpec::new(10.0, Vector::zeros(n), sigma).unwrap()
}

fn table_two(n: usize) -> MvtSpec {
    let rho = 0.95;
    let sigma = DMatrix::identity(n, n) * (1.0 - rho) + DMatrix::from_element(n, n, rho);
    MvtSpec::new(10.0, Vector::zeros(n), sigma).unwrap()
}

fn run_row(row: &TableRow, seed: u64) -> mtwcost::Result<EstimateResult> {
    let cfg = MirrorConfig::standard(row.n).with_run(100_000, 100, seed)?;
    if row.label == "T1" {
        box_probability(&table_one(row.n), &cfg, &vec![-1.0; row.n], &vec![f64::INFINITY; row.n])
    } else {
        box_probability(&table_two(row.n), &cfg, &vec![1.0; row.n], &vec![3.0; row.n])
    }
}

fn table_rows() -> Vec<TableRow> {
    let mut rows = vec![
        TableRow { label: "T1", n: 5, target: 0.198, std: 0.000960, asserted: true },
        TableRow { label: "T1", n: 10, target: 0.0325, std: 0.000441, asserted: true },
        TableRow { label: "T1", n: 20, target: 0.00164, std: 5.65e-5, asserted: true },
        TableRow { label: "T2", n: 5, target: 0.0993, std: 0.00108, asserted: true },
    ];
    if std::env::var_os("MTWCOST_EXTENDED").is_some() {
        rows.extend([
            TableRow { label: "T1", n: 30, target: 0.000150, std: 9.85e-6, asserted: false },
            TableRow { label: "T1", n: 40, target: 2.08e-5, std: 2.39e-6, asserted: false },
            TableRow { label: "T1", n: 50, target: 3.72e-6, std: 7.01e-7, asserted: false },
            TableRow { label: "T2", n: 30, target: 0.0599, std: 0.00109, asserted: false },
            TableRow { label: "T2", n: 50, target: 0.0520, std: 0.000861, asserted: false },
        ]);
    }
    rows
}

const TABLE_SEED: u64 = 2024;

fn c11_tables(first: &mut Vec<Vec<f64>>) -> Outcome {
    let start = Instant::now();
    let mut lines = Vec::new();
    let mut failed = Vec::new();
    for row in table_rows() {
        let est = run_row(&row, TABLE_SEED).map_err(|e| e.to_string())?;
        let z = (est.mean - row.target) / row.std;
        let line = format!(
            "{} n={}: {:.4e} (rep std {:.2e}, target {:.3e}, {:+.2} reported std{})",
            row.label,
            row.n,
            est.mean,
            est.std,
            row.target,
            z,
            if row.asserted { "" } else { ", not asserted" }
        );
        println!("    {line}");
        if row.asserted && z.abs() > 5.0 {
            failed.push(line.clone());
        }
        lines.push(line);
        first.push(est.per_rep);
    }
    let secs = start.elapsed().as_secs_f64();
    check(failed.is_empty(), || failed.join("; "))?;
    check(secs < 600.0, || format!("runtime {secs:.0}s"))?;
    Ok(format!("{} rows in {secs:.1}s", lines.len()))
}

fn c12_determinism(first: &[Vec<f64>]) -> Outcome {
    check(!first.is_empty(), || "criterion 11 produced no runs (it must run first)".into())?;
    for (row, prev) in table_rows().iter().zip(first) {
        let est = run_row(row, TABLE_SEED).map_err(|e| e.to_string())?;
        let same = est.per_rep.len() == prev.len() && est.per_rep.iter().zip(prev).all(|(a, b)| a.to_bits() == b.to_bits());
        check(same, || format!("{} n={} differs between runs", row.label, row.n))?;
    }
    Ok(format!("{} rows bit-identical", first.len()))
}

fn selected(id: usize) -> bool {
    match std::env::var("MTWCOST_ONLY") {
        Ok(list) => list.split(',').any(|t| t.trim().parse() == Ok(id)),
        Err(_) => true,
    }
}

fn run(id: usize, name: &str, limit: Option<f64>, f: impl FnOnce() -> Outcome) -> bool {
    if !selected(id) {
        return true;
    }
    let start = Instant::now();
    let res = catch_unwind(AssertUnwindSafe(f)).unwrap_or_else(|p| {
        let msg = p.downcast_ref::<String>().cloned().or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()));
        Err(format!("panic: {}", msg.unwrap_or_default()))
    });
    let secs = start.elapsed().as_secs_f64();
    let res = match (res, limit) {
        (Ok(_), Some(l)) if secs > l => Err(format!("runtime {secs:.1}s over {l}s")),
        (r, _) => r,
    };
    let ok = res.is_ok();
    let detail = res.unwrap_or_else(|e| e);
    println!("{} {id:>2} {name}: {detail} [{secs:.1}s]", if ok { "PASS" } else { "FAIL" });
    ok
}

fn main() -> ExitCode {
    let mut ok = true;
    ok &= run(1, "zero cross-curvature on nulls", Some(30.0), c1_zero_mtw);
    ok &= run(2, "ODE classification", None, c2_ode_classification);
    ok &= run(3, "hyperboloid regularity", Some(60.0), c3_hyperboloid_regularity);
    ok &= run(4, "sphere power cost", None, c4_power_sphere);
    ok &= run(5, "square-distance sphere", None, c5_square_distance);
    ok &= run(6, "Gauss-Codazzi consistency", None, c6_gauss_codazzi);
    ok &= run(7, "duality suite", None, c7_duality);
    ok &= run(8, "dualistic geometry", None, c8_dualistic);
    ok &= run(9, "geodesic span", None, c9_geodesic_span);
    ok &= run(10, "local divergences", None, c10_local_divergences);
    let mut first = Vec::new();
    ok &= run(11, "t-law tables", Some(600.0), || c11_tables(&mut first));
    ok &= run(12, "seeded determinism", None, || c12_determinism(&first));
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
