mod common;

use common::*;
use mtwcost::scalar::{lambert_w, Family, RangeLabel, ScalarCost, WBranch};
use mtwcost::Error;
use std::f64::consts::E;

fn gh(p0: f64, p1: f64, p2: f64, p3: f64) -> Family {
    Family::GeneralizedHyperbolic { p0, p1, p2, p3 }
}

#[test]
fn eval_s_examples() {
    let sinh = gh(0.5, -1.0, -0.5, 1.0);
    assert_eq!(sinh.eval_s(0.0, 0).unwrap(), 0.0);
    let aff = Family::Affine { a0: 0.0, a1: -1.0 };
    assert_eq!(aff.eval_s(2.5, 1).unwrap(), -1.0);
    let lam = Family::LambertType { a0: 0.0, a1: 1.0, a2: -1.0 };
    assert!((lam.eval_s(1.0, 0).unwrap() - (-1f64).exp()).abs() < 1e-15);
}

#[test]
fn power_sphere_domain_error() {
    let f = Family::PowerSphere { alpha: 3.0 };
    assert!(matches!(f.eval_s(0.5, 0), Err(Error::Domain(_))));
    assert!(matches!(f.eval_s(-2.0, 1), Err(Error::Domain(_))));
}

#[test]
fn subcase_1a_inverse_matches_bisection() {
    let c = ScalarCost::new(gh(-1.0, -1.0, 1.0, 1.0), 0).unwrap();
    let oracle = bisect(|u| c.eval_s(u, 0).unwrap() + 1.0, -10.0, 10.0);
    let u = c.eval_u(-1.0).unwrap();
    assert!((u - oracle).abs() < 1e-12);
    assert!((u - ((5f64.sqrt() - 1.0) / 2.0).ln()).abs() < 1e-12);
    assert!((u + 0.481_211_8).abs() < 1e-7);
}

#[test]
fn log_type_inverse() {
    let c = ScalarCost::new(Family::LogType { p0: -1.0, p1: 1.0, p2: 1.0 }, 0).unwrap();
    assert!((c.eval_u(-1.0).unwrap() - 2f64.ln()).abs() < 1e-14);
}

fn all_costs(seed: u64) -> Vec<ScalarCost> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    for _ in 0..6 {
        for f in [random_gh(&mut r), random_lambert(&mut r)] {
            let nr = match f.monotonic_ranges() {
                mtwcost::scalar::RangeSet::Finite(v) => v.len(),
                _ => 1,
            };
            for b in 0..nr as i64 {
                out.push(ScalarCost::new(f, b).unwrap());
            }
        }
        let et = random_exptrig(&mut r);
        out.push(ScalarCost::new(et, 0).unwrap());
        out.push(ScalarCost::new(et, 3).unwrap());
    }
    for f in [
        Family::PowerSphere { alpha: 2.5 },
        Family::PowerHyperbolic { beta: 1.5 },
        Family::SquareDistanceSphere,
        Family::LogType { p0: -0.7, p1: -1.3, p2: 1.0 },
        Family::LogType { p0: 0.7, p1: 0.4, p2: 0.0 },
        Family::Affine { a0: 0.3, a1: -2.0 },
        gh(-1.0, -1.0, 1.0, 1.0),
        gh(-0.5, -1.0, 2.0, 0.5),
        gh(2.0, -2.0, -1.5, -1.0),
    ] {
        out.push(ScalarCost::new(f, 0).unwrap());
    }
    out
}

#[test]
fn round_trip_every_range() {
    let mut r = rng(11);
    for c in all_costs(5) {
        for _ in 0..100 {
            let u0 = interior_u(&mut r, &c, 8.0);
            let s = c.eval_s(u0, 0).unwrap();
            let u = c.eval_u(s).unwrap_or_else(|e| panic!("{:?} s={s}: {e}", c.family()));
            // round trip is limited by the conditioning of s near its extremes
            let s1 = c.eval_s(u0, 1).unwrap().abs();
            let tol = 1e-9_f64.max(1e-13 * s.abs().max(1.0) / s1);
            assert!((u - u0).abs() <= tol * u0.abs().max(1.0), "{:?} u0={u0} got {u}", c.family());
        }
    }
}

#[test]
fn derivatives_match_finite_differences() {
    let mut r = rng(12);
    for c in all_costs(6) {
        for _ in 0..20 {
            let u = interior_u(&mut r, &c, 6.0);
            let h = 1e-5 * u.abs().max(1.0);
            for k in 1..=4 {
                let fd = (c.eval_s(u + h, k - 1).unwrap() - c.eval_s(u - h, k - 1).unwrap()) / (2.0 * h);
                let an = c.eval_s(u, k).unwrap();
                let scale = an.abs().max(c.eval_s(u, k - 1).unwrap().abs()).max(1e-3);
                assert!((fd - an).abs() <= 1e-6 * scale, "{:?} k={k} u={u}: {fd} vs {an}", c.family());
            }
        }
    }
}

#[test]
fn zero_mtw_ode_and_second_order_form() {
    let mut r = rng(13);
    for _ in 0..10 {
        for f in [random_gh(&mut r), random_lambert(&mut r), random_exptrig(&mut r)] {
            let c = ScalarCost::new(f, 0).unwrap();
            let cl = c.classify_ode().unwrap();
            for _ in 0..100 {
                let u = interior_u(&mut r, &c, 6.0);
                let [s0, s1, s2, s3, s4] = c.derivatives(u).unwrap();
                let scale = [s0, s1, s2, s3, s4].iter().fold(0f64, |m, v| m.max(v.abs()));
                let ode = (s1 * s1 - s0 * s2) * s4 + s0 * s3 * s3 - 2.0 * s1 * s2 * s3 + s2.powi(3);
                assert!(ode.abs() <= 1e-10 * scale.powi(3).max(1.0), "{f:?} ode {ode}");
                let so = s2 - cl.s * s1 + cl.p * s0;
                assert!(so.abs() <= 1e-10 * scale.max(1.0), "{f:?} second order {so}");
            }
        }
    }
}

#[test]
fn classify_examples() {
    let c = ScalarCost::new(gh(0.3, -1.0, 2.0, 1.0), 0).unwrap().classify_ode().unwrap();
    assert_eq!((c.s, c.p, c.delta), (0.0, -1.0, 4.0));
    let c = ScalarCost::new(Family::LambertType { a0: 0.0, a1: 1.0, a2: -1.0 }, 0).unwrap().classify_ode().unwrap();
    assert_eq!((c.s, c.p, c.delta), (-2.0, 1.0, 0.0));
    let c = ScalarCost::new(Family::ExpTrig { b0: 1.0, b1: 0.0, b2: 1.0, b3: 0.0 }, 0).unwrap().classify_ode().unwrap();
    assert_eq!((c.s, c.p, c.delta), (0.0, 1.0, -4.0));
    let pw = ScalarCost::new(Family::PowerSphere { alpha: 3.0 }, 0).unwrap();
    assert!(pw.classify_ode().is_none());
    assert!(!pw.ode_pointwise(-0.5).unwrap().constant);
}

#[test]
fn pointwise_constants_are_constant() {
    let mut r = rng(14);
    for f in [random_gh(&mut r), random_lambert(&mut r), random_exptrig(&mut r)] {
        let c = ScalarCost::new(f, 0).unwrap();
        let want = c.classify_ode().unwrap();
        for _ in 0..100 {
            let u = interior_u(&mut r, &c, 6.0);
            let got = c.ode_pointwise(u).unwrap();
            assert!((got.s - want.s).abs() < 1e-10 * (1.0 + want.s.abs()), "{f:?}");
            assert!((got.p - want.p).abs() < 1e-10 * (1.0 + want.p.abs()), "{f:?}");
        }
    }
}

#[test]
fn range_examples() {
    let r = ScalarCost::new(gh(1.0, -1.0, -1.0, 1.0), 0).unwrap();
    assert_eq!(r.range().label, RangeLabel::SinhLike);
    assert!(r.range().u_lo == f64::NEG_INFINITY && r.range().u_hi == f64::INFINITY);
    let (a0, a1, a2) = (0.4, 1.3, -0.7);
    let lam = Family::LambertType { a0, a1, a2 };
    let rs = lam.monotonic_ranges();
    let uc = -(a0 * a2 + a1) / (a1 * a2);
    assert!((rs.get(0).unwrap().u_hi - uc).abs() < 1e-14);
    assert!(lam.eval_s(uc, 1).unwrap().abs() < 1e-14);
    let aff = ScalarCost::new(Family::Affine { a0: 0.0, a1: 1.0 }, 0).unwrap();
    assert!(aff.range().u_lo.is_infinite() && aff.range().u_hi.is_infinite());
    assert!(matches!(ScalarCost::new(Family::Affine { a0: 0.0, a1: 1.0 }, 1), Err(Error::Branch(_))));
}

#[test]
fn exp_trig_ranges_have_length_pi_over_b2() {
    let f = Family::ExpTrig { b0: 1.0, b1: 0.4, b2: 0.8, b3: 0.2 };
    for k in -2..3 {
        let r = f.monotonic_ranges().get(k).unwrap();
        assert!((r.u_hi - r.u_lo - std::f64::consts::PI / 0.8).abs() < 1e-12);
        assert!(f.eval_s(r.u_lo, 1).unwrap().abs() < 1e-12);
        assert!(f.eval_s(r.u_hi, 1).unwrap().abs() < 1e-12);
    }
}

#[test]
fn critical_point_ranges() {
    // one decaying arm: p1 p3 > 0, p0 p2 < 0
    let f = gh(2.0, -2.0, -1.5, -1.0);
    let r0 = f.monotonic_ranges().get(0).unwrap();
    assert_eq!(r0.label, RangeLabel::OneDecayingArm);
    assert!(f.eval_s(r0.u_hi, 1).unwrap().abs() < 1e-12);
    let (p0, p1, p2, p3): (f64, f64, f64, f64) = (2.0, -2.0, -1.5, -1.0);
    let sc = p2 * (p1 - p3) / p1 * (p0 * p1 / (-p2 * p3)).powf(p3 / (p3 - p1));
    assert!((f.eval_s(r0.u_hi, 0).unwrap() - sc).abs() < 1e-12);
    let cosh = gh(1.0, -1.0, 1.0, 1.0);
    assert_eq!(cosh.monotonic_ranges().get(1).unwrap().label, RangeLabel::CoshLike);
}

#[test]
fn degenerate_exponents_rejected() {
    assert!(matches!(Family::GeneralizedHyperbolic { p0: 1.0, p1: 0.0, p2: 1.0, p3: 1e-9 }.validate(), Err(Error::Conditioning(_))));
    assert!(Family::LambertType { a0: 1.0, a1: 0.0, a2: 1.0 }.validate().is_err());
    assert!(Family::ExpTrig { b0: -1.0, b1: 0.0, b2: 1.0, b3: 0.0 }.validate().is_err());
}

#[test]
fn lambert_w_examples() {
    assert_eq!(lambert_w(WBranch::Principal, 0.0).unwrap(), 0.0);
    assert!((lambert_w(WBranch::Principal, E).unwrap() - 1.0).abs() < 1e-15);
    assert!((lambert_w(WBranch::Lower, -(-1f64).exp()).unwrap() + 1.0).abs() < 1e-7);
    assert!(lambert_w(WBranch::Principal, -0.5).is_err());
    assert!(lambert_w(WBranch::Lower, 0.1).is_err());
}

#[test]
fn lambert_w_residuals() {
    let mut r = rng(15);
    for _ in 0..2000 {
        let x = uniform(&mut r, -0.3678794, 50.0);
        let w = lambert_w(WBranch::Principal, x).unwrap();
        assert!((w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1.0));
        assert!(w >= -1.0);
        let x = uniform(&mut r, -0.3678794, -1e-12);
        let w = lambert_w(WBranch::Lower, x).unwrap();
        assert!((w * w.exp() - x).abs() <= 1e-13 * x.abs().max(1.0));
        assert!(w <= -1.0);
    }
}

#[test]
fn family_json_round_trip() {
    let c = ScalarCost::new(gh(-1.0, -1.0, 1.0, 1.0), 0).unwrap();
    let js = serde_json::to_string(&c).unwrap();
    let back: ScalarCost = serde_json::from_str(&js).unwrap();
    assert_eq!(back, c);
    let bad = r#"{"variant":"LambertType","params":{"a0":1,"a1":0,"a2":1}}"#;
    assert!(serde_json::from_str::<ScalarCost>(bad).is_err());
}

#[test]
fn square_distance_series_matches_trig() {
    let c = ScalarCost::new(Family::SquareDistanceSphere, 0).unwrap();
    // w = 1 is where the series hands over to the trigonometric forms
    let (below, above) = (c.derivatives(0.5 - 1e-12).unwrap(), c.derivatives(0.5 + 1e-12).unwrap());
    for k in 0..5 {
        assert!((below[k] - above[k]).abs() < 1e-9, "order {k}");
    }
    let u = 1e-3;
    let d = c.derivatives(u).unwrap();
    let w = (2.0 * u).sqrt();
    assert!((d[1] + w.sin() / w).abs() < 1e-14);
    assert!((d[2] - 1.0 / 3.0 + u / 15.0).abs() < 1e-7);
    for k in 0..4 {
        let h = 1e-6;
        let fd = (c.eval_s(u + h, k).unwrap() - c.eval_s(u - h, k).unwrap()) / (2.0 * h);
        assert!((fd - d[k + 1]).abs() < 1e-7, "order {k}: {fd} vs {}", d[k + 1]);
    }
}
