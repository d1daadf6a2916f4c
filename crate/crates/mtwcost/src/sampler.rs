//! Mirror Monte Carlo for multivariate t laws through the hyperbolic optimal map of a quadratic potential.

use crate::error::{Error, Result};
use crate::euclid::Vector;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;
use std::f64::consts::PI;
use std::time::Instant;

/// Largest log-weight accumulated without clipping.
const MAX_LOG_WEIGHT: f64 = 700.0;

/// `t_nu(mu, Sigma)` with `Sigma = L L^t`.
#[derive(Debug, Clone, PartialEq)]
pub struct MvtSpec {
    pub nu: f64,
    pub mu: Vector,
    pub sigma: DMatrix<f64>,
    pub chol: DMatrix<f64>,
}

impl MvtSpec {
    pub fn new(nu: f64, mu: Vector, sigma: DMatrix<f64>) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Validation(format!("degrees of freedom {nu} must be positive")));
        }
        if !sigma.is_square() || sigma.nrows() != mu.len() || mu.is_empty() {
            return Err(Error::Validation("scale matrix and location must share a positive dimension".into()));
        }
        if (&sigma - sigma.transpose()).amax() > 1e-12 * sigma.amax() {
            return Err(Error::Validation("scale matrix is not symmetric".into()));
        }
        let chol = sigma
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Validation("scale matrix is not positive definite".into()))?
            .l();
        Ok(Self { nu, mu, sigma, chol })
    }

    pub fn standard(n: usize, nu: f64) -> Result<Self> {
        Self::new(nu, Vector::zeros(n), DMatrix::identity(n, n))
    }

    pub fn dim(&self) -> usize {
        self.mu.len()
    }

    /// `log(Gamma(nu/2) (pi nu)^{n/2} / Gamma((nu + n)/2))`.
    pub fn log_normalizer(&self) -> f64 {
        let (nu, n) = (self.nu, self.dim() as f64);
        ln_gamma(nu / 2.0) + 0.5 * n * (PI * nu).ln() - ln_gamma((nu + n) / 2.0)
    }

    /// Negative log density `W(y)` of the standard law `t_nu(0, I)`.
    pub fn neg_log_density(&self, y: &Vector) -> f64 {
        let (nu, n) = (self.nu, self.dim() as f64);
        self.log_normalizer() + 0.5 * (nu + n) * (y.norm_squared() / nu).ln_1p()
    }
}

/// Domain `B = {x : x^t C x < 1/r}` of the potential `x^t C x / 2` and Monte Carlo settings.
#[derive(Debug, Clone, PartialEq)]
pub struct MirrorConfig {
    pub r: f64,
    c: DMatrix<f64>,
    c_inv_sqrt: DMatrix<f64>,
    log_det_c: f64,
    pub samples: usize,
    pub reps: usize,
    pub seed: u64,
}

impl MirrorConfig {
    pub fn new(r: f64, c: DMatrix<f64>, samples: usize, reps: usize, seed: u64) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::Validation(format!("r = {r} must be positive")));
        }
        if samples == 0 || reps == 0 {
            return Err(Error::Validation("samples and reps must be positive".into()));
        }
        if !c.is_square() || c.is_empty() || (&c - c.transpose()).amax() > 1e-12 * c.amax() {
            return Err(Error::Validation("C must be a symmetric square matrix".into()));
        }
        let eig = c.clone().symmetric_eigen();
        if eig.eigenvalues.iter().any(|v| !(*v > 0.0)) {
            return Err(Error::Validation("C is not positive definite".into()));
        }
        let inv_sqrt = eig.eigenvalues.map(|v| v.powf(-0.5));
        let c_inv_sqrt = &eig.eigenvectors * DMatrix::from_diagonal(&inv_sqrt) * eig.eigenvectors.transpose();
        let log_det_c = eig.eigenvalues.iter().map(|v| v.ln()).sum();
        Ok(Self { r, c, c_inv_sqrt, log_det_c, samples, reps, seed })
    }

    /// `C = I`, `r = 1/2`, `10^5` samples and 100 repetitions.
    pub fn standard(n: usize) -> Self {
        Self::new(0.5, DMatrix::identity(n, n), 100_000, 100, 0).expect("identity is a valid configuration")
    }

    pub fn with_run(mut self, samples: usize, reps: usize, seed: u64) -> Result<Self> {
        if samples == 0 || reps == 0 {
            return Err(Error::Validation("samples and reps must be positive".into()));
        }
        self.samples = samples;
        self.reps = reps;
        self.seed = seed;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    /// `log Vol(B) = -log det C / 2 - (n/2) log r + (n/2) log pi - log Gamma(n/2 + 1)`.
    pub fn log_volume(&self) -> f64 {
        let n = self.dim() as f64;
        -0.5 * self.log_det_c - 0.5 * n * self.r.ln() + 0.5 * n * PI.ln() - ln_gamma(0.5 * n + 1.0)
    }

    fn check(&self, spec: &MvtSpec) -> Result<()> {
        if spec.dim() != self.dim() {
            return Err(Error::Validation(format!("law dimension {} vs C dimension {}", spec.dim(), self.dim())));
        }
        Ok(())
    }
}

/// `q = x^t C x`, `|Cx|^2` and `1 - r^2 q^2`, rejecting points outside the open ball.
fn ball_terms(cfg: &MirrorConfig, cx: &Vector, x: &Vector) -> Result<(f64, f64, f64)> {
    let q = x.dot(cx);
    let a = (1.0 - cfg.r * q) * (1.0 + cfg.r * q);
    if !(a > 0.0) {
        return Err(Error::domain(format!("x^t C x = {q} is not below 1/r = {}", 1.0 / cfg.r)));
    }
    Ok((q, cx.norm_squared(), a))
}

/// Optimal map `T(x) = C x / sqrt(1 - r^2 (x^t C x)^2)`.
pub fn mirror_map(cfg: &MirrorConfig, x: &Vector) -> Result<Vector> {
    let cx = &cfg.c * x;
    let (_, _, a) = ball_terms(cfg, &cx, x)?;
    Ok(cx / a.sqrt())
}

/// `log det dT(x) = log det C + log(1 + r^2 q^2) - (n + 2)/2 log(1 - r^2 q^2)`.
pub fn log_det_map(cfg: &MirrorConfig, x: &Vector) -> Result<f64> {
    let cx = &cfg.c * x;
    let (q, _, a) = ball_terms(cfg, &cx, x)?;
    let n = cfg.dim() as f64;
    Ok(cfg.log_det_c + (cfg.r * cfg.r * q * q).ln_1p() - 0.5 * (n + 2.0) * a.ln())
}

fn potential_from(spec: &MvtSpec, cfg: &MirrorConfig, q: f64, c2: f64, a: f64) -> f64 {
    let (nu, n) = (spec.nu, cfg.dim() as f64);
    spec.log_normalizer() + 0.5 * (nu + n) * (a + c2 / nu).ln() + (1.0 - 0.5 * nu) * a.ln()
        - (cfg.r * cfg.r * q * q).ln_1p()
        - cfg.log_det_c
}

/// Negative log density `V = W(T x) - log det dT(x)` of the pulled-back law on `B`.
pub fn transported_potential(spec: &MvtSpec, cfg: &MirrorConfig, x: &Vector) -> Result<f64> {
    cfg.check(spec)?;
    let cx = &cfg.c * x;
    let (q, c2, a) = ball_terms(cfg, &cx, x)?;
    Ok(potential_from(spec, cfg, q, c2, a))
}

/// `V - log Vol(B)`, so that `e^{-V_adj}` is a density against the uniform law on `B`.
pub fn transported_potential_adj(spec: &MvtSpec, cfg: &MirrorConfig, x: &Vector) -> Result<f64> {
    Ok(transported_potential(spec, cfg, x)? - cfg.log_volume())
}

fn uniform_point<R: Rng + ?Sized>(cfg: &MirrorConfig, rng: &mut R, dir: &mut Vector) -> Vector {
    let n = cfg.dim();
    loop {
        for v in dir.iter_mut() {
            *v = rng.sample(StandardNormal);
        }
        let norm = dir.norm();
        if norm > 0.0 {
            let rad = rng.random::<f64>().powf(1.0 / n as f64);
            return &cfg.c_inv_sqrt * (&*dir * (rad / (norm * cfg.r.sqrt())));
        }
    }
}

/// Independent uniform points of `B`: a uniform direction, radius `U^{1/n}`, then `r^{-1/2} C^{-1/2}`.
pub fn sample_uniform_ellipsoid<R: Rng + ?Sized>(cfg: &MirrorConfig, count: usize, rng: &mut R) -> Vec<Vector> {
    let mut dir = Vector::zeros(cfg.dim());
    (0..count).map(|_| uniform_point(cfg, rng, &mut dir)).collect()
}

/// Generator of repetition `rep`: the configured seed with its own stream.
pub fn rep_rng(seed: u64, rep: usize) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(rep as u64);
    rng
}

/// Mean and spread of the per-repetition estimates.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateResult {
    pub mean: f64,
    pub std: f64,
    pub per_rep: Vec<f64>,
    pub runtime_secs: f64,
    /// Weights whose logarithm exceeded the clipping bound.
    pub clipped: usize,
}

/// `E f(Y)` for `Y ~ t_nu(0, I)` as the average of `f(T x) e^{-V_adj(x)}` over uniform `x` in `B`.
pub fn estimate_expectation<F>(spec: &MvtSpec, cfg: &MirrorConfig, f: F) -> Result<EstimateResult>
where
    F: Fn(&Vector) -> f64 + Sync,
{
    cfg.check(spec)?;
    let start = Instant::now();
    let log_vol = cfg.log_volume();
    let runs: Vec<(f64, usize)> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| {
            let mut rng = rep_rng(cfg.seed, rep);
            let mut dir = Vector::zeros(cfg.dim());
            let (mut sum, mut clipped) = (0.0, 0usize);
            for _ in 0..cfg.samples {
                let x = uniform_point(cfg, &mut rng, &mut dir);
                let cx = &cfg.c * &x;
                // uniform draws lie strictly inside B
                let Ok((q, c2, a)) = ball_terms(cfg, &cx, &x) else { continue };
                let y = cx / a.sqrt();
                let value = f(&y);
                if value == 0.0 {
                    continue;
                }
                let mut lw = log_vol - potential_from(spec, cfg, q, c2, a);
                if lw > MAX_LOG_WEIGHT {
                    lw = MAX_LOG_WEIGHT;
                    clipped += 1;
                }
                sum += value * lw.exp();
            }
            (sum / cfg.samples as f64, clipped)
        })
        .collect();
    let per_rep: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let clipped = runs.iter().map(|r| r.1).sum();
    if clipped > 0 {
        log::warn!("{clipped} importance weights were clipped at e^{MAX_LOG_WEIGHT}");
    }
    let k = per_rep.len() as f64;
    let mean = per_rep.iter().sum::<f64>() / k;
    let std = if per_rep.len() > 1 {
        (per_rep.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    } else {
        0.0
    };
    if !mean.is_finite() {
        return Err(Error::numeric("non-finite Monte Carlo mean", mean));
    }
    Ok(EstimateResult { mean, std, per_rep, runtime_secs: start.elapsed().as_secs_f64(), clipped })
}

/// `Prob(lo <= mu + L Y <= hi)` for `Y ~ t_nu(0, I)`; infinite bounds are allowed.
pub fn box_probability(spec: &MvtSpec, cfg: &MirrorConfig, lo: &[f64], hi: &[f64]) -> Result<EstimateResult> {
    let n = spec.dim();
    if lo.len() != n || hi.len() != n {
        return Err(Error::Validation("box bounds must have one entry per dimension".into()));
    }
    if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
        return Err(Error::Validation("box needs lo < hi in every coordinate".into()));
    }
    let inside = |y: &Vector| -> f64 {
        let z = &spec.mu + &spec.chol * y;
        let ok = z.iter().zip(lo.iter().zip(hi)).all(|(v, (l, h))| *v >= *l && *v <= *h);
        if ok {
            1.0
        } else {
            0.0
        }
    };
    estimate_expectation(spec, cfg, inside)
}
