use crate::error::{Error, Result};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

const SUM_TOL: f64 = 1e-9;

/// Two probability vectors on a finite set, a subset mask and an order `alpha` in `(0, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteMeasurePair {
    p: Vec<f64>,
    q: Vec<f64>,
    mask: Vec<bool>,
    alpha: f64,
}

fn check_simplex(v: &[f64], name: &str) -> Result<()> {
    if v.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
        return Err(Error::Validation(format!("{name} has a negative or non-finite weight")));
    }
    let total: f64 = v.iter().sum();
    if (total - 1.0).abs() > SUM_TOL {
        return Err(Error::Validation(format!("{name} sums to {total}, not 1")));
    }
    Ok(())
}

impl FiniteMeasurePair {
    pub fn new(p: Vec<f64>, q: Vec<f64>, mask: Vec<bool>, alpha: f64) -> Result<Self> {
        if p.len() != q.len() || p.len() != mask.len() || p.is_empty() {
            return Err(Error::Validation("weights and mask must have one common, nonzero length".into()));
        }
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Validation(format!("alpha = {alpha} is not in (0, 1)")));
        }
        check_simplex(&p, "p")?;
        check_simplex(&q, "p'")?;
        if p.iter().zip(&q).zip(&mask).any(|((a, b), m)| *m && *a > 0.0 && *b == 0.0) {
            return Err(Error::domain("p' vanishes where p is positive on the subset"));
        }
        Ok(Self { p, q, mask, alpha })
    }

    /// Normalizes nonnegative weights before building the pair.
    pub fn from_weights(p: &[f64], q: &[f64], mask: Vec<bool>, alpha: f64) -> Result<Self> {
        let norm = |v: &[f64]| -> Vec<f64> {
            let t: f64 = v.iter().sum();
            v.iter().map(|w| w / t).collect()
        };
        Self::new(norm(p), norm(q), mask, alpha)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// `mu(Omega_1)`, `mu'(Omega_1)` and `sum over Omega_1 of p^alpha p'^(1 - alpha)`.
    pub fn subset_sums(&self) -> (f64, f64, f64) {
        let a = self.alpha;
        self.p.iter().zip(&self.q).zip(&self.mask).filter(|(_, m)| **m).fold((0.0, 0.0, 0.0), |(m, mp, i), ((p, q), _)| {
            let term = if *p == 0.0 { 0.0 } else { p.powf(a) * q.powf(1.0 - a) };
            (m + p, mp + q, i + term)
        })
    }
}

fn hyperbolic_ratio(i: f64, mp: f64) -> f64 {
    (i + ((i * i - mp * mp) + 1.0).sqrt()) / (1.0 + mp)
}

/// Hyperbolic local alpha-divergence.
pub fn local_alpha_divergence(f: &FiniteMeasurePair) -> f64 {
    let (m, mp, i) = f.subset_sums();
    f.alpha * (m - mp) - hyperbolic_ratio(i, mp).ln()
}

/// Alpha-divergence after merging the complement of the subset into one point, scaled by `alpha (1 - alpha)`.
pub fn blank_local(f: &FiniteMeasurePair) -> f64 {
    let (m, mp, i) = f.subset_sums();
    let rest = |v: f64| (1.0 - v).max(0.0);
    let merged = if rest(m) == 0.0 { 0.0 } else { rest(m).powf(f.alpha) * rest(mp).powf(1.0 - f.alpha) };
    -(merged + i).ln()
}

/// Local divergence from Jensen's inequality for `-t^alpha`.
pub fn jensen_local(f: &FiniteMeasurePair) -> Result<f64> {
    let (m, mp, i) = f.subset_sums();
    if m == 0.0 || mp == 0.0 {
        return Err(Error::domain("Jensen local divergence needs positive mass on the subset"));
    }
    Ok(f.alpha * m.ln() + (1.0 - f.alpha) * mp.ln() - i.ln())
}

/// Product over the blocks of a partition (given as block labels) of the hyperbolic ratios; at most 1.
pub fn partition_product(p: &[f64], q: &[f64], labels: &[usize], alpha: f64) -> Result<f64> {
    if labels.len() != p.len() {
        return Err(Error::Validation("one label per point is required".into()));
    }
    let blocks = labels.iter().max().map_or(0, |m| m + 1);
    let mut prod = 1.0;
    for b in 0..blocks {
        let mask: Vec<bool> = labels.iter().map(|l| *l == b).collect();
        if !mask.iter().any(|m| *m) {
            continue;
        }
        let f = FiniteMeasurePair::new(p.to_vec(), q.to_vec(), mask, alpha)?;
        let (_, mp, i) = f.subset_sums();
        prod *= hyperbolic_ratio(i, mp);
    }
    Ok(prod)
}

/// All three local divergences of one pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LocalDivergences {
    pub hyperbolic: f64,
    pub blank: f64,
    pub jensen: Option<f64>,
}

impl LocalDivergences {
    pub fn of(f: &FiniteMeasurePair) -> Self {
        Self { hyperbolic: local_alpha_divergence(f), blank: blank_local(f), jensen: jensen_local(f).ok() }
    }
}

/// Frequencies observed over random pairs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComparisonStats {
    pub trials: usize,
    /// Fraction of trials with the Jensen divergence below the hyperbolic one.
    pub jensen_below: f64,
    /// Fraction of trials with the hyperbolic divergence not above the blank one.
    pub hyperbolic_below_blank: f64,
}

/// Weights `|z| / sum |z|` for standard normal `z` on a set of `size` points, a uniformly random
/// subset of uniformly random size in `1..size`, and order `alpha`.
pub fn comparison_statistic(trials: usize, size: usize, alpha: f64, seed: u64) -> Result<ComparisonStats> {
    if size < 2 || trials == 0 {
        return Err(Error::Validation("need at least two points and one trial".into()));
    }
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let (mut below, mut conj) = (0usize, 0usize);
    for _ in 0..trials {
        let mut draw = || -> Vec<f64> { (0..size).map(|_| rng.sample::<f64, _>(StandardNormal).abs()).collect() };
        let (p, q) = (draw(), draw());
        let k = rng.random_range(1..size);
        let mut mask = vec![false; size];
        for i in sample(&mut rng, size, k) {
            mask[i] = true;
        }
        let f = FiniteMeasurePair::from_weights(&p, &q, mask, alpha)?;
        let d = LocalDivergences::of(&f);
        if d.jensen.is_some_and(|j| j < d.hyperbolic) {
            below += 1;
        }
        if d.hyperbolic <= d.blank + 1e-12 {
            conj += 1;
        }
    }
    Ok(ComparisonStats {
        trials,
        jensen_below: below as f64 / trials as f64,
        hyperbolic_below_blank: conj as f64 / trials as f64,
    })
}
