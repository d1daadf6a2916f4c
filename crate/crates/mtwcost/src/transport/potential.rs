use crate::error::{Error, Result};
use crate::euclid::Vector;
use nalgebra::DMatrix;

/// What is known about a potential beyond its derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialTag {
    /// Absolutely homogeneous of the given order.
    Homogeneous(f64),
    /// `x^t C x / 2`.
    Quadratic,
    Generic,
}

/// A smooth potential `phi` given by its value and derivatives.
pub trait Potential: Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian(&self, x: &Vector) -> DMatrix<f64>;

    /// `phi'''(x)(a, b, .)`, when available.
    fn third(&self, _x: &Vector, _a: &Vector, _b: &Vector) -> Option<Vector> {
        None
    }

    fn in_domain(&self, _x: &Vector) -> bool {
        true
    }

    fn tag(&self) -> PotentialTag {
        PotentialTag::Generic
    }

    /// Order of absolute homogeneity, if any.
    fn homogeneity(&self) -> Option<f64> {
        match self.tag() {
            PotentialTag::Homogeneous(a) => Some(a),
            PotentialTag::Quadratic => Some(2.0),
            PotentialTag::Generic => None,
        }
    }

    /// `x` with `grad phi(x) = y`, by damped Newton on the Hessian.
    fn gradient_inverse(&self, y: &Vector) -> Result<Vector> {
        let mut x = y.clone();
        let scale = y.norm().max(1.0);
        let mut res = self.gradient(&x) - y;
        for _ in 0..200 {
            if res.norm() <= 1e-13 * scale {
                return Ok(x);
            }
            let step = self
                .hessian(&x)
                .lu()
                .solve(&res)
                .ok_or_else(|| Error::cond("singular Hessian in gradient inverse"))?;
            let mut t = 1.0;
            loop {
                let cand = &x - &step * t;
                let r = self.gradient(&cand) - y;
                if self.in_domain(&cand) && r.norm() < res.norm() {
                    x = cand;
                    res = r;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Err(Error::numeric("gradient inverse stalled", res.norm()));
                }
            }
        }
        Err(Error::numeric("gradient inverse did not converge", res.norm()))
    }
}

/// `phi(x) = x^t C x / 2` with `C` positive definite.
#[derive(Debug, Clone, PartialEq)]
pub struct Quadratic {
    c: DMatrix<f64>,
    c_inv: DMatrix<f64>,
}

impl Quadratic {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if !c.is_square() || (&c - c.transpose()).amax() > 1e-12 * c.amax().max(1.0) {
            return Err(Error::Validation("C must be square and symmetric".into()));
        }
        let chol = c.clone().cholesky().ok_or_else(|| Error::Validation("C must be positive definite".into()))?;
        Ok(Quadratic { c_inv: chol.inverse(), c })
    }

    pub fn identity(n: usize) -> Self {
        Quadratic { c: DMatrix::identity(n, n), c_inv: DMatrix::identity(n, n) }
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn inverse_matrix(&self) -> &DMatrix<f64> {
        &self.c_inv
    }
}

impl Potential for Quadratic {
    fn dim(&self) -> usize {
        self.c.nrows()
    }

    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.c * x))
    }

    fn gradient(&self, x: &Vector) -> Vector {
        &self.c * x
    }

    fn hessian(&self, _x: &Vector) -> DMatrix<f64> {
        self.c.clone()
    }

    fn third(&self, x: &Vector, _a: &Vector, _b: &Vector) -> Option<Vector> {
        Some(Vector::zeros(x.len()))
    }

    fn tag(&self) -> PotentialTag {
        PotentialTag::Quadratic
    }

    fn gradient_inverse(&self, y: &Vector) -> Result<Vector> {
        Ok(&self.c_inv * y)
    }
}

/// `phi(x) = sum |x_i|^alpha`, `alpha > 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PowerSum {
    pub alpha: f64,
    pub n: usize,
}

impl PowerSum {
    pub fn new(alpha: f64, n: usize) -> Result<Self> {
        if !(alpha > 1.0) || !alpha.is_finite() || n == 0 {
            return Err(Error::Validation(format!("PowerSum needs alpha > 1 and n > 0, got {alpha}, {n}")));
        }
        Ok(PowerSum { alpha, n })
    }
}

fn signed_pow(v: f64, e: f64) -> f64 {
    v.signum() * v.abs().powf(e)
}

impl Potential for PowerSum {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &Vector) -> f64 {
        x.iter().map(|v| v.abs().powf(self.alpha)).sum()
    }

    fn gradient(&self, x: &Vector) -> Vector {
        x.map(|v| self.alpha * signed_pow(v, self.alpha - 1.0))
    }

    fn hessian(&self, x: &Vector) -> DMatrix<f64> {
        let a = self.alpha;
        DMatrix::from_diagonal(&x.map(|v| a * (a - 1.0) * v.abs().powf(a - 2.0)))
    }

    fn third(&self, x: &Vector, p: &Vector, q: &Vector) -> Option<Vector> {
        let a = self.alpha;
        Some(Vector::from_fn(x.len(), |i, _| {
            a * (a - 1.0) * (a - 2.0) * signed_pow(x[i], a - 3.0) * p[i] * q[i]
        }))
    }

    fn tag(&self) -> PotentialTag {
        PotentialTag::Homogeneous(self.alpha)
    }

    fn gradient_inverse(&self, y: &Vector) -> Result<Vector> {
        Ok(y.map(|v| signed_pow(v / self.alpha, 1.0 / (self.alpha - 1.0))))
    }
}

/// `phi(x) = (sum |x_i|^p)^{1/p}`, homogeneous of order one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PNorm {
    pub p: f64,
    pub n: usize,
}

impl PNorm {
    pub fn new(p: f64, n: usize) -> Result<Self> {
        if !(p > 1.0) || !p.is_finite() || n == 0 {
            return Err(Error::Validation(format!("PNorm needs p > 1 and n > 0, got {p}, {n}")));
        }
        Ok(PNorm { p, n })
    }

    /// `F = phi^p`, the power used by the order-one conjugate.
    pub fn power(&self) -> PowerSum {
        PowerSum { alpha: self.p, n: self.n }
    }
}

impl Potential for PNorm {
    fn dim(&self) -> usize {
        self.n
    }

    fn value(&self, x: &Vector) -> f64 {
        x.iter().map(|v| v.abs().powf(self.p)).sum::<f64>().powf(1.0 / self.p)
    }

    fn gradient(&self, x: &Vector) -> Vector {
        let nv = self.value(x);
        if nv == 0.0 {
            return Vector::zeros(x.len());
        }
        x.map(|v| signed_pow(v / nv, self.p - 1.0))
    }

    fn hessian(&self, x: &Vector) -> DMatrix<f64> {
        let p = self.p;
        let nv = self.value(x);
        let n = x.len();
        if nv == 0.0 {
            return DMatrix::from_element(n, n, f64::INFINITY);
        }
        let g = self.gradient(x);
        let d = DMatrix::from_diagonal(&x.map(|v| (v.abs() / nv).powf(p - 2.0)));
        (d - &g * g.transpose()) * ((p - 1.0) / nv)
    }

    fn tag(&self) -> PotentialTag {
        PotentialTag::Homogeneous(1.0)
    }
}
