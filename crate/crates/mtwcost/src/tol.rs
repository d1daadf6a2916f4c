/// Absolute and relative tolerances threaded through scalar solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub atol: f64,
    pub rtol: f64,
    pub max_iter: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { atol: 1e-12, rtol: 1e-10, max_iter: 200 }
    }
}

impl Tolerance {
    pub fn accepts(&self, residual: f64, scale: f64) -> bool {
        residual.abs() <= self.atol + self.rtol * scale.abs()
    }
}
