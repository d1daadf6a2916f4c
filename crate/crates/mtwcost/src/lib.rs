//! Costs of the form `c(x, xbar) = u(x^t xbar)`: cross-curvature and regularity, optimal maps
//! and conjugates, hyperbolic divergences, and mirror sampling of multivariate t laws.

pub mod divergence;
pub mod error;
pub mod euclid;
pub mod fd;
pub mod io;
pub mod manifold;
pub mod sampler;
pub mod scalar;
pub mod tol;
pub mod transport;

pub use error::{Error, Result};
pub use scalar::{Family, ScalarCost};
pub use tol::Tolerance;
