//! Numerical kernels and experiments for maximum principles of the Laplacian
//! and fractional Laplacian on balls.
//!
//! The crate is organized bottom-up:
//!
//! * [`quad`] — adaptive integration for singular and improper integrals
//!   (graded endpoint substitutions, logarithmic substitution, exterior-of-ball
//!   mappings, seeded Monte Carlo for dimensions above three);
//! * [`domain`] — ball domains, fractional orders, pointwise-evaluatable
//!   scalar and vector fields with radial/support/decay metadata;
//! * [`norms`] — the L^p, weighted-tail and W^{1,p} functionals;
//! * [`kernels`] — the fundamental solution, Poisson kernel and the two
//!   Green's-function representations on the ball, cross-validated;
//! * [`fracop`] — pointwise principal-value evaluation of the fractional
//!   Laplacian, classical Laplacian, mollification and min-truncation;
//! * [`solvers`] — representation-formula solvers (fractional Dirichlet and
//!   forced problems, classical harmonic extension, radial Poisson);
//! * [`mp`] — the maximum-principle laboratory: the critical-exponent
//!   counterexample family, manufactured coefficient/drift families and the
//!   hypothesis/conclusion checks.

pub mod domain;
pub mod error;
pub mod fracop;
pub mod kernels;
pub mod mp;
pub mod norms;
pub mod quad;
pub mod solvers;

pub use domain::{BallDomain, DecayClass, FracOrder, ScalarField, Support, VectorField};
pub use error::{Error, Result};
pub use quad::{QuadResult, QuadSpec, Tol};

/// Surface area of the unit sphere S^{n-1} in R^n.
pub fn sphere_area(n: usize) -> f64 {
    use statrs::function::gamma::gamma;
    let nf = n as f64;
    2.0 * std::f64::consts::PI.powf(nf / 2.0) / gamma(nf / 2.0)
}

/// Volume of the ball of radius `r` in R^n.
pub fn ball_volume(n: usize, r: f64) -> f64 {
    sphere_area(n) * r.powi(n as i32) / n as f64
}

/// Euclidean norm of a point.
pub fn vec_norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}
