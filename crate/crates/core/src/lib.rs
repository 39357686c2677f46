//! Pseudo-spectral simulation of two-species cross-diffusion systems
//!
//! ```text
//! ∂ₜu − Δ[(d₁ + p(u,v))u] = 0,   ∂ₜv − Δ[(d₂ + q(u,v))v] = 0   on 𝕋^d = [0,1)^d,
//! ```
//!
//! with `p, q` polynomials with nonnegative coefficients vanishing at the
//! origin, together with numerical checks of the small-data theory of these
//! systems: duality estimates, exponential relaxation, H⁻¹ stability, the
//! λ(T) bootstrap, a non-convex Lyapunov identity and a non-compactness
//! counterexample.
//!
//! ```
//! use crossflux::model::ModelSpec;
//! use crossflux::solver::{simulate, RunConfig, State};
//! use crossflux::torus::{Field, TorusGrid};
//!
//! let grid = TorusGrid::new(1, 32).unwrap();
//! let u0 = Field::from_fn(grid, |[x, _]| 0.05 * (1.0 + (2.0 * std::f64::consts::PI * x).cos()));
//! let spec = ModelSpec::skt(1.0, 1.0, 0.5, 0.5, 0.5, 0.5).unwrap();
//! let config = RunConfig::new(spec, State::new(0.0, u0.clone(), u0).unwrap(), 1e-3, 0.1);
//! let traj = simulate(&config).unwrap();
//! assert!((traj.last().u.mean() - 0.05).abs() < 1e-13);
//! ```

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod counterexample;
pub mod error;
pub mod io;
pub mod model;
pub mod solver;
pub mod spaces;
pub mod torus;
pub mod verifier;

pub use error::{Error, Result};

/// `4π²`, the Laplacian eigenvalue of the lowest mode on `[0,1)^d`.
pub const FOUR_PI_SQ: f64 = 4.0 * std::f64::consts::PI * std::f64::consts::PI;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/torus.md")]
    mod torus {}
    #[doc = include_str!("../../../book/src/spaces.md")]
    mod spaces {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/solver.md")]
    mod solver {}
    #[doc = include_str!("../../../book/src/verifier.md")]
    mod verifier {}
    #[doc = include_str!("../../../book/src/counterexample.md")]
    mod counterexample {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
