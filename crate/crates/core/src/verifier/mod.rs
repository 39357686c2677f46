//! Numerical checks of the estimates satisfied by solutions: each checker
//! evaluates both sides of an inequality (or identity) along a trajectory and
//! returns a [`Report`] with the measured margins.

mod duality;
mod dynamics;
mod report;
mod trackers;

use rustfft::num_complex::Complex64;

use crate::torus::{transform, Field, SpectralField};
use crate::FOUR_PI_SQ;

pub use duality::{check_duality, DUALITY_TOL};
pub use dynamics::{
    check_energy_decay, check_lyapunov_nonconvex, check_mass, check_stability_pair, fit_decay_rate,
    fit_log_linear, lyapunov_energy, lyapunov_refinement, LyapunovRefinement, DECAY_R2_MIN,
    LYAPUNOV_TOL, STABILITY_TOL,
};
pub use report::Report;
pub use trackers::{track_hk, track_lambda, HkTrack, LambdaTrack};

/// `∫|∇f|² = Σ 4π²|ξ|²|f̂(ξ)|²`.
pub fn dirichlet_energy(field: &Field) -> f64 {
    transform(field).weighted_norm_sq(|k2| FOUR_PI_SQ * k2)
}

/// Spectral gradient, one field per axis. Nyquist entries are dropped since
/// their derivative is not representable on the grid.
pub fn gradient(field: &Field) -> Vec<Field> {
    let spec = transform(field);
    let g = field.grid();
    let half = (g.n() / 2) as i64;
    (0..g.dim())
        .map(|axis| {
            let coeffs = spec
                .coeffs()
                .iter()
                .enumerate()
                .map(|(i, c)| {
                    let xi = g.wave_vector(i);
                    if xi[..g.dim()].contains(&half) {
                        Complex64::new(0.0, 0.0)
                    } else {
                        c * Complex64::new(0.0, 2.0 * std::f64::consts::PI * xi[axis] as f64)
                    }
                })
                .collect();
            SpectralField::from_coeffs(g, coeffs)
                .expect("sizes match")
                .to_field()
        })
        .collect()
}

/// `‖f‖²_{H⁻¹}` with weight `(1 + 4π²|ξ|²)^{-1}`, mean included.
pub(crate) fn h_minus_one_sq(field: &Field) -> f64 {
    transform(field).weighted_norm_sq(|k2| 1.0 / (1.0 + FOUR_PI_SQ * k2))
}
