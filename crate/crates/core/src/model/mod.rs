//! Symbolic layer of the cross-diffusion system
//! `∂ₜu − Δ[(d₁ + p(u,v))u] = 0`, `∂ₜv − Δ[(d₂ + q(u,v))v] = 0`:
//! polynomials, fluxes, the derived polynomials of the flux evolution, and
//! the explicit smallness thresholds.

mod poly;
mod thresholds;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, Result};
use crate::torus::{dealias_pad, inverse, poly_spectral, transform, Field, SpectralField};

pub use poly::{Axis, BiPoly, Poly1, Poly2};
pub use thresholds::{
    bootstrap_delta, bootstrap_polynomial, find_delta_a, lipschitz_lr, smallness_functional,
    stability_constants, stability_delta_max, thresholds, StabilityConstants, Thresholds,
    DELTA_CAP,
};

/// Parameters of the system: diffusion constants, mobility polynomials and
/// the optional regularization (mollifier width `eta`, truncation level).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub d1: f64,
    pub d2: f64,
    pub p: Poly2,
    pub q: Poly2,
    #[serde(default)]
    pub eta: Option<f64>,
    #[serde(default)]
    pub trunc_delta: Option<f64>,
}

impl ModelSpec {
    pub fn new(d1: f64, d2: f64, p: Poly2, q: Poly2) -> Result<Self> {
        let spec = ModelSpec {
            d1,
            d2,
            p,
            q,
            eta: None,
            trunc_delta: None,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Linear SKT rates `p = a₁X + b₁Y`, `q = a₂X + b₂Y`.
    pub fn skt(d1: f64, d2: f64, a1: f64, b1: f64, a2: f64, b2: f64) -> Result<Self> {
        ModelSpec::new(
            d1,
            d2,
            Poly2::from_terms(&[(1, 0, a1), (0, 1, b1)])?,
            Poly2::from_terms(&[(1, 0, a2), (0, 1, b2)])?,
        )
    }

    /// `d₁ = d₂ = 1`, `p = Y²`, `q = X²`: the system with the non-convex
    /// Lyapunov functional `∫(1+u²)(1+v²)`.
    pub fn nonconvex() -> Self {
        ModelSpec::new(
            1.0,
            1.0,
            Poly2::from_terms(&[(0, 2, 1.0)]).unwrap(),
            Poly2::from_terms(&[(2, 0, 1.0)]).unwrap(),
        )
        .unwrap()
    }

    pub fn is_nonconvex_example(&self) -> bool {
        self.d1 == 1.0
            && self.d2 == 1.0
            && *self.p.as_poly() == BiPoly::from_terms(&[(0, 2, 1.0)])
            && *self.q.as_poly() == BiPoly::from_terms(&[(2, 0, 1.0)])
    }

    pub fn with_regularization(mut self, eta: f64, trunc_delta: f64) -> Result<Self> {
        self.eta = Some(eta);
        self.trunc_delta = Some(trunc_delta);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d1 > 0.0 && self.d1.is_finite() && self.d2 > 0.0 && self.d2.is_finite()) {
            return config_err(format!(
                "diffusion constants must be positive, got d1={}, d2={}",
                self.d1, self.d2
            ));
        }
        for (name, v) in [("eta", self.eta), ("trunc_delta", self.trunc_delta)] {
            if let Some(x) = v {
                if !(x > 0.0 && x.is_finite()) {
                    return config_err(format!("{name} must be positive, got {x}"));
                }
            }
        }
        Ok(())
    }

    /// `Φ₁ = (d₁ + p)X` and `Φ₂ = (d₂ + q)Y` as polynomials.
    pub fn flux_polys(&self) -> (BiPoly, BiPoly) {
        let x = BiPoly::var(Axis::X);
        let y = BiPoly::var(Axis::Y);
        (
            BiPoly::constant(self.d1).add(self.p.as_poly()).mul(&x),
            BiPoly::constant(self.d2).add(self.q.as_poly()).mul(&y),
        )
    }

    /// Nonlinear parts `p·X` and `q·Y` of the fluxes.
    pub fn nonlinear_polys(&self) -> (BiPoly, BiPoly) {
        (
            self.p.as_poly().mul(&BiPoly::var(Axis::X)),
            self.q.as_poly().mul(&BiPoly::var(Axis::Y)),
        )
    }

    /// Zero-padding factor for the flux evaluation, from the flux degree.
    pub fn flux_pad(&self) -> f64 {
        let (f1, f2) = self.flux_polys();
        dealias_pad(f1.degree().max(f2.degree()))
    }

    /// Jacobian of `(u,v) ↦ (Φ₁, Φ₂)` at `(a, b)`.
    pub fn flux_jacobian(&self, a: f64, b: f64) -> [[f64; 2]; 2] {
        let (f1, f2) = self.flux_polys();
        [
            [
                f1.partial(Axis::X).eval(a, b),
                f1.partial(Axis::Y).eval(a, b),
            ],
            [
                f2.partial(Axis::X).eval(a, b),
                f2.partial(Axis::Y).eval(a, b),
            ],
        ]
    }
}

/// Dealiased fluxes `(Φ₁, Φ₂)` of a state.
pub fn flux(spec: &ModelSpec, u: &Field, v: &Field) -> Result<(Field, Field)> {
    u.ensure_same_grid(v)?;
    let (a, b) = flux_spectral(spec, &transform(u), &transform(v))?;
    Ok((inverse(&a), inverse(&b)))
}

pub(crate) fn flux_spectral(
    spec: &ModelSpec,
    u: &SpectralField,
    v: &SpectralField,
) -> Result<(SpectralField, SpectralField)> {
    let (f1, f2) = spec.flux_polys();
    let pad = spec.flux_pad();
    Ok((
        poly_spectral(&f1, u, v, pad)?,
        poly_spectral(&f2, u, v, pad)?,
    ))
}

/// Polynomials with `∂ₜΦᵢ − dᵢΔΦᵢ = Qᵢ(u,v)ΔΦᵢ + Rᵢ(u,v)ΔΦⱼ`.
#[derive(Clone, Debug, PartialEq)]
pub struct FluxCoupling {
    pub q1: BiPoly,
    pub r1: BiPoly,
    pub q2: BiPoly,
    pub r2: BiPoly,
}

/// Chain rule on `Φ₁ = (d₁+p)u`: `Q₁ = p + X∂ₓp`, `R₁ = X∂ᵧp`, and symmetrically
/// `Q₂ = q + Y∂ᵧq`, `R₂ = Y∂ₓq`.
pub fn derive_qr(spec: &ModelSpec) -> FluxCoupling {
    let x = BiPoly::var(Axis::X);
    let y = BiPoly::var(Axis::Y);
    let p = spec.p.as_poly();
    let q = spec.q.as_poly();
    FluxCoupling {
        q1: p.add(&x.mul(&p.partial(Axis::X))),
        r1: x.mul(&p.partial(Axis::Y)),
        q2: q.add(&y.mul(&q.partial(Axis::Y))),
        r2: y.mul(&q.partial(Axis::X)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::{laplacian, random_trig_field, TorusGrid};
    use rand::{Rng, SeedableRng};

    #[test]
    fn flux_examples() {
        let g = TorusGrid::new(1, 16).unwrap();
        let skt = ModelSpec::skt(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let z = Field::zeros(g);
        let (a, b) = flux(&skt, &z, &z).unwrap();
        assert!(a.max_abs() == 0.0 && b.max_abs() == 0.0);
        let c = Field::constant(g, 0.1);
        let (a, _) = flux(&skt, &c, &c).unwrap();
        assert!(a.values().iter().all(|x| (x - 0.12).abs() < 1e-15));
        let (a, _) = flux(
            &ModelSpec::nonconvex(),
            &Field::constant(g, 1.0),
            &Field::constant(g, 2.0),
        )
        .unwrap();
        assert!(a.values().iter().all(|x| (x - 5.0).abs() < 1e-13));
    }

    #[test]
    fn derive_qr_examples() {
        let g = |p: &[(u32, u32, f64)]| {
            ModelSpec::new(1.0, 1.0, Poly2::from_terms(p).unwrap(), Poly2::zero()).unwrap()
        };
        let qr = derive_qr(&g(&[(1, 1, 1.0)]));
        assert_eq!(qr.q1, BiPoly::from_terms(&[(1, 1, 2.0)]));
        assert_eq!(qr.r1, BiPoly::from_terms(&[(2, 0, 1.0)]));
        let qr = derive_qr(&g(&[]));
        assert!(qr.q1.is_zero() && qr.r1.is_zero());
        let (a1, b1) = (0.7, 1.3);
        let qr = derive_qr(&g(&[(1, 0, a1), (0, 1, b1)]));
        assert_eq!(qr.q1, BiPoly::from_terms(&[(1, 0, 2.0 * a1), (0, 1, b1)]));
        assert_eq!(qr.r1, BiPoly::from_terms(&[(1, 0, b1)]));
    }

    fn random_spec<R: Rng>(rng: &mut R) -> ModelSpec {
        let rand_poly = |rng: &mut R| {
            let mut terms = Vec::new();
            for i in 0..=3u32 {
                for j in 0..=(3 - i) {
                    if i + j > 0 && rng.gen_bool(0.5) {
                        terms.push((i, j, rng.gen_range(0.0..2.0)));
                    }
                }
            }
            Poly2::from_terms(&terms).unwrap()
        };
        let p = rand_poly(rng);
        let q = rand_poly(rng);
        ModelSpec::new(rng.gen_range(0.5..2.0), rng.gen_range(0.5..2.0), p, q).unwrap()
    }

    #[test]
    fn coupling_polynomials_reproduce_the_chain_rule() {
        let g = TorusGrid::new(1, 64).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for _ in 0..20 {
            let spec = random_spec(&mut rng);
            let u = random_trig_field(g, &mut rng, |xi| xi[0].abs() <= 3).map(|x| 0.5 + 0.1 * x);
            let v = random_trig_field(g, &mut rng, |xi| xi[0].abs() <= 3).map(|x| 0.4 + 0.1 * x);
            let (f1, f2) = flux(&spec, &u, &v).unwrap();
            let (l1, l2) = (laplacian(&f1), laplacian(&f2));
            let qr = derive_qr(&spec);
            let p = spec.p.as_poly();
            let (px, py) = (p.partial(Axis::X), p.partial(Axis::Y));
            for i in 0..g.len() {
                let (a, b) = (u.values()[i], v.values()[i]);
                let lhs = qr.q1.eval(a, b) * l1.values()[i] + qr.r1.eval(a, b) * l2.values()[i];
                let rhs = (p.eval(a, b) + a * px.eval(a, b)) * l1.values()[i]
                    + a * py.eval(a, b) * l2.values()[i];
                assert!((lhs - rhs).abs() < 1e-10 * (1.0 + rhs.abs()));
            }
            for poly in [&qr.q1, &qr.r1, &qr.q2, &qr.r2] {
                assert_eq!(poly.eval(0.0, 0.0), 0.0);
            }
        }
    }

    #[test]
    fn jacobian_at_origin_is_diagonal() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let spec = random_spec(&mut rng);
            let j = spec.flux_jacobian(0.0, 0.0);
            assert_eq!(j, [[spec.d1, 0.0], [0.0, spec.d2]]);
        }
    }

    #[test]
    fn spec_validation() {
        assert!(ModelSpec::new(0.0, 1.0, Poly2::zero(), Poly2::zero()).is_err());
        let s = ModelSpec::nonconvex();
        assert!(s.is_nonconvex_example());
        assert!(s.clone().with_regularization(-1.0, 1.0).is_err());
        assert_eq!(s.flux_pad(), 2.0);
    }
}
