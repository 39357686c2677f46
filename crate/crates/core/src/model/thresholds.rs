use serde::Serialize;

use super::{derive_qr, flux, ModelSpec, Poly1};
use crate::error::{domain_err, Result};
use crate::spaces::besov_nk;
use crate::torus::{laplacian, Field};

/// Value returned when a threshold is unbounded (for instance `p = q = 0`).
pub const DELTA_CAP: f64 = 1e3;

const SAFETY: f64 = 0.99;
const BISECTION_STEPS: usize = 200;
const PD_GRID: usize = 64;

/// Common Euclidean Lipschitz constant of `p` and `q` on `[0,R]²`, from the
/// coefficient bound `|∂ₓp| ≤ Σ i·c_ij R^{i+j−1}` (and likewise for `∂ᵧ`).
pub fn lipschitz_lr(spec: &ModelSpec, r: f64) -> f64 {
    [&spec.p, &spec.q]
        .iter()
        .map(|poly| {
            let (mut gx, mut gy) = (0.0, 0.0);
            for (i, j, c) in poly.terms() {
                let w = c.abs() * r.powi((i + j) as i32 - 1);
                gx += i as f64 * w;
                gy += j as f64 * w;
            }
            gx.hypot(gy)
        })
        .fold(0.0, f64::max)
}

/// Constants of the H⁻¹ stability estimate for a pair of solutions bounded
/// by `R` and `δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StabilityConstants {
    pub lipschitz: f64,
    /// `min(d₁,d₂) − L_R²δ²(1/d₁ + 1/d₂)`.
    pub c_delta: f64,
    /// `c_delta > 0`.
    pub admissible: bool,
    /// The weaker condition `(δL_R)²(1/d₁ + 1/d₂) < max(d₁,d₂)`, which does
    /// not by itself make `c_delta` positive when `d₁ ≠ d₂`.
    pub max_condition: bool,
}

pub fn stability_constants(spec: &ModelSpec, r: f64, delta: f64) -> Result<StabilityConstants> {
    if !(r > 0.0 && delta > 0.0) {
        return domain_err(format!(
            "R and delta must be positive, got R={r}, delta={delta}"
        ));
    }
    if delta > r {
        return domain_err(format!("delta={delta} exceeds R={r}"));
    }
    let lipschitz = lipschitz_lr(spec, r);
    let penalty = (lipschitz * delta).powi(2) * (1.0 / spec.d1 + 1.0 / spec.d2);
    let c_delta = spec.d1.min(spec.d2) - penalty;
    Ok(StabilityConstants {
        lipschitz,
        c_delta,
        admissible: c_delta > 0.0,
        max_condition: penalty < spec.d1.max(spec.d2),
    })
}

/// Largest `δ` (times 0.99) with `C_δ > 0` when both solutions are bounded
/// by `R = δ`.
pub fn stability_delta_max(spec: &ModelSpec) -> f64 {
    let c = |delta: f64| {
        let l = lipschitz_lr(spec, delta);
        spec.d1.min(spec.d2) - (l * delta).powi(2) * (1.0 / spec.d1 + 1.0 / spec.d2)
    };
    bisect_last_true(|x| c(x) > 0.0)
}

fn pd_on_square(spec: &ModelSpec, delta: f64) -> bool {
    let p = spec.p.as_poly();
    let q = spec.q.as_poly();
    let (px, py) = (p.partial(super::Axis::X), p.partial(super::Axis::Y));
    let (qx, qy) = (q.partial(super::Axis::X), q.partial(super::Axis::Y));
    let pd_at = |a: f64, b: f64| {
        let m11 = spec.d1 / 2.0 - (a * px.eval(a, b)).abs();
        let m22 = spec.d2 / 2.0 - (b * qy.eval(a, b)).abs();
        let off = -0.5 * ((a * py.eval(a, b)).abs() + (b * qx.eval(a, b)).abs());
        m11 > 0.0 && m11 * m22 - off * off > 0.0
    };
    let step = delta / (PD_GRID - 1) as f64;
    (0..PD_GRID).all(|i| (0..PD_GRID).all(|j| pd_at(i as f64 * step, j as f64 * step)))
        && pd_at(delta, delta)
}

/// `δ_A`: the symmetric part of the linearized flux matrix stays positive
/// definite on `[0, δ_A]²`.
pub fn find_delta_a(spec: &ModelSpec) -> f64 {
    bisect_last_true(|d| pd_on_square(spec, d))
}

/// `0.99·sup{δ : P(x) < x/2 on (0, δ]}`.
pub fn bootstrap_delta(p: &Poly1) -> f64 {
    bisect_last_true(|x| p.eval_over_x(x) < 0.5)
}

/// Bootstrap polynomial `P(x) = x·Σᵢ (|Qᵢ| + |Rᵢ|)(x, x)`, i.e. the
/// feedback of the flux equations with every hidden constant set to 1.
pub fn bootstrap_polynomial(spec: &ModelSpec) -> Poly1 {
    let qr = derive_qr(spec);
    let mut coeffs = Vec::new();
    for poly in [&qr.q1, &qr.r1, &qr.q2, &qr.r2] {
        for (n, c) in poly.abs_coeffs().diagonal().into_iter().enumerate() {
            if coeffs.len() < n + 2 {
                coeffs.resize(n + 2, 0.0);
            }
            coeffs[n + 1] += c;
        }
    }
    Poly1::new(coeffs).expect("Q and R vanish at the origin")
}

/// `0.99·sup{x : pred holds on (0, x]}`, or [`DELTA_CAP`] when `pred` still
/// holds at the cap. Assumes `pred` holds on an initial interval only.
fn bisect_last_true(pred: impl Fn(f64) -> bool) -> f64 {
    if pred(DELTA_CAP) {
        return DELTA_CAP;
    }
    let (mut lo, mut hi) = (0.0, DELTA_CAP);
    for _ in 0..BISECTION_STEPS {
        let mid = 0.5 * (lo + hi);
        if pred(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    SAFETY * lo
}

/// The three computable smallness levels and their minimum.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thresholds {
    pub delta_a: f64,
    pub stability: f64,
    pub bootstrap: f64,
    pub min: f64,
}

pub fn thresholds(spec: &ModelSpec) -> Thresholds {
    let delta_a = find_delta_a(spec);
    let stability = stability_delta_max(spec);
    let bootstrap = bootstrap_delta(&bootstrap_polynomial(spec));
    Thresholds {
        delta_a,
        stability,
        bootstrap,
        min: delta_a.min(stability).min(bootstrap),
    }
}

/// `‖u‖_∞ + ‖v‖_∞ + N_k(ΔΦ₁) + N_k(ΔΦ₂)` for initial data `(u, v)`.
pub fn smallness_functional(
    u: &Field,
    v: &Field,
    spec: &ModelSpec,
    k: f64,
    tol: f64,
) -> Result<f64> {
    if u.min() < 0.0 || v.min() < 0.0 {
        return domain_err("initial data must be nonnegative");
    }
    let d = u.grid().dim() as f64;
    if k <= 1.0 + d / 2.0 {
        log::warn!("k = {k} does not exceed 1 + d/2 = {}", 1.0 + d / 2.0);
    }
    let (f1, f2) = flux(spec, u, v)?;
    Ok(u.max_abs()
        + v.max_abs()
        + besov_nk(&laplacian(&f1), k, tol)?
        + besov_nk(&laplacian(&f2), k, tol)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Poly2;
    use crate::torus::TorusGrid;
    use rand::{Rng, SeedableRng};
    use std::f64::consts::PI;

    fn spec(d1: f64, d2: f64, p: &[(u32, u32, f64)], q: &[(u32, u32, f64)]) -> ModelSpec {
        ModelSpec::new(
            d1,
            d2,
            Poly2::from_terms(p).unwrap(),
            Poly2::from_terms(q).unwrap(),
        )
        .unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() < tol, "{a} vs {b}");
    }

    #[test]
    fn lipschitz_examples() {
        let lin = spec(
            1.0,
            1.0,
            &[(1, 0, 1.0), (0, 1, 1.0)],
            &[(1, 0, 1.0), (0, 1, 1.0)],
        );
        for r in [0.1, 1.0, 7.0] {
            close(lipschitz_lr(&lin, r), 2f64.sqrt(), 1e-15);
        }
        assert_eq!(lipschitz_lr(&spec(1.0, 1.0, &[], &[]), 1.0), 0.0);
        close(lipschitz_lr(&ModelSpec::nonconvex(), 1.0), 2.0, 1e-15);
    }

    #[test]
    fn lipschitz_is_a_true_bound() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let s = spec(
            1.0,
            1.0,
            &[(1, 0, 0.3), (1, 1, 0.7), (0, 3, 0.2)],
            &[(2, 0, 1.1), (0, 1, 0.4)],
        );
        let r = 1.7;
        let l = lipschitz_lr(&s, r);
        for _ in 0..10_000 {
            let (a1, b1, a2, b2) = (
                rng.gen_range(0.0..r),
                rng.gen_range(0.0..r),
                rng.gen_range(0.0..r),
                rng.gen_range(0.0..r),
            );
            let dist = (a1 - a2).hypot(b1 - b2);
            for poly in [&s.p, &s.q] {
                let diff = (poly.eval(a1, b1) - poly.eval(a2, b2)).abs();
                assert!(diff <= l * dist * (1.0 + 1e-12) + 1e-15);
            }
        }
    }

    #[test]
    fn stability_constant_examples() {
        let lin = spec(
            1.0,
            1.0,
            &[(1, 0, 1.0), (0, 1, 1.0)],
            &[(1, 0, 1.0), (0, 1, 1.0)],
        );
        let c = stability_constants(&lin, 1.0, 0.3).unwrap();
        close(c.c_delta, 0.64, 1e-12);
        assert!(c.admissible);
        let c = stability_constants(&lin, 1.0, 0.5).unwrap();
        close(c.c_delta, 0.0, 1e-12);
        assert!(!c.admissible);
        let c = stability_constants(&spec(2.0, 3.0, &[], &[]), 1.0, 0.9).unwrap();
        assert_eq!(c.c_delta, 2.0);
        assert!(stability_constants(&lin, 0.2, 0.3).is_err());
    }

    #[test]
    fn max_and_min_conditions_can_disagree() {
        let s = spec(0.1, 10.0, &[(1, 0, 1.0)], &[(0, 1, 1.0)]);
        let c = stability_constants(&s, 0.5, 0.5).unwrap();
        assert!(c.max_condition && !c.admissible);
    }

    #[test]
    fn delta_a_examples() {
        assert_eq!(find_delta_a(&spec(1.0, 1.0, &[], &[])), DELTA_CAP);
        close(find_delta_a(&ModelSpec::nonconvex()), 0.495, 1e-9);
        let half = [(1, 0, 0.5), (0, 1, 0.5)];
        close(find_delta_a(&spec(1.0, 1.0, &half, &half)), 0.495, 1e-9);
    }

    #[test]
    fn delta_a_matches_dense_eigenvalue_scan() {
        let lin = [(1, 0, 1.0), (0, 1, 1.0)];
        let s = spec(1.0, 1.0, &lin, &lin);
        let min_eig = |delta: f64| {
            let mut worst = f64::INFINITY;
            let n = 200;
            for i in 0..=n {
                for j in 0..=n {
                    let (a, b) = (delta * i as f64 / n as f64, delta * j as f64 / n as f64);
                    let m11 = 0.5 - a;
                    let m22 = 0.5 - b;
                    let off = -0.5 * (a + b);
                    let tr = m11 + m22;
                    let det = m11 * m22 - off * off;
                    let disc = (tr * tr / 4.0 - det).max(0.0).sqrt();
                    worst = worst.min(tr / 2.0 - disc);
                }
            }
            worst
        };
        let da = find_delta_a(&s);
        assert!(min_eig(da) > 0.0);
        assert!(min_eig(da / 0.99 * 1.001) < 0.0);
        close(da / 0.99, 0.25, 1e-9);
    }

    #[test]
    fn bootstrap_examples() {
        let p = |c: Vec<f64>| Poly1::new(c).unwrap();
        close(bootstrap_delta(&p(vec![0.0, 0.0, 1.0])), 0.495, 1e-12);
        close(
            bootstrap_delta(&p(vec![0.0, 0.0, 0.0, 1.0])),
            0.99 / 2f64.sqrt(),
            1e-12,
        );
        let root = (3f64.sqrt() - 1.0) / 2.0;
        close(
            bootstrap_delta(&p(vec![0.0, 0.0, 1.0, 1.0])),
            0.99 * root,
            1e-12,
        );
        assert_eq!(bootstrap_delta(&p(vec![])), DELTA_CAP);
    }

    #[test]
    fn bootstrap_output_satisfies_the_strict_condition() {
        let p = Poly1::new(vec![0.0, 0.0, 0.3, 2.0, 0.5]).unwrap();
        let d = bootstrap_delta(&p);
        for i in 1..=10_000 {
            let x = d * i as f64 / 10_000.0;
            assert!(p.eval(x) < x / 2.0);
        }
    }

    #[test]
    fn skt_thresholds() {
        let half = [(1, 0, 0.5), (0, 1, 0.5)];
        let s = spec(1.0, 1.0, &half, &half);
        assert_eq!(bootstrap_polynomial(&s).coeffs(), &[0.0, 0.0, 4.0]);
        let t = thresholds(&s);
        close(t.delta_a, 0.495, 1e-9);
        close(t.stability, 0.99, 1e-9);
        close(t.bootstrap, 0.12375, 1e-12);
        assert_eq!(t.min, t.bootstrap);
    }

    #[test]
    fn smallness_examples() {
        let g = TorusGrid::new(1, 64).unwrap();
        let s = spec(1.0, 1.0, &[(1, 1, 2.0)], &[(2, 0, 1.0)]);
        let z = Field::zeros(g);
        assert_eq!(smallness_functional(&z, &z, &s, 2.0, 1e-10).unwrap(), 0.0);
        let c = Field::constant(g, 0.3);
        close(
            smallness_functional(&c, &z, &s, 2.0, 1e-10).unwrap(),
            0.3,
            1e-12,
        );
        let u = Field::from_fn(g, |[x, _]| 0.01 * (1.0 + (2.0 * PI * x).cos()));
        let heat = spec(1.0, 1.0, &[], &[]);
        let expected = u.max_abs() + 0.01 * PI;
        close(
            smallness_functional(&u, &z, &heat, 2.0, 1e-10).unwrap(),
            expected,
            1e-6,
        );
        assert!(smallness_functional(&c.map(|x| -x), &z, &s, 2.0, 1e-10).is_err());
    }
}
