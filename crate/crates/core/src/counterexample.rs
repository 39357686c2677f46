//! Bounded, non-compact families `(u_n, v_n)` whose fluxes
//! `u_n(1+v_n²)` and `v_n(1+u_n²)` are both identically 3.
//!
//! With `h_n` the dyadic square waves, `v_n` jumps between the two positive
//! roots of `X² − 3X + 1` and `u_n = 3/(1+v_n²)`. Since
//! `(X²−3X+1)(X³+X−3) = (X²+1)²X − 3(X²+1)² + 9X`, any value of `v_n`
//! satisfies `v_n(1+u_n²) = 3` as well.

use crate::error::{domain_err, Result};
use crate::spaces::sobolev_norm;
use crate::torus::{Field, TorusGrid};
use crate::verifier::Report;

/// Tolerance of the pointwise identities.
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance of the quintic residual.
pub const QUINTIC_TOL: f64 = 1e-10;

/// Positive roots of `P(X) = (X²−3X+1)(X³+X−3)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuinticRoots {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
}

/// `P(X) = (X²−3X+1)(X³+X−3)`.
pub fn quintic(x: f64) -> f64 {
    (x * x - 3.0 * x + 1.0) * (x * x * x + x - 3.0)
}

fn quintic_expanded(x: f64) -> f64 {
    let s = x * x + 1.0;
    s * s * x - 3.0 * s * s + 9.0 * x
}

/// `r₁ < r₂` in closed form, `r₃` by bisection on `[1, 1.5]`.
///
/// ```
/// let r = crossflux::counterexample::quintic_roots();
/// assert!((r.r1 - 0.3819660113).abs() < 1e-9);
/// assert!((r.r2 - 2.6180339887).abs() < 1e-9);
/// assert!((r.r3 - 1.2134116628).abs() < 1e-9);
/// ```
pub fn quintic_roots() -> QuinticRoots {
    let s5 = 5f64.sqrt();
    let cubic = |x: f64| x * x * x + x - 3.0;
    let (mut lo, mut hi) = (1.0f64, 1.5f64);
    while hi - lo > 4.0 * f64::EPSILON {
        let mid = 0.5 * (lo + hi);
        if cubic(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let roots = QuinticRoots {
        r1: 0.5 * (3.0 - s5),
        r2: 0.5 * (3.0 + s5),
        r3: 0.5 * (lo + hi),
    };
    let worst = (0..100)
        .map(|i| {
            let x = -3.0 + 6.0 * i as f64 / 99.0;
            (quintic(x) - quintic_expanded(x)).abs() / (1.0 + x.abs().powi(5))
        })
        .fold(0.0, f64::max);
    debug_assert!(worst < 1e-12, "expansion mismatch {worst}");
    roots
}

/// Samples of `x ↦ ψ(2ⁿx₁)`, `ψ = 1_(0,½) − 1_(½,1)` extended periodically.
///
/// Cell `i` has center `(2i+1)/(2N)`, so the sign is read off
/// `(2i+1)·2ⁿ mod 2N` in integer arithmetic. Requires `2ⁿ⁺¹ | N`.
pub fn staircase(n: u32, grid: TorusGrid) -> Result<Field> {
    let big_n = grid.n() as u64;
    if n == 0 || n >= 62 || !big_n.is_multiple_of(1u64 << (n + 1)) {
        return domain_err(format!(
            "level {n} needs 2^(n+1) to divide the grid size {big_n}"
        ));
    }
    let values = (0..grid.len())
        .map(|flat| {
            let i = grid.multi_index(flat)[0] as u64;
            let m = ((2 * i + 1) << n) % (2 * big_n);
            if m < big_n {
                1.0
            } else {
                -1.0
            }
        })
        .collect();
    Field::new(grid, values)
}

/// One member of the family.
#[derive(Clone, Debug)]
pub struct StaircasePair {
    pub n: u32,
    pub h: Field,
    pub u: Field,
    pub v: Field,
}

/// `v_n = r₂(1+h_n)/2 + r₁(1−h_n)/2`, `u_n = 3/(1+v_n²)`.
pub fn build_pair(n: u32, grid: TorusGrid) -> Result<StaircasePair> {
    let r = quintic_roots();
    let h = staircase(n, grid)?;
    let v = h.map(|s| if s > 0.0 { r.r2 } else { r.r1 });
    let u = v.map(|y| 3.0 / (1.0 + y * y));
    Ok(StaircasePair { n, h, u, v })
}

fn l2_dist(a: &Field, b: &Field) -> f64 {
    let h = a.grid().cell_volume();
    (a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        * h)
        .sqrt()
}

/// Verifies the whole construction for `n = 1..=n_max`: orthonormality of
/// `h_n`, the constant pairwise distance `(r₂−r₁)/√2` of `v_n`, constancy of
/// both fluxes, and the quintic `u⁵ − Φu⁴ + 2u³ − 2Φu² + (1+Ψ²)u − Φ = 0`
/// with `Φ = Ψ = 3`.
pub fn verify_counterexample(n_max: u32, grid: TorusGrid) -> Result<Report> {
    if n_max == 0 {
        return domain_err("at least one level is needed");
    }
    let roots = quintic_roots();
    let pairs: Vec<StaircasePair> = (1..=n_max)
        .map(|n| build_pair(n, grid))
        .collect::<Result<_>>()?;

    let mut gram_err: f64 = 0.0;
    let mut dist_err: f64 = 0.0;
    let mut dist_min = f64::INFINITY;
    let target = (roots.r2 - roots.r1) / 2f64.sqrt();
    for (a, pa) in pairs.iter().enumerate() {
        for (b, pb) in pairs.iter().enumerate() {
            let g = pa.h.dot(&pb.h)?;
            gram_err = gram_err.max((g - if a == b { 1.0 } else { 0.0 }).abs());
            if a != b {
                let d = l2_dist(&pa.v, &pb.v);
                dist_err = dist_err.max((d - target).abs());
                dist_min = dist_min.min(d);
            }
        }
    }

    let (phi, psi) = (3.0, 3.0);
    let coeffs = [-phi, 1.0 + psi * psi, -2.0 * phi, 2.0, -phi, 1.0];
    let mut product_err: f64 = 0.0;
    let mut product_h1: f64 = 0.0;
    let mut quintic_res: f64 = 0.0;
    let mut sup_u: f64 = 0.0;
    let mut sup_v: f64 = 0.0;
    for p in &pairs {
        let f1 = p.u.zip_with(&p.v, |u, v| u * (1.0 + v * v))?;
        let f2 = p.v.zip_with(&p.u, |v, u| v * (1.0 + u * u))?;
        product_err = product_err
            .max(f1.map(|x| x - phi).max_abs())
            .max(f2.map(|x| x - psi).max_abs());
        product_h1 = product_h1
            .max(sobolev_norm(&f1.mean_free(), 1.0))
            .max(sobolev_norm(&f2.mean_free(), 1.0));
        for &u in p.u.values() {
            let r = coeffs.iter().rev().fold(0.0, |acc, c| acc * u + c);
            quintic_res = quintic_res.max(r.abs());
        }
        sup_u = sup_u.max(p.u.max_abs());
        sup_v = sup_v.max(p.v.max_abs());
    }
    if n_max < 2 {
        dist_min = 0.0;
    }

    let pass = gram_err < IDENTITY_TOL
        && (n_max < 2 || dist_err < IDENTITY_TOL)
        && product_err < IDENTITY_TOL
        && quintic_res < QUINTIC_TOL;
    Ok(Report::new(
        "counterexample",
        "bounded sequences with constant fluxes that are not relatively compact in L2",
        IDENTITY_TOL,
    )
    .measure("n_max", n_max as f64)
    .measure("grid_n", grid.n() as f64)
    .measure("gram_error", gram_err)
    .measure("distance_target", target)
    .measure("distance_error", dist_err)
    .measure("distance_min", dist_min)
    .measure("product_error", product_err)
    .measure("product_h1", product_h1)
    .measure("quintic_residual", quintic_res)
    .measure("sup_u", sup_u)
    .measure("sup_v", sup_v)
    .with_pass(pass))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn roots_are_roots() {
        let r = quintic_roots();
        assert!(r.r1 < r.r2 && r.r1 > 0.0 && r.r3 > 0.0);
        for x in [r.r1, r.r2, r.r3] {
            assert!(quintic(x).abs() < 1e-14, "{}", quintic(x));
        }
        assert!((3.0 / (1.0 + r.r1 * r.r1) - r.r2).abs() < 1e-14);
    }

    #[test]
    fn expansion_identity() {
        for i in 0..100 {
            let x = -3.0 + 0.06 * i as f64;
            assert!((quintic(x) - quintic_expanded(x)).abs() < 1e-12 * (1.0 + x.abs().powi(5)));
        }
    }

    #[test]
    fn first_staircase_on_eight_points() {
        let g = TorusGrid::new(1, 8).unwrap();
        let h = staircase(1, g).unwrap();
        assert_eq!(h.values(), &[1.0, 1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0]);
        assert!(staircase(3, g).is_err());
        assert!(staircase(2, g).is_ok());
    }

    #[test]
    fn two_dimensional_depends_on_first_coordinate() {
        let g = TorusGrid::new(2, 8).unwrap();
        let h = staircase(1, g).unwrap();
        for flat in 0..g.len() {
            let [i, _] = g.multi_index(flat);
            assert_eq!(h.values()[flat], if i % 4 < 2 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn pair_identities() {
        let g = TorusGrid::new(1, 64).unwrap();
        let r = quintic_roots();
        for n in 1..=5 {
            let p = build_pair(n, g).unwrap();
            for ((&u, &v), &h) in p.u.values().iter().zip(p.v.values()).zip(p.h.values()) {
                assert!(v == r.r1 || v == r.r2);
                assert!(h == 1.0 || h == -1.0);
                assert!((u * (1.0 + v * v) - 3.0).abs() < 1e-12);
                assert!((v * (1.0 + u * u) - 3.0).abs() < 1e-12);
            }
            assert!((p.u.max_abs() - 2.6180).abs() < 1e-3);
        }
    }

    #[test]
    fn full_suite_passes() {
        let g = TorusGrid::new(1, 256).unwrap();
        let rep = verify_counterexample(5, g).unwrap();
        assert!(rep.pass, "{}", rep.summary());
        assert!(rep.get("gram_error") < 1e-13);
        assert!((rep.get("distance_target") - 1.5811388).abs() < 1e-7);
        assert!(rep.get("sup_v") <= quintic_roots().r2 + 1e-9);
        assert!(verify_counterexample(7, g).is_ok());
        assert!(verify_counterexample(8, g).is_err());
    }

    proptest! {
        #[test]
        fn staircases_are_balanced(j in 3u32..10, n in 1u32..8) {
            prop_assume!(n < j);
            let g = TorusGrid::new(1, 1 << j).unwrap();
            let h = staircase(n, g).unwrap();
            prop_assert_eq!(h.mean(), 0.0);
            prop_assert!(h.values().iter().all(|&x| x == 1.0 || x == -1.0));
        }
    }
}
