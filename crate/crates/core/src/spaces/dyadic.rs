use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{lk_pow, lp_norm, spacetime_lk, TimeSeriesField};
use crate::error::{config_err, domain_err, Result};
use crate::torus::{laplacian, random_spectrum, transform, Field, SpectralField, TorusGrid};
use crate::verifier::Report;
use crate::FOUR_PI_SQ;

/// Calibrated constant of the Bernstein inequality `‖f‖_∞ ≤ C(2m)^{d/k}‖f‖_k`.
pub const C_BERN: f64 = 4.0;
/// Prefactor `C` of the annulus heat decay `‖e^{tΔ}f‖_p ≤ C e^{−ctm²}‖f‖_p`.
pub const HEAT_DECAY_C: f64 = 2.0;
/// Rate `c` of the same inequality, sharp for the slowest annulus mode.
pub const HEAT_DECAY_RATE: f64 = FOUR_PI_SQ;
/// Calibrated bound for `‖b_f‖_{ℓ^k} / ‖f − f̄‖_k` when `k ≠ 2`.
pub const C_BLOCK: f64 = 2.0;
/// Calibrated bound for the maximal-regularity ratio.
pub const MAXREG_BOUND: f64 = 10.0;

/// Littlewood–Paley piece of a field on the annulus `2^j ≤ |ξ| < 2^{j+1}`.
#[derive(Clone, Debug, PartialEq)]
pub struct DyadicBlock {
    pub level: u32,
    pub field: Field,
    /// The annulus reaches past `N/2`, so the grid only resolves part of it.
    pub truncated: bool,
}

/// Levels `0..=j_max` needed to cover every nonzero mode of the grid.
pub fn dyadic_levels(grid: TorusGrid) -> u32 {
    grid.max_wavenumber_norm().log2().floor() as u32 + 1
}

fn annulus_filter(spec: &SpectralField, lo_sq: f64, hi_sq: f64) -> SpectralField {
    spec.apply_multiplier(|k2| if k2 >= lo_sq && k2 < hi_sq { 1.0 } else { 0.0 })
}

fn block_from_spectrum(spec: &SpectralField, j: u32) -> DyadicBlock {
    let lo = 4f64.powi(j as i32);
    DyadicBlock {
        level: j,
        field: annulus_filter(spec, lo, 4.0 * lo).to_field(),
        truncated: 2f64.powi(j as i32 + 1) > (spec.grid().n() / 2) as f64,
    }
}

/// Sharp Fourier restriction of `field` to the `j`-th dyadic annulus.
pub fn dyadic_block(field: &Field, j: u32) -> DyadicBlock {
    block_from_spectrum(&transform(field), j)
}

/// `(Σ_j ‖f_j‖_k^k)^{1/k}` over all dyadic blocks of `field`.
pub fn block_sequence_norm(field: &Field, k: f64) -> Result<f64> {
    if !(k >= 1.0 && k.is_finite()) {
        return domain_err(format!("block sequence norm needs 1 <= k < inf, got {k}"));
    }
    let spec = transform(field);
    let s: f64 = (0..dyadic_levels(field.grid()))
        .map(|j| lk_pow(&block_from_spectrum(&spec, j).field, k))
        .sum();
    Ok(s.powf(1.0 / k))
}

fn check_annulus(grid: TorusGrid, m: usize) -> Result<()> {
    if m == 0 || 2 * m > grid.n() / 2 {
        return config_err(format!(
            "annulus m={m} needs 1 <= 2m <= N/2 = {}",
            grid.n() / 2
        ));
    }
    Ok(())
}

/// Random real field with Fourier support in `m ≤ |ξ| < 2m`.
pub fn random_annulus_field(grid: TorusGrid, m: usize, seed: u64) -> Result<Field> {
    check_annulus(grid, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(random_annulus_spectrum(grid, m, &mut rng).to_field())
}

fn random_annulus_spectrum(grid: TorusGrid, m: usize, rng: &mut ChaCha8Rng) -> SpectralField {
    let (lo, hi) = ((m * m) as i64, (4 * m * m) as i64);
    loop {
        let s = random_spectrum(grid, rng, |xi| {
            let k2 = xi[0] * xi[0] + xi[1] * xi[1];
            k2 >= lo && k2 < hi
        });
        if s.norm_sq() > 0.0 {
            return s;
        }
    }
}

/// `‖f‖_∞ / ((2m)^{d/k}‖f‖_k)`; `k = ∞` drops the frequency factor.
pub fn bernstein_ratio(field: &Field, m: usize, k: f64) -> Result<f64> {
    let d = field.grid().dim() as f64;
    let factor = if k.is_infinite() {
        1.0
    } else {
        (2.0 * m as f64).powf(d / k)
    };
    Ok(field.max_abs() / (factor * lp_norm(field, k)?))
}

/// Bernstein inequality on `trials` random elements of `V_m`.
pub fn bernstein_check(
    grid: TorusGrid,
    m: usize,
    k: f64,
    trials: usize,
    seed: u64,
) -> Result<Report> {
    check_annulus(grid, m)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let f = random_annulus_spectrum(grid, m, &mut rng).to_field();
        worst = worst.max(bernstein_ratio(&f, m, k)?);
    }
    Ok(Report::new(
        "bernstein",
        "Bernstein inequality on a dyadic annulus",
        C_BERN,
    )
    .measure("max_ratio", worst)
    .measure("trials", trials as f64)
    .measure("m", m as f64)
    .measure("k", k)
    .with_pass(worst <= C_BERN))
}

fn heat_ratio_spec(spec: &SpectralField, m: usize, p: f64, t: f64) -> Result<f64> {
    let m2 = (m * m) as f64;
    let shifted = spec
        .apply_multiplier(|k2| (-FOUR_PI_SQ * t * (k2 - m2)).exp())
        .to_field();
    Ok(lp_norm(&shifted, p)? / lp_norm(&spec.to_field(), p)?)
}

/// `‖e^{tΔ}f‖_p / (e^{−4π²tm²}‖f‖_p)` for `f` supported in `V_m`.
pub fn heat_decay_ratio(field: &Field, m: usize, p: f64, t: f64) -> Result<f64> {
    if t < 0.0 {
        return domain_err(format!("negative time {t}"));
    }
    heat_ratio_spec(&transform(field), m, p, t)
}

/// Annulus heat decay with `c = 4π²`, `C = 2` on random elements of `V_m`.
pub fn heat_decay_check(
    grid: TorusGrid,
    m: usize,
    p: f64,
    times: &[f64],
    trials: usize,
    seed: u64,
) -> Result<Report> {
    check_annulus(grid, m)?;
    if times.iter().any(|&t| !(t >= 0.0)) {
        return domain_err("heat decay times must be nonnegative");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..trials {
        let spec = random_annulus_spectrum(grid, m, &mut rng);
        for &t in times {
            worst = worst.max(heat_ratio_spec(&spec, m, p, t)?);
        }
    }
    Ok(Report::new(
        "heat_decay",
        "heat flow decay on a dyadic annulus",
        HEAT_DECAY_C,
    )
    .measure("max_ratio", worst)
    .measure("rate", HEAT_DECAY_RATE)
    .measure("trials", trials as f64)
    .measure("m", m as f64)
    .measure("p", p)
    .with_pass(worst <= HEAT_DECAY_C))
}

/// Block-sequence bound on random band-limited fields: equality at `k = 2`
/// (to `1e−12`), ratio at most [`C_BLOCK`] otherwise.
pub fn block_sequence_check(grid: TorusGrid, k: f64, trials: usize, seed: u64) -> Result<Report> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for _ in 0..trials {
        let f = crate::torus::random_trig_field(grid, &mut rng, |_| true);
        let r = block_sequence_norm(&f, k)? / lp_norm(&f.mean_free(), k)?;
        lo = lo.min(r);
        hi = hi.max(r);
    }
    let (tol, pass) = if k == 2.0 {
        (1e-12, (hi - 1.0).abs() < 1e-12 && (lo - 1.0).abs() < 1e-12)
    } else {
        (C_BLOCK, hi <= C_BLOCK)
    };
    Ok(
        Report::new("block_sequence", "dyadic block sequence bound", tol)
            .measure("min_ratio", lo)
            .measure("max_ratio", hi)
            .measure("trials", trials as f64)
            .measure("k", k)
            .with_pass(pass),
    )
}

/// `m‖Δφ‖_{L^k(Q_T)} / ‖∂ₜφ − mΔφ‖_{L^k(Q_T)}` for `φ(0) = 0` on a uniform
/// time grid; `None` when both norms vanish.
pub fn maxreg_ratio(phi: &TimeSeriesField, m: f64, k: f64) -> Result<Option<f64>> {
    if phi.len() < 3 {
        return domain_err("maximal regularity ratio needs at least three time samples");
    }
    if !(m > 0.0) {
        return domain_err(format!("diffusivity m must be positive, got {m}"));
    }
    if phi.fields()[0].max_abs() >= 1e-10 {
        return domain_err("phi must vanish at the initial time");
    }
    let times = phi.times();
    let dt = times[1] - times[0];
    if times
        .windows(2)
        .any(|w| ((w[1] - w[0]) - dt).abs() > 1e-9 * dt)
    {
        return domain_err("maximal regularity ratio needs a uniform time grid");
    }
    let f = phi.fields();
    let n = f.len();
    let lap: Vec<Field> = f.iter().map(laplacian).collect();
    let grid = f[0].grid();
    let h2 = 2.0 * dt;
    // Second-order stencils: one-sided at the ends, centered inside.
    let dt_phi: Vec<Field> = (0..n)
        .map(|i| {
            let values = (0..grid.len())
                .map(|x| {
                    let y = |j: usize| f[j].values()[x];
                    if i == 0 {
                        (-3.0 * y(0) + 4.0 * y(1) - y(2)) / h2
                    } else if i == n - 1 {
                        (3.0 * y(n - 1) - 4.0 * y(n - 2) + y(n - 3)) / h2
                    } else {
                        (y(i + 1) - y(i - 1)) / h2
                    }
                })
                .collect();
            Field::from_raw(grid, values)
        })
        .collect();
    let residual: Vec<Field> = dt_phi.iter().zip(&lap).map(|(d, l)| d - &(l * m)).collect();
    let num = m * spacetime_lk(&TimeSeriesField::new(times.to_vec(), lap)?, k)?;
    let den = spacetime_lk(&TimeSeriesField::new(times.to_vec(), residual)?, k)?;
    if den == 0.0 {
        return Ok(if num == 0.0 {
            None
        } else {
            Some(f64::INFINITY)
        });
    }
    Ok(Some(num / den))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::torus::random_trig_field;
    use std::f64::consts::PI;

    #[test]
    fn single_mode_lands_in_its_block() {
        let g = TorusGrid::new(1, 32).unwrap();
        let f = Field::from_fn(g, |[x, _]| (2.0 * PI * 3.0 * x).cos());
        let b = dyadic_block(&f, 1);
        assert!((&b.field - &f).max_abs() < 1e-13);
        assert!(!b.truncated);
        assert!(dyadic_block(&f, 0).field.max_abs() < 1e-14);
        assert!(dyadic_block(&f, 4).truncated);
    }

    #[test]
    fn blocks_reconstruct_and_are_orthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for dim in [1, 2] {
            let g = TorusGrid::new(dim, 32).unwrap();
            let f = random_trig_field(g, &mut rng, |_| true);
            let levels = dyadic_levels(g);
            let blocks: Vec<Field> = (0..levels).map(|j| dyadic_block(&f, j).field).collect();
            let sum = blocks.iter().fold(Field::zeros(g), |acc, b| &acc + b);
            assert!((&sum - &f.mean_free()).max_abs() < 1e-12);
            for i in 0..blocks.len() {
                for j in 0..i {
                    assert!(blocks[i].dot(&blocks[j]).unwrap().abs() < 1e-12);
                }
            }
            let b2 = block_sequence_norm(&f, 2.0).unwrap();
            assert!((b2 - lp_norm(&f.mean_free(), 2.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn bernstein_examples() {
        let g = TorusGrid::new(1, 64).unwrap();
        // Shifted so that a cell center sits on the maximum.
        let x0 = 0.5 / 64.0;
        let f = Field::from_fn(g, |[x, _]| (2.0 * PI * 4.0 * (x - x0)).cos());
        assert!((bernstein_ratio(&f, 4, 2.0).unwrap() - 0.5).abs() < 1e-12);
        assert!((bernstein_ratio(&f, 4, f64::INFINITY).unwrap() - 1.0).abs() < 1e-12);
        let r = bernstein_check(g, 8, 2.0, 200, 1).unwrap();
        assert!(r.pass, "{}", r.summary());
        assert!(bernstein_check(g, 32, 2.0, 1, 1).is_err());
    }

    #[test]
    fn heat_decay_examples() {
        let g = TorusGrid::new(1, 64).unwrap();
        let f = Field::from_fn(g, |[x, _]| (2.0 * PI * 5.0 * x).cos());
        for t in [0.0, 0.001, 0.01] {
            assert!((heat_decay_ratio(&f, 5, 3.0, t).unwrap() - 1.0).abs() < 1e-9);
        }
        let r = heat_decay_check(g, 4, 3.0, &[0.001, 0.01, 0.1], 200, 4).unwrap();
        assert!(r.pass, "{}", r.summary());
    }

    #[test]
    fn maxreg_closed_form() {
        let g = TorusGrid::new(1, 32).unwrap();
        let m = 0.5;
        let c = FOUR_PI_SQ * m;
        let run = |t_end: f64| {
            let times: Vec<f64> = (0..=4000).map(|i| t_end * i as f64 / 4000.0).collect();
            let phi = TimeSeriesField::from_fn(times, |t| {
                Field::from_fn(g, |[x, _]| (1.0 - (-c * t).exp()) * (2.0 * PI * x).cos())
            })
            .unwrap();
            maxreg_ratio(&phi, m, 2.0).unwrap().unwrap()
        };
        let (short, long) = (run(0.05), run(2.0));
        assert!(short <= 2.0 && long <= 2.0);
        assert!(long > short && (long - 1.0).abs() < 0.05);
    }

    #[test]
    fn maxreg_degenerate_and_errors() {
        let g = TorusGrid::new(1, 16).unwrap();
        let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.1).collect();
        let zero = TimeSeriesField::from_fn(times.clone(), |_| Field::zeros(g)).unwrap();
        assert_eq!(maxreg_ratio(&zero, 1.0, 2.0).unwrap(), None);
        let bad = TimeSeriesField::from_fn(times, |_| Field::constant(g, 1.0)).unwrap();
        assert!(maxreg_ratio(&bad, 1.0, 2.0).is_err());
    }
}
