use super::{Scheme, C_STAB};
use crate::error::{config_err, domain_err, Result};
use crate::spaces::TimeSeriesField;
use crate::torus::{dealias_pad, transform, Field, PaddedGrid, SpectralField};
use crate::FOUR_PI_SQ;

/// Solves `∂ₜz − Δ(µz) = Δf`, `z(0) = z_in`, by IMEX with `µ_min Δz` implicit,
/// recording every step. `µ` and `f` are interpolated linearly in time.
pub fn solve_kolmogorov(
    z_in: &Field,
    mu: &TimeSeriesField,
    f: &TimeSeriesField,
    dt: f64,
    t_end: f64,
) -> Result<TimeSeriesField> {
    solve_kolmogorov_with(z_in, mu, f, dt, t_end, Scheme::Imex, 1)
}

/// [`solve_kolmogorov`] with a choice of scheme and recording cadence.
pub fn solve_kolmogorov_with(
    z_in: &Field,
    mu: &TimeSeriesField,
    f: &TimeSeriesField,
    dt: f64,
    t_end: f64,
    scheme: Scheme,
    record_every: usize,
) -> Result<TimeSeriesField> {
    let grid = z_in.grid();
    if mu.grid() != grid || f.grid() != grid {
        return config_err("z_in, mu and f must share one grid");
    }
    if !(dt > 0.0 && t_end > 0.0 && dt <= t_end * (1.0 + 1e-12)) || record_every == 0 {
        return config_err(format!("need 0 < dt <= t_end, got dt={dt}, t_end={t_end}"));
    }
    for (name, s) in [("mu", mu), ("f", f)] {
        if s.t_start() > 0.0 || s.t_end() < t_end * (1.0 - 1e-12) {
            return config_err(format!(
                "{name} is sampled on [{}, {}], which does not cover [0, {t_end}]",
                s.t_start(),
                s.t_end()
            ));
        }
    }
    let inf_mu = mu
        .fields()
        .iter()
        .map(Field::min)
        .fold(f64::INFINITY, f64::min);
    if !(inf_mu > 0.0) {
        return domain_err(format!("the mobility must be positive, inf mu = {inf_mu}"));
    }
    let padded = PaddedGrid::new(grid, dealias_pad(2))?;
    let flux = |z: &SpectralField, mu_t: &Field, f_t: &Field, shift: f64| {
        let zp = padded.lift(z);
        let mp = padded.lift(&transform(mu_t));
        let fp = padded.lift(&transform(f_t));
        let w: Vec<f64> = zp
            .iter()
            .zip(&mp)
            .zip(&fp)
            .map(|((z, m), f)| (m - shift) * z + f)
            .collect();
        padded.project(&w)
    };
    let lap = |w: &SpectralField| w.apply_multiplier(|k2| -FOUR_PI_SQ * k2);

    let n = ((t_end / dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize;
    let mut z = transform(z_in);
    let mut times = vec![0.0];
    let mut fields = vec![z_in.clone()];
    let mut t = 0.0;
    for step in 1..=n {
        let t_next = if step == n { t_end } else { step as f64 * dt };
        let h = t_next - t;
        z = match scheme {
            Scheme::Imex => {
                let mu_t = mu.at(t)?;
                let mu_min = mu_t.min();
                let w = flux(&z, &mu_t, &f.at(t)?, mu_min);
                let coeffs = z
                    .coeffs()
                    .iter()
                    .zip(w.coeffs())
                    .enumerate()
                    .map(|(i, (c, w))| {
                        let l = h * FOUR_PI_SQ * grid.mode_sq(i);
                        (c - w * l) / (1.0 + l * mu_min)
                    })
                    .collect();
                SpectralField::from_coeffs(grid, coeffs)?
            }
            Scheme::Rk4 => {
                let mu_max = mu.at(t)?.max().max(mu.at(t_next)?.max());
                let kmax = (grid.n() / 2) as f64;
                let bound = C_STAB / (FOUR_PI_SQ * grid.dim() as f64 * kmax * kmax * mu_max);
                if h > bound * (1.0 + 1e-12) {
                    return config_err(format!(
                        "rk4 step {h:e} exceeds the stability bound {bound:e}"
                    ));
                }
                let rhs = |z: &SpectralField, s: f64| -> Result<SpectralField> {
                    Ok(lap(&flux(z, &mu.at(s)?, &f.at(s)?, 0.0)))
                };
                let axpy = |x: &SpectralField, a: f64, y: &SpectralField| {
                    let c = x
                        .coeffs()
                        .iter()
                        .zip(y.coeffs())
                        .map(|(x, y)| x + y * a)
                        .collect();
                    SpectralField::from_coeffs(grid, c).expect("sizes match")
                };
                let k1 = rhs(&z, t)?;
                let k2 = rhs(&axpy(&z, h / 2.0, &k1), t + h / 2.0)?;
                let k3 = rhs(&axpy(&z, h / 2.0, &k2), t + h / 2.0)?;
                let k4 = rhs(&axpy(&z, h, &k3), t_next)?;
                let c = (0..grid.len())
                    .map(|i| {
                        z.coeffs()[i]
                            + (k1.coeffs()[i]
                                + k2.coeffs()[i] * 2.0
                                + k3.coeffs()[i] * 2.0
                                + k4.coeffs()[i])
                                * (h / 6.0)
                    })
                    .collect();
                SpectralField::from_coeffs(grid, c)?
            }
        };
        t = t_next;
        if step % record_every == 0 || step == n {
            let field = z.to_field();
            if !field.is_finite() {
                return domain_err(format!("non-finite Kolmogorov solution at t = {t}"));
            }
            times.push(t);
            fields.push(field);
        }
    }
    TimeSeriesField::new(times, fields)
}
