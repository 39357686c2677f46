use super::{gradient, h_minus_one_sq, Report};
use crate::error::{config_err, domain_err, Result};
use crate::spaces::{cumulative_trapezoid, TimeSeriesField};
use crate::torus::{laplacian, Field};

/// Multiplicative slack of the duality inequalities.
pub const DUALITY_TOL: f64 = 1e-3;

fn integral(f: &Field) -> f64 {
    f.mean()
}

/// Duality estimate for `∂ₜz − Δ(µz) = Δf`:
///
/// `‖z(t)‖²_{H⁻¹} + ∫₀ᵗ∫µz² ≤ ‖z_in‖²_{H⁻¹} + (∫z_in)² ∫₀ᵗ∫µ + ∫₀ᵗ∫f²/µ`
///
/// at every sample of `z`, with all time integrals by the trapezoid rule on
/// the samples of `z`. When `f = 0` it also checks the L² estimate
/// `‖z(t)‖² + ∫₀ᵗ∫µ|∇z|² ≤ ‖z_in‖² exp(∫₀ᵗ‖(Δµ)⁺‖_∞)` and, for `z_in ≥ 0`,
/// the bounds `0 ≤ z ≤ ‖z_in‖_∞ exp(∫₀ᵗ‖(Δµ)⁺‖_∞)`.
pub fn check_duality(
    z: &TimeSeriesField,
    mu: &TimeSeriesField,
    f: &TimeSeriesField,
    z_in: &Field,
) -> Result<Report> {
    if z.grid() != z_in.grid() || mu.grid() != z_in.grid() || f.grid() != z_in.grid() {
        return config_err("z, mu, f and z_in must share one grid");
    }
    let inf_mu = mu
        .fields()
        .iter()
        .map(Field::min)
        .fold(f64::INFINITY, f64::min);
    if !(inf_mu > 0.0) {
        return domain_err(format!("the mobility must be positive, inf mu = {inf_mu}"));
    }
    let times = z.times();
    let n = times.len();
    let mut mu_z2 = Vec::with_capacity(n);
    let mut mu_int = Vec::with_capacity(n);
    let mut f2_mu = Vec::with_capacity(n);
    let mut mu_grad = Vec::with_capacity(n);
    let mut lap_mu_plus = Vec::with_capacity(n);
    for (t, zt) in times.iter().zip(z.fields()) {
        let mu_t = mu.at(*t)?;
        let f_t = f.at(*t)?;
        mu_z2.push(integral(&mu_t.zip_with(zt, |m, z| m * z * z)?));
        mu_int.push(integral(&mu_t));
        f2_mu.push(integral(&f_t.zip_with(&mu_t, |f, m| f * f / m)?));
        let grad_sq = gradient(zt)
            .iter()
            .fold(Field::zeros(zt.grid()), |acc, g| &acc + &g.map(|x| x * x));
        mu_grad.push(integral(&mu_t.zip_with(&grad_sq, |m, g| m * g)?));
        lap_mu_plus.push(laplacian(&mu_t).max().max(0.0));
    }
    let c_mu_z2 = cumulative_trapezoid(times, &mu_z2);
    let c_mu = cumulative_trapezoid(times, &mu_int);
    let c_f2 = cumulative_trapezoid(times, &f2_mu);
    let c_grad = cumulative_trapezoid(times, &mu_grad);
    let c_lap = cumulative_trapezoid(times, &lap_mu_plus);

    let h0 = h_minus_one_sq(z_in);
    let m0 = integral(z_in);
    let mut max_ratio: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    let mut pass = true;
    for i in 0..n {
        let lhs = h_minus_one_sq(&z.fields()[i]) + c_mu_z2[i];
        let rhs = h0 + m0 * m0 * c_mu[i] + c_f2[i];
        pass &= lhs <= rhs * (1.0 + DUALITY_TOL);
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
        min_margin = min_margin.min(rhs - lhs);
    }
    let last = n - 1;
    let mut report = Report::new(
        "duality",
        "duality estimate in H^-1 for the Kolmogorov equation",
        DUALITY_TOL,
    )
    .measure("max_ratio", max_ratio)
    .measure("min_margin", min_margin)
    .measure(
        "lhs_final",
        h_minus_one_sq(&z.fields()[last]) + c_mu_z2[last],
    )
    .measure("rhs_final", h0 + m0 * m0 * c_mu[last] + c_f2[last])
    .measure("horizon", times[last]);

    let source_free = f.fields().iter().all(|x| x.max_abs() == 0.0);
    if source_free {
        let l2_0 = z_in.values().iter().map(|x| x * x).sum::<f64>() * z_in.grid().cell_volume();
        let mut a1_ratio: f64 = 0.0;
        for i in 0..n {
            let zt = &z.fields()[i];
            let l2 = zt.values().iter().map(|x| x * x).sum::<f64>() * zt.grid().cell_volume();
            let lhs = l2 + c_grad[i];
            let rhs = l2_0 * c_lap[i].exp();
            pass &= lhs <= rhs * (1.0 + DUALITY_TOL);
            if rhs > 0.0 {
                a1_ratio = a1_ratio.max(lhs / rhs);
            }
        }
        report.record("l2_max_ratio", a1_ratio);
        if z_in.min() >= 0.0 {
            let sup0 = z_in.max_abs();
            let mut lowest = f64::INFINITY;
            let mut max_ratio: f64 = 0.0;
            for (zt, c) in z.fields().iter().zip(&c_lap).take(n) {
                lowest = lowest.min(zt.min());
                let bound = sup0 * c.exp();
                if bound > 0.0 {
                    max_ratio = max_ratio.max(zt.max() / bound);
                }
            }
            pass &= lowest >= -DUALITY_TOL * sup0 && max_ratio <= 1.0 + DUALITY_TOL;
            report.record("max_principle_min", lowest);
            report.record("max_principle_ratio", max_ratio);
        }
    }
    Ok(report.with_pass(pass))
}
