use super::{dirichlet_energy, h_minus_one_sq, Report};
use crate::error::{config_err, domain_err, Result};
use crate::model::{find_delta_a, stability_constants, Axis, BiPoly, ModelSpec};
use crate::solver::{simulate, RunConfig, State, Trajectory};
use crate::spaces::cumulative_trapezoid;
use crate::torus::{dealias_pad, poly_field, Field};

/// Relative tolerance on mass conservation (scaled by `1 + |mass₀|`).
pub const MASS_TOL: f64 = 1e-12;
/// Slack of the energy inequality, relative to the largest dissipation.
pub const ENERGY_TOL: f64 = 1e-6;
/// Minimal coefficient of determination of the exponential fit.
pub const DECAY_R2_MIN: f64 = 0.999;
/// Multiplicative slack of the stability estimate.
pub const STABILITY_TOL: f64 = 1e-3;
/// Target relative residual of the non-convex Lyapunov identity.
pub const LYAPUNOV_TOL: f64 = 1e-3;
const THETA_FLOOR: f64 = 1e-28;

/// Conservation of `∫u` and `∫v` over every time step.
pub fn check_mass(traj: &Trajectory) -> Report {
    let d = traj.diagnostics();
    let (mu0, mv0) = (d[0].mass_u, d[0].mass_v);
    let dev_u = d.iter().map(|x| (x.mass_u - mu0).abs()).fold(0.0, f64::max);
    let dev_v = d.iter().map(|x| (x.mass_v - mv0).abs()).fold(0.0, f64::max);
    let rel = (dev_u / (1.0 + mu0.abs())).max(dev_v / (1.0 + mv0.abs()));
    Report::new(
        "mass",
        "conservation of the total mass of each species",
        MASS_TOL,
    )
    .measure("deviation_u", dev_u)
    .measure("deviation_v", dev_v)
    .measure("max_relative", rel)
    .with_pass(rel < MASS_TOL)
}

fn centered_derivative(times: &[f64], y: &[f64], i: usize) -> f64 {
    (y[i + 1] - y[i - 1]) / (times[i + 1] - times[i - 1])
}

/// Energy inequality `½(‖u‖² + ‖v‖²)' + (d₁/2)‖∇u‖² + (d₂/2)‖∇v‖² ≤ 0` at
/// interior recorded times, with centered differences in time.
pub fn check_energy_decay(traj: &Trajectory, spec: &ModelSpec) -> Report {
    let delta_a = find_delta_a(spec);
    let sup = traj.sup_norm();
    if sup >= delta_a {
        log::warn!("trajectory amplitude {sup} is not below delta_A = {delta_a}");
    }
    let times = traj.times();
    let l2 = |f: &Field| f.values().iter().map(|x| x * x).sum::<f64>() * f.grid().cell_volume();
    let energy: Vec<f64> = traj.states().iter().map(|s| l2(&s.u) + l2(&s.v)).collect();
    let diss: Vec<f64> = traj
        .states()
        .iter()
        .map(|s| 0.5 * spec.d1 * dirichlet_energy(&s.u) + 0.5 * spec.d2 * dirichlet_energy(&s.v))
        .collect();
    let scale = diss.iter().cloned().fold(0.0, f64::max);
    let slack = ENERGY_TOL * scale;
    let mut worst = f64::NEG_INFINITY;
    let mut first_violation = -1.0;
    for i in 1..times.len().saturating_sub(1) {
        let residual = 0.5 * centered_derivative(&times, &energy, i) + diss[i];
        if residual > slack && first_violation < 0.0 {
            first_violation = times[i];
        }
        worst = worst.max(residual);
    }
    if times.len() < 3 {
        worst = 0.0;
    }
    Report::new("energy", "L2 energy dissipation inequality", ENERGY_TOL)
        .measure("max_residual", worst)
        .measure("dissipation_scale", scale)
        .measure("first_violation_time", first_violation)
        .measure("amplitude", sup)
        .measure("delta_a", delta_a)
        .with_pass(first_violation < 0.0)
}

/// Least-squares fit `ln y ≈ a − c t`; returns `(c, R²)`.
pub fn fit_log_linear(times: &[f64], values: &[f64]) -> Result<(f64, f64)> {
    if times.len() != values.len() || times.len() < 3 {
        return config_err("an exponential fit needs at least three matching samples");
    }
    if values.iter().any(|&v| !(v > 0.0)) {
        return domain_err("an exponential fit needs positive values");
    }
    let n = times.len() as f64;
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let tm = times.iter().sum::<f64>() / n;
    let ym = logs.iter().sum::<f64>() / n;
    let sxx: f64 = times.iter().map(|t| (t - tm).powi(2)).sum();
    let sxy: f64 = times
        .iter()
        .zip(&logs)
        .map(|(t, y)| (t - tm) * (y - ym))
        .sum();
    let syy: f64 = logs.iter().map(|y| (y - ym).powi(2)).sum();
    let slope = sxy / sxx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        sxy * sxy / (sxx * syy)
    };
    Ok((-slope, r2))
}

/// Exponential relaxation rate of `Θ(t) = ‖u − ū₀‖² + ‖v − v̄₀‖²`, fitted on
/// `[t_end/2, t_end]`. The window moves earlier if `Θ` underflows.
pub fn fit_decay_rate(traj: &Trajectory) -> Result<Report> {
    let s0 = traj.first();
    let (mu, mv) = (s0.u.mean(), s0.v.mean());
    let l2 = |f: &Field, m: f64| {
        f.values().iter().map(|x| (x - m).powi(2)).sum::<f64>() * f.grid().cell_volume()
    };
    let times = traj.times();
    let theta: Vec<f64> = traj
        .states()
        .iter()
        .map(|s| l2(&s.u, mu) + l2(&s.v, mv))
        .collect();
    let usable = theta.iter().take_while(|&&t| t >= THETA_FLOOR).count();
    if usable < 3 {
        return domain_err("the relaxation functional underflows before three samples");
    }
    let t_hi = times[usable - 1];
    let t_lo = 0.5 * t_hi;
    let idx: Vec<usize> = (0..usable).filter(|&i| times[i] >= t_lo).collect();
    if idx.len() < 3 {
        return domain_err("fewer than three samples in the fitting window");
    }
    let wt: Vec<f64> = idx.iter().map(|&i| times[i]).collect();
    let wv: Vec<f64> = idx.iter().map(|&i| theta[i]).collect();
    let (rate, r2) = fit_log_linear(&wt, &wv)?;
    Ok(Report::new(
        "decay_rate",
        "exponential relaxation to the mean",
        DECAY_R2_MIN,
    )
    .measure("rate", rate)
    .measure("r_squared", r2)
    .measure("window_start", t_lo)
    .measure("window_end", t_hi)
    .measure("points", idx.len() as f64)
    .with_pass(r2 >= DECAY_R2_MIN))
}

/// H⁻¹ stability of two solutions `U₁ ∈ C_R`, `U₂ ∈ C_δ`:
///
/// `‖U₁−U₂‖²_{H⁻¹}(t) + C_δ ∫₀ᵗ‖U₁−U₂‖² ≤ ‖U₁−U₂‖²_{H⁻¹}(0)
///   + (∫(u₁−u₂)(0))² t (d₁+p(R,R)) + (∫(v₁−v₂)(0))² t (d₂+q(R,R))`.
pub fn check_stability_pair(
    traj1: &Trajectory,
    traj2: &Trajectory,
    spec: &ModelSpec,
    r: f64,
    delta: f64,
) -> Result<Report> {
    let constants = stability_constants(spec, r, delta)?;
    if !constants.admissible {
        return domain_err(format!(
            "stability smallness condition (delta L_R)^2 (1/d1 + 1/d2) < min(d1, d2) fails: C_delta = {}",
            constants.c_delta
        ));
    }
    if traj1.sup_norm() > r || traj2.sup_norm() > delta {
        return domain_err(format!(
            "amplitudes {} and {} exceed R = {r} and delta = {delta}",
            traj1.sup_norm(),
            traj2.sup_norm()
        ));
    }
    let times = traj1.times();
    if times != traj2.times() {
        return config_err("the two trajectories must be recorded at the same times");
    }
    let diff: Vec<(Field, Field)> = traj1
        .states()
        .iter()
        .zip(traj2.states())
        .map(|(a, b)| (&a.u - &b.u, &a.v - &b.v))
        .collect();
    let h = |d: &(Field, Field)| h_minus_one_sq(&d.0) + h_minus_one_sq(&d.1);
    let l2 = |d: &(Field, Field)| {
        let h = d.0.grid().cell_volume();
        (d.0.values().iter().map(|x| x * x).sum::<f64>()
            + d.1.values().iter().map(|x| x * x).sum::<f64>())
            * h
    };
    let l2s: Vec<f64> = diff.iter().map(l2).collect();
    let cum = cumulative_trapezoid(&times, &l2s);
    let (mu0, mv0) = (diff[0].0.mean(), diff[0].1.mean());
    let slope =
        mu0 * mu0 * (spec.d1 + spec.p.eval(r, r)) + mv0 * mv0 * (spec.d2 + spec.q.eval(r, r));
    let h0 = h(&diff[0]);
    let t0 = times[0];
    let mut pass = true;
    let mut max_ratio: f64 = 0.0;
    let mut min_margin = f64::INFINITY;
    let mut rhs_last = h0;
    for i in 0..times.len() {
        let lhs = h(&diff[i]) + constants.c_delta * cum[i];
        let rhs = h0 + slope * (times[i] - t0);
        pass &= lhs <= rhs * (1.0 + STABILITY_TOL);
        if rhs > 0.0 {
            max_ratio = max_ratio.max(lhs / rhs);
        }
        min_margin = min_margin.min(rhs - lhs);
        rhs_last = rhs;
    }
    let horizon = times[times.len() - 1] - t0;
    let rhs_slope = if horizon > 0.0 {
        (rhs_last - h0) / horizon
    } else {
        slope
    };
    Ok(Report::new(
        "stability",
        "H^-1 stability estimate for small solutions",
        STABILITY_TOL,
    )
    .measure("c_delta", constants.c_delta)
    .measure("lipschitz", constants.lipschitz)
    .measure(
        "max_condition",
        if constants.max_condition { 1.0 } else { 0.0 },
    )
    .measure("max_ratio", max_ratio)
    .measure("min_margin", min_margin)
    .measure("rhs_slope", rhs_slope)
    .measure("formula_slope", slope)
    .measure("horizon", horizon)
    .with_pass(pass))
}

fn nonconvex_polys() -> (BiPoly, BiPoly, BiPoly) {
    let x = BiPoly::var(Axis::X);
    let y = BiPoly::var(Axis::Y);
    let one = BiPoly::constant(1.0);
    let ax = one.add(&x.mul(&x));
    let ay = one.add(&y.mul(&y));
    (ax.mul(&ay), x.mul(&ay), y.mul(&ax))
}

/// `E = ∫(1+u²)(1+v²)`, exact for the trigonometric interpolants.
pub fn lyapunov_energy(u: &Field, v: &Field) -> Result<f64> {
    let (e, _, _) = nonconvex_polys();
    Ok(poly_field(&e, u, v, dealias_pad(e.degree()))?.mean())
}

/// `½ dE/dt = −∫|∇(u(1+v²))|² + |∇(v(1+u²))|²` along a run of the system
/// with `d₁ = d₂ = 1`, `p = Y²`, `q = X²`, plus monotonicity of `E`.
pub fn check_lyapunov_nonconvex(traj: &Trajectory) -> Result<Report> {
    if !traj.spec().is_nonconvex_example() {
        return domain_err("the non-convex Lyapunov identity needs d1 = d2 = 1, p = Y^2, q = X^2");
    }
    let (_, f1, f2) = nonconvex_polys();
    let pad = dealias_pad(f1.degree());
    let times = traj.times();
    let mut energy = Vec::with_capacity(times.len());
    let mut diss = Vec::with_capacity(times.len());
    for s in traj.states() {
        energy.push(lyapunov_energy(&s.u, &s.v)?);
        let phi1 = poly_field(&f1, &s.u, &s.v, pad)?;
        let phi2 = poly_field(&f2, &s.u, &s.v, pad)?;
        diss.push(dirichlet_energy(&phi1) + dirichlet_energy(&phi2));
    }
    let scale = diss.iter().cloned().fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for (i, &d) in diss
        .iter()
        .enumerate()
        .take(times.len().saturating_sub(1))
        .skip(1)
    {
        let lhs = 0.5 * centered_derivative(&times, &energy, i);
        let denom = d.max(1e-12 * scale);
        if denom > 0.0 {
            worst = worst.max((lhs + d).abs() / denom);
        } else {
            worst = worst.max(lhs.abs());
        }
    }
    let e0 = energy[0];
    let monotone = energy.windows(2).all(|w| w[1] <= w[0] + 1e-14 * e0);
    Ok(Report::new(
        "lyapunov",
        "non-convex Lyapunov identity for (1+u^2)(1+v^2)",
        LYAPUNOV_TOL,
    )
    .measure("max_relative_residual", worst)
    .measure("monotone", if monotone { 1.0 } else { 0.0 })
    .measure("energy_initial", e0)
    .measure("energy_final", energy[energy.len() - 1])
    .measure("dt", traj.config().dt)
    .with_pass(worst < LYAPUNOV_TOL && monotone))
}

/// Outcome of [`lyapunov_refinement`].
#[derive(Clone, Debug)]
pub struct LyapunovRefinement {
    pub report: Report,
    pub dt: f64,
    pub halvings: usize,
    pub trajectory: Trajectory,
}

/// Runs the non-convex system from `initial`, halving `dt` until the
/// Lyapunov residual meets [`LYAPUNOV_TOL`] or `max_halvings` is exhausted.
pub fn lyapunov_refinement(
    initial: &State,
    t_end: f64,
    dt0: f64,
    max_halvings: usize,
) -> Result<LyapunovRefinement> {
    let mut dt = dt0;
    let mut halvings = 0;
    loop {
        let config = RunConfig::new(ModelSpec::nonconvex(), initial.clone(), dt, t_end);
        let trajectory = simulate(&config)?;
        let mut report = check_lyapunov_nonconvex(&trajectory)?;
        if report.pass || halvings == max_halvings {
            report.record("halvings", halvings as f64);
            return Ok(LyapunovRefinement {
                report,
                dt,
                halvings,
                trajectory,
            });
        }
        dt /= 2.0;
        halvings += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Poly2;
    use crate::torus::TorusGrid;
    use crate::FOUR_PI_SQ;
    use std::f64::consts::PI;

    fn heat_run(g: TorusGrid, d1: f64, dt: f64, t_end: f64) -> Trajectory {
        let spec = ModelSpec::new(d1, d1, Poly2::zero(), Poly2::zero()).unwrap();
        let f = Field::from_fn(g, |[x, _]| 1.0 + 0.1 * (2.0 * PI * x).cos());
        simulate(&RunConfig::new(
            spec,
            State::new(0.0, f.clone(), f).unwrap(),
            dt,
            t_end,
        ))
        .unwrap()
    }

    #[test]
    fn mass_checks() {
        let g = TorusGrid::new(1, 16).unwrap();
        let traj = heat_run(g, 1.0, 1e-3, 0.05);
        let r = check_mass(&traj);
        assert!(r.pass && r.get("max_relative") < 1e-13);
        let mut states = traj.states().to_vec();
        let k = states.len() / 2;
        states[k].u = states[k].u.map(|x| x + 1e-6);
        let bad = Trajectory::from_states(traj.config().clone(), states).unwrap();
        assert!(!check_mass(&bad).pass);
    }

    #[test]
    fn synthetic_exponential_fit() {
        let times: Vec<f64> = (0..50).map(|i| i as f64 * 0.01).collect();
        let values: Vec<f64> = times.iter().map(|t| 3.0 * (-7.25 * t).exp()).collect();
        let (c, r2) = fit_log_linear(&times, &values).unwrap();
        assert!((c - 7.25).abs() < 1e-10);
        assert!((r2 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn heat_energy_and_rate() {
        let g = TorusGrid::new(1, 16).unwrap();
        let traj = heat_run(g, 1.0, 1e-4, 0.1);
        let spec = traj.spec().clone();
        assert!(check_energy_decay(&traj, &spec).pass);
        let r = fit_decay_rate(&traj).unwrap();
        assert!(r.pass);
        assert!((r.get("rate") / (2.0 * FOUR_PI_SQ) - 1.0).abs() < 0.01);
    }

    #[test]
    fn identical_pair_has_zero_lhs() {
        let g = TorusGrid::new(1, 16).unwrap();
        let spec = ModelSpec::skt(1.0, 1.0, 1.0, 1.0, 1.0, 1.0).unwrap();
        let f = Field::from_fn(g, |[x, _]| 0.1 + 0.05 * (2.0 * PI * x).cos());
        let traj = simulate(&RunConfig::new(
            spec.clone(),
            State::new(0.0, f.clone(), f).unwrap(),
            1e-3,
            0.05,
        ))
        .unwrap();
        let r = check_stability_pair(&traj, &traj, &spec, 0.5, 0.3).unwrap();
        assert!(r.pass);
        assert_eq!(r.get("max_ratio"), 0.0);
        assert_eq!(r.get("min_margin"), 0.0);
        assert!(check_stability_pair(&traj, &traj, &spec, 1.0, 0.5).is_err());
    }

    #[test]
    fn lyapunov_constant_state_and_wrong_spec() {
        let g = TorusGrid::new(1, 16).unwrap();
        let s = State::new(0.0, Field::constant(g, 0.3), Field::constant(g, 0.2)).unwrap();
        let traj = simulate(&RunConfig::new(
            ModelSpec::nonconvex(),
            s.clone(),
            1e-3,
            0.01,
        ))
        .unwrap();
        let r = check_lyapunov_nonconvex(&traj).unwrap();
        assert!(r.pass && r.get("max_relative_residual") == 0.0);
        let e = lyapunov_energy(&s.u, &s.v).unwrap();
        assert!((e - 1.09 * 1.04).abs() < 1e-14);
        let other = heat_run(g, 1.0, 1e-3, 0.01);
        assert!(check_lyapunov_nonconvex(&other).is_err());
    }
}
