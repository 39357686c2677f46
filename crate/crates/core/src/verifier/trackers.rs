use super::Report;
use crate::error::Result;
use crate::model::{flux, smallness_functional, ModelSpec};
use crate::solver::Trajectory;
use crate::spaces::{cumulative_trapezoid, lk_pow, sobolev_norm};
use crate::torus::laplacian;

/// Quadrature tolerance for the smallness functional of the initial data.
pub const SMALLNESS_TOL: f64 = 1e-8;

/// `λ(T)` at every recorded time, with the smallness premise it was checked against.
#[derive(Clone, Debug)]
pub struct LambdaTrack {
    pub times: Vec<f64>,
    pub lambda: Vec<f64>,
    pub smallness: f64,
    pub report: Report,
}

/// `λ(T) = ‖ΔΦ₁‖_{L^k(Q_T)} + ‖ΔΦ₂‖_{L^k(Q_T)} + ‖u‖_{L^∞(Q_T)} + ‖v‖_{L^∞(Q_T)}`.
///
/// Space integrals are grid sums, time integrals trapezoids over the
/// recorded states and the sup norms maxima over recorded grid values. The
/// report passes unless the initial smallness functional is below `δ/2`
/// while `λ` reaches `δ`.
pub fn track_lambda(
    traj: &Trajectory,
    spec: &ModelSpec,
    k: f64,
    delta: f64,
) -> Result<LambdaTrack> {
    if traj.config().record_every > 1 {
        log::warn!("lambda tracking on a subsampled trajectory underestimates the sup norms");
    }
    let times = traj.times();
    let mut g1 = Vec::with_capacity(times.len());
    let mut g2 = Vec::with_capacity(times.len());
    let mut sup = Vec::with_capacity(times.len());
    for s in traj.states() {
        let (f1, f2) = flux(spec, &s.u, &s.v)?;
        g1.push(lk_pow(&laplacian(&f1), k));
        g2.push(lk_pow(&laplacian(&f2), k));
        sup.push((s.u.max_abs(), s.v.max_abs()));
    }
    let c1 = cumulative_trapezoid(&times, &g1);
    let c2 = cumulative_trapezoid(&times, &g2);
    let (mut su, mut sv) = (0.0f64, 0.0f64);
    let lambda: Vec<f64> = (0..times.len())
        .map(|i| {
            su = su.max(sup[i].0);
            sv = sv.max(sup[i].1);
            c1[i].powf(1.0 / k) + c2[i].powf(1.0 / k) + su + sv
        })
        .collect();
    let s0 = traj.first();
    let smallness = smallness_functional(&s0.u, &s0.v, spec, k, SMALLNESS_TOL)?;
    let premise = smallness < 0.5 * delta;
    let peak = lambda.iter().cloned().fold(0.0, f64::max);
    let report = Report::new(
        "lambda",
        "bootstrap bound on lambda(T) for small data",
        delta,
    )
    .measure("smallness", smallness)
    .measure("premise", if premise { 1.0 } else { 0.0 })
    .measure("lambda_max", peak)
    .measure("lambda_final", *lambda.last().unwrap_or(&0.0))
    .measure("delta", delta)
    .measure("horizon", times[times.len() - 1] - times[0])
    .with_pass(!premise || peak < delta);
    Ok(LambdaTrack {
        times,
        lambda,
        smallness,
        report,
    })
}

/// `‖U̲(t)‖_{H^k}` and `A(t)` at every recorded time.
#[derive(Clone, Debug)]
pub struct HkTrack {
    pub times: Vec<f64>,
    pub hk_norm: Vec<f64>,
    pub a: Vec<f64>,
    pub report: Report,
}

/// `A(t) = ‖U̲(t)‖²_{H^k} + ∫₀ᵗ ‖U̲(s)‖²_{H^{k+1}} ds` on the mean-free parts
/// `U̲ = (u − ū, v − v̄)`. The report passes unless `‖U̲(0)‖_{H^k} ≤ threshold`
/// while `sup_t ‖U̲(t)‖_{H^k}` exceeds twice its initial value.
pub fn track_hk(traj: &Trajectory, k_sob: u32, threshold: f64) -> Result<HkTrack> {
    let d = traj.grid().dim() as f64;
    let k = k_sob as f64;
    if k <= d / 2.0 {
        log::warn!("k = {k_sob} does not exceed d/2 = {}", d / 2.0);
    }
    let times = traj.times();
    let mut hk_sq = Vec::with_capacity(times.len());
    let mut hk1_sq = Vec::with_capacity(times.len());
    for s in traj.states() {
        let (u, v) = (s.u.mean_free(), s.v.mean_free());
        hk_sq.push(sobolev_norm(&u, k).powi(2) + sobolev_norm(&v, k).powi(2));
        hk1_sq.push(sobolev_norm(&u, k + 1.0).powi(2) + sobolev_norm(&v, k + 1.0).powi(2));
    }
    let cum = cumulative_trapezoid(&times, &hk1_sq);
    let a: Vec<f64> = hk_sq.iter().zip(&cum).map(|(h, c)| h + c).collect();
    let hk_norm: Vec<f64> = hk_sq.iter().map(|x| x.sqrt()).collect();
    let initial = hk_norm[0];
    let peak = hk_norm.iter().cloned().fold(0.0, f64::max);
    let growth = a.iter().map(|x| x - a[0]).fold(f64::NEG_INFINITY, f64::max);
    let premise = initial <= threshold;
    let report = Report::new("hk", "a priori H^k bound for small data", 2.0)
        .measure("k_sob", k)
        .measure("initial_norm", initial)
        .measure("sup_norm", peak)
        .measure("ratio", if initial > 0.0 { peak / initial } else { 0.0 })
        .measure("a_growth", growth)
        .measure("premise", if premise { 1.0 } else { 0.0 })
        .measure("horizon", times[times.len() - 1] - times[0])
        .with_pass(!premise || peak <= 2.0 * initial);
    Ok(HkTrack {
        times,
        hk_norm,
        a,
        report,
    })
}
