//! Norms on the torus and on space-time cylinders, plus the
//! Littlewood–Paley toolbox with its numerical inequality checks.

mod dyadic;

use crate::error::{config_err, domain_err, Result};
use crate::torus::{transform, Field, TorusGrid};
use crate::FOUR_PI_SQ;

pub use dyadic::{
    bernstein_check, bernstein_ratio, block_sequence_check, block_sequence_norm, dyadic_block,
    dyadic_levels, heat_decay_check, heat_decay_ratio, maxreg_ratio, random_annulus_field,
    DyadicBlock, C_BERN, C_BLOCK, HEAT_DECAY_C, HEAT_DECAY_RATE, MAXREG_BOUND,
};

/// Smallest sample of the geometric time grid used by [`besov_nk`].
pub const NK_T_MIN: f64 = 1e-6;
/// Ratio of consecutive samples of that grid.
pub const NK_RATIO: f64 = 1.15;

/// `∫|f|^k` by equal-weight quadrature.
pub(crate) fn lk_pow(field: &Field, k: f64) -> f64 {
    let h = field.grid().cell_volume();
    if k == 2.0 {
        field.values().iter().map(|x| x * x).sum::<f64>() * h
    } else {
        field.values().iter().map(|x| x.abs().powf(k)).sum::<f64>() * h
    }
}

/// `(∫|f|^p)^{1/p}`, or `max|f|` for `p = ∞`.
pub fn lp_norm(field: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return domain_err(format!("Lp norm needs p >= 1, got {p}"));
    }
    if p.is_infinite() {
        return Ok(field.max_abs());
    }
    Ok(lk_pow(field, p).powf(1.0 / p))
}

pub fn mean(field: &Field) -> f64 {
    field.mean()
}

/// `(Σ_ξ (1 + 4π²|ξ|²)^s |f̂(ξ)|²)^{1/2}`, mean mode included.
pub fn sobolev_norm(field: &Field, s: f64) -> f64 {
    transform(field)
        .weighted_norm_sq(|k2| (1.0 + FOUR_PI_SQ * k2).powf(s))
        .sqrt()
}

/// `N_k(f) = (∫₀^∞ ‖e^{tΔ}f‖_k^k dt)^{1/k}` for mean-zero `f`.
///
/// The integral is a trapezoid rule in `ln t` on the grid `t_j = t₀·1.15^j`,
/// which starts at `1e−6` or lower when the grid resolves faster modes. It
/// stops at the first `T` where `(Σ|f̂|)^k e^{−4π²kT}/(4π²k)`, a bound on the
/// remaining integral, falls below `tol` times the accumulated value.
///
/// ```
/// use crossflux::spaces::besov_nk;
/// use crossflux::torus::{Field, TorusGrid};
/// let g = TorusGrid::new(1, 64).unwrap();
/// let f = Field::from_fn(g, |[x, _]| (2.0 * std::f64::consts::PI * x).cos());
/// let n2 = besov_nk(&f, 2.0, 1e-10).unwrap();
/// assert!((n2 - 1.0 / (4.0 * std::f64::consts::PI)).abs() < 1e-8);
/// ```
pub fn besov_nk(field: &Field, k: f64, tol: f64) -> Result<f64> {
    if !(k > 1.0 && k.is_finite()) {
        return domain_err(format!("N_k needs 1 < k < inf, got {k}"));
    }
    if !(tol > 0.0) {
        return domain_err(format!("tolerance must be positive, got {tol}"));
    }
    let m = field.mean();
    if m.abs() >= 1e-10 {
        return domain_err(format!(
            "N_k is only finite for mean-zero input (mean = {m:e}); the heat flow preserves the mean"
        ));
    }
    let spec = transform(field);
    let l1: f64 = spec.coeffs().iter().skip(1).map(|c| c.norm()).sum();
    if l1 == 0.0 {
        return Ok(0.0);
    }
    let g = |t: f64| {
        lk_pow(
            &spec
                .apply_multiplier(|k2| (-FOUR_PI_SQ * k2 * t).exp())
                .to_field(),
            k,
        )
    };
    let rate = FOUR_PI_SQ * k;
    let tail_bound = |t: f64| l1.powf(k) * (-rate * t).exp() / rate;

    let fastest = rate * field.grid().max_wavenumber_norm().powi(2);
    let t0 = NK_T_MIN.min(1e-4 / fastest);
    let h = NK_RATIO.ln();
    // ∫₀^{t₀} g ≈ t₀(g(0) + g(t₀))/2, then the log-grid trapezoid from t₀ on.
    let g0 = lk_pow(field, k);
    let mut t = t0;
    let mut gt = g(t);
    let mut integral = 0.5 * t0 * (g0 + gt) + 0.5 * h * t * gt;
    loop {
        t *= NK_RATIO;
        gt = g(t);
        integral += h * t * gt;
        if tail_bound(t) < tol * integral || gt == 0.0 {
            break;
        }
    }
    // Replace the last full weight by a half weight and close with the
    // slowest-mode tail ∫_T^∞ g(T)e^{−4π²k(s−T)} ds.
    integral += -0.5 * h * t * gt + gt / rate;
    Ok(integral.powf(1.0 / k))
}

/// Fields sampled at strictly increasing times on one grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeriesField {
    times: Vec<f64>,
    fields: Vec<Field>,
}

impl TimeSeriesField {
    pub fn new(times: Vec<f64>, fields: Vec<Field>) -> Result<Self> {
        if times.len() != fields.len() || times.is_empty() {
            return config_err(format!("{} times for {} fields", times.len(), fields.len()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return config_err("times must be strictly increasing");
        }
        let g = fields[0].grid();
        if fields.iter().any(|f| f.grid() != g) {
            return config_err("all fields of a time series must share one grid");
        }
        Ok(TimeSeriesField { times, fields })
    }

    /// Samples `f(t)` at the given times.
    pub fn from_fn(times: Vec<f64>, f: impl Fn(f64) -> Field) -> Result<Self> {
        let fields = times.iter().map(|&t| f(t)).collect();
        TimeSeriesField::new(times, fields)
    }

    /// The same field at two times, constant in between.
    pub fn constant(field: Field, t_end: f64) -> Result<Self> {
        TimeSeriesField::new(vec![0.0, t_end], vec![field.clone(), field])
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn fields(&self) -> &[Field] {
        &self.fields
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn grid(&self) -> TorusGrid {
        self.fields[0].grid()
    }

    pub fn t_start(&self) -> f64 {
        self.times[0]
    }

    pub fn t_end(&self) -> f64 {
        *self.times.last().unwrap()
    }

    /// Piecewise-linear interpolation in time.
    pub fn at(&self, t: f64) -> Result<Field> {
        let slack = 1e-12 * (1.0 + self.t_end().abs());
        if t < self.t_start() - slack || t > self.t_end() + slack {
            return domain_err(format!(
                "t = {t} outside the sampled interval [{}, {}]",
                self.t_start(),
                self.t_end()
            ));
        }
        let i = self.times.partition_point(|&s| s <= t);
        if i == 0 {
            return Ok(self.fields[0].clone());
        }
        if i == self.len() {
            return Ok(self.fields[self.len() - 1].clone());
        }
        let (t0, t1) = (self.times[i - 1], self.times[i]);
        let w = (t - t0) / (t1 - t0);
        self.fields[i - 1].zip_with(&self.fields[i], |a, b| a + w * (b - a))
    }

    /// Applies `f` to every sample.
    pub fn map(&self, f: impl Fn(&Field) -> Field) -> TimeSeriesField {
        TimeSeriesField {
            times: self.times.clone(),
            fields: self.fields.iter().map(f).collect(),
        }
    }

    /// Keeps the samples with `t ≤ t_max`.
    pub fn truncate_after(&self, t_max: f64) -> TimeSeriesField {
        let n = self.times.partition_point(|&t| t <= t_max).max(1);
        TimeSeriesField {
            times: self.times[..n].to_vec(),
            fields: self.fields[..n].to_vec(),
        }
    }
}

/// Composite trapezoid weights for the given nodes.
pub fn trapezoid_weights(times: &[f64]) -> Vec<f64> {
    let n = times.len();
    let mut w = vec![0.0; n];
    for i in 0..n.saturating_sub(1) {
        let h = times[i + 1] - times[i];
        w[i] += 0.5 * h;
        w[i + 1] += 0.5 * h;
    }
    w
}

/// Cumulative trapezoid integrals `∫_{t₀}^{t_n} y` for every node.
pub fn cumulative_trapezoid(times: &[f64], y: &[f64]) -> Vec<f64> {
    let mut out = Vec::with_capacity(times.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..times.len() {
        acc += 0.5 * (times[i] - times[i - 1]) * (y[i] + y[i - 1]);
        out.push(acc);
    }
    out
}

/// `‖f‖_{L^k(Q_T)} = (∫ ‖f(t)‖_k^k dt)^{1/k}`, trapezoid rule in time.
pub fn spacetime_lk(series: &TimeSeriesField, k: f64) -> Result<f64> {
    if series.len() < 2 {
        return domain_err("space-time norm needs at least two time samples");
    }
    if !(k >= 1.0 && k.is_finite()) {
        return domain_err(format!("space-time L^k needs 1 <= k < inf, got {k}"));
    }
    let w = trapezoid_weights(series.times());
    let s: f64 = series
        .fields()
        .iter()
        .zip(&w)
        .map(|(f, w)| w * lk_pow(f, k))
        .sum();
    Ok(s.powf(1.0 / k))
}
