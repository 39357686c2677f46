//! Time integration of the cross-diffusion system, its regularized variant,
//! and the linear Kolmogorov equation `∂ₜz − Δ(µz) = Δf`.
//!
//! The production scheme is first-order IMEX in Fourier space: the linear
//! part `dᵢΔ` is implicit, the nonlinear flux `Δ(p(u,v)u)` explicit. Classical
//! RK4 is available as an independent oracle.

mod kolmogorov;

use serde::{Deserialize, Serialize};

use crate::error::{config_err, domain_err, Error, Result};
use crate::model::ModelSpec;
use crate::spaces::TimeSeriesField;
use crate::torus::{transform, Field, PaddedGrid, SpectralField, TorusGrid};
use crate::FOUR_PI_SQ;

pub use kolmogorov::{solve_kolmogorov, solve_kolmogorov_with};

/// Safety factor of the explicit RK4 time-step bound.
pub const C_STAB: f64 = 0.4;

/// `(t, u, v)` on a common grid.
#[derive(Clone, Debug, PartialEq)]
pub struct State {
    pub t: f64,
    pub u: Field,
    pub v: Field,
}

impl State {
    pub fn new(t: f64, u: Field, v: Field) -> Result<Self> {
        u.ensure_same_grid(&v)?;
        if !(t.is_finite() && t >= 0.0) {
            return config_err(format!(
                "state time must be finite and nonnegative, got {t}"
            ));
        }
        Ok(State { t, u, v })
    }

    pub fn grid(&self) -> TorusGrid {
        self.u.grid()
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    Imex,
    Rk4,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    Plain,
    Regularized,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub spec: ModelSpec,
    pub initial: State,
    pub dt: f64,
    pub t_end: f64,
    pub record_every: usize,
    pub scheme: Scheme,
    pub variant: Variant,
}

impl RunConfig {
    /// IMEX, plain variant, recording every step.
    pub fn new(spec: ModelSpec, initial: State, dt: f64, t_end: f64) -> Self {
        RunConfig {
            spec,
            initial,
            dt,
            t_end,
            record_every: 1,
            scheme: Scheme::Imex,
            variant: Variant::Plain,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.spec.validate()?;
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return config_err(format!("dt must be positive, got {}", self.dt));
        }
        if !(self.t_end.is_finite() && self.dt <= self.t_end * (1.0 + 1e-12)) {
            return config_err(format!(
                "need dt <= t_end, got dt={} t_end={}",
                self.dt, self.t_end
            ));
        }
        if self.record_every == 0 {
            return config_err("record_every must be at least 1");
        }
        if self.variant == Variant::Regularized
            && (self.spec.eta.is_none() || self.spec.trunc_delta.is_none())
        {
            return config_err("the regularized variant needs eta and trunc_delta");
        }
        if !self.initial.is_finite() {
            return config_err("initial data must be finite");
        }
        if self.initial.u.min() < 0.0 || self.initial.v.min() < 0.0 {
            return domain_err("initial data must be nonnegative");
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened to land on `t_end`.
    pub fn n_steps(&self) -> usize {
        ((self.t_end / self.dt) * (1.0 - 1e-12)).ceil().max(1.0) as usize
    }
}

/// Per-step monitored quantities.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Diagnostics {
    pub t: f64,
    pub mass_u: f64,
    pub mass_v: f64,
    pub min_u: f64,
    pub min_v: f64,
    pub l2_u: f64,
    pub l2_v: f64,
}

impl Diagnostics {
    pub fn of(state: &State) -> Self {
        let l2 = |f: &Field| crate::spaces::lp_norm(f, 2.0).expect("p = 2 is valid");
        Diagnostics {
            t: state.t,
            mass_u: state.u.mean(),
            mass_v: state.v.mean(),
            min_u: state.u.min(),
            min_v: state.v.min(),
            l2_u: l2(&state.u),
            l2_v: l2(&state.v),
        }
    }
}

/// Recorded states of a run together with the configuration that produced them.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    config: RunConfig,
    states: Vec<State>,
    diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    /// Wraps externally produced states; diagnostics are those of the states.
    pub fn from_states(config: RunConfig, states: Vec<State>) -> Result<Self> {
        if states.is_empty() {
            return config_err("a trajectory needs at least one state");
        }
        if states.windows(2).any(|w| !(w[1].t > w[0].t)) {
            return config_err("recorded times must be strictly increasing");
        }
        let g = states[0].grid();
        if states.iter().any(|s| s.grid() != g) {
            return config_err("all states must share one grid");
        }
        let diagnostics = states.iter().map(Diagnostics::of).collect();
        Ok(Trajectory {
            config,
            states,
            diagnostics,
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.config
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.config.spec
    }

    pub fn states(&self) -> &[State] {
        &self.states
    }

    /// Diagnostics of every time step, including unrecorded ones.
    pub fn diagnostics(&self) -> &[Diagnostics] {
        &self.diagnostics
    }

    pub fn grid(&self) -> TorusGrid {
        self.states[0].grid()
    }

    pub fn times(&self) -> Vec<f64> {
        self.states.iter().map(|s| s.t).collect()
    }

    pub fn first(&self) -> &State {
        &self.states[0]
    }

    pub fn last(&self) -> &State {
        self.states.last().unwrap()
    }

    pub fn u_series(&self) -> TimeSeriesField {
        TimeSeriesField::new(
            self.times(),
            self.states.iter().map(|s| s.u.clone()).collect(),
        )
        .expect("trajectory invariants")
    }

    pub fn v_series(&self) -> TimeSeriesField {
        TimeSeriesField::new(
            self.times(),
            self.states.iter().map(|s| s.v.clone()).collect(),
        )
        .expect("trajectory invariants")
    }

    /// Largest of `‖u‖_∞` and `‖v‖_∞` over the recorded states.
    pub fn sup_norm(&self) -> f64 {
        self.states
            .iter()
            .map(|s| s.u.max_abs().max(s.v.max_abs()))
            .fold(0.0, f64::max)
    }
}

/// Spectral state plus the padded grid used for the nonlinear terms.
struct Stepper<'a> {
    spec: &'a ModelSpec,
    padded: PaddedGrid,
    regularized: bool,
}

impl<'a> Stepper<'a> {
    fn new(spec: &'a ModelSpec, grid: TorusGrid, regularized: bool) -> Result<Self> {
        Ok(Stepper {
            spec,
            padded: PaddedGrid::new(grid, spec.flux_pad())?,
            regularized,
        })
    }

    /// Spectra of the nonlinear flux parts `p(u,v)u` and `q(u,v)v`, or of
    /// `(ρ_η ⋆ p_δ(u,v))u` and `(ρ_η ⋆ q_δ(u,v))v` in the regularized variant.
    fn nonlinear(&self, u: &SpectralField, v: &SpectralField) -> (SpectralField, SpectralField) {
        let up = self.padded.lift(u);
        let vp = self.padded.lift(v);
        let (p, q) = (self.spec.p.as_poly(), self.spec.q.as_poly());
        if !self.regularized {
            let n1: Vec<f64> = up
                .iter()
                .zip(&vp)
                .map(|(&a, &b)| p.eval(a, b) * a)
                .collect();
            let n2: Vec<f64> = up
                .iter()
                .zip(&vp)
                .map(|(&a, &b)| q.eval(a, b) * b)
                .collect();
            return (self.padded.project(&n1), self.padded.project(&n2));
        }
        let delta = self.spec.trunc_delta.expect("validated");
        let eta = self.spec.eta.expect("validated");
        let kernel = |k2: f64| (-eta * FOUR_PI_SQ * k2).exp();
        let trunc: Vec<(f64, f64)> = up
            .iter()
            .zip(&vp)
            .map(|(&a, &b)| (a.min(delta), b.min(delta)))
            .collect();
        let pd: Vec<f64> = trunc.iter().map(|&(a, b)| p.eval(a, b)).collect();
        let qd: Vec<f64> = trunc.iter().map(|&(a, b)| q.eval(a, b)).collect();
        let pm = self.padded.filter(&pd, kernel);
        let qm = self.padded.filter(&qd, kernel);
        let n1: Vec<f64> = pm.iter().zip(&up).map(|(m, a)| m * a).collect();
        let n2: Vec<f64> = qm.iter().zip(&vp).map(|(m, b)| m * b).collect();
        (self.padded.project(&n1), self.padded.project(&n2))
    }

    fn imex(
        &self,
        u: &SpectralField,
        v: &SpectralField,
        dt: f64,
    ) -> (SpectralField, SpectralField) {
        let (n1, n2) = self.nonlinear(u, v);
        let update = |w: &SpectralField, n: &SpectralField, d: f64| {
            let g = w.grid();
            let coeffs = w
                .coeffs()
                .iter()
                .zip(n.coeffs())
                .enumerate()
                .map(|(i, (c, nl))| {
                    let l = dt * FOUR_PI_SQ * g.mode_sq(i);
                    (c - nl * l) / (1.0 + l * d)
                })
                .collect();
            SpectralField::from_coeffs(g, coeffs).expect("sizes match")
        };
        (update(u, &n1, self.spec.d1), update(v, &n2, self.spec.d2))
    }

    /// `(ΔΦ₁, ΔΦ₂)` in spectral form.
    fn rhs(&self, u: &SpectralField, v: &SpectralField) -> (SpectralField, SpectralField) {
        let (n1, n2) = self.nonlinear(u, v);
        let lap_flux = |w: &SpectralField, n: &SpectralField, d: f64| {
            let g = w.grid();
            let coeffs = w
                .coeffs()
                .iter()
                .zip(n.coeffs())
                .enumerate()
                .map(|(i, (c, nl))| -(c * d + nl) * (FOUR_PI_SQ * g.mode_sq(i)))
                .collect();
            SpectralField::from_coeffs(g, coeffs).expect("sizes match")
        };
        (
            lap_flux(u, &n1, self.spec.d1),
            lap_flux(v, &n2, self.spec.d2),
        )
    }

    fn rk4(&self, u: &SpectralField, v: &SpectralField, dt: f64) -> (SpectralField, SpectralField) {
        let axpy = |x: &SpectralField, a: f64, y: &SpectralField| {
            let coeffs = x
                .coeffs()
                .iter()
                .zip(y.coeffs())
                .map(|(x, y)| x + y * a)
                .collect();
            SpectralField::from_coeffs(x.grid(), coeffs).expect("sizes match")
        };
        let (k1u, k1v) = self.rhs(u, v);
        let (k2u, k2v) = self.rhs(&axpy(u, dt / 2.0, &k1u), &axpy(v, dt / 2.0, &k1v));
        let (k3u, k3v) = self.rhs(&axpy(u, dt / 2.0, &k2u), &axpy(v, dt / 2.0, &k2v));
        let (k4u, k4v) = self.rhs(&axpy(u, dt, &k3u), &axpy(v, dt, &k3v));
        let combine = |x: &SpectralField,
                       k1: &SpectralField,
                       k2: &SpectralField,
                       k3: &SpectralField,
                       k4: &SpectralField| {
            let coeffs = (0..x.coeffs().len())
                .map(|i| {
                    x.coeffs()[i]
                        + (k1.coeffs()[i]
                            + k2.coeffs()[i] * 2.0
                            + k3.coeffs()[i] * 2.0
                            + k4.coeffs()[i])
                            * (dt / 6.0)
                })
                .collect();
            SpectralField::from_coeffs(x.grid(), coeffs).expect("sizes match")
        };
        (
            combine(u, &k1u, &k2u, &k3u, &k4u),
            combine(v, &k1v, &k2v, &k3v, &k4v),
        )
    }
}

/// Largest RK4 step allowed at `state`:
/// `C_STAB / (4π² d (N/2)² D_eff)` with `D_eff = maxᵢ(dᵢ + |Qᵢ| + |Rᵢ|)`
/// evaluated at the sup norms of the state.
pub fn rk4_dt_bound(spec: &ModelSpec, state: &State) -> f64 {
    let qr = crate::model::derive_qr(spec);
    let (a, b) = (state.u.max_abs(), state.v.max_abs());
    let s = |p: &crate::model::BiPoly| p.abs_coeffs().eval(a, b);
    let d_eff = (spec.d1 + s(&qr.q1) + s(&qr.r1)).max(spec.d2 + s(&qr.q2) + s(&qr.r2));
    let g = state.grid();
    let kmax = (g.n() / 2) as f64;
    C_STAB / (FOUR_PI_SQ * g.dim() as f64 * kmax * kmax * d_eff)
}

fn single_blow_up(state: &State, spec: &ModelSpec, dt: f64, scheme: Scheme) -> Error {
    let config = RunConfig {
        scheme,
        ..RunConfig::new(spec.clone(), state.clone(), dt, dt)
    };
    Error::BlowUp {
        step: 1,
        time: state.t + dt,
        partial: Box::new(Trajectory::from_states(config, vec![state.clone()]).expect("one state")),
    }
}

fn advance(state: &State, stepper: &Stepper, dt: f64, scheme: Scheme) -> Result<State> {
    let (u, v) = (transform(&state.u), transform(&state.v));
    let (u1, v1) = match scheme {
        Scheme::Imex => stepper.imex(&u, &v, dt),
        Scheme::Rk4 => {
            let bound = rk4_dt_bound(stepper.spec, state);
            if dt > bound {
                return config_err(format!(
                    "rk4 step {dt:e} exceeds the stability bound {bound:e}"
                ));
            }
            stepper.rk4(&u, &v, dt)
        }
    };
    Ok(State {
        t: state.t + dt,
        u: u1.to_field(),
        v: v1.to_field(),
    })
}

/// One IMEX step of the plain system.
pub fn step_imex(state: &State, spec: &ModelSpec, dt: f64) -> Result<State> {
    step(state, spec, dt, Scheme::Imex)
}

/// One classical RK4 step; `dt` must respect [`rk4_dt_bound`].
pub fn step_rk4(state: &State, spec: &ModelSpec, dt: f64) -> Result<State> {
    step(state, spec, dt, Scheme::Rk4)
}

fn step(state: &State, spec: &ModelSpec, dt: f64, scheme: Scheme) -> Result<State> {
    if !(dt > 0.0) {
        return config_err(format!("dt must be positive, got {dt}"));
    }
    let stepper = Stepper::new(spec, state.grid(), false)?;
    let next = advance(state, &stepper, dt, scheme)?;
    if !next.is_finite() {
        return Err(single_blow_up(state, spec, dt, scheme));
    }
    Ok(next)
}

/// Integrates `config` to `t_end`, recording every `record_every` steps and
/// at the final time. Negative values are never clipped.
pub fn simulate(config: &RunConfig) -> Result<Trajectory> {
    config.validate()?;
    run(config, config.variant == Variant::Regularized)
}

/// [`simulate`] for the mollified and truncated system.
pub fn simulate_regularized(config: &RunConfig) -> Result<Trajectory> {
    let config = RunConfig {
        variant: Variant::Regularized,
        ..config.clone()
    };
    config.validate()?;
    run(&config, true)
}

fn run(config: &RunConfig, regularized: bool) -> Result<Trajectory> {
    let stepper = Stepper::new(&config.spec, config.initial.grid(), regularized)?;
    let n = config.n_steps();
    let t0 = config.initial.t;
    let mut state = config.initial.clone();
    let mut states = vec![state.clone()];
    let mut diagnostics = vec![Diagnostics::of(&state)];
    for step in 1..=n {
        let t_next = if step == n {
            t0 + config.t_end
        } else {
            t0 + step as f64 * config.dt
        };
        let mut next = advance(&state, &stepper, t_next - state.t, config.scheme)?;
        next.t = t_next;
        if !next.is_finite() {
            log::warn!("non-finite state at step {step} (t = {t_next})");
            return Err(Error::BlowUp {
                step,
                time: t_next,
                partial: Box::new(Trajectory {
                    config: config.clone(),
                    states,
                    diagnostics,
                }),
            });
        }
        diagnostics.push(Diagnostics::of(&next));
        if step % config.record_every == 0 || step == n {
            states.push(next.clone());
        }
        state = next;
    }
    Ok(Trajectory {
        config: config.clone(),
        states,
        diagnostics,
    })
}

#[cfg(test)]
mod tests;
