//! JSON run descriptions and the check suite driven by them.
//!
//! ```
//! use crossflux::config::RunFile;
//! let file: RunFile = serde_json::from_str(r#"{
//!     "d": 1, "N": 32, "d1": 1.0, "d2": 1.5,
//!     "p": [[1, 0, 1.0], [0, 1, 1.0]], "q": [[1, 0, 1.0], [0, 1, 1.0]],
//!     "initial": {
//!         "u": {"kind": "cosine", "mean": 0.02, "amplitude": 0.01},
//!         "v": {"kind": "constant", "value": 0.02}
//!     },
//!     "dt": 1e-3, "t_end": 0.01
//! }"#).unwrap();
//! let config = file.to_run_config(std::path::Path::new(".")).unwrap();
//! assert_eq!(config.n_steps(), 10);
//! ```

use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{config_err, Error, Result};
use crate::model::{smallness_functional, thresholds, ModelSpec, Poly2};
use crate::solver::{simulate, RunConfig, Scheme, State, Trajectory, Variant};
use crate::spaces::TimeSeriesField;
use crate::torus::csv::read_field;
use crate::torus::{random_trig_field, Field, TorusGrid};
use crate::verifier::{
    check_duality, check_energy_decay, check_lyapunov_nonconvex, check_mass, check_stability_pair,
    fit_decay_rate, track_hk, track_lambda, Report,
};

/// Initial profile of one species.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum Profile {
    Constant {
        value: f64,
    },
    /// `mean + amplitude·cos(2π ξ·x)`.
    Cosine {
        mean: f64,
        amplitude: f64,
        #[serde(default = "unit_mode")]
        mode: [i64; 2],
    },
    /// `mean + amplitude·g/‖g‖_∞` with `g` a random trigonometric polynomial
    /// on the modes `0 < |ξ|_∞ ≤ modes`.
    Random {
        mean: f64,
        amplitude: f64,
        modes: i64,
        seed: u64,
    },
    /// Field CSV, relative to the directory of the run file.
    File {
        path: PathBuf,
    },
}

fn unit_mode() -> [i64; 2] {
    [1, 0]
}

impl Profile {
    pub fn build(&self, grid: TorusGrid, base_dir: &Path) -> Result<Field> {
        match self {
            Profile::Constant { value } => Ok(Field::constant(grid, *value)),
            Profile::Cosine {
                mean,
                amplitude,
                mode,
            } => {
                let two_pi = 2.0 * std::f64::consts::PI;
                let (a, b) = (mode[0] as f64, mode[1] as f64);
                Ok(Field::from_fn(grid, |[x, y]| {
                    mean + amplitude * (two_pi * (a * x + b * y)).cos()
                }))
            }
            Profile::Random {
                mean,
                amplitude,
                modes,
                seed,
            } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let m = *modes;
                let g = random_trig_field(grid, &mut rng, |xi| {
                    let r = xi[0].abs().max(xi[1].abs());
                    r > 0 && r <= m
                });
                let scale = g.max_abs();
                if scale == 0.0 {
                    return Ok(Field::constant(grid, *mean));
                }
                Ok(g.map(|x| mean + amplitude * x / scale))
            }
            Profile::File { path } => {
                let field = read_field(&base_dir.join(path))?;
                if field.grid() != grid {
                    return config_err(format!(
                        "{} holds a d={} N={} field, the run needs d={} N={}",
                        path.display(),
                        field.grid().dim(),
                        field.grid().n(),
                        grid.dim(),
                        grid.n()
                    ));
                }
                Ok(field)
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialData {
    pub u: Profile,
    pub v: Profile,
}

/// Second run for the stability check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilityParams {
    /// Amplitude bound for the base run.
    #[serde(rename = "R")]
    pub r: f64,
    /// Amplitude bound for the partner run.
    pub delta: f64,
    pub partner: InitialData,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckParams {
    #[serde(default)]
    pub stability: Option<StabilityParams>,
    /// Integrability exponent of λ(T); default 3.
    #[serde(default)]
    pub lambda_k: Option<f64>,
    /// Threshold δ of λ(T); default the smallest of the model thresholds.
    #[serde(default)]
    pub lambda_delta: Option<f64>,
    /// Sobolev order of the Hᵏ tracker; default 1.
    #[serde(default)]
    pub hk_order: Option<u32>,
    /// Smallness threshold of the Hᵏ tracker; default unbounded.
    #[serde(default)]
    pub hk_threshold: Option<f64>,
}

/// Contents of `run.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunFile {
    pub d: usize,
    #[serde(rename = "N")]
    pub n: usize,
    pub d1: f64,
    pub d2: f64,
    pub p: Poly2,
    pub q: Poly2,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub trunc_delta: Option<f64>,
    pub initial: InitialData,
    /// Factor applied to both initial fields.
    #[serde(default = "one")]
    pub amplitude: f64,
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "one_usize")]
    pub record_every: usize,
    #[serde(default = "imex")]
    pub scheme: Scheme,
    #[serde(default = "plain")]
    pub variant: Variant,
    #[serde(default)]
    pub checks: CheckParams,
}

fn one() -> f64 {
    1.0
}
fn one_usize() -> usize {
    1
}
fn imex() -> Scheme {
    Scheme::Imex
}
fn plain() -> Variant {
    Variant::Plain
}

impl RunFile {
    pub fn load(path: &Path) -> Result<RunFile> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn grid(&self) -> Result<TorusGrid> {
        TorusGrid::new(self.d, self.n)
    }

    pub fn model(&self) -> Result<ModelSpec> {
        let spec = ModelSpec {
            d1: self.d1,
            d2: self.d2,
            p: self.p.clone(),
            q: self.q.clone(),
            eta: self.eta,
            trunc_delta: self.trunc_delta,
        };
        spec.validate()?;
        Ok(spec)
    }

    fn state(&self, data: &InitialData, base_dir: &Path) -> Result<State> {
        let grid = self.grid()?;
        if !self.amplitude.is_finite() {
            return config_err("amplitude must be finite");
        }
        let u = &data.u.build(grid, base_dir)? * self.amplitude;
        let v = &data.v.build(grid, base_dir)? * self.amplitude;
        State::new(0.0, u, v)
    }

    /// Resolves profiles (file paths relative to `base_dir`) and validates.
    pub fn to_run_config(&self, base_dir: &Path) -> Result<RunConfig> {
        let config = RunConfig {
            spec: self.model()?,
            initial: self.state(&self.initial, base_dir)?,
            dt: self.dt,
            t_end: self.t_end,
            record_every: self.record_every,
            scheme: self.scheme,
            variant: self.variant,
        };
        config.validate()?;
        Ok(config)
    }

    /// Sets one sweep parameter.
    pub fn with_axis(&self, axis: SweepAxis, value: f64) -> RunFile {
        let mut out = self.clone();
        match axis {
            SweepAxis::Amplitude => out.amplitude = value,
            SweepAxis::D1 => out.d1 = value,
            SweepAxis::D2 => out.d2 = value,
            SweepAxis::Eta => out.eta = Some(value),
            SweepAxis::TruncDelta => out.trunc_delta = Some(value),
            SweepAxis::Dt => out.dt = value,
        }
        out
    }
}

/// Checks selectable by name.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Check {
    Mass,
    Energy,
    Decay,
    Duality,
    Stability,
    Lambda,
    Hk,
    Lyapunov,
}

impl Check {
    pub const ALL: [Check; 8] = [
        Check::Mass,
        Check::Energy,
        Check::Decay,
        Check::Duality,
        Check::Stability,
        Check::Lambda,
        Check::Hk,
        Check::Lyapunov,
    ];
}

impl FromStr for Check {
    type Err = Error;

    fn from_str(s: &str) -> Result<Check> {
        serde_json::from_value(serde_json::Value::String(s.trim().to_string()))
            .map_err(|_| Error::Config(format!("unknown check `{s}`")))
    }
}

fn mobility_series(traj: &Trajectory, which: usize) -> Result<(TimeSeriesField, TimeSeriesField)> {
    let spec = traj.spec();
    let times = traj.times();
    let mut mu = Vec::with_capacity(times.len());
    let mut z = Vec::with_capacity(times.len());
    for s in traj.states() {
        let (d, poly, field) = if which == 0 {
            (spec.d1, &spec.p, &s.u)
        } else {
            (spec.d2, &spec.q, &s.v)
        };
        mu.push(s.u.zip_with(&s.v, |a, b| d + poly.eval(a, b))?);
        z.push(field.clone());
    }
    Ok((
        TimeSeriesField::new(times.clone(), z)?,
        TimeSeriesField::new(times, mu)?,
    ))
}

/// Runs the checks in `checks` against the trajectory of `file`.
///
/// The duality check treats each species as the solution of its own
/// Kolmogorov equation, `µ = d₁ + p(u,v)` for `u` and `µ = d₂ + q(u,v)` for
/// `v`; the report combines both.
pub fn run_checks(
    file: &RunFile,
    base_dir: &Path,
    traj: &Trajectory,
    checks: &[Check],
) -> Result<Vec<Report>> {
    let spec = traj.spec().clone();
    let mut out = Vec::with_capacity(checks.len());
    for &check in checks {
        let report = match check {
            Check::Mass => check_mass(traj),
            Check::Energy => check_energy_decay(traj, &spec),
            Check::Decay => fit_decay_rate(traj)?,
            Check::Duality => {
                let mut merged: Option<Report> = None;
                for (which, name) in [(0, "u"), (1, "v")] {
                    let (z, mu) = mobility_series(traj, which)?;
                    let zero = z.map(|f| Field::zeros(f.grid()));
                    let z_in = z.fields()[0].clone();
                    let r = check_duality(&z, &mu, &zero, &z_in)?;
                    let m = merged.get_or_insert_with(|| {
                        Report::new(&r.check, &r.paper_anchor, r.tolerance).with_pass(true)
                    });
                    for (k, v) in &r.measured {
                        m.record(&format!("{name}_{k}"), *v);
                    }
                    m.pass &= r.pass;
                }
                merged.expect("two species")
            }
            Check::Stability => {
                let params = match &file.checks.stability {
                    Some(p) => p,
                    None => {
                        return config_err(
                            "the stability check needs checks.stability {R, delta, partner}",
                        )
                    }
                };
                let partner = RunConfig {
                    initial: file.state(&params.partner, base_dir)?,
                    ..traj.config().clone()
                };
                let traj2 = simulate(&partner)?;
                check_stability_pair(traj, &traj2, &spec, params.r, params.delta)?
            }
            Check::Lambda => {
                let k = file.checks.lambda_k.unwrap_or(3.0);
                let delta = file
                    .checks
                    .lambda_delta
                    .unwrap_or_else(|| thresholds(&spec).min);
                track_lambda(traj, &spec, k, delta)?.report
            }
            Check::Hk => {
                let k = file.checks.hk_order.unwrap_or(1);
                let threshold = file.checks.hk_threshold.unwrap_or(f64::INFINITY);
                track_hk(traj, k, threshold)?.report
            }
            Check::Lyapunov => check_lyapunov_nonconvex(traj)?,
        };
        out.push(report);
    }
    Ok(out)
}

/// Parameter varied by a sweep.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    Amplitude,
    D1,
    D2,
    Eta,
    TruncDelta,
    Dt,
}

/// Contents of `sweep.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub base: RunFile,
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(default)]
    pub parallel: bool,
}

impl SweepConfig {
    pub fn load(path: &Path) -> Result<SweepConfig> {
        let text = std::fs::read_to_string(path)?;
        let sweep: SweepConfig = serde_json::from_str(&text)?;
        sweep.validate()?;
        Ok(sweep)
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return config_err("the sweep has no values");
        }
        if self.values.iter().any(|v| !v.is_finite()) {
            return config_err("sweep values must be finite");
        }
        Ok(())
    }
}

/// One line of the sweep summary.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SweepRow {
    pub index: usize,
    pub value: f64,
    pub blowup: bool,
    pub smallness: f64,
    pub lambda_final: f64,
    pub decay_rate: f64,
    pub mass_pass: bool,
    pub lambda_pass: bool,
    pub decay_pass: bool,
}

impl SweepRow {
    pub const HEADER: &'static str =
        "index,value,blowup,smallness,lambda_final,decay_rate,mass_pass,lambda_pass,decay_pass";

    pub fn to_csv(&self) -> String {
        format!(
            "{},{:e},{},{:e},{:e},{:e},{},{},{}",
            self.index,
            self.value,
            self.blowup as u8,
            self.smallness,
            self.lambda_final,
            self.decay_rate,
            self.mass_pass as u8,
            self.lambda_pass as u8,
            self.decay_pass as u8
        )
    }
}

/// Simulates one sweep point. Blow-ups become rows with `blowup = true`;
/// configuration errors are returned.
pub fn sweep_row(sweep: &SweepConfig, index: usize, base_dir: &Path) -> Result<SweepRow> {
    let value = sweep.values[index];
    let file = sweep.base.with_axis(sweep.axis, value);
    let config = file.to_run_config(base_dir)?;
    let spec = config.spec.clone();
    let k = file.checks.lambda_k.unwrap_or(3.0);
    let delta = file
        .checks
        .lambda_delta
        .unwrap_or_else(|| thresholds(&spec).min);
    let smallness = smallness_functional(&config.initial.u, &config.initial.v, &spec, k, 1e-8)?;
    let mut row = SweepRow {
        index,
        value,
        blowup: false,
        smallness,
        lambda_final: f64::NAN,
        decay_rate: f64::NAN,
        mass_pass: false,
        lambda_pass: false,
        decay_pass: false,
    };
    let traj = match simulate(&config) {
        Ok(t) => t,
        Err(Error::BlowUp { step, time, .. }) => {
            log::warn!("sweep point {index} ({value}) blew up at step {step}, t = {time}");
            row.blowup = true;
            return Ok(row);
        }
        Err(e) => return Err(e),
    };
    row.mass_pass = check_mass(&traj).pass;
    let lambda = track_lambda(&traj, &spec, k, delta)?;
    row.lambda_final = *lambda.lambda.last().unwrap_or(&f64::NAN);
    row.lambda_pass = lambda.report.pass;
    if let Ok(r) = fit_decay_rate(&traj) {
        row.decay_rate = r.get("rate");
        row.decay_pass = r.pass;
    }
    Ok(row)
}
