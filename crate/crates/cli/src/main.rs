use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use crossflux::config::{run_checks, sweep_row, Check, RunFile, SweepConfig, SweepRow};
use crossflux::counterexample::{build_pair, verify_counterexample};
use crossflux::io::write_atomic;
use crossflux::model::thresholds;
use crossflux::solver::{simulate, Diagnostics, Trajectory};
use crossflux::spaces::{besov_nk, lp_norm, sobolev_norm};
use crossflux::torus::csv::{read_field, to_csv_string};
use crossflux::torus::{Field, TorusGrid};
use crossflux::verifier::Report;
use crossflux::Error;
use rayon::prelude::*;

#[derive(Parser)]
#[command(
    name = "crossflux",
    version,
    about = "Cross-diffusion simulator and estimate checker"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Integrate a run and write its diagnostics CSV.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Directory receiving one field CSV per species and recorded time.
        #[arg(long)]
        dump_fields: Option<PathBuf>,
    },
    /// Integrate a run and evaluate checks on it.
    Verify {
        #[arg(long)]
        config: PathBuf,
        /// Comma-separated subset of mass,energy,decay,duality,stability,lambda,hk,lyapunov.
        #[arg(long, default_value = "mass")]
        checks: String,
        #[arg(long)]
        report: Option<PathBuf>,
    },
    /// Norm of a field read from CSV.
    Norms {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, value_enum)]
        norm: NormKind,
        #[arg(long, default_value_t = 2.0)]
        p: f64,
        #[arg(long, default_value_t = 0.0)]
        s: f64,
        #[arg(long, default_value_t = 2.0)]
        k: f64,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
    /// Build and verify the staircase counterexample family.
    Counterexample {
        #[arg(long, default_value_t = 5)]
        nmax: u32,
        #[arg(long, default_value_t = 4096)]
        grid: usize,
        #[arg(long, default_value_t = 1)]
        dim: usize,
        #[arg(long)]
        report: Option<PathBuf>,
        #[arg(long)]
        dump_fields: Option<PathBuf>,
    },
    /// Run a parameter sweep and write its summary CSV.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the smallness thresholds of a model.
    Thresholds {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum NormKind {
    Lp,
    Hs,
    Nk,
}

enum Failure {
    Checks,
    Config(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BlowUp { step, time, .. } => {
                log::error!("blow-up at step {step} (t = {time})");
                Failure::Checks
            }
            other => Failure::Config(other.to_string()),
        }
    }
}

type CliResult = Result<(), Failure>;

fn base_dir(path: &Path) -> PathBuf {
    match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    }
}

fn diagnostics_csv(traj: &Trajectory) -> String {
    let mut out = String::from("t,mass_u,mass_v,min_u,min_v,l2_u,l2_v\n");
    for s in traj.states() {
        let d = Diagnostics::of(s);
        let _ = writeln!(
            out,
            "{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            d.t, d.mass_u, d.mass_v, d.min_u, d.min_v, d.l2_u, d.l2_v
        );
    }
    out
}

fn dump(dir: &Path, name: &str, field: &Field) -> Result<(), Error> {
    write_atomic(&dir.join(name), to_csv_string(field).as_bytes())
}

fn write_reports(path: &Path, reports: &[Report]) -> Result<(), Error> {
    let mut text = serde_json::to_string_pretty(reports)?;
    text.push('\n');
    write_atomic(path, text.as_bytes())
}

fn verdict(reports: &[Report]) -> CliResult {
    for r in reports {
        println!("{}", r.summary());
    }
    if reports.iter().all(|r| r.pass) {
        Ok(())
    } else {
        Err(Failure::Checks)
    }
}

/// Decimal rendering with 12 significant digits.
fn sig12(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let exp = x.abs().log10().floor() as i32;
    if (-5..12).contains(&exp) {
        format!("{:.*}", (11 - exp).max(0) as usize, x)
    } else {
        format!("{x:.11e}")
    }
}

fn threads() -> Option<usize> {
    std::env::var("CROSSFLUX_THREADS")
        .ok()
        .and_then(|s| s.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
}

fn execute(cli: Cli) -> CliResult {
    match cli.command {
        Command::Simulate {
            config,
            out,
            dump_fields,
        } => {
            let file = RunFile::load(&config)?;
            let run = file.to_run_config(&base_dir(&config))?;
            let traj = simulate(&run)?;
            write_atomic(&out, diagnostics_csv(&traj).as_bytes())?;
            if let Some(dir) = dump_fields {
                std::fs::create_dir_all(&dir).map_err(Error::from)?;
                for (i, s) in traj.states().iter().enumerate() {
                    dump(&dir, &format!("u_{i:05}.csv"), &s.u)?;
                    dump(&dir, &format!("v_{i:05}.csv"), &s.v)?;
                }
            }
            log::info!(
                "{} recorded states written to {}",
                traj.states().len(),
                out.display()
            );
            Ok(())
        }
        Command::Verify {
            config,
            checks,
            report,
        } => {
            let selected = checks
                .split(',')
                .filter(|s| !s.trim().is_empty())
                .map(|s| s.parse::<Check>())
                .collect::<Result<Vec<_>, _>>()?;
            if selected.is_empty() {
                return Err(Failure::Config("no checks selected".into()));
            }
            let file = RunFile::load(&config)?;
            let dir = base_dir(&config);
            let run = file.to_run_config(&dir)?;
            let traj = simulate(&run)?;
            let reports = run_checks(&file, &dir, &traj, &selected)?;
            if let Some(path) = report {
                write_reports(&path, &reports)?;
            }
            verdict(&reports)
        }
        Command::Norms {
            input,
            norm,
            p,
            s,
            k,
            tol,
        } => {
            let field = read_field(&input)?;
            let value = match norm {
                NormKind::Lp => lp_norm(&field, p)?,
                NormKind::Hs => sobolev_norm(&field, s),
                NormKind::Nk => besov_nk(&field, k, tol)?,
            };
            println!("{}", sig12(value));
            Ok(())
        }
        Command::Counterexample {
            nmax,
            grid,
            dim,
            report,
            dump_fields,
        } => {
            let g = TorusGrid::new(dim, grid)?;
            let rep = verify_counterexample(nmax, g)?;
            if let Some(dir) = dump_fields {
                std::fs::create_dir_all(&dir).map_err(Error::from)?;
                for n in 1..=nmax {
                    let pair = build_pair(n, g)?;
                    dump(&dir, &format!("h_{n}.csv"), &pair.h)?;
                    dump(&dir, &format!("u_{n}.csv"), &pair.u)?;
                    dump(&dir, &format!("v_{n}.csv"), &pair.v)?;
                }
            }
            let reports = vec![rep];
            if let Some(path) = report {
                write_reports(&path, &reports)?;
            }
            verdict(&reports)
        }
        Command::Sweep { config, out } => {
            let sweep = SweepConfig::load(&config)?;
            let dir = base_dir(&config);
            let indices: Vec<usize> = (0..sweep.values.len()).collect();
            let rows: Vec<Result<SweepRow, Error>> = if sweep.parallel {
                let mut builder = rayon::ThreadPoolBuilder::new();
                if let Some(n) = threads() {
                    builder = builder.num_threads(n);
                }
                let pool = builder
                    .build()
                    .map_err(|e| Failure::Config(format!("thread pool: {e}")))?;
                pool.install(|| {
                    indices
                        .par_iter()
                        .map(|&i| sweep_row(&sweep, i, &dir))
                        .collect()
                })
            } else {
                indices
                    .iter()
                    .map(|&i| sweep_row(&sweep, i, &dir))
                    .collect()
            };
            let mut text = String::from(SweepRow::HEADER);
            text.push('\n');
            for row in rows {
                text.push_str(&row?.to_csv());
                text.push('\n');
            }
            write_atomic(&out, text.as_bytes())?;
            Ok(())
        }
        Command::Thresholds { config } => {
            let file = RunFile::load(&config)?;
            let t = thresholds(&file.model()?);
            println!("delta_A = {}", sig12(t.delta_a));
            println!("stability_delta_max = {}", sig12(t.stability));
            println!("bootstrap_delta = {}", sig12(t.bootstrap));
            println!("min = {}", sig12(t.min));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Checks) => ExitCode::from(1),
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
