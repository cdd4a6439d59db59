//! Command-line front end.
//!
//! Exit status is 0 on success, 1 for usage or input errors and 2 when a
//! numerical procedure fails.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::bifurcation::{bifurcation_report, bifurcation_scan, write_branch_csv, ScanRow};
use crate::calibration::{fit, model_observations, FitConfig, ObservedSeries, Problem};
use crate::equilibria::{equilibrium_report, r0, Stability};
use crate::error::{Error, Result};
use crate::integrator::{integrate, write_plot_data_csv, write_trajectory_csv, Tolerances};
use crate::io::{load_initial_state, read_json, write_atomically, write_json};
use crate::model::StateVector;
use crate::params::{load_params, ModelParams};
use crate::sensitivity::sensitivity_table;

/// Environment variable selecting the log level: `quiet`, `info` or `debug`.
pub const LOG_ENV: &str = "EPIDEMIO_LOG";

#[derive(Debug, Parser)]
#[command(name = "epidemio", version, about = "SVEIR epidemic model with environmental transmission")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct ParamsArg {
    /// Parameter file (JSON).
    #[arg(long, value_name = "FILE")]
    params: PathBuf,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate the model and write the trajectory as CSV.
    Simulate {
        #[command(flatten)]
        params: ParamsArg,
        /// Initial state (JSON with keys S,E,I,V,R,C).
        #[arg(long, value_name = "FILE")]
        init: PathBuf,
        #[arg(long, default_value_t = 300.0)]
        t_end: f64,
        #[arg(long, default_value_t = 1.0)]
        sample_step: f64,
        #[arg(long, default_value_t = crate::integrator::DEFAULT_RTOL)]
        rtol: f64,
        #[arg(long, default_value_t = crate::integrator::DEFAULT_ATOL)]
        atol: f64,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also write long-format `t,compartment,value` rows.
        #[arg(long, value_name = "FILE")]
        plot_data: Option<PathBuf>,
    },
    /// Disease-free state, Jacobian, next-generation matrices and stability.
    Equilibrium {
        #[command(flatten)]
        params: ParamsArg,
        /// Write the report here instead of standard output.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
    },
    /// Print the basic reproduction number and the stability verdict.
    R0 {
        #[command(flatten)]
        params: ParamsArg,
    },
    /// Scan the contact rate and record every equilibrium.
    Bifurcate {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long)]
        beta_min: f64,
        #[arg(long)]
        beta_max: f64,
        #[arg(long, default_value_t = 50)]
        steps: usize,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also write long-format `beta,branch,I,stable_hint` rows.
        #[arg(long, value_name = "FILE")]
        plot_data: Option<PathBuf>,
    },
    /// Fit free parameters to a `day,vaccinated` series.
    Fit {
        #[command(flatten)]
        params: ParamsArg,
        #[arg(long, value_name = "FILE")]
        data: PathBuf,
        /// Initial state; defaults to the built-in vaccination-series start.
        #[arg(long, value_name = "FILE")]
        init: Option<PathBuf>,
        /// Fit configuration (JSON).
        #[arg(long, value_name = "FILE")]
        config: Option<PathBuf>,
        #[arg(long)]
        max_iter: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_name = "FILE")]
        out: PathBuf,
        /// Also write long-format `day,series,value` rows (observed and fitted).
        #[arg(long, value_name = "FILE")]
        plot_data: Option<PathBuf>,
    },
    /// Normalized sensitivity indices of R0.
    Sensitivity {
        #[command(flatten)]
        params: ParamsArg,
        /// `parameter,index` CSV; standard output when absent.
        #[arg(long, value_name = "FILE")]
        out: Option<PathBuf>,
        /// Rows sorted by magnitude, for a tornado chart.
        #[arg(long, value_name = "FILE")]
        plot_data: Option<PathBuf>,
    },
}

fn init_logging() {
    let level = match std::env::var(LOG_ENV).as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    let _ = env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .try_init();
    log::set_max_level(level);
}

fn params_from(arg: &ParamsArg) -> Result<ModelParams> {
    let (params, warnings) = load_params(&arg.params)?;
    for w in warnings {
        eprintln!("warning: {}: {w}", arg.params.display());
    }
    Ok(params)
}

fn stdout_line(text: &str) -> Result<()> {
    let mut out = std::io::stdout().lock();
    writeln!(out, "{text}").map_err(|source| Error::Io {
        path: PathBuf::from("<stdout>"),
        source,
    })
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    init_logging();
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_numerical() {
                2
            } else {
                1
            }
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Simulate {
            params,
            init,
            t_end,
            sample_step,
            rtol,
            atol,
            out,
            plot_data,
        } => {
            let p = params_from(&params)?;
            let init = load_initial_state(&init)?;
            let traj = integrate(&p, &init, t_end, sample_step, Tolerances { rtol, atol })?;
            write_trajectory_csv(&traj, &out)?;
            if let Some(path) = plot_data {
                write_plot_data_csv(&traj, path)?;
            }
            log::info!("wrote {} samples to {}", traj.times.len(), out.display());
            Ok(())
        }
        Command::Equilibrium { params, out } => {
            let report = equilibrium_report(&params_from(&params)?)?;
            match out {
                Some(path) => write_json(&report, path),
                None => {
                    let text = serde_json::to_string_pretty(&report).map_err(|source| Error::Json {
                        path: PathBuf::from("<stdout>"),
                        source,
                    })?;
                    stdout_line(&text)
                }
            }
        }
        Command::R0 { params } => {
            let value = r0(&params_from(&params)?);
            stdout_line(&format!("R0={value}"))?;
            stdout_line(&format!("verdict={}", Stability::from_r0(value).as_str()))
        }
        Command::Bifurcate {
            params,
            beta_min,
            beta_max,
            steps,
            out,
            plot_data,
        } => {
            let p = params_from(&params)?;
            match bifurcation_report(&p) {
                Ok(rep) => {
                    stdout_line(&format!("beta_star={}", rep.beta_star))?;
                    stdout_line(&format!("a={}", rep.a))?;
                    stdout_line(&format!("b={}", rep.b))?;
                    stdout_line(&format!("regime={}", serde_json::to_value(rep.regime).unwrap_or_default().as_str().unwrap_or("")))?;
                }
                Err(Error::NoCriticalBeta) => log::warn!("no critical contact rate for these parameters"),
                Err(e) => return Err(e),
            }
            let rows = bifurcation_scan(&p, (beta_min, beta_max), steps)?;
            write_branch_csv(&p, &rows, &out)?;
            let multi = rows.iter().filter(|r| r.endemic.len() >= 2).count();
            stdout_line(&format!("rows_with_two_endemic_states={multi}"))?;
            if let Some(path) = plot_data {
                write_branch_plot_data(&rows, path)?;
            }
            Ok(())
        }
        Command::Fit {
            params,
            data,
            init,
            config,
            max_iter,
            seed,
            out,
            plot_data,
        } => {
            let base = params_from(&params)?;
            let series = ObservedSeries::read_csv(&data)?;
            let init = match init {
                Some(path) => load_initial_state(path)?,
                None => StateVector::calibration_initial(),
            };
            let mut cfg: FitConfig = match config {
                Some(path) => read_json(path)?,
                None => FitConfig::default(),
            };
            if let Some(m) = max_iter {
                cfg.max_iter = m;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let problem = Problem {
                base,
                free: &cfg.free,
                init,
                data: &series,
                observable: cfg.observable,
            };
            let result = fit(&problem, &cfg.initial_guess(&base), &cfg.options())?;
            write_json(&result, &out)?;
            stdout_line(&format!("objective={}", result.objective))?;
            stdout_line(&format!("iterations={}", result.iterations))?;
            stdout_line(&format!("converged={}", result.converged))?;
            if !result.converged {
                log::warn!("fit stopped without converging ({:?})", result.status);
            }
            if let Some(path) = plot_data {
                let model = model_observations(&result.params, &init, &series, cfg.observable)?;
                write_atomically(&path, |w| {
                    writeln!(w, "day,series,value")?;
                    for (day, x) in series.pairs() {
                        writeln!(w, "{day},observed,{x}")?;
                    }
                    for (day, x) in series.day_index.iter().zip(model) {
                        writeln!(w, "{day},fitted,{x}")?;
                    }
                    Ok(())
                })?;
            }
            Ok(())
        }
        Command::Sensitivity {
            params,
            out,
            plot_data,
        } => {
            let table = sensitivity_table(&params_from(&params)?)?;
            match out {
                Some(path) => table.write_csv(path)?,
                None => {
                    stdout_line("parameter,index")?;
                    for e in &table.entries {
                        stdout_line(&format!("{},{}", e.parameter, e.index))?;
                    }
                }
            }
            if let Some(path) = plot_data {
                table.write_tornado_csv(path)?;
            }
            Ok(())
        }
    }
}

fn write_branch_plot_data(rows: &[ScanRow], path: impl AsRef<Path>) -> Result<()> {
    write_atomically(path.as_ref(), |w| {
        writeln!(w, "beta,branch,I,stable_hint")?;
        for row in rows {
            writeln!(w, "{},dfs,0,{}", row.beta, Stability::from_r0(row.r0).as_str())?;
            for (k, e) in row.endemic.iter().enumerate() {
                writeln!(w, "{},endemic_{},{},{}", row.beta, k + 1, e.i_root, e.stable_hint().as_str())?;
            }
        }
        Ok(())
    })
}
