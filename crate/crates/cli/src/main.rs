//! Scenario runner for the deformed damped oscillator library.
//!
//! One JSON config describes the oscillator, the bath, and the run;
//! outputs are CSV data files plus a single JSON summary, written so
//! that identical configs produce byte-identical data.

mod checks;
mod config;
mod output;

use std::env;
use std::fmt;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};
use serde_json::json;

use defosc::{
    detailed_balance_residual, equilibrium_energy, evolve_density, evolve_populations,
    partition_function, steady_populations, thermal_boltzmann, validate_bath, Error, Trajectory,
    TruncationPolicy,
};

use config::{PolicyKind, RunMode, RunSection};
use output::{Summary, Timings};

/// Failures split by exit code: configuration and validation problems
/// exit 2, runtime problems (I/O, integration breakdown) exit 1.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Runtime(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Config(m) => write!(f, "configuration error: {m}"),
            CliError::Runtime(m) => write!(f, "runtime error: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "defosc", version, about = "Deformed damped oscillator scenario runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute the scenario described by a JSON config file.
    Run {
        /// Path to the scenario JSON.
        #[arg(long)]
        config: PathBuf,
        /// Directory the output files are written into (created if missing).
        #[arg(long, default_value = ".")]
        out: PathBuf,
        /// Treat bath-validity violations as fatal instead of warnings.
        #[arg(long)]
        strict: bool,
    },
    /// Run the self-check suite for the configured model and bath.
    Validate {
        /// Path to the scenario JSON.
        #[arg(long)]
        config: PathBuf,
    },
}

fn main() -> ExitCode {
    init_threads();
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Run { config, out, strict } => run(&config, &out, strict),
        Command::Validate { config } => validate_command(&config),
    };
    match outcome {
        Ok(code) => code,
        Err(err @ CliError::Config(_)) => {
            eprintln!("{err}");
            ExitCode::from(2)
        }
        Err(err @ CliError::Runtime(_)) => {
            eprintln!("{err}");
            ExitCode::from(1)
        }
    }
}

/// Applies `DEFOSC_THREADS` (0 or unset = automatic) before any
/// parallel work runs.
fn init_threads() {
    let Ok(raw) = env::var("DEFOSC_THREADS") else { return };
    match raw.trim().parse::<usize>() {
        Ok(0) => {}
        Ok(n) => {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
        Err(_) => eprintln!("warning: DEFOSC_THREADS must be an integer (0 = auto); using auto"),
    }
}

fn io_fail(context: &str) -> impl Fn(io::Error) -> CliError + '_ {
    move |e| CliError::Runtime(format!("{context}: {e}"))
}

/// Integration breakdown is a runtime failure; everything else the
/// library rejects is a parameter problem.
fn evolution_err(e: Error) -> CliError {
    match e {
        Error::StepSizeUnderflow { .. } | Error::TooManySteps { .. } => {
            CliError::Runtime(e.to_string())
        }
        other => CliError::Config(other.to_string()),
    }
}

fn config_fail(e: Error) -> CliError {
    CliError::Config(e.to_string())
}

fn run(config_path: &Path, out_dir: &Path, strict: bool) -> CliResult<ExitCode> {
    let started = Instant::now();
    let cfg = config::load(config_path)?;
    let model = cfg.build_model()?;
    let bath = cfg.build_bath(model.omega())?;

    let mut warnings = Vec::new();
    let report = validate_bath(&bath, &model);
    if !report.all_passed() {
        let lines: Vec<String> = report
            .violations()
            .map(|c| {
                format!(
                    "bath margin violated at level {} (Ω = {}, 2D₊−λ = {})",
                    c.n,
                    c.omega_value,
                    c.rate_margin.map_or_else(|| "undefined".to_string(), |m| m.to_string()),
                )
            })
            .collect();
        if strict {
            return Err(CliError::Config(format!(
                "bath validation failed: {}",
                lines.join("; ")
            )));
        }
        warnings.extend(lines);
    }
    warn_ignored(&cfg.run, &mut warnings);

    fs::create_dir_all(out_dir)
        .map_err(io_fail(&format!("cannot create {}", out_dir.display())))?;
    let base_dir = config_path.parent().unwrap_or_else(|| Path::new("."));

    let mut outputs = Vec::new();
    let mut exit = ExitCode::SUCCESS;
    let results = match cfg.run.mode {
        RunMode::Spectrum => {
            let spectrum = model.spectrum();
            outputs.push(output::write_spectrum(out_dir, &spectrum).map_err(io_fail("spectrum"))?);
            json!({
                "levels": spectrum.len(),
                "ground_energy": spectrum[0],
                "top_energy": spectrum[spectrum.len() - 1],
            })
        }
        RunMode::Evolve => {
            if matches!(cfg.run.truncation_policy, Some(PolicyKind::Reflecting)) {
                return Err(CliError::Config(
                    "run.truncation_policy: density evolution always drops flow through the \
                     top level; reflecting applies to evolve-populations only"
                        .into(),
                ));
            }
            let icfg = cfg.integrator_config()?;
            let rho0 = cfg.initial_density(&model, base_dir)?;
            let traj = evolve_density(&model, &bath, &rho0, &icfg).map_err(evolution_err)?;
            outputs.push(output::write_trajectory(out_dir, &traj).map_err(io_fail("trajectory"))?);
            if let Some(snaps) = &traj.snapshots {
                outputs.push(
                    output::write_snapshots(out_dir, &traj.times, snaps)
                        .map_err(io_fail("snapshots"))?,
                );
            }
            trajectory_results(&traj)
        }
        RunMode::EvolvePopulations => {
            let policy = match cfg.run.truncation_policy.unwrap_or(PolicyKind::Reflecting) {
                PolicyKind::Drop => TruncationPolicy::Drop,
                PolicyKind::Reflecting => TruncationPolicy::Reflecting,
            };
            let icfg = cfg.integrator_config()?;
            let p0 = cfg.initial_populations(&model)?;
            let traj =
                evolve_populations(&model, &bath, &p0, &icfg, policy).map_err(evolution_err)?;
            outputs.push(output::write_trajectory(out_dir, &traj).map_err(io_fail("trajectory"))?);
            if let Some(snaps) = &traj.snapshots {
                outputs.push(
                    output::write_snapshots(out_dir, &traj.times, snaps)
                        .map_err(io_fail("snapshots"))?,
                );
            }
            trajectory_results(&traj)
        }
        RunMode::Steady => {
            let p = steady_populations(&model, &bath).map_err(config_fail)?;
            let residual = detailed_balance_residual(&model, &bath, &p).map_err(config_fail)?;
            let values = p.values().as_slice().expect("populations are contiguous");
            outputs.push(
                output::write_populations(out_dir, output::STEADY_FILE, values)
                    .map_err(io_fail("steady"))?,
            );
            json!({
                "detailed_balance_residual": residual,
                "tail_mass": values[values.len() - 1],
                "mean_n": p.mean_number(),
            })
        }
        RunMode::Partition => {
            let temperature = bath.temperature().ok_or_else(|| {
                CliError::Config("mode partition needs a thermal bath".into())
            })?;
            if temperature <= 0.0 {
                return Err(CliError::Config(
                    "bath.temperature must be > 0 for mode partition".into(),
                ));
            }
            let n_terms = cfg.run.n_terms.unwrap_or(64);
            let partition =
                partition_function(&model, temperature, n_terms).map_err(config_fail)?;
            let equilibrium = equilibrium_energy(&model, temperature).map_err(config_fail)?;
            let boltzmann = thermal_boltzmann(&model, temperature).map_err(config_fail)?;
            let values = boltzmann.values().as_slice().expect("populations are contiguous");
            outputs.push(
                output::write_populations(out_dir, output::BOLTZMANN_FILE, values)
                    .map_err(io_fail("boltzmann"))?,
            );
            json!({
                "partition_value": partition.value,
                "terms_used": partition.terms_used,
                "tail_bound": partition.tail_bound,
                "energy_numeric": equilibrium.energy_numeric,
                "energy_smalltau": equilibrium.energy_smalltau,
                "c_coefficient": equilibrium.c_coefficient,
                "beta": equilibrium.beta,
            })
        }
        RunMode::Validate => {
            let results = checks::run_suite(&model, &bath);
            for check in &results {
                println!("{}", check.line());
            }
            let ok = checks::all_passed(&results);
            if !ok {
                exit = ExitCode::from(2);
            }
            json!({
                "checks": serde_json::to_value(&results).expect("checks serialize"),
                "all_passed": ok,
            })
        }
    };

    let summary = Summary {
        config: &cfg,
        mode: cfg.run.mode,
        outputs,
        results,
        warnings,
        timings: Timings { total_seconds: started.elapsed().as_secs_f64() },
    };
    output::write_summary(out_dir, &summary).map_err(io_fail("summary"))?;
    Ok(exit)
}

fn validate_command(config_path: &Path) -> CliResult<ExitCode> {
    let cfg = config::load(config_path)?;
    let model = cfg.build_model()?;
    let bath = cfg.build_bath(model.omega())?;
    let results = checks::run_suite(&model, &bath);
    for check in &results {
        println!("{}", check.line());
    }
    Ok(if checks::all_passed(&results) { ExitCode::SUCCESS } else { ExitCode::from(2) })
}

fn trajectory_results(traj: &Trajectory) -> serde_json::Value {
    let last = traj.len() - 1;
    json!({
        "samples": traj.len(),
        "final_time": traj.times[last],
        "final_mean_n": traj.mean_n[last],
        "final_energy": traj.energy[last],
        "final_trace": traj.trace[last],
        "final_trace_leak": traj.trace_leak[last],
        "final_min_eig": traj.min_eig[last],
    })
}

/// Notes sections that have no effect in the selected mode, so a config
/// never silently means less than it says.
fn warn_ignored(run: &RunSection, warnings: &mut Vec<String>) {
    let label = run.mode.label();
    if !matches!(run.mode, RunMode::Evolve | RunMode::EvolvePopulations) {
        if run.integrator.is_some() {
            warnings.push(format!("run.integrator is ignored in mode {label}"));
        }
        if run.initial_state.is_some() {
            warnings.push(format!("run.initial_state is ignored in mode {label}"));
        }
        if run.snapshots {
            warnings.push(format!("run.snapshots is ignored in mode {label}"));
        }
        if run.truncation_policy.is_some() {
            warnings.push(format!("run.truncation_policy is ignored in mode {label}"));
        }
    }
    if run.mode != RunMode::Partition && run.n_terms.is_some() {
        warnings.push(format!("run.n_terms is ignored in mode {label}"));
    }
}
