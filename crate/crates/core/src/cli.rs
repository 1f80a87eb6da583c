//! Command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 simulation divergence,
//! 4 missing data.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::analysis::{log_frfs, read_frf_set, write_frf_set, FrequencyResponse};
use crate::calibration::calibrate;
use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::sim::{drift_report, load_restart, run, save_restart, AblationMode, DriftReport, RunOutput, TrajectoryLog};

pub const OUT_DIR_ENV: &str = "EHM_OUT_DIR";

#[derive(Debug, Parser)]
#[command(name = "ehm", version, about = "Seated human body model for whole-body vibration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration (JSON); defaults apply when omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, env = OUT_DIR_ENV, default_value = "ehm-out")]
    pub out: PathBuf,
    /// Overrides the excitation seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Settle and simulate; writes trajectory.csv, restart.json, manifest.json.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// full_pid, no_integrator or high_stiffness_passive.
        #[arg(long)]
        mode: Option<String>,
        /// Resume from a settled snapshot instead of settling.
        #[arg(long)]
        restart: Option<PathBuf>,
    },
    /// Transmissibility curves from a trajectory; writes one CSV per pair and index.csv.
    Frf {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trajectory: PathBuf,
    },
    /// Fit the configured parameters to reference curves.
    Calibrate {
        #[command(flatten)]
        common: Common,
        /// Directory holding index.csv and the reference curves.
        #[arg(long)]
        references: PathBuf,
        /// Parallel simulations (default: all cores).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Posture drift of one controller variant; writes drift.json.
    Ablate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        mode: String,
    },
    /// Print the complete default configuration.
    Defaults,
    /// Print the assembled model in canonical text form.
    Describe {
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Diverged { .. } | Error::GimbalGuard { .. } | Error::NoStableEvaluation => 3,
        Error::MissingChannel(_) | Error::Io { .. } | Error::Format { .. } | Error::SeriesTooShort { .. } | Error::BandMismatch(_) => 4,
        _ => 2,
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'a str,
    config_hash: String,
    model_hash: String,
    seed: u64,
    mode: &'a str,
    wall_time_s: f64,
    simulated_time_s: f64,
    real_time_factor: f64,
    files: Vec<String>,
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(s) = seed {
        cfg.excitation.seed = s;
    }
    Ok(cfg)
}

fn parse_mode(s: &str) -> Result<AblationMode> {
    AblationMode::parse(s).ok_or_else(|| {
        let known: Vec<_> = AblationMode::ALL.iter().map(|m| m.label()).collect();
        Error::Config(format!("unknown mode `{s}` (expected one of {})", known.join(", ")))
    })
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Simulation with the configured model and excitation.
pub fn simulate(cfg: &RunConfig, restart: Option<&Path>) -> Result<RunOutput> {
    let model = cfg.build_model()?;
    let exc = cfg.excitation_signal()?;
    let snap = restart.map(load_restart).transpose()?;
    run(&model, &cfg.simulation, &exc, snap.as_ref())
}

/// Curves for the configured pairs over the excited part of `log`.
pub fn frf_set(cfg: &RunConfig, log: &TrajectoryLog) -> Result<Vec<FrequencyResponse>> {
    let model = cfg.build_model()?;
    log_frfs(log, &cfg.analysis.pairs(&model), &cfg.analysis.estimator, cfg.excitation.settle_time)
}

/// Runs one mode and summarizes drift of the model's head and trunk bodies.
pub fn ablate(cfg: &RunConfig, mode: AblationMode) -> Result<(RunOutput, DriftReport)> {
    let mut cfg = cfg.clone();
    cfg.simulation.mode = mode;
    let model = cfg.build_model()?;
    let seg = |label: &str| {
        model
            .outputs
            .iter()
            .find(|o| o.label == label)
            .map(|o| o.segment.clone())
            .ok_or_else(|| Error::MissingChannel(format!("{label} body")))
    };
    let (head, trunk) = (seg("head")?, seg("trunk")?);
    let out = run(&model, &cfg.simulation, &cfg.excitation_signal()?, None)?;
    let report = drift_report(&out.log, &head, &trunk, cfg.excitation.settle_time)?;
    Ok((out, report))
}

fn cmd_simulate(common: &Common, mode: Option<&str>, restart: Option<&Path>) -> Result<()> {
    let mut cfg = load_config(common.config.as_deref(), common.seed)?;
    if let Some(m) = mode {
        cfg.simulation.mode = parse_mode(m)?;
    }
    let out = simulate(&cfg, restart)?;
    create_dir(&common.out)?;
    let mut files = vec!["trajectory.csv".to_string()];
    out.log.write_csv(&common.out.join("trajectory.csv"))?;
    if let Some(snap) = &out.snapshot {
        save_restart(&common.out.join("restart.json"), snap)?;
        files.push("restart.json".into());
    }
    cfg.save(&common.out.join("config.json"))?;
    files.push("config.json".into());
    files.push("manifest.json".into());
    let model = cfg.build_model()?;
    let manifest = Manifest {
        command: "simulate",
        version: env!("CARGO_PKG_VERSION"),
        config_hash: cfg.hash(),
        model_hash: model.hash().into(),
        seed: cfg.excitation.seed,
        mode: cfg.simulation.mode.label(),
        wall_time_s: out.wall_time,
        simulated_time_s: out.simulated_time,
        real_time_factor: out.real_time_factor(),
        files,
    };
    write_json(&common.out.join("manifest.json"), &manifest)?;
    println!(
        "simulated {:.1} s in {:.2} s (real-time factor {:.1}); output in {}",
        out.simulated_time,
        out.wall_time,
        out.real_time_factor(),
        common.out.display()
    );
    Ok(())
}

fn cmd_frf(common: &Common, trajectory: &Path) -> Result<()> {
    let cfg = load_config(common.config.as_deref(), common.seed)?;
    let log = TrajectoryLog::read_csv(trajectory)?;
    let set = frf_set(&cfg, &log)?;
    write_frf_set(&common.out, &set)?;
    println!("{} curves written to {}", set.len(), common.out.display());
    Ok(())
}

fn cmd_calibrate(common: &Common, references: &Path, workers: Option<usize>) -> Result<()> {
    let mut cfg = load_config(common.config.as_deref(), None)?;
    if let Some(s) = common.seed {
        cfg.calibration.optimizer.seed = s;
    }
    let refs = read_frf_set(references)?;
    let started = std::time::Instant::now();
    let fit = calibrate(&cfg, refs, workers)?;
    create_dir(&common.out)?;
    fit.best_config.save(&common.out.join("calibrated.json"))?;
    fit.write_trace(&common.out.join("trace.csv"))?;
    #[derive(Serialize)]
    struct Summary<'a> {
        best_cost: f64,
        evaluations: usize,
        restarts: usize,
        wall_time_s: f64,
        config_hash: String,
        parameters: Vec<(&'a str, f64)>,
    }
    let summary = Summary {
        best_cost: fit.best_cost,
        evaluations: fit.trace.len(),
        restarts: fit.restarts,
        wall_time_s: started.elapsed().as_secs_f64(),
        config_hash: cfg.hash(),
        parameters: fit.names.iter().map(String::as_str).zip(fit.best.iter().copied()).collect(),
    };
    write_json(&common.out.join("manifest.json"), &summary)?;
    println!("best cost {:.4e} after {} evaluations", fit.best_cost, fit.trace.len());
    for (n, v) in fit.names.iter().zip(&fit.best) {
        println!("  {n} = {v}");
    }
    Ok(())
}

fn cmd_ablate(common: &Common, mode: &str) -> Result<()> {
    let cfg = load_config(common.config.as_deref(), common.seed)?;
    let mode = parse_mode(mode)?;
    let (out, report) = ablate(&cfg, mode)?;
    create_dir(&common.out)?;
    out.log.write_csv(&common.out.join(format!("trajectory_{}.csv", mode.label())))?;
    write_json(&common.out.join(format!("drift_{}.json", mode.label())), &report)?;
    println!("{}", mode.label());
    println!("  head pitch drift   {:+.3} deg (peak {:.3})", report.head_pitch_drift, report.head_pitch_peak);
    println!("  trunk pitch drift  {:+.3} deg (peak {:.3})", report.trunk_pitch_drift, report.trunk_pitch_peak);
    println!("  trunk fore-aft     {:+.4} m", report.trunk_forward);
    Ok(())
}

pub fn dispatch(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Simulate { common, mode, restart } => cmd_simulate(common, mode.as_deref(), restart.as_deref()),
        Command::Frf { common, trajectory } => cmd_frf(common, trajectory),
        Command::Calibrate { common, references, workers } => cmd_calibrate(common, references, *workers),
        Command::Ablate { common, mode } => cmd_ablate(common, mode),
        Command::Defaults => {
            println!("{}", RunConfig::default().to_json());
            Ok(())
        }
        Command::Describe { config } => {
            let cfg = load_config(config.as_deref(), None)?;
            print!("{}", cfg.build_model()?.dump());
            Ok(())
        }
    }
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 2);
        assert_eq!(exit_code(&Error::Diverged { time: 1.0, channel: "q".into() }), 3);
        assert_eq!(exit_code(&Error::MissingChannel("head.acc_z".into())), 4);
    }

    #[test]
    fn unknown_mode_is_config_error() {
        assert!(matches!(parse_mode("pid_only"), Err(Error::Config(_))));
        assert_eq!(parse_mode("no_integrator").unwrap(), AblationMode::NoIntegrator);
    }

    #[test]
    fn cli_parses() {
        let c = Cli::try_parse_from(["ehm", "ablate", "--mode", "full_pid", "--out", "x"]).unwrap();
        assert!(matches!(c.command, Command::Ablate { .. }));
    }
}
