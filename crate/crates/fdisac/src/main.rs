//! Command-line front end: seeded sweeps, single solves, and the
//! radar-processing views, all emitting CSV/JSON tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fdisac::baselines::BaselineKind;
use fdisac::harness::{
    self, angle_spectrum_csv, baseline_state, beampattern_csv, default_out_dir, emit_tables,
    manifest_json, parse_config, range_doppler_csv, ExperimentSpec, HarnessError,
};
use fdisac::metrics;
use fdisac::scenario::{reference_bearings, synthesize, trial_rng};

#[derive(Parser)]
#[command(name = "fdisac", about = "Full-duplex ISAC joint beamforming experiments", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Csv,
    Json,
    Both,
}

#[derive(Args)]
struct Common {
    /// key = value experiment config; omitted keys use reference defaults
    #[arg(long)]
    config: Option<PathBuf>,
    /// master RNG seed, overrides the config seed
    #[arg(long)]
    seed: Option<u64>,
    /// output directory (default: $FDISAC_OUT or ./out)
    #[arg(long)]
    out: Option<PathBuf>,
    /// which tables to write
    #[arg(long, value_enum, default_value_t = Format::Both)]
    format: Format,
}

impl Common {
    fn spec(&self) -> Result<ExperimentSpec, HarnessError> {
        let mut spec = match &self.config {
            Some(path) => parse_config(path)?,
            None => ExperimentSpec::default(),
        };
        if let Some(seed) = self.seed {
            spec.base.rng_seed = seed;
        }
        if self.out.is_some() || std::env::var_os(harness::OUT_DIR_ENV).is_some() {
            spec.out_dir = self.out.clone().unwrap_or_else(default_out_dir);
        }
        match self.format {
            Format::Csv => {
                spec.emit_csv = true;
                spec.emit_json = false;
            }
            Format::Json => {
                spec.emit_csv = false;
                spec.emit_json = true;
            }
            Format::Both => {
                spec.emit_csv = true;
                spec.emit_json = true;
            }
        }
        Ok(spec)
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum BaselineArg {
    Nsp,
    RadarOnly,
    CommOnly,
}

impl From<BaselineArg> for BaselineKind {
    fn from(b: BaselineArg) -> Self {
        match b {
            BaselineArg::Nsp => BaselineKind::Nsp,
            BaselineArg::RadarOnly => BaselineKind::RadarOnly,
            BaselineArg::CommOnly => BaselineKind::CommOnly,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Monte-Carlo sweep over SI levels and priority ratios
    Sweep {
        #[command(flatten)]
        common: Common,
        /// trials per (si_level, rho) cell, overrides the config
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Solve one reference-scenario instance and write its beampatterns
    SolveOnce {
        #[command(flatten)]
        common: Common,
    },
    /// Range-Doppler map of the synthesized echo frame
    RadarMap {
        #[command(flatten)]
        common: Common,
        /// leave residual self-interference in the receive stream
        #[arg(long)]
        inject_si: bool,
        /// use a baseline design instead of the solver
        #[arg(long, value_enum)]
        baseline: Option<BaselineArg>,
    },
    /// Angle spectrum of the combined receive response
    Angle {
        #[command(flatten)]
        common: Common,
        /// use a baseline design instead of the solver
        #[arg(long, value_enum)]
        baseline: Option<BaselineArg>,
    },
    /// Evaluate one baseline design on the reference scenario
    Baseline {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        kind: BaselineArg,
    },
}

fn write(path: &PathBuf, content: &str) -> Result<(), String> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| format!("cannot create {parent:?}: {e}"))?;
    }
    std::fs::write(path, content).map_err(|e| format!("cannot write {path:?}: {e}"))?;
    println!("wrote {}", path.display());
    Ok(())
}

/// Builds the design selected by `--baseline` (or the solver's) for the
/// reference scenario of `spec`.
fn design(
    spec: &ExperimentSpec,
    baseline: Option<BaselineArg>,
) -> Result<
    (
        fdisac::solver::BeamformerState,
        fdisac::scenario::ChannelSet,
        fdisac::scenario::RadarGroundTruth,
    ),
    String,
> {
    match baseline {
        None => {
            let (state, report, ch, gt) = harness::solve_once(spec).map_err(|e| e.to_string())?;
            println!(
                "solver: {} iterations, converged = {}, residual SI = {:.3e} mW",
                report.iterations, report.converged, report.residual_si_linear
            );
            Ok((state, ch, gt))
        }
        Some(kind) => {
            let cfg = &spec.base;
            let (target, uplink, downlink) = reference_bearings();
            let mut rng = trial_rng(cfg.rng_seed, 0);
            let (ch, gt) =
                synthesize(cfg, target, uplink, downlink, &mut rng).map_err(|e| e.to_string())?;
            let state = baseline_state(
                kind.into(),
                &ch,
                cfg,
                gt.theta_deg,
                uplink.theta_deg,
                downlink.theta_deg,
            )
            .map_err(|e| e.to_string())?;
            Ok((state, ch, gt))
        }
    }
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::Sweep { common, trials } => {
            let mut spec = common.spec().map_err(|e| e.to_string())?;
            if let Some(t) = trials {
                spec.trials = t;
            }
            spec.validate().map_err(|e| e.to_string())?;
            let result = harness::run_sweep(&spec).map_err(|e| e.to_string())?;
            let written = emit_tables(&result, &spec).map_err(|e| e.to_string())?;
            for p in written {
                println!("wrote {}", p.display());
            }
            Ok(())
        }
        Command::SolveOnce { common } => {
            let spec = common.spec().map_err(|e| e.to_string())?;
            let (state, report, ch, gt) = harness::solve_once(&spec).map_err(|e| e.to_string())?;
            let record = metrics::evaluate(
                &state,
                &ch,
                spec.base.noise_lin(),
                spec.base.noise_dbm,
                spec.base.delta,
                gt.theta_deg,
            );
            println!(
                "{}",
                serde_json::to_string_pretty(&serde_json::json!({
                    "report": report,
                    "metrics": record,
                }))
                .expect("serializes")
            );
            if spec.emit_csv {
                write(&spec.out_dir.join("beampattern_tx.csv"), &beampattern_csv(&state.p, "tx"))?;
                write(&spec.out_dir.join("beampattern_rx.csv"), &beampattern_csv(&state.w, "rx"))?;
            }
            if spec.emit_json {
                write(
                    &spec.out_dir.join("manifest.json"),
                    &manifest_json(&spec, spec.base.rng_seed),
                )?;
            }
            Ok(())
        }
        Command::RadarMap { common, inject_si, baseline } => {
            let spec = common.spec().map_err(|e| e.to_string())?;
            let (state, ch, gt) = design(&spec, baseline)?;
            let mut rng = trial_rng(spec.base.rng_seed, u64::MAX);
            let table =
                range_doppler_csv(&state, &ch, &gt, &spec.base, inject_si, &mut rng)
                    .map_err(|e| e.to_string())?;
            write(&spec.out_dir.join("range_doppler.csv"), &table)
        }
        Command::Angle { common, baseline } => {
            let spec = common.spec().map_err(|e| e.to_string())?;
            let (state, ch, _) = design(&spec, baseline)?;
            let table = angle_spectrum_csv(&state, &ch);
            write(&spec.out_dir.join("angle_spectrum.csv"), &table)
        }
        Command::Baseline { common, kind } => {
            let spec = common.spec().map_err(|e| e.to_string())?;
            let (state, ch, gt) = design(&spec, Some(kind))?;
            let record = metrics::evaluate(
                &state,
                &ch,
                spec.base.noise_lin(),
                spec.base.noise_dbm,
                spec.base.delta,
                gt.theta_deg,
            );
            println!("{}", serde_json::to_string_pretty(&record).expect("serializes"));
            if spec.emit_csv {
                write(&spec.out_dir.join("beampattern_tx.csv"), &beampattern_csv(&state.p, "tx"))?;
                write(&spec.out_dir.join("beampattern_rx.csv"), &beampattern_csv(&state.w, "rx"))?;
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
