//! `hvqe`: run, sweep and post-process continuation experiments.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error,
//! 3 guard violation, 4 sweep finished with failed cells.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use homotopy_vqe::continuation::Schedule;
use homotopy_vqe::exact::{gap_profile, ratio_diagnostic, write_gap_csv};
use homotopy_vqe::pauli::Observable;
use homotopy_vqe::runner::experiment::initial_hamiltonian;
use homotopy_vqe::runner::{
    emit_plotdata, load_hamiltonian, persist_outcome, read_rows, run_experiment, run_sweep, ExperimentConfig,
    PlotKind, SweepConfig, SweepOptions, ENV_JOBS, ENV_OUT,
};
use homotopy_vqe::Error;

const EXIT_RUNTIME: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_GUARD: u8 = 3;
const EXIT_CELL_FAILURES: u8 = 4;

#[derive(Parser)]
#[command(name = "hvqe", version, about = "Adiabatically inspired continuation for variational eigensolvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory (overrides HVQE_OUT and the config).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed (master seed for sweeps).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps (overrides HVQE_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Record exact ground energies along the path.
    #[arg(long, global = true, overrides_with = "no_oracle")]
    oracle: bool,
    #[arg(long, global = true, overrides_with = "oracle")]
    no_oracle: bool,
}

impl Common {
    fn oracle(&self) -> Option<bool> {
        match (self.oracle, self.no_oracle) {
            (true, _) => Some(true),
            (_, true) => Some(false),
            _ => None,
        }
    }

    fn out_dir(&self, from_config: Option<PathBuf>) -> PathBuf {
        self.out
            .clone()
            .or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from))
            .or(from_config)
            .unwrap_or_else(|| PathBuf::from("results"))
    }

    fn jobs(&self) -> anyhow::Result<Option<usize>> {
        if self.jobs.is_some() {
            return Ok(self.jobs);
        }
        match std::env::var(ENV_JOBS) {
            Ok(v) => Ok(Some(v.parse().map_err(|_| Error::Config(format!("{ENV_JOBS}={v} is not a count")))?)),
            Err(_) => Ok(None),
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and append its row to `<out>/results.csv`.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Start even if the starting point fails the guard.
        #[arg(long)]
        unchecked: bool,
        #[command(flatten)]
        common: Common,
    },
    /// Run every cell of a grid, resuming from finished cells.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Turn a results table into plot-ready CSV files.
    Plotdata {
        /// Results table; defaults to `<out>/results.csv`.
        #[arg(long)]
        input: Option<PathBuf>,
        /// One of dissociation_curve, heatmap, boxplot_summary; all when omitted.
        #[arg(long)]
        kind: Vec<String>,
        #[command(flatten)]
        common: Common,
    },
    /// Export the spectral gap along the path of an experiment config.
    Gap {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 101)]
        points: usize,
        #[command(flatten)]
        common: Common,
    },
    /// Convert an FCIDUMP into a cached qubit Hamiltonian (`<stem>.json`).
    Hamiltonian {
        #[arg(long)]
        input: PathBuf,
        #[command(flatten)]
        common: Common,
    },
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<Error>() {
        Some(Error::Config(_) | Error::Parse { .. }) => EXIT_CONFIG,
        Some(Error::Guard(_)) => EXIT_GUARD,
        _ => EXIT_RUNTIME,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn dispatch(command: Command) -> anyhow::Result<u8> {
    match command {
        Command::Run {
            config,
            unchecked,
            common,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = common.seed {
                cfg.seed = seed;
            }
            if let Some(o) = common.oracle() {
                cfg.oracle = o;
            }
            cfg.unchecked |= unchecked;
            let out = common.out_dir(cfg.out.as_ref().map(|p| cfg.resolve(p)));
            let outcome = run_experiment(&cfg)?;
            let table = persist_outcome(&out, &outcome)?;
            let r = &outcome.row;
            println!(
                "{} steps={} E_final={:.10} E_FCI={:.10} abs_error={:.3e} chem_acc_met={} -> {}",
                r.method,
                r.steps,
                r.e_final,
                r.e_fci,
                r.abs_error,
                r.chem_acc_met,
                table.display()
            );
            Ok(0)
        }
        Command::Sweep { config, common } => {
            let mut cfg = SweepConfig::load(&config)?;
            if let Some(seed) = common.seed {
                cfg.master_seed = Some(seed);
            }
            let out = common.out_dir(cfg.base.out.as_ref().map(|p| cfg.base.resolve(p)));
            let opts = SweepOptions {
                jobs: common.jobs()?,
                oracle: common.oracle(),
                limit: None,
            };
            let report = run_sweep(&cfg, &out, &opts)?;
            println!(
                "{} rows ({} resumed, {} run), {} failures -> {}",
                report.rows.len(),
                report.resumed,
                report.executed,
                report.failures.len(),
                out.join("results.csv").display()
            );
            for (key, e) in &report.failures {
                eprintln!("cell {key}: {e}");
            }
            Ok(if report.failures.is_empty() { 0 } else { EXIT_CELL_FAILURES })
        }
        Command::Plotdata { input, kind, common } => {
            let out = common.out_dir(None);
            let input = input.unwrap_or_else(|| out.join("results.csv"));
            let rows = read_rows(&input).with_context(|| format!("reading {}", input.display()))?;
            let kinds: Vec<PlotKind> = if kind.is_empty() {
                PlotKind::ALL.to_vec()
            } else {
                kind.iter().map(|k| k.parse()).collect::<Result<_, _>>()?
            };
            for k in kinds {
                for f in emit_plotdata(&rows, k, &out)? {
                    println!("{}", f.display());
                }
            }
            Ok(0)
        }
        Command::Gap { config, points, common } => {
            let cfg = ExperimentConfig::load(&config)?;
            let mol = load_hamiltonian(&cfg.hamiltonian_path())?;
            let h0 = initial_hamiltonian(cfg.initial, &mol)?;
            let out = common.out_dir(cfg.out.as_ref().map(|p| cfg.resolve(p)));
            write_gap(&out, &h0, &mol.h1, &cfg.schedule, points)
        }
        Command::Hamiltonian { input, common } => {
            let mol = load_hamiltonian(&input)?;
            let out = common.out_dir(None);
            std::fs::create_dir_all(&out)?;
            let stem = input.file_stem().and_then(|s| s.to_str()).unwrap_or("hamiltonian");
            let path = out.join(format!("{stem}.json"));
            let cached = mol.to_cached(&input.display().to_string())?;
            cached.write(&path)?;
            println!("{} qubits, E_FCI={:.10} -> {}", mol.n_qubits(), cached.e_fci, path.display());
            Ok(0)
        }
    }
}

fn write_gap(
    out: &Path,
    h0: &Observable,
    h1: &Observable,
    schedule: &Schedule,
    points: usize,
) -> anyhow::Result<u8> {
    std::fs::create_dir_all(out)?;
    let profile = gap_profile(h0, h1, schedule, points)?;
    let path = out.join("gap.csv");
    write_gap_csv(&profile, std::fs::File::create(&path)?)?;
    let min = profile.iter().min_by(|a, b| a.gap.total_cmp(&b.gap)).context("empty gap profile")?;
    let ratio = ratio_diagnostic(h0, h1, schedule, points)?;
    println!(
        "min gap {:.6e} at t={:.4}; sup ṡ‖H1−H0‖/g² = {:.6e} at t={:.4} -> {}",
        min.gap,
        min.t,
        ratio.sup,
        ratio.argmax_t,
        path.display()
    );
    Ok(0)
}
