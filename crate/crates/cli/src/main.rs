//! quenchci: few-boson lattice-plus-trap simulator.
//!
//! Subcommands reproduce the reference-figure datasets: `spectrum` (energy
//! curves and avoided crossings vs trap curvature), `quench` (one
//! protocol's observables), `response-scan` (response intensity vs final
//! curvature), `multiwell` (expansion and self-trapping in wider lattices),
//! `wannier-dump` (orbital amplitudes) and `selftest` (oracle suite).

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

use config::{load_preset, RunConfig};
use output::RunWriter;
use quenchci::error::Error;

#[derive(Parser)]
#[command(name = "quenchci", version, about = "few-boson optical-lattice quench simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Built-in preset name (see the presets subcommand).
    #[arg(long)]
    preset: Option<String>,
    /// Path to a TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides config and QUENCHCI_OUT_DIR).
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// BLAS thread count override.
    #[arg(long)]
    threads: Option<usize>,
    /// Initial trap curvature override.
    #[arg(long)]
    omega_i_sq: Option<f64>,
    /// Final trap curvature override.
    #[arg(long)]
    omega_f_sq: Option<f64>,
    /// Interaction strength override.
    #[arg(long)]
    g: Option<f64>,
    /// Orbital band count override.
    #[arg(long)]
    n_bands: Option<usize>,
    /// Grid size override.
    #[arg(long)]
    n_grid: Option<usize>,
    /// Evolution window override.
    #[arg(long)]
    t_final: Option<f64>,
    /// Sampling step override.
    #[arg(long)]
    dt_sample: Option<f64>,
    /// Scan point count override.
    #[arg(long)]
    scan_points: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenspectrum vs trap curvature with avoided-crossing detection.
    Spectrum(CommonArgs),
    /// Single quench: time series, populations, Fourier branches.
    Quench(CommonArgs),
    /// Response intensity versus the post-quench curvature.
    ResponseScan(CommonArgs),
    /// Multi-well expansion dynamics and self-trapping comparison.
    Multiwell(CommonArgs),
    /// Dump Wannier orbitals and their bookkeeping.
    WannierDump(CommonArgs),
    /// Run the oracle suite.
    Selftest {
        /// Also write the derived constants as JSON.
        #[arg(long)]
        emit_derived: bool,
        /// Output directory for derived.json.
        #[arg(long)]
        out_dir: Option<PathBuf>,
    },
    /// List the built-in presets.
    Presets,
}

fn load_config(args: &CommonArgs) -> Result<RunConfig, Error> {
    let mut cfg = match (&args.preset, &args.config) {
        (Some(_), Some(_)) => {
            return Err(Error::Config("pass either --preset or --config, not both".into()))
        }
        (Some(name), None) => load_preset(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| {
                Error::Config(format!("cannot read {}: {e}", path.display()))
            })?;
            RunConfig::from_toml_str(&text)?
        }
        (None, None) => {
            return Err(Error::Config("a --preset or --config is required".into()))
        }
    };
    if let Some(v) = args.threads {
        cfg.output.threads = v;
    }
    if let Some(v) = args.omega_i_sq {
        cfg.trap.omega_i_sq = v;
    }
    if let Some(v) = args.omega_f_sq {
        cfg.trap.omega_f_sq = v;
    }
    if let Some(v) = args.g {
        cfg.system.g = v;
    }
    if let Some(v) = args.n_bands {
        cfg.system.n_bands = v;
    }
    if let Some(v) = args.n_grid {
        cfg.system.n_grid = v;
    }
    if let Some(v) = args.t_final {
        cfg.time.t_final = v;
    }
    if let Some(v) = args.dt_sample {
        cfg.time.dt_sample = v;
    }
    if let Some(v) = args.scan_points {
        cfg.scan.n_points = v;
    }
    if let Some(dir) = &args.out_dir {
        cfg.output.dir = dir.display().to_string();
    } else if let Ok(dir) = std::env::var("QUENCHCI_OUT_DIR") {
        cfg.output.dir = dir;
    }
    Ok(cfg)
}

fn apply_threads(threads: usize) {
    let n = if threads == 0 {
        std::thread::available_parallelism().map(|v| v.get()).unwrap_or(1)
    } else {
        threads
    };
    quenchci::linalg::set_blas_threads(n);
}

fn dispatch(
    args: &CommonArgs,
    f: impl FnOnce(&RunConfig, &mut RunWriter) -> Result<(), Error>,
) -> Result<(), Error> {
    let cfg = load_config(args)?;
    cfg.validate()?;
    apply_threads(cfg.output.threads);
    let mut writer = RunWriter::create(std::path::Path::new(&cfg.output.dir))?;
    f(&cfg, &mut writer)
}

fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::Config(_) => 2,
        Error::BasisCap { .. } => 4,
        Error::Io(_) => 1,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Spectrum(a) => dispatch(a, commands::spectrum::run),
        Command::Quench(a) => dispatch(a, commands::quench_cmd::run),
        Command::ResponseScan(a) => dispatch(a, commands::response_scan::run),
        Command::Multiwell(a) => dispatch(a, |cfg, w| {
            commands::multiwell::run(cfg, w).map_err(|e| match e {
                Error::BasisCap { size, cap } => Error::BasisCap { size, cap },
                other => other,
            })
        }),
        Command::WannierDump(a) => dispatch(a, commands::wannier_dump::run),
        Command::Selftest { emit_derived, out_dir } => {
            apply_threads(0);
            let dir = out_dir
                .clone()
                .or_else(|| std::env::var("QUENCHCI_OUT_DIR").ok().map(PathBuf::from))
                .unwrap_or_else(|| PathBuf::from("out"));
            match RunWriter::create(&dir) {
                Ok(mut w) => commands::selftest::run(*emit_derived, &mut w),
                Err(e) => Err(Error::Io(e)),
            }
        }
        Command::Presets => {
            for (name, _) in config::PRESETS {
                println!("{name}");
            }
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if matches!(e, Error::BasisCap { .. }) {
                eprintln!("hint: reduce n_bands (or n_bosons), or raise system.basis_cap");
            }
            eprintln!("exit code {}", exit_code_for(&e));
            ExitCode::from(exit_code_for(&e))
        }
    }
}
