//! `gridres`: grid-impedance sweeps in, resonance and compliance reports out.
//!
//! Subcommands chain into a pipeline: `synth` (or your own manifest) feeds
//! `envelope` and `fit`; fitted models feed `resonance`, `drift`,
//! `branches` and `magnify`; `comply` checks a harmonic spectrum, optionally
//! propagated through a network file; `report` runs everything into one
//! directory with an index. Every run writes the effective config next to
//! its artifacts, and identical configs reproduce identical bytes.
//!
//! Exit codes: 0 success (and compliance pass), 1 compliance violation,
//! 2 configuration or IO errors. Logging via `GRIDRES_LOG`
//! (error|warn|info|debug).

mod commands;
mod config;
mod io_util;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand, ValueEnum};
use gridres_core::harmonics::SourceLocation;
use gridres_core::resonance::SourceKind;

use config::{Config, FitOrder};

#[derive(Parser)]
#[command(name = "gridres", version, about = "Grid impedance resonance and harmonic compliance toolkit")]
struct Cli {
    /// JSON config file; command-line flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed for the synthetic generator.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Scan/generation range start in Hz.
    #[arg(long, global = true)]
    fmin: Option<f64>,
    /// Scan/generation range end in Hz.
    #[arg(long, global = true)]
    fmax: Option<f64>,
    /// Scan/generation grid step in Hz.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Worker threads for per-snapshot fan-out.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Accept sweep rows outside the declared 0-1000 Hz range.
    #[arg(long, global = true)]
    allow_extended: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Generate a deterministic synthetic sweep set with one outlier
    Synth {
        #[arg(long)]
        snapshots: Option<usize>,
        /// Target magnitude spread ratio at the spread center.
        #[arg(long)]
        spread: Option<f64>,
        #[arg(long)]
        spread_center: Option<f64>,
    },
    /// Fit a stable pole-residue model to every sweep in the manifest
    Fit {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// `auto` or a fixed order.
        #[arg(long)]
        order: Option<String>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Scan per-snapshot impedances for resonances; emit CSV + overlay SVG
    Resonance {
        #[arg(long)]
        manifest: Option<PathBuf>,
        #[arg(long)]
        models: Option<PathBuf>,
        /// Scan raw interpolated sweeps instead of fitted models.
        #[arg(long)]
        from_csv: bool,
        #[arg(long)]
        prominence: Option<f64>,
    },
    /// Compose fitted grids with the LCL filter and track resonance drift
    Drift {
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long)]
        prominence: Option<f64>,
    },
    /// Dominant resonance frequency versus parallel branch count
    Branches {
        /// Branch counts, e.g. `--n 1,2,4,9`.
        #[arg(long, value_delimiter = ',')]
        n: Option<Vec<usize>>,
        #[arg(long)]
        grid_l: Option<f64>,
        #[arg(long)]
        grid_r: Option<f64>,
    },
    /// Harmonic gain map across snapshots and orders
    Magnify {
        #[arg(long)]
        models: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "injection")]
        source: SourceArg,
        /// Harmonic orders, e.g. `--orders 1,3,5,7`.
        #[arg(long, value_delimiter = ',')]
        orders: Option<Vec<u32>>,
    },
    /// Check a harmonic spectrum against limits; exit 1 on violation
    Comply {
        /// Spectrum CSV (`order,amp_real,amp_imag`) with a `.json` sidecar.
        spectrum: PathBuf,
        #[arg(long)]
        limits: Option<PathBuf>,
        /// Propagate the spectrum through this network file first.
        #[arg(long)]
        through_network: Option<PathBuf>,
        #[arg(long, value_enum, default_value = "grid")]
        location: LocationArg,
    },
    /// Min/max magnitude envelope and outlier scores across snapshots
    Envelope {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Outlier score threshold (log10 magnitude).
        #[arg(long)]
        threshold: Option<f64>,
    },
    /// Run the full pipeline into one directory with an index.json
    Report {
        #[arg(long)]
        manifest: Option<PathBuf>,
        /// Optional spectrum to run compliance on.
        #[arg(long)]
        spectrum: Option<PathBuf>,
        #[arg(long)]
        snapshots: Option<usize>,
        #[arg(long)]
        spread: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum SourceArg {
    Injection,
    Background,
}

#[derive(Clone, Copy, ValueEnum)]
enum LocationArg {
    Grid,
    Inverter,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter("GRIDRES_LOG")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run(cli: Cli) -> Result<u8> {
    let mut cfg = Config::load(cli.config.as_deref())?;
    if let Some(out) = cli.out {
        cfg.out = out;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(fmin) = cli.fmin {
        cfg.fmin = fmin;
    }
    if let Some(fmax) = cli.fmax {
        cfg.fmax = fmax;
    }
    if let Some(step) = cli.step {
        cfg.step = step;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if cli.allow_extended {
        cfg.allow_extended = true;
    }

    match cli.cmd {
        Cmd::Synth {
            snapshots,
            spread,
            spread_center,
        } => {
            if let Some(n) = snapshots {
                cfg.snapshots = n;
            }
            if let Some(s) = spread {
                cfg.spread = s;
            }
            if let Some(c) = spread_center {
                cfg.spread_center_hz = c;
            }
            cfg.freeze()?;
            commands::cmd_synth(&cfg)?;
            Ok(0)
        }
        Cmd::Fit {
            manifest,
            order,
            tol,
            max_iter,
        } => {
            if let Some(m) = manifest {
                cfg.manifest = Some(m);
            }
            if let Some(o) = order {
                cfg.fit_order = FitOrder::parse(&o)?;
            }
            if let Some(t) = tol {
                cfg.fit_tol = t;
            }
            if let Some(m) = max_iter {
                cfg.fit_max_iter = m;
            }
            cfg.freeze()?;
            commands::cmd_fit(&cfg)?;
            Ok(0)
        }
        Cmd::Resonance {
            manifest,
            models,
            from_csv,
            prominence,
        } => {
            if let Some(m) = manifest {
                cfg.manifest = Some(m);
            }
            if let Some(m) = models {
                cfg.models = Some(m);
            }
            if let Some(p) = prominence {
                cfg.prominence = p;
            }
            cfg.freeze()?;
            commands::cmd_resonance(&cfg, from_csv)?;
            Ok(0)
        }
        Cmd::Drift { models, prominence } => {
            if let Some(m) = models {
                cfg.models = Some(m);
            }
            if let Some(p) = prominence {
                cfg.prominence = p;
            }
            cfg.freeze()?;
            commands::cmd_drift(&cfg)?;
            Ok(0)
        }
        Cmd::Branches { n, grid_l, grid_r } => {
            if let Some(n) = n {
                cfg.branch_counts = n;
            }
            if let Some(l) = grid_l {
                cfg.grid_l_henry = l;
            }
            if let Some(r) = grid_r {
                cfg.grid_r_ohm = r;
            }
            cfg.freeze()?;
            commands::cmd_branches(&cfg)?;
            Ok(0)
        }
        Cmd::Magnify {
            models,
            source,
            orders,
        } => {
            if let Some(m) = models {
                cfg.models = Some(m);
            }
            if let Some(o) = orders {
                cfg.orders = o;
            }
            let source = match source {
                SourceArg::Injection => SourceKind::Injection,
                SourceArg::Background => SourceKind::Background,
            };
            cfg.freeze()?;
            commands::cmd_magnify(&cfg, source)?;
            Ok(0)
        }
        Cmd::Comply {
            spectrum,
            limits,
            through_network,
            location,
        } => {
            if let Some(l) = limits {
                cfg.limits = Some(l);
            }
            let location = match location {
                LocationArg::Grid => SourceLocation::GridSide,
                LocationArg::Inverter => SourceLocation::InverterSide,
            };
            cfg.freeze()?;
            let (code, _) =
                commands::cmd_comply(&cfg, &spectrum, through_network.as_deref(), location)?;
            Ok(code)
        }
        Cmd::Envelope { manifest, threshold } => {
            if let Some(m) = manifest {
                cfg.manifest = Some(m);
            }
            if let Some(t) = threshold {
                cfg.outlier_threshold = t;
            }
            cfg.freeze()?;
            commands::cmd_envelope(&cfg)?;
            Ok(0)
        }
        Cmd::Report {
            manifest,
            spectrum,
            snapshots,
            spread,
        } => {
            if let Some(m) = manifest {
                cfg.manifest = Some(m);
            }
            if let Some(n) = snapshots {
                cfg.snapshots = n;
            }
            if let Some(s) = spread {
                cfg.spread = s;
            }
            cfg.freeze()?;
            commands::cmd_report(&cfg, spectrum.as_deref())?;
            Ok(0)
        }
    }
}
