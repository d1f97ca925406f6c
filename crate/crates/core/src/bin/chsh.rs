use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use chsh::config::parse_config;
use chsh::diagnostics::dominant_wavenumber_on_grid;
use chsh::output::read_snapshot_psi;
use chsh::run::{run, spd_margin, RunOptions};
use chsh::{build_mesh, Error, Operators};

/// Cahn–Hilliard–Swift–Hohenberg simulations with an obstacle potential.
///
/// Exit codes: 0 success, 1 configuration error, 2 solver failure,
/// 3 I/O error. `CHSH_THREADS` caps the number of threads used.
#[derive(Parser)]
#[command(name = "chsh", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write snapshots and timeseries.csv.
    Simulate {
        #[arg(long)]
        config: PathBuf,
        /// Overrides `out_dir` from the config.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Overrides `seed` from the config.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        quiet: bool,
    },
    /// Validate a config and report the smallest nodal SPD margin.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
    /// Dominant wavenumber of psi in a CSV or VTK snapshot.
    Spectrum {
        #[arg(long)]
        snapshot: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn execute(command: Command) -> Result<(), Error> {
    match command {
        Command::Simulate {
            config,
            out_dir,
            seed,
            quiet,
        } => {
            let mut cfg = parse_config(&config)?;
            if let Some(dir) = out_dir {
                cfg.out_dir = dir;
            }
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let options = RunOptions {
                threads: RunOptions::threads_from_env(),
                quiet,
            };
            let summary = run(&cfg, &options)?;
            if !quiet {
                println!(
                    "{} steps{} written to {}",
                    summary.steps,
                    if summary.stopped_steady { " (steady state reached)" } else { "" },
                    cfg.out_dir.display()
                );
            }
            Ok(())
        }
        Command::Check { config } => {
            let cfg = parse_config(&config)?;
            let p = cfg.params();
            let mesh = build_mesh(cfg.mesh_n)?;
            let ops = Operators::assemble(&mesh)?;
            let margin = spd_margin(&ops, &p)?;
            println!("preset      {}", cfg.preset);
            println!("mesh        {0}x{0} cells, {1} nodes", cfg.mesh_n, mesh.n_nodes());
            println!("steps       {} x tau = {:e}", cfg.n_steps, p.tau);
            println!(
                "params      eps={:e} lambda={:e} omega={} sigma={} alpha={} g={} gamma={} delta={} c_f={}",
                p.eps, p.lambda, p.omega, p.sigma, p.alpha, p.g, p.gamma, p.delta, p.c_f
            );
            println!("spd margin  {margin:.6e}");
            Ok(())
        }
        Command::Spectrum { snapshot } => {
            let (psi, side) = read_snapshot_psi(&snapshot)?;
            let h = 1.0 / (side - 1) as f64;
            let k = dominant_wavenumber_on_grid(&psi, side, h)?;
            println!("{k:.6}");
            Ok(())
        }
    }
}
