//! The time loop: initial data, stepping, snapshots and the time series.

use std::path::PathBuf;
use std::sync::mpsc;
use std::thread;

use crate::config::{generate_initial_data, ExperimentConfig};
use crate::diagnostics::{certify_steps, StabilityCertificate, TimeSeriesRow};
use crate::error::{Error, Result};
use crate::mesh::{build_mesh, Mesh};
use crate::model::{energy_terms, ModelParams};
use crate::output::{write_snapshot, write_timeseries};
use crate::solver::{init_q0, node_coefficients, solve_timestep, IterationSettings, Operators, State, StepStats};

/// A mesh, its operators and the current state.
pub struct Simulation {
    pub mesh: Mesh,
    pub ops: Operators,
    pub params: ModelParams,
    pub settings: IterationSettings,
    pub state: State,
}

impl Simulation {
    /// Starts from `(Φ⁰, Ψ⁰)` with `Q⁰` the discrete `-ΔΨ⁰`.
    pub fn new(
        mesh: Mesh,
        params: ModelParams,
        settings: IterationSettings,
        phi0: Vec<f64>,
        psi0: Vec<f64>,
    ) -> Result<Self> {
        params.validate()?;
        settings.validate()?;
        let ops = Operators::assemble(&mesh)?;
        for v in [&phi0, &psi0] {
            if v.len() != mesh.n_nodes() {
                return Err(Error::DimensionError {
                    expected: mesh.n_nodes(),
                    got: v.len(),
                });
            }
        }
        let q0 = init_q0(&ops.mass, &ops.stiffness, &psi0)?;
        let state = State::new(phi0, psi0, q0);
        spd_margin(&ops, &params)?;
        Ok(Simulation {
            mesh,
            ops,
            params,
            settings,
            state,
        })
    }

    /// Mesh, parameters and seeded initial data from an experiment config.
    pub fn from_config(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let mesh = build_mesh(config.mesh_n)?;
        let (phi0, psi0) = generate_initial_data(config, &mesh);
        Simulation::new(mesh, config.params(), config.settings, phi0, psi0)
    }

    /// Advances one time step in place.
    pub fn step(&mut self) -> Result<StepStats> {
        let (next, stats) = solve_timestep(&self.state, &self.ops, &self.params, &self.settings)?;
        self.state = next;
        Ok(stats)
    }

    pub fn row(&self, stats: &StepStats) -> Result<TimeSeriesRow> {
        let energy = energy_terms(&self.state, &self.ops.mass, &self.ops.stiffness, &self.params)?;
        Ok(TimeSeriesRow::new(
            &self.state,
            &energy,
            stats.dissipation,
            stats.sweeps,
            &self.ops.mass,
        ))
    }
}

/// Smallest relative SPD margin `1 - a12² / (a11 a22)` of the nodal metrics.
///
/// Fails with `TimeStepTooLarge` if some node has no margin at all.
pub fn spd_margin(ops: &Operators, params: &ModelParams) -> Result<f64> {
    let diag = ops.stiffness.diagonal();
    let mut margin = f64::INFINITY;
    for j in 0..ops.n_nodes() {
        let m = node_coefficients(j, ops.mass[j], diag[j], params)?;
        margin = margin.min(1.0 - m.a12 * m.a12 / (m.a11 * m.a22));
    }
    Ok(margin)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RunOptions {
    /// Worker threads; with more than one, snapshots are written while the
    /// next steps are computed.
    pub threads: usize,
    pub quiet: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            threads: 1,
            quiet: true,
        }
    }
}

impl RunOptions {
    /// Thread budget from `CHSH_THREADS` (default 1; invalid or zero values
    /// fall back to 1).
    pub fn threads_from_env() -> usize {
        std::env::var("CHSH_THREADS")
            .ok()
            .and_then(|v| v.trim().parse::<usize>().ok())
            .filter(|&t| t > 0)
            .unwrap_or(1)
    }
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub steps: usize,
    pub stopped_steady: bool,
    pub final_state: State,
    pub rows: Vec<TimeSeriesRow>,
    pub certificate: Option<StabilityCertificate>,
    pub files: Vec<PathBuf>,
}

/// Runs an experiment and writes its snapshots and `timeseries.csv` into
/// `config.out_dir`.
pub fn run(config: &ExperimentConfig, options: &RunOptions) -> Result<RunSummary> {
    let mut sim = Simulation::from_config(config)?;
    let out_dir = config.out_dir.clone();
    let formats = config.formats.clone();
    let mesh = sim.mesh.clone();

    let mut files = Vec::new();
    let mut rows = Vec::with_capacity(config.n_steps);
    let mut stats_log = Vec::with_capacity(config.n_steps);
    let mut stopped_steady = false;

    let result = thread::scope(|scope| -> Result<()> {
        let (tx, writer) = if options.threads > 1 {
            let (tx, rx) = mpsc::channel::<State>();
            let (mesh, formats, out_dir) = (&mesh, &formats, &out_dir);
            let handle = scope.spawn(move || -> Result<Vec<PathBuf>> {
                let mut written = Vec::new();
                for state in rx {
                    written.extend(write_snapshot(&state, mesh, formats, out_dir)?);
                }
                Ok(written)
            });
            (Some(tx), Some(handle))
        } else {
            (None, None)
        };
        let snapshot = |state: &State, files: &mut Vec<PathBuf>| -> Result<()> {
            if !config.snapshot_steps.contains(&state.step) {
                return Ok(());
            }
            match &tx {
                Some(tx) => {
                    // a closed channel means the writer failed; its error is reported on join
                    let _ = tx.send(state.clone());
                    Ok(())
                }
                None => {
                    files.extend(write_snapshot(state, &mesh, &formats, &out_dir)?);
                    Ok(())
                }
            }
        };

        let stepping = (|| -> Result<()> {
            snapshot(&sim.state, &mut files)?;
            for _ in 0..config.n_steps {
                let stats = sim.step()?;
                let row = sim.row(&stats)?;
                if !options.quiet && (row.step % 100 == 0 || row.step == config.n_steps) {
                    eprintln!(
                        "step {:>8}  t = {:.6e}  E = {:.10e}  sweeps = {}",
                        row.step, row.time, row.e_total, row.gs_sweeps
                    );
                }
                snapshot(&sim.state, &mut files)?;
                rows.push(row);
                let steady = config
                    .steady_tol
                    .is_some_and(|tol| (stats.energy_after - stats.energy_before).abs() < tol * stats.energy_after.abs());
                stats_log.push(stats);
                if steady {
                    stopped_steady = true;
                    break;
                }
            }
            Ok(())
        })();

        drop(tx);
        if let Some(handle) = writer {
            let written = handle.join().expect("snapshot writer panicked")?;
            files.extend(written);
        }
        stepping
    });
    result?;

    if !rows.is_empty() {
        files.push(write_timeseries(&rows, &out_dir)?);
    }
    let certificate = if stats_log.is_empty() {
        None
    } else {
        Some(certify_steps(&stats_log)?)
    };
    if !options.quiet {
        if let Some(c) = &certificate {
            eprintln!(
                "energy certificate: {} (worst margin {:.3e} at step {})",
                if c.passed { "pass" } else { "FAIL" },
                c.worst_margin,
                c.worst_step
            );
        }
    }
    Ok(RunSummary {
        steps: rows.len(),
        stopped_steady,
        final_state: sim.state,
        rows,
        certificate,
        files,
    })
}
