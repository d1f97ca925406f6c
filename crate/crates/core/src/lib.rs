//! Finite element simulation of the Cahn–Hilliard–Swift–Hohenberg system
//! with an obstacle potential.
//!
//! The order parameter `phi` and the solvent fraction `psi` are constrained
//! pointwise to the triangle `K` with vertices `(-1, 0)`, `(1, 0)`, `(0, 1)`.
//! Each time step is a variational inequality solved by a projected
//! Gauss–Seidel sweep: every node solves a 2×2 obstacle problem by projecting
//! onto `K` in a node-dependent metric, then recovers the chemical potential,
//! the Swift–Hohenberg driving term and the discrete `-Δψ` by
//! back-substitution.
//!
//! Modules, bottom-up:
//!
//! - [`mesh`]: structured P1 triangulation of `(-1/2, 1/2)²`, lumped mass,
//!   stiffness and its Gauss–Seidel splitting.
//! - [`model`]: parameters, the polynomial potential and its convex–concave
//!   splitting, the discrete energy and its lower bound.
//! - [`projection`]: the admissible triangle and the weighted projection.
//! - [`solver`]: nodewise coefficients, the sweep and the time step.
//! - [`diagnostics`]: mass, constraint violation, stability certificate and
//!   dominant wavenumber.
//! - [`config`], [`output`], [`run`]: experiment files, presets, initial
//!   data, snapshot/time-series writers and the time loop.

pub mod config;
pub mod diagnostics;
pub mod error;
pub mod mesh;
pub mod model;
pub mod output;
pub mod projection;
pub mod run;
pub mod solver;

pub use config::{ExperimentConfig, OutputFormat, Preset};
pub use error::{Error, Result};
pub use mesh::{assemble_lumped_mass, assemble_stiffness, build_mesh, split_stiffness, MatrixSplitting, Mesh, SparseMatrix};
pub use model::{EnergyReport, ModelParams};
pub use projection::{in_k, project_k, project_k_fast, KPoint, ProjMatrix};
pub use solver::{IterationSettings, Operators, State, StepStats};
