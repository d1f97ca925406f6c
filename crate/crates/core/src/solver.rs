//! One time step of the obstacle scheme by projected Gauss–Seidel.
//!
//! Each step solves, for `(Φ, Ψ) ∈ K^J` and `W, Z, Q`:
//!
//! ```text
//! M Φ + τ A W = M Φⁿ
//! M Ψ + τ M Z = M Ψⁿ
//! variational inequality in (Φ, Ψ) with right-hand sides Rⁿ, Sⁿ
//! A Ψ - M Q = 0
//! ```
//!
//! A sweep visits nodes in mesh order. At node `j` the off-diagonal parts of
//! every block use the newest values available (already updated for `i < j`,
//! previous sweep for `i > j`), `W_j, Z_j, Q_j` are eliminated, and the
//! remaining 2×2 obstacle problem is solved by projecting `𝔄⁻¹β` onto `K`
//! in the metric `𝔄`. `W_j, Z_j, Q_j` are then recovered by
//! back-substitution.

use crate::error::{Error, Result};
use crate::mesh::{assemble_lumped_mass, assemble_stiffness, split_stiffness, MatrixSplitting, Mesh, SparseMatrix};
use crate::model::{energy_terms, f1_grad_minus, ModelParams};
use crate::projection::{project_k, project_k_fast, KPoint, ProjMatrix};

/// Nodal fields at one time level.
#[derive(Debug, Clone, PartialEq)]
pub struct State {
    pub phi: Vec<f64>,
    pub psi: Vec<f64>,
    /// Chemical potential μ.
    pub w: Vec<f64>,
    pub z: Vec<f64>,
    /// Discrete `-Δψ`.
    pub q: Vec<f64>,
    pub time: f64,
    pub step: usize,
}

impl State {
    /// Initial state with `W = Z = 0` at time zero.
    pub fn new(phi: Vec<f64>, psi: Vec<f64>, q: Vec<f64>) -> Self {
        let n = phi.len();
        State {
            phi,
            psi,
            w: vec![0.0; n],
            z: vec![0.0; n],
            q,
            time: 0.0,
            step: 0,
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.phi.len()
    }

    fn check_len(&self, n: usize) -> Result<()> {
        for v in [&self.phi, &self.psi, &self.w, &self.z, &self.q] {
            if v.len() != n {
                return Err(Error::DimensionError { expected: n, got: v.len() });
            }
        }
        Ok(())
    }
}

/// Stopping rule for the sweep loop.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSettings {
    /// Sup-norm bound on the `(Φ, Ψ)` change of one sweep.
    pub tol_gs: f64,
    pub max_sweeps: usize,
    /// Sup-norm bound on `A Ψ - M Q`.
    pub tol_residual: f64,
    /// Bound on the lumped-mass defect `|Σ_j M_jj (Φ_j - Φ^n_j)|`.
    pub tol_mass: f64,
    /// Over-relaxation factor. Anything other than `1.0` is experimental.
    pub relaxation: f64,
}

impl Default for IterationSettings {
    fn default() -> Self {
        IterationSettings {
            tol_gs: 1e-8,
            max_sweeps: 20_000,
            tol_residual: 1e-8,
            tol_mass: 1e-14,
            relaxation: 1.0,
        }
    }
}

impl IterationSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_gs > 0.0) || !(self.tol_residual > 0.0) || !(self.tol_mass > 0.0) || self.max_sweeps == 0 {
            return Err(Error::InvalidParams(format!(
                "iteration settings need tol_gs, tol_residual, tol_mass > 0 and max_sweeps >= 1 (got {self:?})"
            )));
        }
        if !(self.relaxation > 0.0 && self.relaxation < 2.0) {
            return Err(Error::InvalidParams(format!(
                "relaxation factor must lie in (0, 2), got {}",
                self.relaxation
            )));
        }
        Ok(())
    }
}

/// Per-step solver report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepStats {
    pub sweeps: usize,
    /// `(Φ, Ψ)` change of the final sweep.
    pub max_update: f64,
    /// `‖A Ψ - M Q‖_∞` at exit.
    pub residual_d4: f64,
    pub energy_before: f64,
    pub energy_after: f64,
    /// `τ ‖∇W‖² + τ ‖Z‖_h²`
    pub dissipation: f64,
}

/// Static finite element operators of a mesh.
#[derive(Debug, Clone)]
pub struct Operators {
    pub mass: Vec<f64>,
    pub stiffness: SparseMatrix,
    pub splitting: MatrixSplitting,
    // rows of A_L + A_Lᵀ, i.e. the negated off-diagonal stiffness
    coupling_offsets: Vec<usize>,
    coupling_cols: Vec<usize>,
    coupling_vals: Vec<f64>,
}

impl Operators {
    pub fn assemble(mesh: &Mesh) -> Result<Self> {
        Self::from_matrices(assemble_lumped_mass(mesh), assemble_stiffness(mesh)?)
    }

    pub fn from_matrices(mass: Vec<f64>, stiffness: SparseMatrix) -> Result<Self> {
        let n = mass.len();
        if stiffness.dim() != n {
            return Err(Error::DimensionError { expected: n, got: stiffness.dim() });
        }
        if let Some((row, &value)) = mass.iter().enumerate().find(|(_, &m)| !(m > 0.0)) {
            return Err(Error::DegenerateDiagonal { row, value });
        }
        let splitting = split_stiffness(&stiffness)?;

        // upper part of row j is column j of A_L
        let mut upper: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, l) in splitting.a_lower.row(i) {
                upper[j].push((i, l));
            }
        }
        let mut coupling_offsets = Vec::with_capacity(n + 1);
        let mut coupling_cols = Vec::new();
        let mut coupling_vals = Vec::new();
        coupling_offsets.push(0);
        for (j, up) in upper.iter().enumerate() {
            for (i, l) in splitting.a_lower.row(j).chain(up.iter().copied()) {
                coupling_cols.push(i);
                coupling_vals.push(l);
            }
            coupling_offsets.push(coupling_cols.len());
        }

        Ok(Operators {
            mass,
            stiffness,
            splitting,
            coupling_offsets,
            coupling_cols,
            coupling_vals,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.mass.len()
    }

    /// `(i, [A_L + A_Lᵀ]_{ji})` for all `i != j` coupled to `j`.
    pub fn coupling(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.coupling_offsets[j]..self.coupling_offsets[j + 1];
        self.coupling_cols[r.clone()]
            .iter()
            .copied()
            .zip(self.coupling_vals[r].iter().copied())
    }

    /// `‖A Ψ - M Q‖_∞`
    pub fn d4_residual(&self, psi: &[f64], q: &[f64]) -> f64 {
        let a_psi = self.stiffness.mul_vec(psi);
        a_psi
            .iter()
            .zip(&self.mass)
            .zip(q)
            .map(|((ap, m), q)| (ap - m * q).abs())
            .fold(0.0, f64::max)
    }

    /// `τ Wᵀ A W + τ Σ_j M_jj Z_j²`
    pub fn dissipation(&self, w: &[f64], z: &[f64], tau: f64) -> f64 {
        let zz: f64 = self.mass.iter().zip(z).map(|(m, z)| m * z * z).sum();
        tau * self.stiffness.quad_form(w) + tau * zz
    }
}

/// `Q⁰ = M⁻¹ A Ψ⁰`.
pub fn init_q0(mass: &[f64], a: &SparseMatrix, psi0: &[f64]) -> Result<Vec<f64>> {
    let n = mass.len();
    for len in [a.dim(), psi0.len()] {
        if len != n {
            return Err(Error::DimensionError { expected: n, got: len });
        }
    }
    if let Some((row, &value)) = mass.iter().enumerate().find(|(_, &m)| m == 0.0 || !m.is_finite()) {
        return Err(Error::DegenerateDiagonal { row, value });
    }
    let a_psi = a.mul_vec(psi0);
    Ok(a_psi.iter().zip(mass).map(|(ap, m)| ap / m).collect())
}

/// Nodal metric `𝔄` after eliminating `W_j, Z_j, Q_j`.
pub fn node_coefficients(j: usize, m_jj: f64, a_jj: f64, params: &ModelParams) -> Result<ProjMatrix> {
    let p = params;
    let a11 = p.eps * a_jj + p.c_f * m_jj + m_jj * m_jj / (p.tau * a_jj);
    let sh = p.lambda.sqrt() * (p.omega * p.omega * m_jj.sqrt() - a_jj / m_jj.sqrt());
    let a22 = sh * sh + p.c_f * m_jj + m_jj / p.tau;
    let a12 = 0.5 * p.sigma * a_jj;
    let metric = ProjMatrix { a11, a12, a22 };
    if !metric.is_spd() {
        return Err(Error::TimeStepTooLarge {
            node: j,
            a12_sq: a12 * a12,
            det_part: a11 * a22,
        });
    }
    Ok(metric)
}

/// Data fixed during one time step.
#[derive(Debug, Clone)]
pub struct TimeLevel {
    /// `M Φⁿ`
    pub m_phi: Vec<f64>,
    /// `M Ψⁿ`
    pub m_psi: Vec<f64>,
    /// `Rⁿ = σ/2 A Ψⁿ - M F1⁻_φ(Φⁿ, Ψⁿ)`
    pub r: Vec<f64>,
    /// `Sⁿ = λω⁴/2 M 1 - M F1⁻_ψ(Φⁿ, Ψⁿ) + σ/2 A Φⁿ`
    pub s: Vec<f64>,
    /// Nodal metrics `𝔄_j`.
    pub metrics: Vec<ProjMatrix>,
}

impl TimeLevel {
    pub fn new(prev: &State, ops: &Operators, params: &ModelParams) -> Result<Self> {
        let n = ops.n_nodes();
        prev.check_len(n)?;
        let a_psi = ops.stiffness.mul_vec(&prev.psi);
        let a_phi = ops.stiffness.mul_vec(&prev.phi);
        let half_sigma = 0.5 * params.sigma;
        let sh_const = 0.5 * params.lambda * params.omega.powi(4);
        let mut level = TimeLevel {
            m_phi: Vec::with_capacity(n),
            m_psi: Vec::with_capacity(n),
            r: Vec::with_capacity(n),
            s: Vec::with_capacity(n),
            metrics: Vec::with_capacity(n),
        };
        for j in 0..n {
            let m = ops.mass[j];
            let (gphi, gpsi) = f1_grad_minus(prev.phi[j], prev.psi[j], params);
            level.m_phi.push(m * prev.phi[j]);
            level.m_psi.push(m * prev.psi[j]);
            level.r.push(half_sigma * a_psi[j] - m * gphi);
            level.s.push(sh_const * m - m * gpsi + half_sigma * a_phi[j]);
            level
                .metrics
                .push(node_coefficients(j, m, ops.splitting.a_diag[j], params)?);
        }
        Ok(level)
    }

    /// `Σ_j (M_jj Φ_j - M_jj Φ^n_j)`, zero for the exact solution.
    pub fn mass_defect(&self, phi: &[f64], ops: &Operators) -> f64 {
        phi.iter()
            .zip(&ops.mass)
            .zip(&self.m_phi)
            .map(|((p, m), mp)| m * p - mp)
            .sum()
    }
}

/// `[r1]_j … [r5]_j` of one node.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeResiduals {
    pub r1: f64,
    pub r2: f64,
    pub r3: f64,
    pub r4: f64,
    pub r5: f64,
}

impl NodeResiduals {
    /// Right-hand side `(β1, β2)` of the nodal inequality.
    pub fn beta(&self, m_jj: f64, a_jj: f64, params: &ModelParams) -> (f64, f64) {
        let tau = params.tau;
        (
            self.r2 + m_jj * self.r1 / (tau * a_jj),
            self.r4 + self.r3 / tau + params.lambda * a_jj * self.r5 / m_jj,
        )
    }
}

/// Residuals at node `j` from the newest values in `latest`.
pub fn node_rhs(
    j: usize,
    latest: &State,
    level: &TimeLevel,
    ops: &Operators,
    params: &ModelParams,
) -> NodeResiduals {
    let (mut sw, mut sphi, mut spsi, mut sq) = (0.0, 0.0, 0.0, 0.0);
    for (i, c) in ops.coupling(j) {
        sw += c * latest.w[i];
        sphi += c * latest.phi[i];
        spsi += c * latest.psi[i];
        sq += c * latest.q[i];
    }
    let p = params;
    let half_sigma = 0.5 * p.sigma;
    NodeResiduals {
        r1: level.m_phi[j] + p.tau * sw,
        r2: level.r[j] + p.eps * sphi - half_sigma * spsi,
        r3: level.m_psi[j],
        r4: level.s[j] - half_sigma * sphi + p.lambda * sq
            - 2.0 * p.lambda * p.omega * p.omega * spsi,
        r5: spsi,
    }
}

/// Solution of the 2×2 obstacle problem: `P_K^𝔄(𝔄⁻¹ β)`.
pub fn node_solve(metric: &ProjMatrix, beta: (f64, f64)) -> Result<KPoint> {
    let x = metric.solve(beta);
    if metric.a12 == 0.0 {
        project_k_fast(metric, x)
    } else {
        project_k(metric, x)
    }
}

/// `(W_j, Z_j, Q_j)` from the nodal `(Φ_j, Ψ_j)`.
pub fn back_substitute(
    phi_j: f64,
    psi_j: f64,
    res: &NodeResiduals,
    m_jj: f64,
    a_jj: f64,
    params: &ModelParams,
) -> (f64, f64, f64) {
    let tau = params.tau;
    (
        (res.r1 - m_jj * phi_j) / (tau * a_jj),
        (res.r3 - m_jj * psi_j) / (tau * m_jj),
        (a_jj * psi_j - res.r5) / m_jj,
    )
}

/// One in-place sweep over all nodes; returns the sup-norm of the `(Φ, Ψ)`
/// change.
pub fn gs_sweep(
    state: &mut State,
    level: &TimeLevel,
    ops: &Operators,
    params: &ModelParams,
    relaxation: f64,
) -> Result<f64> {
    let mut max_update = 0.0f64;
    for j in 0..ops.n_nodes() {
        let m = ops.mass[j];
        let a = ops.splitting.a_diag[j];
        let metric = &level.metrics[j];
        let res = node_rhs(j, state, level, ops, params);
        let mut y = node_solve(metric, res.beta(m, a, params))?;
        let (old_phi, old_psi) = (state.phi[j], state.psi[j]);
        if relaxation != 1.0 {
            let x = (
                old_phi + relaxation * (y.phi - old_phi),
                old_psi + relaxation * (y.psi - old_psi),
            );
            y = project_k(metric, x)?;
        }
        max_update = max_update
            .max((y.phi - old_phi).abs())
            .max((y.psi - old_psi).abs());
        let (w, z, q) = back_substitute(y.phi, y.psi, &res, m, a, params);
        state.phi[j] = y.phi;
        state.psi[j] = y.psi;
        state.w[j] = w;
        state.z[j] = z;
        state.q[j] = q;
    }
    Ok(max_update)
}

/// Advances `prev` by one time step.
///
/// Sweeps start from the previous time level and stop once the sweep update
/// is below `tol_gs`, `‖A Ψ - M Q‖_∞` is below `tol_residual` and the
/// lumped mass of `Φ` has moved by less than `tol_mass`.
pub fn solve_timestep(
    prev: &State,
    ops: &Operators,
    params: &ModelParams,
    settings: &IterationSettings,
) -> Result<(State, StepStats)> {
    settings.validate()?;
    let level = TimeLevel::new(prev, ops, params)?;
    let mut state = prev.clone();
    let mut sweeps = 0;
    let mut max_update;
    let mut residual;
    loop {
        max_update = gs_sweep(&mut state, &level, ops, params, settings.relaxation)?;
        sweeps += 1;
        residual = f64::INFINITY;
        if max_update < settings.tol_gs {
            residual = ops.d4_residual(&state.psi, &state.q);
            if residual < settings.tol_residual && level.mass_defect(&state.phi, ops).abs() < settings.tol_mass {
                break;
            }
        }
        if sweeps >= settings.max_sweeps {
            return Err(Error::NoConvergence {
                sweeps,
                last_update: max_update,
                residual,
            });
        }
    }
    state.time = prev.time + params.tau;
    state.step = prev.step + 1;

    let energy_before = energy_terms(prev, &ops.mass, &ops.stiffness, params)?.e_total;
    let energy_after = energy_terms(&state, &ops.mass, &ops.stiffness, params)?.e_total;
    let stats = StepStats {
        sweeps,
        max_update,
        residual_d4: residual,
        energy_before,
        energy_after,
        dissipation: ops.dissipation(&state.w, &state.z, params.tau),
    };
    Ok((state, stats))
}
