//! Model parameters, the polynomial potential `F1` with its convex–concave
//! splitting, and the discrete energy.
//!
//! With `s = ψ - 1/2`,
//!
//! ```text
//! F1(φ, ψ)  = -α/2 φ² - g/3 s³ - γ/2 s² + δ/2 φ² s
//! F1⁺(φ, ψ) = C_F/2 (φ² + ψ²)                (convex, implicit)
//! F1⁻       = F1 - F1⁺                        (concave on K, explicit)
//! ```

use crate::error::{Error, Result};
use crate::mesh::SparseMatrix;
use crate::projection::in_k;
use crate::solver::State;

/// Physical and scheme constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    /// Gradient energy coefficient ε.
    pub eps: f64,
    /// Swift–Hohenberg bending coefficient λ.
    pub lambda: f64,
    /// Preferred wavenumber ω.
    pub omega: f64,
    /// Curvature coupling σ.
    pub sigma: f64,
    pub alpha: f64,
    pub g: f64,
    pub gamma: f64,
    pub delta: f64,
    /// Splitting constant `C_F`.
    pub c_f: f64,
    /// Time step τ.
    pub tau: f64,
}

impl ModelParams {
    /// `C_F` from [`cf_default`] for the current `alpha, g, gamma, delta`.
    pub fn with_default_cf(mut self) -> Self {
        self.c_f = cf_default(self.alpha, self.g, self.gamma, self.delta);
        self
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eps", self.eps),
            ("lambda", self.lambda),
            ("omega", self.omega),
            ("sigma", self.sigma),
            ("alpha", self.alpha),
            ("g", self.g),
            ("gamma", self.gamma),
            ("delta", self.delta),
            ("c_f", self.c_f),
            ("tau", self.tau),
        ];
        if let Some((name, v)) = fields.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParams(format!("{name} = {v} is not finite")));
        }
        let positive = [("eps", self.eps), ("tau", self.tau)];
        if let Some((name, v)) = positive.iter().find(|(_, v)| *v <= 0.0) {
            return Err(Error::InvalidParams(format!("{name} must be > 0, got {v}")));
        }
        let nonneg = [
            ("lambda", self.lambda),
            ("alpha", self.alpha),
            ("gamma", self.gamma),
            ("c_f", self.c_f),
        ];
        if let Some((name, v)) = nonneg.iter().find(|(_, v)| *v < 0.0) {
            return Err(Error::InvalidParams(format!("{name} must be >= 0, got {v}")));
        }
        if self.sigma != 0.0 && self.lambda <= 0.0 {
            return Err(Error::InvalidParams(
                "sigma != 0 requires lambda > 0".to_string(),
            ));
        }
        let min_cf = cf_default(self.alpha, self.g, self.gamma, self.delta);
        if self.c_f < min_cf {
            return Err(Error::InvalidParams(format!(
                "c_f = {} is below the concavity threshold {min_cf}",
                self.c_f
            )));
        }
        Ok(())
    }
}

/// Smallest `C_F` that makes `F1⁻` concave on `K`.
pub fn cf_default(alpha: f64, g: f64, gamma: f64, delta: f64) -> f64 {
    0.0_f64
        .max(1.5 * delta.abs() - alpha)
        .max(delta.abs() + g.abs() - gamma)
}

pub fn f1(phi: f64, psi: f64, p: &ModelParams) -> f64 {
    let s = psi - 0.5;
    -0.5 * p.alpha * phi * phi - p.g / 3.0 * s * s * s - 0.5 * p.gamma * s * s
        + 0.5 * p.delta * phi * phi * s
}

pub fn f1_plus(phi: f64, psi: f64, p: &ModelParams) -> f64 {
    0.5 * p.c_f * (phi * phi + psi * psi)
}

pub fn f1_minus(phi: f64, psi: f64, p: &ModelParams) -> f64 {
    f1(phi, psi, p) - f1_plus(phi, psi, p)
}

pub fn f1_grad(phi: f64, psi: f64, p: &ModelParams) -> (f64, f64) {
    let s = psi - 0.5;
    (
        -p.alpha * phi + p.delta * phi * s,
        -p.g * s * s - p.gamma * s + 0.5 * p.delta * phi * phi,
    )
}

pub fn f1_grad_plus(phi: f64, psi: f64, p: &ModelParams) -> (f64, f64) {
    (p.c_f * phi, p.c_f * psi)
}

pub fn f1_grad_minus(phi: f64, psi: f64, p: &ModelParams) -> (f64, f64) {
    let s = psi - 0.5;
    (
        -p.alpha * phi + p.delta * phi * s - p.c_f * phi,
        -p.g * s * s - p.gamma * s + 0.5 * p.delta * phi * phi - p.c_f * psi,
    )
}

/// Hessian of `F1⁻` as `[[H11, H12], [H12, H22]]`.
pub fn f1_minus_hessian(phi: f64, psi: f64, p: &ModelParams) -> [[f64; 2]; 2] {
    let s = psi - 0.5;
    let h11 = -p.alpha - p.c_f + p.delta * s;
    let h12 = p.delta * phi;
    let h22 = -p.gamma - 2.0 * p.g * s - p.c_f;
    [[h11, h12], [h12, h22]]
}

/// Energy `E^n` split into its four contributions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyReport {
    pub e_total: f64,
    /// `ε/2 ‖∇φ‖²`
    pub e_grad: f64,
    /// `(F1(φ, ψ), 1)^h`
    pub e_f1: f64,
    /// `-σ (φ, q)^h`
    pub e_cross: f64,
    /// `λ/2 ‖ω²(ψ - 1/2) - q‖_h²`
    pub e_sh: f64,
    /// Guaranteed lower bound for `e_total` over admissible states.
    pub e_min_bound: f64,
}

/// Energy terms with `e_min_bound` left at `-∞`; see [`discrete_energy`].
pub fn energy_terms(
    state: &State,
    mass: &[f64],
    a: &SparseMatrix,
    params: &ModelParams,
) -> Result<EnergyReport> {
    let n = mass.len();
    for len in [state.phi.len(), state.psi.len(), state.q.len(), a.dim()] {
        if len != n {
            return Err(Error::DimensionError { expected: n, got: len });
        }
    }
    let omega2 = params.omega * params.omega;
    let e_grad = 0.5 * params.eps * a.quad_form(&state.phi);
    let mut e_f1 = 0.0;
    let mut cross = 0.0;
    let mut sh = 0.0;
    for j in 0..n {
        let (phi, psi, q, m) = (state.phi[j], state.psi[j], state.q[j], mass[j]);
        e_f1 += m * f1(phi, psi, params);
        cross += m * phi * q;
        let r = omega2 * (psi - 0.5) - q;
        sh += m * r * r;
    }
    let e_cross = -params.sigma * cross;
    let e_sh = 0.5 * params.lambda * sh;
    Ok(EnergyReport {
        e_total: e_grad + e_f1 + e_cross + e_sh,
        e_grad,
        e_f1,
        e_cross,
        e_sh,
        e_min_bound: f64::NEG_INFINITY,
    })
}

/// `E^n` together with the a priori lower bound from [`energy_lower_bound`].
pub fn discrete_energy(
    state: &State,
    mass: &[f64],
    a: &SparseMatrix,
    params: &ModelParams,
) -> Result<EnergyReport> {
    let mut report = energy_terms(state, mass, a, params)?;
    report.e_min_bound = energy_lower_bound(params)?;
    Ok(report)
}

/// Grid spacing of the search for `min_K F1`.
const MIN_SEARCH_RESOLUTION: f64 = 1e-3;

/// Minimum of `F1` over `K` and its location `(value, φ, ψ)`.
///
/// Dense grid search at spacing `1e-3`, then a shrinking pattern search from
/// the best grid point. The search stencil contains the directions of the
/// edges of `K`, so the polish can slide along the boundary.
pub fn min_f1_on_k(params: &ModelParams) -> (f64, f64, f64) {
    let steps = (1.0 / MIN_SEARCH_RESOLUTION).round() as i64;
    let mut best = (f64::INFINITY, 0.0, 0.0);
    for iy in 0..=steps {
        let psi = iy as f64 / steps as f64;
        let half = steps - iy;
        for ix in -half..=half {
            let phi = ix as f64 / steps as f64;
            let v = f1(phi, psi, params);
            if v < best.0 {
                best = (v, phi, psi);
            }
        }
    }

    const DIRS: [(f64, f64); 8] = [
        (1.0, 0.0),
        (-1.0, 0.0),
        (0.0, 1.0),
        (0.0, -1.0),
        (1.0, 1.0),
        (-1.0, -1.0),
        (1.0, -1.0),
        (-1.0, 1.0),
    ];
    let mut step = MIN_SEARCH_RESOLUTION;
    while step > 1e-13 {
        let mut improved = false;
        for (dx, dy) in DIRS {
            let (phi, psi) = (best.1 + step * dx, best.2 + step * dy);
            if !in_k(phi, psi, 0.0) {
                continue;
            }
            let v = f1(phi, psi, params);
            if v < best.0 {
                best = (v, phi, psi);
                improved = true;
            }
        }
        if !improved {
            step *= 0.5;
        }
    }
    best
}

/// `E_min = |Ω| (min_K F1 - 2σ²/λ - λω⁴/4)` with `|Ω| = 1`.
pub fn energy_lower_bound(params: &ModelParams) -> Result<f64> {
    if params.sigma != 0.0 && params.lambda <= 0.0 {
        return Err(Error::InvalidParams(
            "energy lower bound needs lambda > 0 when sigma != 0".to_string(),
        ));
    }
    let (min_f1, _, _) = min_f1_on_k(params);
    let coupling = if params.sigma != 0.0 {
        2.0 * params.sigma * params.sigma / params.lambda
    } else {
        0.0
    };
    Ok(min_f1 - coupling - 0.25 * params.lambda * params.omega.powi(4))
}
