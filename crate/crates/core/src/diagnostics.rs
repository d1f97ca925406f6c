//! Per-step metrics and post-processing of snapshots.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::model::EnergyReport;
use crate::solver::{State, StepStats};

/// `Σ_j M_jj Φ_j`
pub fn mass_phi(mass: &[f64], phi: &[f64]) -> f64 {
    assert_eq!(mass.len(), phi.len());
    mass.iter().zip(phi).map(|(m, p)| m * p).sum()
}

/// Smallest slack of the five inequalities defining `K` over all nodes.
/// Negative means some node is outside `K`.
pub fn constraint_violation(phi: &[f64], psi: &[f64]) -> f64 {
    assert_eq!(phi.len(), psi.len());
    phi.iter()
        .zip(psi)
        .map(|(&p, &s)| (1.0 - p).min(1.0 + p).min(1.0 - p - s).min(1.0 + p - s).min(s))
        .fold(f64::INFINITY, f64::min)
}

/// Allowed slack in the discrete energy inequality at level `E^n`.
pub fn stability_tolerance(e_n: f64) -> f64 {
    1e-8 * (1.0 + e_n.abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityCertificate {
    pub passed: bool,
    /// Minimum over `n` of `E^n - E^{n+1} - D^{n+1}`.
    pub worst_margin: f64,
    /// `n` at which the worst margin occurs.
    pub worst_step: usize,
    /// First `n` with `E^{n+1} + D^{n+1} > E^n + tol`.
    pub first_failure: Option<usize>,
}

/// Checks `E^{n+1} + D^{n+1} <= E^n + tol(E^n)` along a trace.
///
/// `energies[n] = E^n` and `dissipation[n]` is the dissipation of the step
/// that produced level `n` (`dissipation[0]` is ignored).
pub fn stability_certificate(energies: &[f64], dissipation: &[f64]) -> Result<StabilityCertificate> {
    if energies.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "need at least 2 energy levels, got {}",
            energies.len()
        )));
    }
    if dissipation.len() != energies.len() {
        return Err(Error::DimensionError {
            expected: energies.len(),
            got: dissipation.len(),
        });
    }
    let mut cert = StabilityCertificate {
        passed: true,
        worst_margin: f64::INFINITY,
        worst_step: 0,
        first_failure: None,
    };
    for n in 0..energies.len() - 1 {
        let margin = energies[n] - energies[n + 1] - dissipation[n + 1];
        if margin < cert.worst_margin {
            cert.worst_margin = margin;
            cert.worst_step = n;
        }
        if margin < -stability_tolerance(energies[n]) && cert.first_failure.is_none() {
            cert.first_failure = Some(n);
            cert.passed = false;
        }
    }
    Ok(cert)
}

/// [`stability_certificate`] over consecutive solver steps.
pub fn certify_steps(stats: &[StepStats]) -> Result<StabilityCertificate> {
    let Some(first) = stats.first() else {
        return Err(Error::InsufficientData("no steps".to_string()));
    };
    let mut energies = vec![first.energy_before];
    let mut dissipation = vec![0.0];
    for s in stats {
        energies.push(s.energy_after);
        dissipation.push(s.dissipation);
    }
    stability_certificate(&energies, &dissipation)
}

/// One line of the per-step time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TimeSeriesRow {
    pub step: usize,
    pub time: f64,
    pub e_total: f64,
    pub e_grad: f64,
    pub e_f1: f64,
    pub e_cross: f64,
    pub e_sh: f64,
    pub dissipation: f64,
    pub mass_phi: f64,
    pub phi_min: f64,
    pub phi_max: f64,
    pub psi_min: f64,
    pub psi_max: f64,
    pub violation: f64,
    pub gs_sweeps: usize,
}

impl TimeSeriesRow {
    pub const HEADER: &'static str = "step,time,e_total,e_grad,e_f1,e_cross,e_sh,dissipation,mass_phi,phi_min,phi_max,psi_min,psi_max,violation,gs_sweeps";

    pub fn new(state: &State, energy: &EnergyReport, dissipation: f64, gs_sweeps: usize, mass: &[f64]) -> Self {
        let (phi_min, phi_max) = min_max(&state.phi);
        let (psi_min, psi_max) = min_max(&state.psi);
        TimeSeriesRow {
            step: state.step,
            time: state.time,
            e_total: energy.e_total,
            e_grad: energy.e_grad,
            e_f1: energy.e_f1,
            e_cross: energy.e_cross,
            e_sh: energy.e_sh,
            dissipation,
            mass_phi: mass_phi(mass, &state.phi),
            phi_min,
            phi_max,
            psi_min,
            psi_max,
            violation: constraint_violation(&state.phi, &state.psi),
            gs_sweeps,
        }
    }

    /// CSV line, reals with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let reals = [
            self.time,
            self.e_total,
            self.e_grad,
            self.e_f1,
            self.e_cross,
            self.e_sh,
            self.dissipation,
            self.mass_phi,
            self.phi_min,
            self.phi_max,
            self.psi_min,
            self.psi_max,
            self.violation,
        ];
        let mut line = self.step.to_string();
        for v in reals {
            line.push_str(&format!(",{v:.16e}"));
        }
        line.push_str(&format!(",{}", self.gs_sweeps));
        line
    }
}

fn min_max(v: &[f64]) -> (f64, f64) {
    v.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)))
}

/// Wavenumber (radians per unit length) carrying the most spectral power.
///
/// Plain 2D DFT of the nodal grid values minus their mean, power summed over
/// rings of width one frequency index; returns the centre of the strongest
/// ring other than the zero mode.
pub fn dominant_wavenumber(field: &[f64], mesh: &Mesh) -> Result<f64> {
    dominant_wavenumber_on_grid(field, mesh.nodes_per_side(), mesh.h)
}

/// [`dominant_wavenumber`] for a row-major `side × side` grid with spacing `h`.
pub fn dominant_wavenumber_on_grid(field: &[f64], side: usize, h: f64) -> Result<f64> {
    if field.len() != side * side {
        return Err(Error::DimensionError {
            expected: side * side,
            got: field.len(),
        });
    }
    let (lo, hi) = min_max(field);
    if !(hi > lo) {
        return Err(Error::NoDominantMode);
    }
    let mean = field.iter().sum::<f64>() / field.len() as f64;
    let mut data: Vec<Complex<f64>> = field.iter().map(|&v| Complex::new(v - mean, 0.0)).collect();

    let fft = FftPlanner::new().plan_fft_forward(side);
    for row in data.chunks_exact_mut(side) {
        fft.process(row);
    }
    let mut column = vec![Complex::new(0.0, 0.0); side];
    for ix in 0..side {
        for iy in 0..side {
            column[iy] = data[iy * side + ix];
        }
        fft.process(&mut column);
        for iy in 0..side {
            data[iy * side + ix] = column[iy];
        }
    }

    let signed = |k: usize| -> f64 {
        if k <= side / 2 {
            k as f64
        } else {
            k as f64 - side as f64
        }
    };
    let n_bins = (side as f64 * std::f64::consts::FRAC_1_SQRT_2).ceil() as usize + 2;
    let mut power = vec![0.0; n_bins];
    for iy in 0..side {
        for ix in 0..side {
            let r = signed(ix).hypot(signed(iy));
            let bin = r.round() as usize;
            power[bin] += data[iy * side + ix].norm_sqr();
        }
    }
    let (best, best_power) = power
        .iter()
        .enumerate()
        .skip(1)
        .fold((0, 0.0), |acc, (b, &p)| if p > acc.1 { (b, p) } else { acc });
    if best == 0 || !(best_power > 0.0) {
        return Err(Error::NoDominantMode);
    }
    let window = side as f64 * h;
    Ok(2.0 * std::f64::consts::PI * best as f64 / window)
}

/// Frequency spacing of [`dominant_wavenumber`] bins on a mesh.
pub fn wavenumber_bin_width(mesh: &Mesh) -> f64 {
    2.0 * std::f64::consts::PI / (mesh.nodes_per_side() as f64 * mesh.h)
}
