//! Experiment files, parameter presets and seeded initial data.
//!
//! Experiment files are plain `key = value` lines; `#` starts a comment.
//! The preset is applied first, whatever its position in the file, and every
//! other key overrides it:
//!
//! ```text
//! preset = CHSH
//! gamma = 500
//! mesh_n = 128
//! n_steps = 10000
//! snapshot_steps = 0, 1000, 10000
//! formats = vtk, pgm
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::mesh::{assemble_lumped_mass, Mesh};
use crate::model::{cf_default, ModelParams};
use crate::solver::IterationSettings;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Preset {
    /// Cahn–Hilliard: `λ = g = γ = δ = σ = 0`, `α = 100`.
    Ch,
    /// Swift–Hohenberg: `α = δ = σ = 0`, `ω = 100`, `g = 0`, `γ = 10`.
    Sh,
    /// Coupled: `ω = 100`, `δ = σ = 0`, `α = 100`, `g = 0`, `γ = 1000`.
    Chsh,
    /// Base constants only; all couplings zero.
    Custom,
}

impl FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_uppercase().as_str() {
            "CH" => Ok(Preset::Ch),
            "SH" => Ok(Preset::Sh),
            "CHSH" => Ok(Preset::Chsh),
            "CUSTOM" => Ok(Preset::Custom),
            _ => Err(format!("unknown preset `{s}` (expected CH, SH, CHSH or custom)")),
        }
    }
}

impl fmt::Display for Preset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Preset::Ch => "CH",
            Preset::Sh => "SH",
            Preset::Chsh => "CHSH",
            Preset::Custom => "custom",
        })
    }
}

/// Default time step.
pub const DEFAULT_TAU: f64 = 1e-6;

impl Preset {
    /// Preset parameters with `C_F` from [`cf_default`] and `τ = 1e-6`.
    pub fn params(self) -> ModelParams {
        let base = ModelParams {
            eps: 1.0 / (16.0 * std::f64::consts::PI),
            lambda: 1e-5,
            omega: 100.0,
            sigma: 0.0,
            alpha: 0.0,
            g: 0.0,
            gamma: 0.0,
            delta: 0.0,
            c_f: 0.0,
            tau: DEFAULT_TAU,
        };
        let p = match self {
            Preset::Ch => ModelParams {
                lambda: 0.0,
                alpha: 100.0,
                ..base
            },
            Preset::Sh => ModelParams { gamma: 10.0, ..base },
            Preset::Chsh => ModelParams {
                alpha: 100.0,
                gamma: 1000.0,
                ..base
            },
            Preset::Custom => base,
        };
        p.with_default_cf()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum OutputFormat {
    /// Legacy ASCII VTK unstructured grid.
    Vtk,
    /// 8-bit grayscale images of φ and ψ.
    Pgm,
    /// Raw nodal values.
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "vtk" => Ok(OutputFormat::Vtk),
            "pgm" => Ok(OutputFormat::Pgm),
            "csv" => Ok(OutputFormat::Csv),
            _ => Err(format!("unknown output format `{s}` (expected vtk, pgm or csv)")),
        }
    }
}

/// Explicit per-parameter overrides on top of a preset.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ParamOverrides {
    pub eps: Option<f64>,
    pub lambda: Option<f64>,
    pub omega: Option<f64>,
    pub sigma: Option<f64>,
    pub alpha: Option<f64>,
    pub g: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub c_f: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub preset: Preset,
    pub mesh_n: usize,
    pub tau: f64,
    pub n_steps: usize,
    /// Steps at which snapshots are written; step 0 is the initial data.
    pub snapshot_steps: Vec<usize>,
    pub seed: u64,
    pub overrides: ParamOverrides,
    pub out_dir: PathBuf,
    pub formats: Vec<OutputFormat>,
    pub settings: IterationSettings,
    /// Stop early once `|E^{n+1} - E^n| < steady_tol · |E^{n+1}|`.
    pub steady_tol: Option<f64>,
}

impl ExperimentConfig {
    /// Preset defaults: 64 cells per side, `τ = 1e-6`, 100 steps, seed 0,
    /// CSV snapshot of the last step into `./output`.
    pub fn new(preset: Preset) -> Self {
        ExperimentConfig {
            preset,
            mesh_n: 64,
            tau: DEFAULT_TAU,
            n_steps: 100,
            snapshot_steps: vec![100],
            seed: 0,
            overrides: ParamOverrides::default(),
            out_dir: PathBuf::from("output"),
            formats: vec![OutputFormat::Csv],
            settings: IterationSettings::default(),
            steady_tol: None,
        }
    }

    /// Effective parameters: preset, then overrides, then `C_F` from
    /// [`cf_default`] unless set explicitly.
    pub fn params(&self) -> ModelParams {
        let o = &self.overrides;
        let base = self.preset.params();
        let mut p = ModelParams {
            eps: o.eps.unwrap_or(base.eps),
            lambda: o.lambda.unwrap_or(base.lambda),
            omega: o.omega.unwrap_or(base.omega),
            sigma: o.sigma.unwrap_or(base.sigma),
            alpha: o.alpha.unwrap_or(base.alpha),
            g: o.g.unwrap_or(base.g),
            gamma: o.gamma.unwrap_or(base.gamma),
            delta: o.delta.unwrap_or(base.delta),
            c_f: 0.0,
            tau: self.tau,
        };
        p.c_f = o.c_f.unwrap_or_else(|| cf_default(p.alpha, p.g, p.gamma, p.delta));
        p
    }

    pub fn validate(&self) -> Result<()> {
        if self.mesh_n < 2 {
            return Err(Error::InvalidMesh(format!(
                "mesh_n must be >= 2, got {}",
                self.mesh_n
            )));
        }
        self.params().validate()?;
        self.settings.validate()?;
        if let Some(t) = self.steady_tol {
            if !(t > 0.0) {
                return Err(Error::InvalidParams(format!("steady_tol must be > 0, got {t}")));
            }
        }
        Ok(())
    }
}

const KEYS: &[&str] = &[
    "preset",
    "mesh_n",
    "tau",
    "n_steps",
    "snapshot_steps",
    "seed",
    "eps",
    "lambda",
    "omega",
    "sigma",
    "alpha",
    "g",
    "gamma",
    "delta",
    "c_f",
    "out_dir",
    "formats",
    "tol_gs",
    "max_sweeps",
    "tol_residual",
    "tol_mass",
    "relaxation",
    "steady_tol",
];

pub fn parse_config(path: &Path) -> Result<ExperimentConfig> {
    if !path.is_file() {
        return Err(Error::MissingFile(path.to_path_buf()));
    }
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config_str(&text)
}

pub fn parse_config_str(text: &str) -> Result<ExperimentConfig> {
    let mut entries = Vec::new();
    let mut seen = HashSet::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::ParseError {
                line: line_no,
                message: format!("expected `key = value`, got `{line}`"),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if !KEYS.contains(&key) {
            return Err(Error::UnknownKey(key.to_string()));
        }
        if !seen.insert(key) {
            return Err(Error::ParseError {
                line: line_no,
                message: format!("duplicate key `{key}`"),
            });
        }
        entries.push((line_no, key, value));
    }

    let preset = match entries.iter().find(|(_, k, _)| *k == "preset") {
        Some((line, _, v)) => v
            .parse::<Preset>()
            .map_err(|message| Error::ParseError { line: *line, message })?,
        None => Preset::Custom,
    };
    let mut cfg = ExperimentConfig::new(preset);
    let mut snapshots_given = false;

    for &(line, key, value) in &entries {
        let err = |message: String| Error::ParseError { line, message };
        let real = |lo: Bound| -> Result<f64> {
            let v: f64 = value
                .parse()
                .map_err(|_| err(format!("`{key}` expects a number, got `{value}`")))?;
            if !v.is_finite() || !lo.admits(v) {
                return Err(err(format!("`{key}` must be {lo}, got {v}")));
            }
            Ok(v)
        };
        let int = || -> Result<usize> {
            value
                .parse()
                .map_err(|_| err(format!("`{key}` expects a non-negative integer, got `{value}`")))
        };
        match key {
            "preset" => {}
            "mesh_n" => {
                cfg.mesh_n = int()?;
                if cfg.mesh_n < 2 {
                    return Err(err(format!("`mesh_n` must be >= 2, got {}", cfg.mesh_n)));
                }
            }
            "tau" => cfg.tau = real(Bound::Positive)?,
            "n_steps" => cfg.n_steps = int()?,
            "snapshot_steps" => {
                snapshots_given = true;
                cfg.snapshot_steps = list(value)
                    .map(|s| s.parse::<usize>().map_err(|_| err(format!("bad step `{s}`"))))
                    .collect::<Result<_>>()?;
            }
            "seed" => {
                cfg.seed = value
                    .parse()
                    .map_err(|_| err(format!("`seed` expects an unsigned 64-bit integer, got `{value}`")))?
            }
            "eps" => cfg.overrides.eps = Some(real(Bound::Positive)?),
            "lambda" => cfg.overrides.lambda = Some(real(Bound::NonNegative)?),
            "omega" => cfg.overrides.omega = Some(real(Bound::Any)?),
            "sigma" => cfg.overrides.sigma = Some(real(Bound::Any)?),
            "alpha" => cfg.overrides.alpha = Some(real(Bound::NonNegative)?),
            "g" => cfg.overrides.g = Some(real(Bound::Any)?),
            "gamma" => cfg.overrides.gamma = Some(real(Bound::NonNegative)?),
            "delta" => cfg.overrides.delta = Some(real(Bound::Any)?),
            "c_f" => cfg.overrides.c_f = Some(real(Bound::NonNegative)?),
            "out_dir" => cfg.out_dir = PathBuf::from(value),
            "formats" => {
                cfg.formats = list(value)
                    .map(|s| s.parse::<OutputFormat>().map_err(err))
                    .collect::<Result<_>>()?;
            }
            "tol_gs" => cfg.settings.tol_gs = real(Bound::Positive)?,
            "max_sweeps" => {
                cfg.settings.max_sweeps = int()?;
                if cfg.settings.max_sweeps == 0 {
                    return Err(err("`max_sweeps` must be >= 1".to_string()));
                }
            }
            "tol_residual" => cfg.settings.tol_residual = real(Bound::Positive)?,
            "tol_mass" => cfg.settings.tol_mass = real(Bound::Positive)?,
            "relaxation" => cfg.settings.relaxation = real(Bound::Positive)?,
            "steady_tol" => cfg.steady_tol = Some(real(Bound::Positive)?),
            _ => unreachable!("key list checked above"),
        }
    }
    if !snapshots_given {
        cfg.snapshot_steps = vec![cfg.n_steps];
    }
    cfg.validate()?;
    Ok(cfg)
}

fn list(value: &str) -> impl Iterator<Item = &str> {
    value.split(',').map(str::trim).filter(|s| !s.is_empty())
}

#[derive(Debug, Clone, Copy)]
enum Bound {
    Any,
    Positive,
    NonNegative,
}

impl Bound {
    fn admits(self, v: f64) -> bool {
        match self {
            Bound::Any => true,
            Bound::Positive => v > 0.0,
            Bound::NonNegative => v >= 0.0,
        }
    }
}

impl fmt::Display for Bound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Bound::Any => "finite",
            Bound::Positive => "> 0",
            Bound::NonNegative => ">= 0",
        })
    }
}

/// Amplitude of the random perturbation of `φ⁰` (and of `ψ⁰` around 1/2 for SH).
pub const INITIAL_AMPLITUDE: f64 = 0.01;

/// Seeded initial `(Φ⁰, Ψ⁰)` for the configured preset.
///
/// - CH: `Φ⁰` uniform in `[-0.01, 0.01]` shifted to zero lumped mass, `Ψ⁰ = 0`.
/// - SH: `Φ⁰ = 0`, `Ψ⁰` uniform in `[0.49, 0.51]`.
/// - CHSH and custom: `Φ⁰` as for CH, `Ψ⁰ = (1 - |Φ⁰|) / 2`.
pub fn generate_initial_data(config: &ExperimentConfig, mesh: &Mesh) -> (Vec<f64>, Vec<f64>) {
    let n = mesh.n_nodes();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let zero_mean_phi = |rng: &mut ChaCha8Rng| {
        let mass = assemble_lumped_mass(mesh);
        let mut phi: Vec<f64> = (0..n)
            .map(|_| rng.random_range(-INITIAL_AMPLITUDE..=INITIAL_AMPLITUDE))
            .collect();
        let total: f64 = mass.iter().sum();
        let mean = mass.iter().zip(&phi).map(|(m, p)| m * p).sum::<f64>() / total;
        phi.iter_mut().for_each(|p| *p -= mean);
        phi
    };
    match config.preset {
        Preset::Ch => (zero_mean_phi(&mut rng), vec![0.0; n]),
        Preset::Sh => {
            let psi = (0..n)
                .map(|_| rng.random_range(0.5 - INITIAL_AMPLITUDE..=0.5 + INITIAL_AMPLITUDE))
                .collect();
            (vec![0.0; n], psi)
        }
        Preset::Chsh | Preset::Custom => {
            let phi = zero_mean_phi(&mut rng);
            let psi = phi.iter().map(|p| 0.5 * (1.0 - p.abs())).collect();
            (phi, psi)
        }
    }
}
