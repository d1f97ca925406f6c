//! Growth of Swift-Hohenberg patterns from noise and the dominant wavenumber
//! of psi for two values of omega.

use chsh::diagnostics::dominant_wavenumber;
use chsh::run::Simulation;
use chsh::{ExperimentConfig, Preset};

fn main() -> chsh::Result<()> {
    for omega in [50.0, 100.0] {
        let mut cfg = ExperimentConfig::new(Preset::Sh);
        cfg.mesh_n = 64;
        cfg.tau = 1e-4;
        cfg.seed = 1;
        cfg.overrides.omega = Some(omega);
        let mut sim = Simulation::from_config(&cfg)?;
        for _ in 0..400 {
            sim.step()?;
        }
        let k = dominant_wavenumber(&sim.state.psi, &sim.mesh)?;
        println!("omega = {omega}: dominant wavenumber {k:.1} after t = {:.2}", sim.state.time);
    }
    Ok(())
}
