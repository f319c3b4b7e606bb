//! Simulate an unprotected sweep under T2 = 34 µs dephasing and recover T2
//! with every decay model.
//!
//!     cargo run --release --example fit_decay

use std::f64::consts::PI;

use nvdd::engine::{EngineConfig, NoiseModel};
use nvdd::experiments::{fit_decay, linspace, theta_sweep, DecayModel, FitOptions, Protocol};
use nvdd::{NvParams, System};

fn main() -> nvdd::Result<()> {
    let p = NvParams::default();
    let noise = NoiseModel::lindblad(None, Some(34e-6));
    let table = theta_sweep(&Protocol::unprotected(), System::A, &noise, &linspace(0.0, 8.0 * PI, 33), &p, &EngineConfig::default())?;
    for model in DecayModel::ALL {
        let fit = fit_decay(&table.rows, model, &FitOptions::default())?;
        let params: Vec<String> = fit.parameters.iter().map(|q| format!("{} = {:.4e}", q.name, q.value)).collect();
        println!("{:<9} {}  (residual {:.2e}, {} iterations)", model.name(), params.join(", "), fit.residual_norm, fit.iterations);
    }
    Ok(())
}
