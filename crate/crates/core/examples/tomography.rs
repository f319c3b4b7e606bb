//! Five-setting electron tomography after CR(θ) for θ = 0, 2π and 4π, once
//! noiseless and once with T1 and T2 relaxation.
//!
//!     cargo run --release --example tomography

use std::f64::consts::PI;

use nvdd::compiler::{DdScheme, PulseMode};
use nvdd::engine::{EngineConfig, NoiseModel};
use nvdd::experiments::{tomography_run, Protocol};
use nvdd::{NvParams, System};

fn main() -> nvdd::Result<()> {
    let p = NvParams::default();
    let cfg = EngineConfig::default();
    let protocol = Protocol::protected(DdScheme::xy(2, PulseMode::Instantaneous));
    for (name, noise) in [("noiseless", NoiseModel::none()), ("T1 = 3.5 ms, T2 = 4 ms", NoiseModel::lindblad(Some(3.5e-3), Some(4e-3)))] {
        println!("{name}");
        for theta in [0.0, 2.0 * PI, 4.0 * PI] {
            let r = tomography_run(theta, &protocol, System::A, &noise, &p, &cfg)?;
            let [x, y, z] = r.bloch();
            println!("  θ = {:.0}π  bloch = ({x:+.3}, {y:+.3}, {z:+.3})  F = {:.4}", theta / PI, r.fidelity);
        }
    }
    Ok(())
}
