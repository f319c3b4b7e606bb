//! Sample classical detuning traces and compare their statistics with the
//! stationary variance.
//!
//!     cargo run --example noise_traces

use nvdd::engine::{sample_noise, ClassicalNoise, NoiseModel};

fn main() -> nvdd::Result<()> {
    for spec in ["static:sigma=6.62kHz", "ou:sigma=5kHz,tau=10us"] {
        let model: NoiseModel = spec.parse()?;
        let classical: ClassicalNoise = model.classical.expect("classical term");
        let traces: Vec<Vec<f64>> = (0..400).map(|seed| sample_noise(classical, 50e-6, 1e-6, seed)).collect::<nvdd::Result<_>>()?;
        let last: Vec<f64> = traces.iter().map(|t| *t.last().unwrap()).collect();
        let var = last.iter().map(|x| x * x).sum::<f64>() / last.len() as f64;
        let lag: f64 = traces.iter().map(|t| t[0] * t[10]).sum::<f64>() / traces.len() as f64;
        println!(
            "{spec}: sample σ = {:.2} kHz (σ = {:.2} kHz), correlation at 10 µs = {:.2}",
            var.sqrt() / 1e3,
            classical.sigma() / 1e3,
            lag / var
        );
    }
    Ok(())
}
