//! Compile a CR(θ) gate with and without DD protection, print the schedule
//! text and score the compiled propagator against the ideal unitary.
//!
//!     cargo run --example compile_gate

use std::f64::consts::PI;

use nvdd::compiler::{compile_protected, compile_unprotected, ControlCondition, CrGateSpec, DdCarrier, DdScheme, PulseMode};
use nvdd::engine::EngineConfig;
use nvdd::experiments::compare_gate;
use nvdd::schedule::render;
use nvdd::{NvParams, System};

fn main() -> nvdd::Result<()> {
    let p = NvParams::default();
    let spec = CrGateSpec::new(System::A, ControlCondition::Zero, PI);

    println!("# unprotected\n{}", render(&compile_unprotected(&spec, &p)?));
    let dd = DdScheme::xy(2, PulseMode::Finite { rabi: p.rabi_mw_hard });
    println!("# protected, 2 finite pulses\n{}", render(&compile_protected(&spec, &dd, &p)?));

    let cfg = EngineConfig::default();
    for (name, scheme) in [
        ("ideal XY2", DdScheme::xy(2, PulseMode::Instantaneous)),
        ("11 MHz XY2, centred carrier", dd.clone()),
        ("11 MHz XY2, MW-line carrier", DdScheme { carrier: DdCarrier::MwLine, ..dd.clone() }),
        ("11 MHz XY4, centred carrier", DdScheme::xy(4, PulseMode::Finite { rabi: p.rabi_mw_hard })),
    ] {
        let cmp = compare_gate(&spec, &scheme, &p, &cfg)?;
        println!("{name:<30} F = {:.4}  leakage = {:.1e}", cmp.fidelity, cmp.leakage);
    }
    Ok(())
}
