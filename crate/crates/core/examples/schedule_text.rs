//! Parse a hand-written schedule, simulate it and render it back.
//!
//!     cargo run --example schedule_text

use nvdd::engine::{propagate, EngineConfig, NoiseModel};
use nvdd::operators::DensityMatrix9;
use nvdd::schedule::{parse, render};
use nvdd::NvParams;

const TEXT: &str = "\
# Ramsey fringe on the selective MW line
system id=a
laser
mw freq=2626400000Hz rabi=280000Hz phase=0deg flip=90deg target=0,0:-1,0
delay dur=0.000002s
mw freq=2626400000Hz rabi=280000Hz phase=90deg flip=90deg target=0,0:-1,0
measure label=ramsey
";

fn main() -> nvdd::Result<()> {
    let schedule = parse(TEXT).map_err(nvdd::Error::from)?;
    println!("{}", render(&schedule));
    let p = NvParams::default();
    let out = propagate(&schedule, &DensityMatrix9::maximally_mixed(), &p, &NoiseModel::none(), &EngineConfig::default())?;
    for m in &out.measurements {
        println!("{} at {:.3} µs: {:.4}", m.label, m.time * 1e6, m.signal);
    }
    if let Err(e) = parse("system id=a\nlaser\nmw freq=1Hz\n") {
        println!("rejected: {e}");
    }
    Ok(())
}
