//! Electron coherence under quasi-static and Markovian dephasing, left free
//! or refocused by an XY pair of hard π pulses.
//!
//!     cargo run --release --example dd_protection

use std::f64::consts::PI;

use nvdd::engine::{propagate, EngineConfig, NoiseModel};
use nvdd::hamiltonian::{mw_transition, Channel, Transition};
use nvdd::operators::{DensityMatrix9, LevelIndex};
use nvdd::schedule::{Event, PulseEvent, PulseLength, Schedule};
use nvdd::{NvParams, System};

fn pulse(rabi: f64, flip: f64, phase: f64, p: &NvParams) -> PulseEvent {
    PulseEvent {
        channel: Channel::Mw,
        freq: mw_transition(p),
        phase,
        rabi,
        length: PulseLength::Flip(flip),
        target: Transition::mw_main(),
        instantaneous: false,
    }
}

fn coherence(total: f64, protected: bool, noise: &NoiseModel, p: &NvParams) -> nvdd::Result<f64> {
    let mut events = vec![Event::LaserInit, Event::Pulse(pulse(p.rabi_mw_selective, 90.0, 0.0, p))];
    let prepared = events.len();
    if protected {
        let (x, y) = (pulse(p.rabi_mw_hard, 180.0, 0.0, p), pulse(p.rabi_mw_hard, 180.0, 90.0, p));
        let free = total - x.duration() - y.duration();
        events.extend([
            Event::Delay { duration: free / 4.0 },
            Event::Pulse(x),
            Event::Delay { duration: free / 2.0 },
            Event::Pulse(y),
            Event::Delay { duration: free / 4.0 },
        ]);
    } else {
        events.push(Event::Delay { duration: total });
    }
    let cfg = EngineConfig { n_traj: 200, seed: 1, ..EngineConfig::default() };
    let (i, j) = (LevelIndex::new(0, 0)?.flat(), LevelIndex::new(-1, 0)?.flat());
    let run = |events: Vec<Event>, noise: &NoiseModel| -> nvdd::Result<f64> {
        let s = Schedule::from_events(Some(System::A), events)?;
        Ok(propagate(&s, &DensityMatrix9::maximally_mixed(), p, noise, &cfg)?.final_state.matrix()[(i, j)].norm())
    };
    let start = run(events[..prepared].to_vec(), &NoiseModel::none())?;
    Ok(run(events, noise)? / start)
}

fn main() -> nvdd::Result<()> {
    let p = NvParams::default();
    let sigma = 6.62e3;
    let static_noise = NoiseModel::static_gaussian(sigma);
    let markov = NoiseModel::lindblad(None, Some(34e-6));
    println!("t (µs)  static free  static XY2  gaussian  lindblad free  lindblad XY2");
    for t_us in [10.0, 34.0, 68.0, 170.0, 340.0] {
        let t = t_us * 1e-6;
        let envelope = (-(2.0 * PI * sigma * t).powi(2) / 2.0).exp();
        println!(
            "{t_us:>6.0} {:>12.4} {:>11.4} {envelope:>9.4} {:>14.4} {:>13.4}",
            coherence(t, false, &static_noise, &p)?,
            coherence(t, true, &static_noise, &p)?,
            coherence(t, false, &markov, &p)?,
            coherence(t, true, &markov, &p)?,
        );
    }
    Ok(())
}
