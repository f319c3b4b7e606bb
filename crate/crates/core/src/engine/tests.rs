use super::*;
use crate::hamiltonian::{mw_transition, Channel, NuclearLine, Transition};
use crate::operators::{trace_distance, unitarity_defect, LevelIndex, C64};
use crate::schedule::{PulseLength, VirtualZ};

fn params() -> NvParams {
    NvParams::default()
}

fn level(ms: i8, mi: i8) -> LevelIndex {
    LevelIndex { ms, mi }
}

fn rf_pulse(line: NuclearLine, length: PulseLength) -> PulseEvent {
    let p = params();
    let target = line.transition(System::A);
    PulseEvent {
        channel: Channel::Rf,
        freq: target.frequency(&p),
        phase: 0.0,
        rabi: p.nuclear_rabi(System::A, line),
        length,
        target,
        instantaneous: false,
    }
}

fn mw_pulse(rabi: f64, flip: f64, phase: f64, instantaneous: bool) -> PulseEvent {
    PulseEvent {
        channel: Channel::Mw,
        freq: mw_transition(&params()),
        phase,
        rabi,
        length: PulseLength::Flip(flip),
        target: Transition::mw_main(),
        instantaneous,
    }
}

fn run(events: Vec<Event>, rho0: &DensityMatrix9, noise: &NoiseModel, config: &EngineConfig) -> SimResult {
    let schedule = Schedule::from_events(Some(System::A), events).unwrap();
    propagate(&schedule, rho0, &params(), noise, config).unwrap()
}

fn noiseless(events: Vec<Event>, rho0: &DensityMatrix9) -> DensityMatrix9 {
    run(events, rho0, &NoiseModel::none(), &EngineConfig::default()).final_state
}

/// Two-level Rabi oracle: f²/(f²+Δ²)·sin²(π√(f²+Δ²)t).
fn rabi_transfer(f: f64, delta: f64, t: f64) -> f64 {
    let w = (f * f + delta * delta).sqrt();
    f * f / (w * w) * (std::f64::consts::PI * w * t).sin().powi(2)
}

#[test]
fn empty_schedule_leaves_state() {
    let rho = DensityMatrix9::pure_level(level(0, 1));
    let out = run(vec![], &rho, &NoiseModel::none(), &EngineConfig::default());
    assert!(out.measurements.is_empty());
    assert!(trace_distance(out.final_state.matrix(), rho.matrix()) < 1e-15);
}

#[test]
fn laser_from_mixed_state() {
    let out = noiseless(vec![Event::LaserInit], &DensityMatrix9::maximally_mixed());
    for l in LevelIndex::all() {
        let expected = if l.ms == 0 { 1.0 / 3.0 } else { 0.0 };
        assert!((out.population(l) - expected).abs() < 1e-15);
    }
    assert!(crate::operators::hermiticity_defect(out.matrix()) < 1e-15);
}

#[test]
fn resonant_rf_pi_pulse_inverts() {
    let f = params().nuclear_rabi(System::A, NuclearLine::Nu1);
    let pulse = rf_pulse(NuclearLine::Nu1, PulseLength::Duration(1.0 / (2.0 * f)));
    let out = noiseless(vec![Event::Pulse(pulse)], &DensityMatrix9::pure_level(level(0, 0)));
    assert!(out.population(level(0, -1)) >= 1.0 - 1e-6);
}

#[test]
fn off_resonant_rf_is_suppressed() {
    let f = params().nuclear_rabi(System::A, NuclearLine::Nu1);
    let pulse = rf_pulse(NuclearLine::Nu1, PulseLength::Duration(1.0 / (2.0 * f)));
    let bound = (f / 2.16e6).powi(2);
    let rho = DensityMatrix9::pure_level(level(-1, 0));
    let out = noiseless(vec![Event::Pulse(pulse.clone())], &rho);
    assert!(out.population(level(-1, -1)) <= bound);
    // with the ν2 coupling kept, the transfer follows the Rabi formula
    let config = EngineConfig { rwa_cutoff: Some(5e6), ..EngineConfig::default() };
    let out = run(vec![Event::Pulse(pulse)], &rho, &NoiseModel::none(), &config).final_state;
    let transfer = out.population(level(-1, -1));
    let oracle = rabi_transfer(f, 2.16e6, 1.0 / (2.0 * f));
    assert!(transfer <= bound);
    assert!((transfer - oracle).abs() < 1e-9, "{transfer} vs {oracle}");
}

#[test]
fn selective_mw_half_pi() {
    let pulse = mw_pulse(0.28e6, 90.0, 0.0, false);
    let t = pulse.duration();
    let out = noiseless(vec![Event::Pulse(pulse.clone())], &DensityMatrix9::pure_level(level(0, 0)));
    assert!((out.population(level(-1, 0)) - 0.5).abs() < 0.01);
    for mi in [-1, 1] {
        let out = noiseless(vec![Event::Pulse(pulse.clone())], &DensityMatrix9::pure_level(level(0, mi)));
        let change = out.population(level(-1, mi));
        assert!(change <= 0.03, "mi={mi}: {change}");
        assert!((change - rabi_transfer(0.28e6, 2.16e6, t)).abs() < 2e-3);
    }
}

#[test]
fn hard_finite_pi_inverts_all_lines() {
    let pulse = mw_pulse(11e6, 180.0, 0.0, false);
    for mi in [-1, 0, 1] {
        let out = noiseless(vec![Event::Pulse(pulse.clone())], &DensityMatrix9::pure_level(level(0, mi)));
        assert!(out.population(level(-1, mi)) >= 0.95, "mi={mi}");
    }
}

#[test]
fn ideal_pulses_follow_their_rabi_selectivity() {
    for mi in [-1, 0, 1] {
        let rho = DensityMatrix9::pure_level(level(0, mi));
        let hard = noiseless(vec![Event::Pulse(mw_pulse(11e6, 180.0, 0.0, true))], &rho);
        assert!((hard.population(level(-1, mi)) - 1.0).abs() < 1e-12);
        let soft = noiseless(vec![Event::Pulse(mw_pulse(0.28e6, 180.0, 0.0, true))], &rho);
        let expected = if mi == 0 { 1.0 } else { 0.0 };
        assert!((soft.population(level(-1, mi)) - expected).abs() < 1e-12);
    }
}

#[test]
fn target_beyond_cutoff_is_a_config_error() {
    let mut pulse = mw_pulse(0.28e6, 90.0, 0.0, false);
    pulse.freq += 20e6;
    let schedule = Schedule::from_events(None, vec![Event::Pulse(pulse)]).unwrap();
    let err = propagate(&schedule, &DensityMatrix9::maximally_mixed(), &params(), &NoiseModel::none(), &EngineConfig::default());
    assert!(matches!(err, Err(Error::Config(_))));
}

fn split(pulse: &PulseEvent) -> [PulseEvent; 2] {
    let d = pulse.duration();
    let mut half = pulse.clone();
    half.length = PulseLength::Duration(d / 2.0);
    [half.clone(), half]
}

#[test]
fn pulse_splitting_is_phase_coherent() {
    let rho0 = {
        let amps: Vec<C64> = (0..DIM).map(|k| C64::new(1.0 + k as f64, 0.5 * k as f64 - 1.0)).collect();
        let norm = amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        DensityMatrix9::from_pure(&amps.iter().map(|a| a / norm).collect::<Vec<_>>()).unwrap()
    };
    let mut detuned = rf_pulse(NuclearLine::Nu2, PulseLength::Duration(37e-6));
    detuned.freq += 1.3e3;
    detuned.phase = 33.0;
    let pulses = [
        mw_pulse(0.28e6, 90.0, 0.0, false),
        mw_pulse(11e6, 180.0, 90.0, false),
        rf_pulse(NuclearLine::Nu1, PulseLength::Duration(50e-6)),
        detuned,
    ];
    for pulse in pulses {
        for lead in [0.0, 13.7e-6, 120e-6] {
            let prefix = vec![Event::Delay { duration: lead }];
            let whole = [prefix.clone(), vec![Event::Pulse(pulse.clone())]].concat();
            let halves = [prefix, split(&pulse).into_iter().map(Event::Pulse).collect()].concat();
            let a = noiseless(whole, &rho0);
            let b = noiseless(halves, &rho0);
            let d = trace_distance(a.matrix(), b.matrix());
            assert!(d <= 1e-10, "split changed state by {d} ({:?} at {lead})", pulse.channel);
        }
    }
}

#[test]
fn noiseless_evolution_is_unitary() {
    let p = params();
    let config = EngineConfig::default();
    let pulses = [mw_pulse(0.28e6, 90.0, 0.0, false), mw_pulse(11e6, 180.0, 90.0, false), rf_pulse(NuclearLine::Nu2, PulseLength::Duration(80e-6))];
    for (k, pulse) in pulses.iter().enumerate() {
        let u = pulse_propagator(pulse, 10e-6 * k as f64, 0.0, &p, &config).unwrap();
        assert!(unitarity_defect(u.matrix()) < 1e-12);
    }
    let events = vec![
        Event::LaserInit,
        Event::Pulse(pulses[0].clone()),
        Event::Pulse(pulses[2].clone()),
        Event::Delay { duration: 5e-6 },
        Event::Pulse(pulses[1].clone()),
        Event::Measure { label: "m".into() },
    ];
    let out = noiseless(events, &DensityMatrix9::maximally_mixed());
    assert!((out.trace().re - 1.0).abs() < 1e-10);
    assert!(crate::operators::hermiticity_defect(out.matrix()) < 1e-10);
}

#[test]
fn lindblad_preserves_trace_through_pulses() {
    let events = vec![
        Event::LaserInit,
        Event::Pulse(mw_pulse(0.28e6, 90.0, 0.0, false)),
        Event::Pulse(rf_pulse(NuclearLine::Nu1, PulseLength::Duration(60e-6))),
        Event::Pulse(mw_pulse(11e6, 180.0, 0.0, false)),
        Event::Delay { duration: 40e-6 },
        Event::Measure { label: "m".into() },
    ];
    let out = run(events, &DensityMatrix9::maximally_mixed(), &NoiseModel::lindblad(Some(3.5e-3), Some(34e-6)), &EngineConfig::default());
    assert!((out.final_state.trace().re - 1.0).abs() < 1e-8);
    assert!((0.0..=1.0).contains(&out.measurements[0].signal));
}

fn coherent_input() -> DensityMatrix9 {
    noiseless(vec![Event::LaserInit, Event::Pulse(mw_pulse(0.28e6, 90.0, 0.0, true))], &DensityMatrix9::maximally_mixed())
}

fn mw_coherence(rho: &DensityMatrix9) -> f64 {
    rho.matrix()[(level(0, 0).flat(), level(-1, 0).flat())].norm()
}

#[test]
fn dephasing_decay_matches_t2() {
    let t2 = 34e-6;
    let rho = coherent_input();
    let out = run(vec![Event::Delay { duration: t2 }], &rho, &NoiseModel::lindblad(None, Some(t2)), &EngineConfig::default());
    let ratio = mw_coherence(&out.final_state) / mw_coherence(&rho);
    assert!((ratio - (-1.0f64).exp()).abs() < 1e-4);
}

#[test]
fn t1_relaxes_electron_to_one_third() {
    let t1 = 3.5e-3;
    let rho = noiseless(vec![Event::LaserInit], &DensityMatrix9::maximally_mixed());
    let out = run(vec![Event::Delay { duration: 10.0 * t1 }], &rho, &NoiseModel::lindblad(Some(t1), None), &EngineConfig::default());
    let p0: f64 = [-1, 0, 1].iter().map(|&mi| out.final_state.population(level(0, mi))).sum();
    assert!((p0 - 1.0 / 3.0).abs() < 1e-3);
}

#[test]
fn static_noise_ensemble_dephases_gaussian() {
    let sigma = 6.62e3;
    let t = 34e-6;
    let rho = coherent_input();
    let config = EngineConfig { n_traj: 2000, seed: 7, ..EngineConfig::default() };
    let out = run(vec![Event::Delay { duration: t }], &rho, &NoiseModel::static_gaussian(sigma), &config);
    let ratio = mw_coherence(&out.final_state) / mw_coherence(&rho);
    let expected = (-(2.0 * std::f64::consts::PI * sigma * t).powi(2) / 2.0).exp();
    assert!((ratio - expected).abs() < 0.05, "{ratio} vs {expected}");
}

#[test]
fn ou_noise_substeps_match_exact_phase_variance() {
    // quasi-static limit: long correlation time reproduces the static decay
    let sigma = 6.62e3;
    let t = 34e-6;
    let rho = coherent_input();
    let config = EngineConfig { n_traj: 1000, seed: 3, ..EngineConfig::default() };
    let out = run(vec![Event::Delay { duration: t }], &rho, &NoiseModel::ou(sigma, 1.0), &config);
    let ratio = mw_coherence(&out.final_state) / mw_coherence(&rho);
    let expected = (-(2.0 * std::f64::consts::PI * sigma * t).powi(2) / 2.0).exp();
    assert!((ratio - expected).abs() < 0.06, "{ratio} vs {expected}");
}

#[test]
fn trajectories_are_independent_of_worker_count() {
    let events = vec![
        Event::LaserInit,
        Event::Pulse(mw_pulse(0.28e6, 90.0, 0.0, false)),
        Event::Delay { duration: 20e-6 },
        Event::Pulse(mw_pulse(0.28e6, 90.0, 180.0, false)),
        Event::Measure { label: "p0".into() },
    ];
    let noise = NoiseModel::ou(5e3, 10e-6);
    let base = EngineConfig { n_traj: 16, seed: 42, keep_trajectories: true, ..EngineConfig::default() };
    let one = run(events.clone(), &DensityMatrix9::maximally_mixed(), &noise, &EngineConfig { workers: Some(1), ..base.clone() });
    let four = run(events, &DensityMatrix9::maximally_mixed(), &noise, &EngineConfig { workers: Some(4), ..base });
    assert_eq!(one, four);
    assert_eq!(one.trajectories.as_ref().unwrap().len(), 16);
}

#[test]
fn virtual_z_equals_shifted_phase() {
    let p = params();
    let config = EngineConfig::default();
    let shifted = Schedule::from_events(
        Some(System::A),
        vec![
            Event::VirtualZ(VirtualZ { channel: Channel::Mw, angle: 90.0 }),
            Event::Pulse(mw_pulse(0.28e6, 90.0, 0.0, false)),
            Event::VirtualZ(VirtualZ { channel: Channel::Mw, angle: -90.0 }),
        ],
    )
    .unwrap();
    let direct = Schedule::from_events(Some(System::A), vec![Event::Pulse(mw_pulse(0.28e6, 90.0, -90.0, false))]).unwrap();
    let a = schedule_propagator(&shifted, &p, &config).unwrap();
    let b = schedule_propagator(&direct, &p, &config).unwrap();
    assert!((a.matrix() - b.matrix()).norm() < 1e-12);
}

#[test]
fn mw_phase_sets_the_rotation_axis() {
    // phase 0 rotates about x, phase 90 about y, in the logical electron basis
    let p = params();
    let config = EngineConfig::default();
    let (i0, i1) = (level(0, 0).flat(), level(-1, 0).flat());
    for (phase, expected) in [(0.0, C64::new(0.0, -1.0)), (90.0, C64::new(1.0, 0.0))] {
        let u = pulse_propagator(&mw_pulse(0.28e6, 180.0, phase, true), 0.0, 0.0, &p, &config).unwrap();
        assert!((u.matrix()[(i1, i0)] - expected).norm() < 1e-12, "phase {phase}");
    }
}

#[test]
fn readout_of_projected_state() {
    let rho = noiseless(vec![Event::LaserInit], &DensityMatrix9::maximally_mixed());
    assert!((readout_p0(&rho, System::A).unwrap() - 1.0).abs() < 1e-15);
    let rho = DensityMatrix9::pure_level(level(1, 1));
    assert!(matches!(readout_p0(&rho, System::A), Err(Error::DegenerateProjection { .. })));
}
