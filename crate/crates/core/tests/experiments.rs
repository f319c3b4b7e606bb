use std::f64::consts::PI;

use nvdd::compiler::{DdScheme, PulseMode};
use nvdd::engine::{EngineConfig, NoiseModel};
use nvdd::experiments::*;
use nvdd::operators::trace_distance;
use nvdd::{NvParams, System};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

fn ideal_dd() -> Protocol {
    Protocol::protected(DdScheme::xy(2, PulseMode::Instantaneous))
}

#[test]
fn protected_noiseless_sweep_follows_ideal_signal() {
    let p = NvParams::default();
    let grid = linspace(0.0, 8.0 * PI, 17);
    for system in [System::A, System::B] {
        let table = theta_sweep(&ideal_dd(), system, &NoiseModel::none(), &grid, &p, &EngineConfig::default()).unwrap();
        table.validate().unwrap();
        assert!(table.protected);
        let worst = table.rows.iter().map(|r| (r.signal - ideal_signal(r.theta)).abs()).fold(0.0, f64::max);
        assert!(worst <= 5e-3, "system {system}: {worst}");
    }
}

#[test]
fn unprotected_lindblad_sweep_follows_decayed_signal() {
    let p = NvParams::default();
    let t2 = 34e-6;
    let grid = linspace(0.0, 8.0 * PI, 17);
    let noise = NoiseModel::lindblad(None, Some(t2));
    let table = theta_sweep(&Protocol::unprotected(), System::A, &noise, &grid, &p, &EngineConfig::default()).unwrap();
    for r in &table.rows {
        assert!((r.time - r.theta / (2.0 * PI * 9.05e3)).abs() < 1e-15);
        assert!((r.signal - decayed_signal(r.theta, r.time, t2)).abs() <= 5e-3, "{r:?}");
    }
}

#[test]
fn dephased_input_loses_the_coherent_term() {
    let p = NvParams::default();
    let protocol = Protocol { input: InputKind::Dephased, ..Protocol::unprotected() };
    let grid = linspace(0.0, 4.0 * PI, 9);
    let table = theta_sweep(&protocol, System::A, &NoiseModel::none(), &grid, &p, &EngineConfig::default()).unwrap();
    for r in &table.rows {
        let c = (r.theta / 2.0).cos();
        assert!((r.signal - ((1.0 + c * c) / 8.0 + 0.5)).abs() <= 5e-3, "{r:?}");
    }
}

#[test]
fn sweep_csv_round_trip() {
    let table = SweepTable {
        system: System::A,
        protected: false,
        noise: "none".into(),
        rows: vec![
            SweepRow { theta: 0.0, time: 0.0, signal: 1.0, stderr: None },
            SweepRow { theta: 0.5, time: 1e-5, signal: 0.75, stderr: Some(0.01) },
        ],
    };
    let csv = table.to_csv().unwrap();
    assert!(csv.starts_with("theta_rad,time_s,signal,stderr\n"));
    assert_eq!(SweepTable::read_csv_rows(csv.as_bytes()).unwrap(), table.rows);
    let empty = SweepTable { rows: Vec::new(), ..table };
    assert_eq!(empty.to_csv().unwrap(), "theta_rad,time_s,signal,stderr\n");
}

#[test]
fn sweep_rejects_bad_grids() {
    let p = NvParams::default();
    let cfg = EngineConfig::default();
    let none = NoiseModel::none();
    assert!(theta_sweep(&ideal_dd(), System::A, &none, &[1.0, 0.5], &p, &cfg).is_err());
    assert!(theta_sweep(&ideal_dd(), System::A, &none, &[-1.0], &p, &cfg).is_err());
}

#[test]
fn tomography_round_trip_and_sign_pattern() {
    let p = NvParams::default();
    let cfg = EngineConfig::default();
    let mut sy = Vec::new();
    for (k, theta) in [0.0, 2.0 * PI, 4.0 * PI].into_iter().enumerate() {
        let r = tomography_run(theta, &ideal_dd(), System::A, &NoiseModel::none(), &p, &cfg).unwrap();
        assert!(trace_distance(&r.rho, &r.direct) <= 1e-10);
        assert!(r.fidelity >= 1.0 - 1e-6, "θ={theta}: {}", r.fidelity);
        let zero_ref = tomography_reference(&ideal_dd(), System::A, 0.0, &p).unwrap();
        let overlap = nvdd::operators::fidelity(&r.rho, &zero_ref).unwrap();
        if k == 1 {
            assert!(overlap <= 1e-6);
        }
        sy.push(r.bloch()[1]);
    }
    // relative to θ = 0 the σy sign goes (+, −, +); the absolute sign is a convention
    let pattern: Vec<f64> = sy.iter().map(|v| v * sy[0].signum()).collect();
    assert!(sy[0].abs() > 0.99 && pattern[1] < -0.99 && pattern[2] > 0.99, "{sy:?}");
    assert!((sy[0].abs() - sy[2].abs()).abs() <= 1e-9);
}

#[test]
fn tomography_rejects_other_angles() {
    let p = NvParams::default();
    assert!(tomography_run(PI, &ideal_dd(), System::A, &NoiseModel::none(), &p, &EngineConfig::default()).is_err());
}

fn synthetic(model: DecayModel, truth: &[f64], sigma: f64, seed: u64) -> Vec<SweepRow> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma.max(f64::MIN_POSITIVE)).unwrap();
    let (grid, t_max) = match model {
        DecayModel::Sr => (linspace(0.0, 8.0 * PI, 65), 2.0e-3),
        _ => (linspace(0.0, 8.0 * PI, 65), 8.0 * PI / (2.0 * PI * 9.05e3)),
    };
    grid.iter()
        .map(|&theta| {
            let time = t_max * theta / (8.0 * PI);
            let eps = if sigma > 0.0 { rng.sample(noise) } else { 0.0 };
            SweepRow { theta, time, signal: model.eval(truth, theta, time) + eps, stderr: None }
        })
        .collect()
}

#[test]
fn fit_recovers_noisy_t2() {
    let rows = synthetic(DecayModel::Eq6, &[34e-6], 0.01, 7);
    let fit = fit_decay(&rows, DecayModel::Eq6, &FitOptions::default()).unwrap();
    let t2 = fit.get("t2").unwrap();
    assert!(((t2 - 34e-6) / 34e-6).abs() < 0.1, "{fit:?}");
}

#[test]
fn fit_recovers_noisy_kappa() {
    let rows = synthetic(DecayModel::Sr, &[4e-3, 1.0 / 2.4e-3], 0.01, 11);
    let fit = fit_decay(&rows, DecayModel::Sr, &FitOptions::default()).unwrap();
    let kappa = fit.get("kappa").unwrap();
    assert!(((kappa - 1.0 / 2.4e-3) * 2.4e-3).abs() < 0.15, "{fit:?}");
    assert!(((fit.get("t2").unwrap() - 4e-3) / 4e-3).abs() < 0.25, "{fit:?}");
}

#[test]
fn fit_is_exact_on_noiseless_data() {
    let cases: [(DecayModel, Vec<f64>); 5] = [
        (DecayModel::Eq6, vec![34e-6]),
        (DecayModel::Sr, vec![4e-3, 1.0 / 2.4e-3]),
        (DecayModel::Exp, vec![0.4, 3e-4, 0.55]),
        (DecayModel::Gaussian, vec![0.4, 3e-4, 0.55]),
        (DecayModel::Linear, vec![0.9, -120.0]),
    ];
    for (model, truth) in cases {
        let rows = synthetic(model, &truth, 0.0, 0);
        let fit = fit_decay(&rows, model, &FitOptions::default()).unwrap();
        for (got, want) in fit.values().iter().zip(&truth) {
            assert!(((got - want) / want).abs() < 1e-3, "{model}: {fit:?}");
        }
    }
}
