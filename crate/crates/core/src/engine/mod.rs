//! Schedule evolution: coherent pulses, Lindblad dissipation, classical
//! detuning noise and readout.
//!
//! States are kept in the interaction picture of H0; populations, and hence
//! every readout, are the same as in the lab frame. Each timed event is
//! integrated exactly for piecewise-constant noise: unitary steps use a
//! Hermitian eigendecomposition and open-system steps exponentiate the 81×81
//! Liouvillian. Only the Ornstein-Uhlenbeck process needs sub-steps.

mod lindblad;
mod noise;
mod propagator;

pub use lindblad::{dissipator_superoperator, lindblad_dissipators, Dissipator};
pub use noise::{sample_noise, ClassicalNoise, LindbladNoise, NoiseModel, NoiseProcess};
pub use propagator::{frame_numbers, PulsePlan, Segment, DEFAULT_RWA_FACTOR};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::hamiltonian::NvParams;
use crate::operators::{c, CMatrix, CompEmbedding, DensityMatrix9, Operator9, System, DIM};
use crate::schedule::{Event, PulseEvent, Schedule};
use crate::{Error, Result};
use propagator::{conjugate_diag, laser_reset, virtual_frame};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EngineConfig {
    /// Hz; `None` keeps couplings within 50× each pulse's Rabi frequency.
    pub rwa_cutoff: Option<f64>,
    /// Sub-step cap for time-correlated noise, s. `None` uses
    /// 1/(20·max(|Δ_kept|, f_R)) inside pulses and τ_c/20 everywhere.
    pub dt_max: Option<f64>,
    /// Trajectories averaged for classical noise.
    pub n_traj: usize,
    pub seed: u64,
    /// Keep each trajectory's readout values in the result.
    pub keep_trajectories: bool,
    /// Worker threads; `None` uses the global pool.
    pub workers: Option<usize>,
}

impl Default for EngineConfig {
    fn default() -> Self {
        Self { rwa_cutoff: None, dt_max: None, n_traj: 100, seed: 0, keep_trajectories: false, workers: None }
    }
}

impl EngineConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: Option<f64>| match v {
            Some(x) if !(x.is_finite() && x > 0.0) => Err(Error::Config(format!("{name} must be positive, got {x}"))),
            _ => Ok(()),
        };
        positive("rwa_cutoff", self.rwa_cutoff)?;
        positive("dt_max", self.dt_max)?;
        if self.n_traj == 0 {
            return Err(Error::Config("n_traj must be at least 1".into()));
        }
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Measurement {
    pub label: String,
    pub time: f64,
    /// Ensemble readout in [0, 1].
    pub signal: f64,
    /// Ensemble state at the measurement.
    pub state: DensityMatrix9,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimResult {
    pub final_state: DensityMatrix9,
    pub measurements: Vec<Measurement>,
    /// Per trajectory, the readout of every measurement.
    pub trajectories: Option<Vec<Vec<f64>>>,
}

impl SimResult {
    pub fn signal(&self, label: &str) -> Option<f64> {
        self.measurements.iter().find(|m| m.label == label).map(|m| m.signal)
    }
}

fn comp_populations(rho: &DensityMatrix9, system: System) -> [f64; 4] {
    let idx = CompEmbedding::new(system).flat_indices();
    idx.map(|i| rho.matrix()[(i, i)].re)
}

/// Population of electron |0⟩ within the computational subspace.
pub fn readout_p0(rho: &DensityMatrix9, system: System) -> Result<f64> {
    let [p00, p01, p10, p11] = comp_populations(rho, system);
    let weight = p00 + p01 + p10 + p11;
    if weight < 1e-12 {
        return Err(Error::DegenerateProjection { weight });
    }
    Ok(((p00 + p01) / weight).clamp(0.0, 1.0))
}

/// Population of electron |0⟩ given the nucleus in logical `nuclear_bit`.
pub fn readout_p0_given_nucleus(rho: &DensityMatrix9, system: System, nuclear_bit: usize) -> Result<f64> {
    let p = comp_populations(rho, system);
    let (zero, one) = (p[nuclear_bit & 1], p[2 + (nuclear_bit & 1)]);
    let weight = zero + one;
    if weight < 1e-12 {
        return Err(Error::DegenerateProjection { weight });
    }
    Ok((zero / weight).clamp(0.0, 1.0))
}

fn hermitize(m: &CMatrix) -> CMatrix {
    (m + m.adjoint()) * c(0.5)
}

fn to_state(m: &CMatrix) -> Result<DensityMatrix9> {
    DensityMatrix9::new(hermitize(m)).map_err(|e| Error::Numeric(format!("evolved state is invalid: {e}")))
}

/// Noiseless propagator of one pulse starting at `t_start` (H0 interaction picture).
pub fn pulse_propagator(
    pulse: &PulseEvent,
    t_start: f64,
    phase_offset: f64,
    params: &NvParams,
    config: &EngineConfig,
) -> Result<Operator9> {
    let plan = PulsePlan::new(pulse, phase_offset, params, config.rwa_cutoff)?;
    let u = if pulse.instantaneous { plan.instantaneous(t_start) } else { plan.segment(t_start, pulse.duration(), 0.0).unitary() };
    Operator9::new(u)
}

/// Noiseless propagator of a whole schedule, virtual-Z frame included.
///
/// Laser initialisation is not unitary and is rejected; measurements are ignored.
pub fn schedule_propagator(schedule: &Schedule, params: &NvParams, config: &EngineConfig) -> Result<Operator9> {
    params.validate()?;
    config.validate()?;
    let mut u = CMatrix::identity(DIM, DIM);
    let mut offsets = [0.0; 2];
    let mut t = 0.0;
    for event in schedule.events() {
        match event {
            Event::Pulse(p) => {
                let step = pulse_propagator(p, t, offsets[p.channel.slot()], params, config)?;
                u = step.matrix() * u;
            }
            Event::VirtualZ(vz) => offsets[vz.channel.slot()] -= vz.angle,
            Event::LaserInit => {
                return Err(Error::InvalidParameter("laser initialisation has no unitary propagator".into()))
            }
            Event::Delay { .. } | Event::Measure { .. } => {}
        }
        t += event.duration();
    }
    let frame = virtual_frame(offsets.map(|o| -o), schedule.system_or_default());
    let u = CMatrix::from_fn(DIM, DIM, |i, j| frame[i] * u[(i, j)]);
    Operator9::new(u)
}

struct Trajectory {
    final_state: CMatrix,
    snapshots: Vec<CMatrix>,
}

struct Runner<'a> {
    schedule: &'a Schedule,
    params: &'a NvParams,
    config: &'a EngineConfig,
    dissipator: Option<CMatrix>,
    classical: Option<ClassicalNoise>,
}

impl Runner<'_> {
    fn step(&self, rho: &CMatrix, seg: &Segment) -> CMatrix {
        match &self.dissipator {
            Some(d) => seg.apply_lindblad(rho, d),
            None => {
                let u = seg.unitary();
                &u * rho * u.adjoint()
            }
        }
    }

    /// Evolves through a timed event, splitting it for time-correlated noise.
    fn evolve(
        &self,
        rho: CMatrix,
        plan: &PulsePlan,
        t: f64,
        duration: f64,
        process: &mut Option<NoiseProcess>,
    ) -> CMatrix {
        if duration == 0.0 {
            return rho;
        }
        let dt = match (self.classical, process.as_ref()) {
            (Some(ClassicalNoise::Ou { tau_c, .. }), Some(_)) => {
                let inner = if plan.max_frequency() > 0.0 { 1.0 / (20.0 * plan.max_frequency()) } else { f64::INFINITY };
                self.config.dt_max.unwrap_or(inner).min(tau_c / 20.0)
            }
            _ => f64::INFINITY,
        };
        let steps = if dt.is_finite() { (duration / dt).ceil().max(1.0) as usize } else { 1 };
        let tau = duration / steps as f64;
        let mut rho = rho;
        for k in 0..steps {
            let delta = process.as_ref().map_or(0.0, NoiseProcess::value);
            rho = self.step(&rho, &plan.segment(t + k as f64 * tau, tau, delta));
            if let Some(p) = process.as_mut() {
                p.advance(tau);
            }
        }
        rho
    }

    fn run(&self, rho0: &CMatrix, mut process: Option<NoiseProcess>) -> Result<Trajectory> {
        let system = self.schedule.system_or_default();
        let mut rho = rho0.clone();
        let mut offsets = [0.0; 2];
        let mut snapshots = Vec::new();
        let mut t = 0.0;
        let free = PulsePlan::free();
        for event in self.schedule.events() {
            match event {
                Event::Pulse(p) => {
                    let plan = PulsePlan::new(p, offsets[p.channel.slot()], self.params, self.config.rwa_cutoff)?;
                    if p.instantaneous {
                        let u = plan.instantaneous(t);
                        rho = &u * &rho * u.adjoint();
                    } else {
                        rho = self.evolve(rho, &plan, t, p.duration(), &mut process);
                    }
                }
                Event::Delay { duration } => rho = self.evolve(rho, &free, t, *duration, &mut process),
                Event::VirtualZ(vz) => offsets[vz.channel.slot()] -= vz.angle,
                Event::LaserInit => rho = laser_reset(&rho),
                Event::Measure { .. } => {
                    snapshots.push(conjugate_diag(&rho, &virtual_frame(offsets.map(|o| -o), system)));
                }
            }
            t += event.duration();
        }
        let final_state = conjugate_diag(&rho, &virtual_frame(offsets.map(|o| -o), system));
        Ok(Trajectory { final_state, snapshots })
    }
}

/// Evolves `rho0` through `schedule`.
///
/// Classical noise is averaged over `config.n_traj` trajectories; trajectory
/// i is seeded with `config.seed + i` and the ensemble is summed in index
/// order, so results do not depend on the number of workers.
pub fn propagate(
    schedule: &Schedule,
    rho0: &DensityMatrix9,
    params: &NvParams,
    noise: &NoiseModel,
    config: &EngineConfig,
) -> Result<SimResult> {
    params.validate()?;
    noise.validate()?;
    config.validate()?;
    let dissipators = lindblad_dissipators(noise);
    let classical = noise.classical.filter(|c| c.sigma() > 0.0);
    let runner = Runner {
        schedule,
        params,
        config,
        dissipator: (!dissipators.is_empty()).then(|| dissipator_superoperator(&dissipators)),
        classical,
    };
    let n_traj = if classical.is_some() { config.n_traj } else { 1 };
    let run_one = |i: usize| {
        let process = classical.map(|c| NoiseProcess::new(c, config.seed.wrapping_add(i as u64)));
        runner.run(rho0.matrix(), process)
    };
    let trajectories: Vec<Trajectory> = match config.workers {
        Some(k) if n_traj > 1 => rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build()
            .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?
            .install(|| (0..n_traj).into_par_iter().map(run_one).collect::<Result<_>>())?,
        _ if n_traj > 1 => (0..n_traj).into_par_iter().map(run_one).collect::<Result<_>>()?,
        _ => vec![run_one(0)?],
    };

    let system = schedule.system_or_default();
    let scale = c(1.0 / n_traj as f64);
    let mut final_acc = CMatrix::zeros(DIM, DIM);
    let n_meas = trajectories[0].snapshots.len();
    let mut snap_acc = vec![CMatrix::zeros(DIM, DIM); n_meas];
    for tr in &trajectories {
        final_acc += &tr.final_state;
        for (acc, s) in snap_acc.iter_mut().zip(&tr.snapshots) {
            *acc += s;
        }
    }
    let final_state = to_state(&(final_acc * scale))?;

    let times = schedule.start_times();
    let mut measurements = Vec::with_capacity(n_meas);
    let labels = schedule.events().iter().zip(times).filter_map(|(e, t)| match e {
        Event::Measure { label } => Some((label.clone(), t)),
        _ => None,
    });
    for ((label, time), acc) in labels.zip(snap_acc) {
        let state = to_state(&(acc * scale))?;
        let signal = readout_p0(&state, system)?;
        measurements.push(Measurement { label, time, signal, state });
    }

    let per_traj = if config.keep_trajectories {
        let mut rows = Vec::with_capacity(n_traj);
        for tr in &trajectories {
            let row = tr
                .snapshots
                .iter()
                .map(|s| readout_p0(&DensityMatrix9::from_unchecked(hermitize(s)), system))
                .collect::<Result<Vec<f64>>>()?;
            rows.push(row);
        }
        Some(rows)
    } else {
        None
    };
    Ok(SimResult { final_state, measurements, trajectories: per_traj })
}

#[cfg(test)]
mod tests;
