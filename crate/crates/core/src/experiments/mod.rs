//! Reproductions of the CR-gate experiments: input-state preparation,
//! θ-sweeps with population readout, analytic signal models, five-setting
//! electron tomography and decay fitting.

mod fit;
mod sweep;
mod tomography;

pub use fit::{fit_decay, DecayModel, FitOptions, FitResult};
pub use sweep::{linspace, theta_sweep, SweepRow, SweepTable};
pub use tomography::{bloch_vector, reconstruct_qubit, tomography_reference, tomography_run, TomographyResult};

use serde::{Deserialize, Serialize};

use crate::compiler::{
    compile_experiment, compile_protected_gate, cr_unitary, protected_rf_time, ControlCondition, CrGateSpec,
    DdScheme, ExperimentSpec, PulseMode, Readout,
};
use crate::engine::{propagate, schedule_propagator, EngineConfig, NoiseModel};
use crate::hamiltonian::NvParams;
use crate::operators::{average_gate_fidelity, c, unitary_distance, CMatrix, CompEmbedding, DensityMatrix9, System, C64, DIM};
use crate::schedule::{Event, Schedule};
use crate::Result;

/// s(θ) = (1 + cos(θ/2))²/8 + 1/2.
pub fn ideal_signal(theta: f64) -> f64 {
    let c = (theta / 2.0).cos();
    (1.0 + c) * (1.0 + c) / 8.0 + 0.5
}

/// s_T2(θ, t) = [1 + 2cos(θ/2)e^{−t/T2} + cos²(θ/2)]/8 + 1/2.
pub fn decayed_signal(theta: f64, t: f64, t2: f64) -> f64 {
    let c = (theta / 2.0).cos();
    let decay = if t2.is_infinite() { 1.0 } else { (-t / t2).exp() };
    (1.0 + 2.0 * c * decay + c * c) / 8.0 + 0.5
}

/// s_r = (1 − κt)·s_T2.
pub fn residual_model(theta: f64, t: f64, t2: f64, kappa: f64) -> f64 {
    (1.0 - kappa * t) * decayed_signal(theta, t, t2)
}

/// Electron state entering the gate.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InputKind {
    /// Laser initialisation followed by the selective π/2 pulse.
    #[default]
    Prepared,
    /// The prepared state with its electron coherence removed.
    Dephased,
}

/// How a CR experiment is run: control condition, optional DD protection,
/// mode of the selective readout pulses and the input state.
#[derive(Clone, Debug, PartialEq)]
pub struct Protocol {
    pub control: ControlCondition,
    pub dd: Option<DdScheme>,
    /// Selective MW pulses of the preparation and readout steps.
    pub mw_mode: PulseMode,
    pub input: InputKind,
}

impl Protocol {
    /// Single RF pulse, ideal selective pulses, prepared input, control 0.
    pub fn unprotected() -> Self {
        Self { control: ControlCondition::Zero, dd: None, mw_mode: PulseMode::Instantaneous, input: InputKind::Prepared }
    }

    pub fn protected(dd: DdScheme) -> Self {
        Self { dd: Some(dd), ..Self::unprotected() }
    }

    pub fn is_protected(&self) -> bool {
        self.dd.as_ref().is_some_and(|d| d.n_pulses > 0)
    }

    /// Gate-body RF time: θ/Ω₁ unprotected, 2θ/(Ω₁ + Ω₂) protected.
    pub fn gate_time(&self, system: System, theta: f64, params: &NvParams) -> f64 {
        let spec = CrGateSpec::new(system, self.control, theta);
        if self.is_protected() {
            protected_rf_time(&spec, params)
        } else {
            theta / (2.0 * std::f64::consts::PI * params.nuclear_rabi(system, self.control.line()))
        }
    }

    fn experiment(&self, system: System, theta: f64, readout: Readout) -> ExperimentSpec {
        let mut exp = ExperimentSpec::new(CrGateSpec::new(system, self.control, theta), self.dd.clone(), readout);
        exp.mw_mode = self.mw_mode;
        exp.prepare = self.input == InputKind::Prepared;
        exp
    }

    /// Compiled schedule and the state it starts from.
    pub fn compile(
        &self,
        system: System,
        theta: f64,
        readout: Readout,
        params: &NvParams,
    ) -> Result<(Schedule, DensityMatrix9)> {
        let schedule = compile_experiment(&self.experiment(system, theta, readout), params)?;
        let rho0 = match self.input {
            InputKind::Prepared => DensityMatrix9::maximally_mixed(),
            InputKind::Dephased => dephase_electron(&input_state_with(params, system, self.mw_mode)?),
        };
        Ok((schedule, rho0))
    }
}

/// Step-1 state: laser initialisation then an ideal selective π/2 pulse.
///
/// On the computational block this is ¼(|00⟩ − i|10⟩)(⟨00| + i⟨10|) + ½|01⟩⟨01|
/// with weight 2/3; the spectator nuclear level keeps the remaining 1/3.
pub fn input_state(params: &NvParams, system: System) -> Result<DensityMatrix9> {
    input_state_with(params, system, PulseMode::Instantaneous)
}

/// As [`input_state`] with a chosen mode for the π/2 pulse; a finite pulse
/// uses the selective Rabi frequency.
pub fn input_state_with(params: &NvParams, system: System, mw_mode: PulseMode) -> Result<DensityMatrix9> {
    let mut exp = ExperimentSpec::new(CrGateSpec::new(system, ControlCondition::Zero, 0.0), None, Readout::Population);
    exp.mw_mode = mw_mode;
    let full = compile_experiment(&exp, params)?;
    // keep laser + π/2 only
    let events: Vec<Event> = full.events().iter().take(2).cloned().collect();
    let prep = Schedule::from_events(Some(system), events)?;
    let result = propagate(&prep, &DensityMatrix9::maximally_mixed(), params, &NoiseModel::none(), &EngineConfig::default())?;
    Ok(result.final_state)
}

/// Removes every coherence between different m_s manifolds.
pub fn dephase_electron(rho: &DensityMatrix9) -> DensityMatrix9 {
    let m = rho.matrix();
    DensityMatrix9::from_unchecked(CMatrix::from_fn(DIM, DIM, |i, j| if i / 3 == j / 3 { m[(i, j)] } else { c(0.0) }))
}

/// Comparison of a compiled protected gate with the ideal CR unitary.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateComparison {
    /// State-averaged gate fidelity on the computational subspace.
    pub fidelity: f64,
    /// Phase-insensitive distance, 1 − |Tr(U†V)|/4.
    pub distance: f64,
    /// Probability lost from the computational subspace, averaged over inputs.
    pub leakage: f64,
}

/// Noiseless propagator of the compiled gate, restricted to the
/// computational block and corrected by the compiler's residual frame,
/// compared with [`cr_unitary`].
pub fn compare_gate(spec: &CrGateSpec, dd: &DdScheme, params: &NvParams, config: &EngineConfig) -> Result<GateComparison> {
    let compiled = compile_protected_gate(spec, dd, params, 0.0)?;
    let u9 = schedule_propagator(&compiled.schedule, params, config)?;
    let u4 = CompEmbedding::new(spec.system).restrict(u9.matrix());
    let undo = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        4,
        compiled.frame.iter().map(|&a| C64::from_polar(1.0, -a)),
    ));
    let u = undo * u4;
    let ideal = cr_unitary(spec);
    let overlap = (ideal.adjoint() * &u).trace().norm() / 4.0;
    let kept = u.iter().map(|z| z.norm_sqr()).sum::<f64>() / 4.0;
    let distance = if kept > 1.0 - 1e-9 { unitary_distance(&u, &ideal)? } else { (1.0 - overlap).max(0.0) };
    Ok(GateComparison { fidelity: average_gate_fidelity(&ideal, &u)?, distance, leakage: (1.0 - kept).max(0.0) })
}
