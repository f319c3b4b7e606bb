//! Gate-level compilation of controlled rotations into pulse schedules.
//!
//! The CR gate rotates the nucleus about x by θ when the electron is in the
//! control state. The unprotected gate is a single RF pulse on the
//! control state's own nuclear line. The protected gate interleaves the RF
//! drive with electron π pulses; every π pulse swaps the electron basis
//! states, so the RF segments alternate between the control line ν and the
//! toggled line ν′ and a virtual Z closes the DD cycle.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::hamiltonian::{mw_transition, Channel, NuclearLine, NvParams, System, Transition};
use crate::operators::{c, pauli, CMatrix, C64};
use crate::schedule::{Event, PulseEvent, PulseLength, Schedule, VirtualZ};
use crate::{Error, Result};

/// Electron state on which the nuclear rotation is conditioned.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ControlCondition {
    #[default]
    Zero,
    One,
}

impl ControlCondition {
    /// The nuclear line that rotates the target in this control manifold.
    pub fn line(self) -> NuclearLine {
        match self {
            ControlCondition::Zero => NuclearLine::Nu1,
            ControlCondition::One => NuclearLine::Nu2,
        }
    }

    pub fn from_bit(bit: u8) -> Result<Self> {
        match bit {
            0 => Ok(ControlCondition::Zero),
            1 => Ok(ControlCondition::One),
            other => Err(Error::InvalidParameter(format!("control condition must be 0 or 1, got {other}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrGateSpec {
    pub system: System,
    pub control: ControlCondition,
    /// Rotation angle, radians.
    pub theta: f64,
    /// RF carrier phase, degrees.
    pub rf_phase: f64,
}

impl CrGateSpec {
    pub fn new(system: System, control: ControlCondition, theta: f64) -> Self {
        Self { system, control, theta, rf_phase: 0.0 }
    }

    fn validate(&self) -> Result<()> {
        if !(self.theta.is_finite() && self.theta >= 0.0) {
            return Err(Error::InvalidParameter(format!("θ must be finite and non-negative, got {}", self.theta)));
        }
        if !self.rf_phase.is_finite() {
            return Err(Error::InvalidParameter("RF phase must be finite".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseMode {
    /// Ideal zero-duration rotation.
    Instantaneous,
    /// Rectangular pulse with the given Rabi frequency (Hz).
    Finite { rabi: f64 },
}

/// Carrier of finite DD pulses. Ideal pulses always use the MW line.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DdCarrier {
    /// Midway between the m_i = 0 and m_i = q electron lines.
    #[default]
    HyperfineCentre,
    /// On the selective MW line |0,0⟩ ↔ |−1,0⟩.
    MwLine,
}

fn carrier_offset(carrier: DdCarrier, hyperfine_detuning: f64) -> f64 {
    match carrier {
        DdCarrier::HyperfineCentre => hyperfine_detuning / 2.0,
        DdCarrier::MwLine => 0.0,
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DdScheme {
    pub n_pulses: usize,
    /// π-pulse axis phases, degrees; one per pulse.
    pub axis_phases: Vec<f64>,
    pub pulse_mode: PulseMode,
    pub carrier: DdCarrier,
}

impl DdScheme {
    /// X, Y, X, Y, … alternation.
    pub fn xy(n_pulses: usize, pulse_mode: PulseMode) -> Self {
        Self {
            n_pulses,
            axis_phases: (0..n_pulses).map(|k| if k % 2 == 0 { 0.0 } else { 90.0 }).collect(),
            pulse_mode,
            carrier: DdCarrier::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !self.n_pulses.is_multiple_of(2) {
            return Err(Error::OddPulseCount(self.n_pulses));
        }
        if self.axis_phases.len() != self.n_pulses {
            return Err(Error::InvalidParameter(format!(
                "{} axis phases given for {} DD pulses",
                self.axis_phases.len(),
                self.n_pulses
            )));
        }
        if let PulseMode::Finite { rabi } = self.pulse_mode {
            if !(rabi.is_finite() && rabi > 0.0) {
                return Err(Error::InvalidParameter(format!("DD Rabi frequency must be positive, got {rabi}")));
            }
        }
        Ok(())
    }
}

/// Step-3 MW pulse before the measurement.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TomoSetting {
    None,
    PlusX,
    MinusX,
    PlusY,
    MinusY,
}

impl TomoSetting {
    pub const ALL: [TomoSetting; 5] =
        [TomoSetting::None, TomoSetting::PlusX, TomoSetting::MinusX, TomoSetting::PlusY, TomoSetting::MinusY];

    fn phase(self) -> Option<f64> {
        match self {
            TomoSetting::None => None,
            TomoSetting::PlusX => Some(0.0),
            TomoSetting::MinusX => Some(180.0),
            TomoSetting::PlusY => Some(90.0),
            TomoSetting::MinusY => Some(270.0),
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            TomoSetting::None => "none",
            TomoSetting::PlusX => "+x",
            TomoSetting::MinusX => "-x",
            TomoSetting::PlusY => "+y",
            TomoSetting::MinusY => "-y",
        }
    }
}

impl std::str::FromStr for TomoSetting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        TomoSetting::ALL
            .into_iter()
            .find(|t| t.label() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown tomography setting '{s}'")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Readout {
    /// −α rotation on the selective MW line, then measure.
    Population,
    Tomo(TomoSetting),
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub gate: CrGateSpec,
    pub dd: Option<DdScheme>,
    pub readout: Readout,
    /// α in degrees; the population readout applies −α.
    pub readout_flip: f64,
    /// Mode of the selective MW pulses of steps 1 and 3.
    pub mw_mode: PulseMode,
    /// Include laser initialisation and the step-1 π/2 pulse.
    pub prepare: bool,
}

impl ExperimentSpec {
    pub fn new(gate: CrGateSpec, dd: Option<DdScheme>, readout: Readout) -> Self {
        Self { gate, dd, readout, readout_flip: 90.0, mw_mode: PulseMode::Finite { rabi: 0.0 }, prepare: true }
    }
}

fn rf_pulse(spec: &CrGateSpec, line: NuclearLine, duration: f64, params: &NvParams, phase: f64) -> PulseEvent {
    let target = line.transition(spec.system);
    PulseEvent {
        channel: Channel::Rf,
        freq: target.frequency(params),
        phase,
        rabi: params.nuclear_rabi(spec.system, line),
        length: PulseLength::Duration(duration),
        target,
        instantaneous: false,
    }
}

fn mw_pulse(params: &NvParams, flip: f64, phase: f64, mode: PulseMode, default_rabi: f64) -> PulseEvent {
    let (rabi, instantaneous) = match mode {
        PulseMode::Instantaneous => (default_rabi, true),
        PulseMode::Finite { rabi } if rabi > 0.0 => (rabi, false),
        PulseMode::Finite { .. } => (default_rabi, false),
    };
    PulseEvent {
        channel: Channel::Mw,
        freq: mw_transition(params),
        phase,
        rabi,
        length: PulseLength::Flip(flip),
        target: Transition::mw_main(),
        instantaneous,
    }
}

/// Single RF pulse on the control line: t = θ/(2π·f_R).
pub fn compile_unprotected(spec: &CrGateSpec, params: &NvParams) -> Result<Schedule> {
    spec.validate()?;
    let mut schedule = Schedule::new(Some(spec.system));
    let line = spec.control.line();
    let duration = spec.theta / (2.0 * PI * params.nuclear_rabi(spec.system, line));
    if duration > 0.0 {
        schedule.push(Event::Pulse(rf_pulse(spec, line, duration, params, spec.rf_phase)))?;
    }
    Ok(schedule)
}

/// Durations and lines of the RF segments of a protected gate with `n`
/// (even, ≥ 2) DD pulses and total RF time `t`.
pub fn protected_segments(control: ControlCondition, n: usize, t: f64) -> Vec<(NuclearLine, f64)> {
    let own = control.line();
    (0..=n)
        .map(|k| {
            let line = if k % 2 == 0 { own } else { own.other() };
            let d = if k == 0 || k == n { t / (2.0 * n as f64) } else { t / n as f64 };
            (line, d)
        })
        .collect()
}

/// Total RF time of the protected gate, t = 2θ/(Ω_ν + Ω_ν′).
pub fn protected_rf_time(spec: &CrGateSpec, params: &NvParams) -> f64 {
    let own = params.nuclear_rabi(spec.system, spec.control.line());
    let toggled = params.nuclear_rabi(spec.system, spec.control.line().other());
    2.0 * spec.theta / (2.0 * PI * (own + toggled))
}

/// A compiled gate together with the diagonal frame it leaves behind.
#[derive(Clone, Debug, PartialEq)]
pub struct CompiledGate {
    pub schedule: Schedule,
    /// Phases (radians) of |00⟩, |01⟩, |10⟩, |11⟩ such that the schedule
    /// implements diag(e^{i·frame})·CR(θ) on the computational subspace.
    pub frame: [f64; 4],
}

/// DD-protected CR gate.
///
/// With n π pulses the RF drive is cut into n+1 segments: outer segments of
/// t/(2n) and inner segments of t/n, alternating between ν and ν′, so both
/// lines are driven for t/2 in total. A final MW virtual Z undoes the net
/// frame rotation of the π-pulse train.
pub fn compile_protected(spec: &CrGateSpec, dd: &DdScheme, params: &NvParams) -> Result<Schedule> {
    Ok(compile_protected_gate(spec, dd, params, 0.0)?.schedule)
}

/// Protected gate whose first event starts at schedule time `t0`.
///
/// A finite π pulse centred at time t addresses the m_i = q hyperfine line
/// with an extra phase 2π·Δ_q·t relative to the m_i = 0 line (Δ_q = −A·q).
/// The compiler tracks the resulting diagonal frame through the π-pulse
/// train and rotates each RF segment's phase so the segments act about the
/// intended axis; the frame that remains at the end is reported. Ideal
/// pulses have no such phase and leave the identity frame.
pub fn compile_protected_gate(spec: &CrGateSpec, dd: &DdScheme, params: &NvParams, t0: f64) -> Result<CompiledGate> {
    spec.validate()?;
    dd.validate()?;
    if dd.n_pulses == 0 {
        return Ok(CompiledGate { schedule: compile_unprotected(spec, params)?, frame: [0.0; 4] });
    }
    let t = protected_rf_time(spec, params);
    let q = spec.system.nuclear_branch() as f64;
    let hyperfine_detuning = -params.a * q;
    let mut schedule = Schedule::new(Some(spec.system));
    let mut frame = [0.0f64; 4];
    let mut now = t0;
    let segments = protected_segments(spec.control, dd.n_pulses, t);
    for (k, (line, duration)) in segments.into_iter().enumerate() {
        if duration > 0.0 {
            let block = if line.electron_ms() == 0 { 0 } else { 2 };
            let shift = (frame[block + 1] - frame[block]).to_degrees();
            let phase = wrap_degrees(spec.rf_phase - shift);
            schedule.push(Event::Pulse(rf_pulse(spec, line, duration, params, phase)))?;
            now += duration;
        }
        if k < dd.n_pulses {
            let mut pulse = mw_pulse(params, 180.0, dd.axis_phases[k], dd.pulse_mode, params.rabi_mw_hard);
            let width = pulse.duration();
            let mut beta = [0.0; 2];
            if !pulse.instantaneous {
                let offset = carrier_offset(dd.carrier, hyperfine_detuning);
                pulse.freq += offset;
                let centre = now + width / 2.0;
                for (b, line_detuning) in beta.iter_mut().zip([-offset, hyperfine_detuning - offset]) {
                    *b = 2.0 * PI * (line_detuning * centre).rem_euclid(1.0);
                }
            }
            frame[2] -= beta[0];
            frame[3] -= beta[1];
            frame = [frame[2], frame[3], frame[0], frame[1]];
            frame[2] += beta[0];
            frame[3] += beta[1];
            schedule.push(Event::Pulse(pulse))?;
            now += width;
        }
    }
    schedule.push(Event::VirtualZ(VirtualZ { channel: Channel::Mw, angle: dd_frame_correction(&dd.axis_phases) }))?;
    Ok(CompiledGate { schedule, frame: frame.map(|a| a.rem_euclid(2.0 * PI)) })
}

fn wrap_degrees(x: f64) -> f64 {
    let w = x.rem_euclid(360.0);
    if (w - 360.0).abs() < 1e-9 {
        0.0
    } else {
        w
    }
}

/// Full three-step experiment: initialise, prepare the input state, run the
/// gate, rotate for readout and measure.
pub fn compile_experiment(exp: &ExperimentSpec, params: &NvParams) -> Result<Schedule> {
    let mut schedule = Schedule::new(Some(exp.gate.system));
    let selective = params.rabi_mw_selective;
    if exp.prepare {
        schedule.push(Event::LaserInit)?;
        schedule.push(Event::Pulse(mw_pulse(params, exp.readout_flip, 0.0, exp.mw_mode, selective)))?;
    }
    let t0 = schedule.total_duration();
    let body = match &exp.dd {
        Some(dd) => compile_protected_gate(&exp.gate, dd, params, t0)?.schedule,
        None => compile_unprotected(&exp.gate, params)?,
    };
    schedule.extend(body)?;
    let step3 = match exp.readout {
        // −α as a rotation about −x
        Readout::Population => Some((exp.readout_flip, 180.0)),
        Readout::Tomo(setting) => setting.phase().map(|p| (90.0, p)),
    };
    if let Some((flip, phase)) = step3 {
        schedule.push(Event::Pulse(mw_pulse(params, flip, phase, exp.mw_mode, selective)))?;
    }
    let label = match exp.readout {
        Readout::Population => "p0".to_string(),
        Readout::Tomo(s) => format!("tomo{}", s.label()),
    };
    schedule.push(Event::Measure { label })?;
    Ok(schedule)
}

fn pi_rotation(phase_deg: f64) -> CMatrix {
    let [_, sx, sy, _] = pauli();
    let phi = phase_deg.to_radians();
    (sx * c(phi.cos()) + sy * c(phi.sin())) * C64::new(0.0, -1.0)
}

/// Virtual-Z angle (degrees, in [0, 360)) that turns the π-pulse train into
/// the identity on the electron qubit, up to a global phase.
pub fn dd_frame_correction(axis_phases: &[f64]) -> f64 {
    let product = axis_phases.iter().fold(CMatrix::identity(2, 2), |acc, &p| pi_rotation(p) * acc);
    // even trains are diagonal: diag(u0, u1); Rz(a) = diag(e^{-ia/2}, e^{ia/2})
    let angle = (product[(0, 0)] / product[(1, 1)]).arg().to_degrees();
    let wrapped = angle.rem_euclid(360.0);
    // snap rounding noise so that 0 and 180 render cleanly
    let snapped = (wrapped * 1e9).round() / 1e9;
    if snapped >= 360.0 {
        0.0
    } else {
        snapped
    }
}

/// Rx(θ) = exp(−iθσx/2).
pub fn rx(theta: f64) -> CMatrix {
    let [e, sx, _, _] = pauli();
    e * c((theta / 2.0).cos()) + sx * C64::new(0.0, -(theta / 2.0).sin())
}

/// Ideal 4×4 CR unitary in the logical basis |00⟩, |01⟩, |10⟩, |11⟩.
pub fn cr_unitary(spec: &CrGateSpec) -> CMatrix {
    let r = rx(spec.theta);
    let mut u = CMatrix::identity(4, 4);
    let offset = match spec.control {
        ControlCondition::Zero => 0,
        ControlCondition::One => 2,
    };
    for i in 0..2 {
        for j in 0..2 {
            u[(offset + i, offset + j)] = r[(i, j)];
        }
    }
    u
}
