use std::f64::consts::PI;

use rayon::prelude::*;

use super::{dephase_electron, input_state_with, InputKind, Protocol};
use crate::compiler::{Readout, TomoSetting};
use crate::engine::{propagate, readout_p0_given_nucleus, EngineConfig, NoiseModel};
use crate::hamiltonian::NvParams;
use crate::operators::{c, conditional_electron, fidelity, pauli, project_computational, CMatrix, CompEmbedding, System};
use crate::{Error, Result};

const BLOCH_SLACK: f64 = 0.05;

/// Electron density matrix from the five readout probabilities.
///
/// With Rx(π/2) = e^{−iπσx/4}: ⟨σz⟩ = 2p_none − 1, ⟨σy⟩ = p₊ₓ − p₋ₓ and
/// ⟨σx⟩ = p₋ᵧ − p₊ᵧ. A slightly unphysical estimate is projected onto the
/// nearest state by clipping negative eigenvalues and renormalising.
pub fn reconstruct_qubit(p_none: f64, p_plus_x: f64, p_minus_x: f64, p_plus_y: f64, p_minus_y: f64) -> Result<CMatrix> {
    let probs = [p_none, p_plus_x, p_minus_x, p_plus_y, p_minus_y];
    if let Some(p) = probs.iter().find(|p| !(0.0..=1.0).contains(*p)) {
        return Err(Error::InvalidParameter(format!("probability {p} outside [0, 1]")));
    }
    let (x, y, z) = (p_minus_y - p_plus_y, p_plus_x - p_minus_x, 2.0 * p_none - 1.0);
    let norm = (x * x + y * y + z * z).sqrt();
    if norm > 1.0 + BLOCH_SLACK {
        return Err(Error::InconsistentTomography(norm));
    }
    let [e, sx, sy, sz] = pauli();
    let rho = (e + sx * c(x) + sy * c(y) + sz * c(z)) * c(0.5);
    if norm <= 1.0 {
        return Ok(rho);
    }
    let eig = rho.clone().symmetric_eigen();
    let clipped: Vec<f64> = eig.eigenvalues.iter().map(|&l| l.max(0.0)).collect();
    let total: f64 = clipped.iter().sum();
    let d = nalgebra::DVector::from_iterator(2, clipped.iter().map(|&l| c(l / total)));
    let v = &eig.eigenvectors;
    Ok(v * CMatrix::from_diagonal(&d) * v.adjoint())
}

/// (⟨σx⟩, ⟨σy⟩, ⟨σz⟩) of a 2×2 state.
pub fn bloch_vector(rho: &CMatrix) -> [f64; 3] {
    let [_, sx, sy, sz] = pauli();
    [sx, sy, sz].map(|s| (rho * s).trace().re)
}

#[derive(Clone, Debug, PartialEq)]
pub struct TomographyResult {
    pub theta: f64,
    /// Readout probabilities in the order none, +x, −x, +y, −y.
    pub probabilities: [f64; 5],
    /// Reconstructed electron state.
    pub rho: CMatrix,
    /// Electron state just before the readout pulse, read from the simulation.
    pub direct: CMatrix,
    /// Ideal state the reconstruction is scored against.
    pub reference: CMatrix,
    pub fidelity: f64,
}

impl TomographyResult {
    pub fn bloch(&self) -> [f64; 3] {
        bloch_vector(&self.rho)
    }

    pub fn to_json(&self) -> serde_json::Value {
        let entries = |m: &CMatrix| -> Vec<Vec<[f64; 2]>> {
            (0..2).map(|i| (0..2).map(|j| [m[(i, j)].re, m[(i, j)].im]).collect()).collect()
        };
        let labels = TomoSetting::ALL.map(TomoSetting::label);
        serde_json::json!({
            "theta_rad": self.theta,
            "probabilities": labels.iter().zip(self.probabilities).map(|(l, p)| (l.to_string(), serde_json::Value::from(p))).collect::<serde_json::Map<_, _>>(),
            "rho": entries(&self.rho),
            "reference": entries(&self.reference),
            "bloch": self.bloch(),
            "fidelity": self.fidelity,
        })
    }
}

fn phase_flip(rho: &CMatrix) -> CMatrix {
    let [_, _, _, sz] = pauli();
    &sz * rho * &sz
}

fn electron_given_nucleus0(rho: &crate::operators::DensityMatrix9, system: System) -> Result<CMatrix> {
    let (rho4, _) = project_computational(rho, &CompEmbedding::new(system))?;
    conditional_electron(&rho4, 0)
}

/// Ideal electron state after a CR(θ) gate for θ a multiple of 2π.
///
/// The θ = 0 reference is the simulated input state, read on the nuclear
/// line the selective pulses address; odd multiples of 2π flip its phase.
pub fn tomography_reference(protocol: &Protocol, system: System, theta: f64, params: &NvParams) -> Result<CMatrix> {
    let k = two_pi_multiple(theta)?;
    let mut input = input_state_with(params, system, protocol.mw_mode)?;
    if protocol.input == InputKind::Dephased {
        input = dephase_electron(&input);
    }
    let base = electron_given_nucleus0(&input, system)?;
    Ok(if k % 2 == 1 { phase_flip(&base) } else { base })
}

fn two_pi_multiple(theta: f64) -> Result<u64> {
    let k = theta / (2.0 * PI);
    if !(theta.is_finite() && theta >= 0.0) || (k - k.round()).abs() > 1e-9 {
        return Err(Error::ThetaNotMultipleOfTwoPi(theta));
    }
    Ok(k.round() as u64)
}

/// Five-setting electron tomography after a CR(θ) gate.
///
/// Each setting is a separate experiment whose step-3 pulse selects the
/// measured Bloch component. The selective pulses act on the nuclear
/// logical |0⟩ line, so the readout is the electron population given that
/// nuclear state.
pub fn tomography_run(
    theta: f64,
    protocol: &Protocol,
    system: System,
    noise: &NoiseModel,
    params: &NvParams,
    config: &EngineConfig,
) -> Result<TomographyResult> {
    let reference = tomography_reference(protocol, system, theta, params)?;
    let runs = TomoSetting::ALL
        .par_iter()
        .map(|&setting| {
            let (schedule, rho0) = protocol.compile(system, theta, Readout::Tomo(setting), params)?;
            let result = propagate(&schedule, &rho0, params, noise, config)?;
            let state = &result.measurements.last().ok_or_else(|| Error::Numeric("missing readout".into()))?.state;
            Ok((readout_p0_given_nucleus(state, system, 0)?, electron_given_nucleus0(state, system)?))
        })
        .collect::<Result<Vec<(f64, CMatrix)>>>()?;
    let p: [f64; 5] = std::array::from_fn(|k| runs[k].0);
    let rho = reconstruct_qubit(p[0], p[1], p[2], p[3], p[4])?;
    let fidelity = fidelity(&rho, &reference)?;
    Ok(TomographyResult { theta, probabilities: p, rho, direct: runs[0].1.clone(), reference, fidelity })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{trace_distance, C64};

    #[test]
    fn reconstruction_examples() {
        let [e, _, sy, sz] = pauli();
        let rho = reconstruct_qubit(0.5, 1.0, 0.0, 0.5, 0.5).unwrap();
        assert!(trace_distance(&rho, &((&e + &sy) * c(0.5))) < 1e-15);
        let rho = reconstruct_qubit(1.0, 0.5, 0.5, 0.5, 0.5).unwrap();
        assert!(trace_distance(&rho, &((&e + &sz) * c(0.5))) < 1e-15);
        let rho = reconstruct_qubit(0.5, 0.5, 0.5, 0.5, 0.5).unwrap();
        assert!(trace_distance(&rho, &(&e * c(0.5))) < 1e-15);
    }

    #[test]
    fn inconsistent_data_is_flagged() {
        assert!(matches!(reconstruct_qubit(1.0, 1.0, 0.0, 0.5, 0.5), Err(Error::InconsistentTomography(_))));
        assert!(reconstruct_qubit(1.2, 0.5, 0.5, 0.5, 0.5).is_err());
    }

    #[test]
    fn slightly_unphysical_data_is_projected() {
        let rho = reconstruct_qubit(0.5, 1.0, 0.0, 0.5, 0.48).unwrap();
        let eig = rho.clone().symmetric_eigen().eigenvalues;
        assert!(eig.iter().all(|&l| l >= -1e-15));
        assert!((rho.trace() - C64::new(1.0, 0.0)).norm() < 1e-12);
    }

    #[test]
    fn theta_must_be_multiple_of_two_pi() {
        assert!(two_pi_multiple(PI).is_err());
        assert_eq!(two_pi_multiple(4.0 * PI).unwrap(), 2);
    }
}
