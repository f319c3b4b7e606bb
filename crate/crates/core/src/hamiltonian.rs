//! Static Hamiltonian, transition frequencies and drive operators.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::operators::{c, embed, identity3, spin1_matrices, CMatrix, LevelIndex, Operator9, DIM};
use crate::{Error, Result};

pub use crate::operators::System;

/// Rabi frequencies (Hz) of the two nuclear transitions of one system.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuclearRabi {
    pub nu1: f64,
    pub nu2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NuclearRabiTable {
    pub a: NuclearRabi,
    pub b: NuclearRabi,
}

/// Physical constants of the register. Frequencies in Hz, field in gauss,
/// gyromagnetic ratios in Hz/G, times in seconds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NvParams {
    /// Zero-field splitting.
    pub d: f64,
    /// Nuclear quadrupole splitting (signed).
    pub p: f64,
    /// Hyperfine coupling.
    pub a: f64,
    pub gamma_e: f64,
    pub gamma_n: f64,
    /// Field along the NV axis.
    pub b_field: f64,
    pub rabi_nuclear: NuclearRabiTable,
    pub rabi_mw_selective: f64,
    pub rabi_mw_hard: f64,
    pub t1: f64,
    pub t2_markov: f64,
}

impl Default for NvParams {
    fn default() -> Self {
        Self {
            d: 2.87e9,
            p: -4.95e6,
            a: 2.16e6,
            gamma_e: 2.8e6,
            gamma_n: 3.0e2,
            b_field: 87.0,
            rabi_nuclear: NuclearRabiTable {
                a: NuclearRabi { nu1: 9.05e3, nu2: 5.84e3 },
                b: NuclearRabi { nu1: 9.00e3, nu2: 5.60e3 },
            },
            rabi_mw_selective: 0.28e6,
            rabi_mw_hard: 11e6,
            t1: 3.5e-3,
            t2_markov: 34e-6,
        }
    }
}

impl NvParams {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d", self.d),
            ("rabi_nuclear.a.nu1", self.rabi_nuclear.a.nu1),
            ("rabi_nuclear.a.nu2", self.rabi_nuclear.a.nu2),
            ("rabi_nuclear.b.nu1", self.rabi_nuclear.b.nu1),
            ("rabi_nuclear.b.nu2", self.rabi_nuclear.b.nu2),
            ("rabi_mw_selective", self.rabi_mw_selective),
            ("rabi_mw_hard", self.rabi_mw_hard),
            ("t1", self.t1),
            ("t2_markov", self.t2_markov),
        ];
        for (name, v) in positive {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [("p", self.p), ("a", self.a), ("gamma_e", self.gamma_e), ("gamma_n", self.gamma_n)] {
            if !v.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} must be finite")));
            }
        }
        if !(self.b_field.is_finite() && self.b_field >= 0.0) {
            return Err(Error::InvalidParameter(format!("b_field must be non-negative, got {}", self.b_field)));
        }
        Ok(())
    }

    /// Energy (Hz) of one product level; the diagonal of the static Hamiltonian.
    pub fn energy(&self, level: LevelIndex) -> f64 {
        let ms = level.ms as f64;
        let mi = level.mi as f64;
        self.d * ms * ms
            + self.gamma_e * self.b_field * ms
            + self.p * mi * mi
            + self.gamma_n * self.b_field * mi
            + self.a * ms * mi
    }

    pub fn energies(&self) -> [f64; DIM] {
        std::array::from_fn(|i| self.energy(LevelIndex::from_flat(i)))
    }

    /// Per-transition nuclear Rabi frequency (Hz).
    pub fn nuclear_rabi(&self, system: System, label: NuclearLine) -> f64 {
        let table = match system {
            System::A => self.rabi_nuclear.a,
            System::B => self.rabi_nuclear.b,
        };
        match label {
            NuclearLine::Nu1 => table.nu1,
            NuclearLine::Nu2 => table.nu2,
        }
    }
}

/// The two nuclear transitions of a system: ν1 in the m_s = 0 manifold,
/// ν2 in the m_s = −1 manifold.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum NuclearLine {
    Nu1,
    Nu2,
}

impl NuclearLine {
    /// The electron manifold this line lives in.
    pub fn electron_ms(self) -> i8 {
        match self {
            NuclearLine::Nu1 => 0,
            NuclearLine::Nu2 => -1,
        }
    }

    pub fn other(self) -> Self {
        match self {
            NuclearLine::Nu1 => NuclearLine::Nu2,
            NuclearLine::Nu2 => NuclearLine::Nu1,
        }
    }

    pub fn transition(self, system: System) -> Transition {
        let ms = self.electron_ms();
        Transition::new(LevelIndex { ms, mi: 0 }, LevelIndex { ms, mi: system.nuclear_branch() })
    }
}

impl fmt::Display for NuclearLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NuclearLine::Nu1 => "nu1",
            NuclearLine::Nu2 => "nu2",
        })
    }
}

/// Drive channel: microwave on the electron, radio frequency on the nucleus.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Channel {
    Mw,
    Rf,
}

impl Channel {
    pub fn name(self) -> &'static str {
        match self {
            Channel::Mw => "mw",
            Channel::Rf => "rf",
        }
    }

    pub(crate) fn slot(self) -> usize {
        match self {
            Channel::Mw => 0,
            Channel::Rf => 1,
        }
    }
}

impl fmt::Display for Channel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// An unordered pair of levels.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Transition {
    pub a: LevelIndex,
    pub b: LevelIndex,
}

impl Transition {
    pub fn new(a: LevelIndex, b: LevelIndex) -> Self {
        Self { a, b }
    }

    /// The selective MW line |0,0⟩ ↔ |−1,0⟩.
    pub fn mw_main() -> Self {
        Self::new(LevelIndex { ms: 0, mi: 0 }, LevelIndex { ms: -1, mi: 0 })
    }

    /// Which channel's flip operator connects the pair, if any.
    pub fn channel(&self) -> Option<Channel> {
        let dms = (self.a.ms - self.b.ms).abs();
        let dmi = (self.a.mi - self.b.mi).abs();
        match (dms, dmi) {
            (1, 0) => Some(Channel::Mw),
            (0, 1) => Some(Channel::Rf),
            _ => None,
        }
    }

    /// Absolute frequency |E_a − E_b| in Hz.
    pub fn frequency(&self, params: &NvParams) -> f64 {
        (params.energy(self.a) - params.energy(self.b)).abs()
    }
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.a, self.b)
    }
}

pub fn static_hamiltonian(params: &NvParams) -> Operator9 {
    let e = params.energies();
    Operator9::new(CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(DIM, e.iter().map(|&x| c(x)))))
        .expect("9x9 by construction")
}

/// (ν1, ν2) in Hz for the given system.
pub fn nuclear_transitions(params: &NvParams, system: System) -> (f64, f64) {
    (
        NuclearLine::Nu1.transition(system).frequency(params),
        NuclearLine::Nu2.transition(system).frequency(params),
    )
}

/// Frequency of the MW line |0,0⟩ ↔ |−1,0⟩.
pub fn mw_transition(params: &NvParams) -> f64 {
    Transition::mw_main().frequency(params)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TransitionEntry {
    pub label: String,
    pub channel: Channel,
    pub levels: String,
    pub frequency_hz: f64,
}

/// Transition table of one system: ν1, ν2 and the selective MW line.
pub fn transition_table(params: &NvParams, system: System) -> Vec<TransitionEntry> {
    let entry = |label: &str, t: Transition| TransitionEntry {
        label: label.to_string(),
        channel: t.channel().expect("table transitions are driveable"),
        levels: t.to_string(),
        frequency_hz: t.frequency(params),
    };
    vec![
        entry("nu1", NuclearLine::Nu1.transition(system)),
        entry("nu2", NuclearLine::Nu2.transition(system)),
        entry("mw", Transition::mw_main()),
    ]
}

/// Flip operator of a channel and the amplitude normalisation for a target.
///
/// The returned operator is `Sx ⊗ 1` (MW) or `1 ⊗ Ix` (RF). The factor
/// `amp_norm = 1/|⟨p|X|q⟩|` scales a requested per-transition Rabi frequency
/// so that the target pair carries coupling `f_R/2`; every other pair is
/// scaled by the same factor.
pub fn drive_operator(channel: Channel, target: Transition) -> Result<(Operator9, f64)> {
    let s = spin1_matrices();
    let x = match channel {
        Channel::Mw => embed(&s.x, &identity3()),
        Channel::Rf => embed(&identity3(), &s.x),
    };
    let element = x.matrix()[(target.a.flat(), target.b.flat())].norm();
    if target.channel() != Some(channel) || element == 0.0 {
        return Err(Error::DisconnectedPair(target.a.to_string(), target.b.to_string(), channel.name()));
    }
    Ok((x, 1.0 / element))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lvl(ms: i8, mi: i8) -> LevelIndex {
        LevelIndex { ms, mi }
    }

    #[test]
    fn hamiltonian_is_diagonal() {
        let h = static_hamiltonian(&NvParams::default());
        for r in 0..DIM {
            for col in 0..DIM {
                if r != col {
                    assert_eq!(h.matrix()[(r, col)], c(0.0));
                }
            }
        }
    }

    #[test]
    fn energy_examples() {
        let p = NvParams::default();
        assert_eq!(p.energy(lvl(0, 0)), 0.0);
        assert!((p.energy(lvl(-1, 0)) - 2.6264e9).abs() < 1.0);
        assert!((p.energy(lvl(0, -1)) - (-4.9761e6)).abs() < 1e-3);
        assert!((mw_transition(&p) - 2.6264e9).abs() < 1.0);
    }

    #[test]
    fn nuclear_transition_examples() {
        let p = NvParams::default();
        let (n1, n2) = nuclear_transitions(&p, System::A);
        assert!((n1 - 4.9761e6).abs() < 1e-3);
        assert!((n2 - 2.8161e6).abs() < 1e-3);
        let (n1, n2) = nuclear_transitions(&p, System::B);
        assert!((n1 - 4.9239e6).abs() < 1e-3);
        assert!((n2 - 7.0839e6).abs() < 1e-3);
    }

    #[test]
    fn table_agreement_within_10_khz() {
        let p = NvParams::default();
        let (a1, a2) = nuclear_transitions(&p, System::A);
        let (b1, b2) = nuclear_transitions(&p, System::B);
        for (sim, measured) in [(a1, 4.970e6), (a2, 2.808e6), (b1, 4.918e6), (b2, 7.088e6)] {
            assert!((sim - measured).abs() <= 10e3, "{sim} vs {measured}");
        }
    }

    #[test]
    fn hyperfine_splitting_identity() {
        for b in [0.0, 10.0, 87.0, 500.0] {
            let p = NvParams { b_field: b, ..NvParams::default() };
            for system in [System::A, System::B] {
                let (n1, n2) = nuclear_transitions(&p, system);
                assert!(((n1 - n2).abs() - p.a).abs() <= 1e-6 * p.a);
            }
        }
    }

    #[test]
    fn mw_line_is_linear_in_field() {
        let p = NvParams::default();
        let shifted = NvParams { b_field: p.b_field + 3.0, ..p.clone() };
        let shift = mw_transition(&p) - mw_transition(&shifted);
        assert!((shift - p.gamma_e * 3.0).abs() <= 1e-6 * p.gamma_e * 3.0);
    }

    #[test]
    fn zero_field_lines() {
        let p = NvParams { b_field: 0.0, ..NvParams::default() };
        let (n1, n2) = nuclear_transitions(&p, System::A);
        assert!((n1 - 4.95e6).abs() < 1e-6);
        assert!((n2 - 2.79e6).abs() < 1e-6);
    }

    #[test]
    fn drive_operator_examples() {
        let (_, norm) = drive_operator(Channel::Rf, Transition::new(lvl(0, 0), lvl(0, -1))).unwrap();
        assert!((norm - 2f64.sqrt()).abs() < 1e-15);

        let (x, norm) = drive_operator(Channel::Mw, Transition::mw_main()).unwrap();
        assert!((norm - 2f64.sqrt()).abs() < 1e-15);
        let target = x.matrix()[(lvl(0, 0).flat(), lvl(-1, 0).flat())].norm();
        let side = x.matrix()[(lvl(0, -1).flat(), lvl(-1, -1).flat())].norm();
        assert!((side / target - 1.0).abs() < 1e-15);

        assert!(matches!(
            drive_operator(Channel::Rf, Transition::mw_main()),
            Err(Error::DisconnectedPair(..))
        ));
    }

    #[test]
    fn validation() {
        assert!(NvParams::default().validate().is_ok());
        assert!(NvParams { d: -1.0, ..NvParams::default() }.validate().is_err());
        assert!(NvParams { t1: 0.0, ..NvParams::default() }.validate().is_err());
    }
}
