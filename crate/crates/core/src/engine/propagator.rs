//! Rotating-frame propagators for single events.
//!
//! The engine keeps the state in the interaction picture of the static
//! Hamiltonian H0, where free evolution is the identity. A rectangular pulse
//! at carrier ν is exactly time independent in the frame e^{i2πνN t}, with
//! N a level number that increases by one along every co-rotating pair of
//! the driven channel. Within that frame the Hamiltonian splits into
//! connected blocks of levels joined by kept couplings; each block is
//! shifted by its mean diagonal so that only small frequencies (detunings,
//! Rabi rates, noise) enter the matrix exponential. The large block means
//! cancel between the pulse frame and the H0 picture and only the offsets
//! w_k of each level relative to its block survive.

use std::f64::consts::PI;

use nalgebra::DVector;

use crate::hamiltonian::{drive_operator, Channel, NvParams};
use crate::operators::{CMatrix, LevelIndex, System, C64, DIM};
use crate::schedule::PulseEvent;
use crate::{Error, Result};

/// Couplings with |Δ| above this multiple of the pulse Rabi frequency are dropped.
pub const DEFAULT_RWA_FACTOR: f64 = 50.0;

/// exp(−i·s·H) for Hermitian H.
pub(crate) fn expm_hermitian(h: &CMatrix, s: f64) -> CMatrix {
    if h.iter().all(|z| *z == C64::new(0.0, 0.0)) {
        return CMatrix::identity(h.nrows(), h.ncols());
    }
    let eig = h.clone().symmetric_eigen();
    let phases = DVector::from_iterator(h.nrows(), eig.eigenvalues.iter().map(|&l| C64::from_polar(1.0, -s * l)));
    let v = &eig.eigenvectors;
    v * CMatrix::from_diagonal(&phases) * v.adjoint()
}

pub(crate) fn diag_phase(phases: impl Iterator<Item = f64>) -> DVector<C64> {
    DVector::from_iterator(DIM, phases.map(|p| C64::from_polar(1.0, p)))
}

/// D·M·D† for diagonal D.
pub(crate) fn conjugate_diag(m: &CMatrix, d: &DVector<C64>) -> CMatrix {
    CMatrix::from_fn(DIM, DIM, |i, j| d[i] * m[(i, j)] * d[j].conj())
}

/// Standard level numbers of a channel: −m_s for MW, −m_i·q for RF.
pub fn frame_numbers(channel: Channel, nuclear_branch: i8) -> [f64; DIM] {
    std::array::from_fn(|k| {
        let l = LevelIndex::from_flat(k);
        match channel {
            Channel::Mw => -(l.ms as f64),
            Channel::Rf => -(l.mi as f64) * nuclear_branch as f64,
        }
    })
}

/// Virtual-Z frame e^{iΘ_mw·N_mw + iΘ_rf·N_rf} as diagonal phases.
pub(crate) fn virtual_frame(angles_deg: [f64; 2], system: System) -> DVector<C64> {
    let mw = frame_numbers(Channel::Mw, system.nuclear_branch());
    let rf = frame_numbers(Channel::Rf, system.nuclear_branch());
    let (a, b) = (angles_deg[0].to_radians(), angles_deg[1].to_radians());
    diag_phase((0..DIM).map(|k| a * mw[k] + b * rf[k]))
}

#[derive(Clone, Debug)]
struct Coupling {
    p: usize,
    q: usize,
    /// |p⟩⟨q| coefficient for zero phase, Hz (finite) or dimensionless (ideal).
    weight: f64,
    detuning: f64,
}

/// Time-independent description of one pulse: frame, kept couplings and blocks.
#[derive(Clone, Debug)]
pub struct PulsePlan {
    couplings: Vec<Coupling>,
    /// Offset of each level's frame energy from its block reference, Hz.
    w: [f64; DIM],
    block: [usize; DIM],
    ms: [f64; DIM],
    phase: f64,
    target_detuning: f64,
    rabi: f64,
    flip: f64,
}

fn find(parent: &mut [usize; DIM], mut i: usize) -> usize {
    while parent[i] != i {
        parent[i] = parent[parent[i]];
        i = parent[i];
    }
    i
}

impl PulsePlan {
    /// `phase_offset` is the channel's accumulated virtual-Z offset, degrees.
    pub fn new(pulse: &PulseEvent, phase_offset: f64, params: &NvParams, rwa_cutoff: Option<f64>) -> Result<Self> {
        let (x, amp) = drive_operator(pulse.channel, pulse.target)?;
        let x = x.into_matrix();
        let e = params.energies();
        let (ta, tb) = (pulse.target.a, pulse.target.b);
        let branch = match pulse.channel {
            Channel::Mw => 1,
            Channel::Rf => ta.mi + tb.mi,
        };
        let mut n = frame_numbers(pulse.channel, branch);
        // orient the frame so that the target pair co-rotates with the carrier
        let (fa, fb) = (ta.flat(), tb.flat());
        if (e[fa] - e[fb]) * (n[fa] - n[fb]) < 0.0 {
            n.iter_mut().for_each(|v| *v = -*v);
        }
        let nu = pulse.freq;
        let pair_detuning = |p: usize, q: usize| (e[p] - e[q]) - nu * (n[p] - n[q]);
        let cutoff = if pulse.instantaneous {
            pulse.rabi
        } else {
            rwa_cutoff.unwrap_or(DEFAULT_RWA_FACTOR * pulse.rabi)
        };
        let (tp, tq) = if n[fa] > n[fb] { (fa, fb) } else { (fb, fa) };
        let target_detuning = pair_detuning(tp, tq);
        if !pulse.instantaneous && target_detuning.abs() > cutoff {
            return Err(Error::Config(format!(
                "target {} is detuned by {target_detuning} Hz, beyond the RWA cutoff {cutoff} Hz",
                pulse.target
            )));
        }
        let scale = if pulse.instantaneous { amp } else { pulse.rabi * amp / 2.0 };
        let mut couplings = Vec::new();
        for p in 0..DIM {
            for q in 0..DIM {
                if x[(p, q)].norm() == 0.0 || (n[p] - n[q] - 1.0).abs() > 1e-9 {
                    continue;
                }
                let detuning = pair_detuning(p, q);
                let is_target = (p, q) == (tp, tq);
                if is_target || detuning.abs() <= cutoff {
                    couplings.push(Coupling { p, q, weight: scale * x[(p, q)].re, detuning });
                }
            }
        }
        let mut parent: [usize; DIM] = std::array::from_fn(|i| i);
        for c in &couplings {
            let (a, b) = (find(&mut parent, c.p), find(&mut parent, c.q));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
        let block: [usize; DIM] = std::array::from_fn(|i| find(&mut parent, i));
        let w = std::array::from_fn(|k| {
            let r = block[k];
            (e[k] - e[r]) - nu * (n[k] - n[r])
        });
        let ms = std::array::from_fn(|k| LevelIndex::from_flat(k).ms as f64);
        Ok(Self {
            couplings,
            w,
            block,
            ms,
            phase: (pulse.phase + phase_offset).to_radians(),
            target_detuning,
            rabi: pulse.rabi,
            flip: pulse.flip().to_radians(),
        })
    }

    /// Plan with no drive: every level is its own block.
    pub fn free() -> Self {
        Self {
            couplings: Vec::new(),
            w: [0.0; DIM],
            block: std::array::from_fn(|i| i),
            ms: std::array::from_fn(|k| LevelIndex::from_flat(k).ms as f64),
            phase: 0.0,
            target_detuning: 0.0,
            rabi: 0.0,
            flip: 0.0,
        }
    }

    /// Largest kept detuning or the Rabi frequency, whichever is larger.
    pub fn max_frequency(&self) -> f64 {
        self.couplings.iter().map(|c| c.detuning.abs()).fold(self.rabi, f64::max)
    }

    pub fn kept_pairs(&self) -> Vec<(LevelIndex, LevelIndex)> {
        self.couplings.iter().map(|c| (LevelIndex::from_flat(c.p), LevelIndex::from_flat(c.q))).collect()
    }

    /// Segment [t_start, t_start + tau] under constant detuning noise δ (Hz).
    pub fn segment(&self, t_start: f64, tau: f64, delta: f64) -> Segment {
        let mut h = CMatrix::zeros(DIM, DIM);
        for c in &self.couplings {
            let g = C64::from_polar(c.weight, self.phase);
            h[(c.p, c.q)] += g;
            h[(c.q, c.p)] += g.conj();
        }
        let mut mean = [0.0; DIM];
        let mut count = [0usize; DIM];
        for k in 0..DIM {
            mean[self.block[k]] += self.w[k] + delta * self.ms[k];
            count[self.block[k]] += 1;
        }
        let mut b = [0.0; DIM];
        for k in 0..DIM {
            let m = mean[self.block[k]] / count[self.block[k]] as f64;
            h[(k, k)] = C64::new(self.w[k] + delta * self.ms[k] - m, 0.0);
            b[k] = m - self.w[k];
        }
        Segment { h, w: self.w, b, t_start, tau }
    }

    /// Ideal zero-duration rotation at time `t`.
    ///
    /// Every kept pair is rotated with the target's frame phase, so a hard
    /// pulse acts identically on all hyperfine lines.
    pub fn instantaneous(&self, t: f64) -> CMatrix {
        let phase = self.phase + 2.0 * PI * frac(self.target_detuning * t);
        let mut g = CMatrix::zeros(DIM, DIM);
        for c in &self.couplings {
            let z = C64::from_polar(c.weight, phase);
            g[(c.p, c.q)] += z;
            g[(c.q, c.p)] += z.conj();
        }
        expm_hermitian(&g, self.flip / 2.0)
    }
}

fn frac(x: f64) -> f64 {
    x - x.floor()
}

/// One piecewise-constant step: U = diag(e^{−i2πbτ})·W·exp(−i2πhτ)·W†
/// with W = diag(e^{i2πw·t_start}).
#[derive(Clone, Debug)]
pub struct Segment {
    pub h: CMatrix,
    w: [f64; DIM],
    b: [f64; DIM],
    t_start: f64,
    pub tau: f64,
}

impl Segment {
    fn w_phases(&self) -> DVector<C64> {
        diag_phase(self.w.iter().map(|&w| 2.0 * PI * frac(w * self.t_start)))
    }

    fn b_phases(&self) -> DVector<C64> {
        diag_phase(self.b.iter().map(|&b| -2.0 * PI * frac(b * self.tau)))
    }

    pub fn unitary(&self) -> CMatrix {
        let core = expm_hermitian(&self.h, 2.0 * PI * self.tau);
        let rotated = conjugate_diag(&core, &self.w_phases());
        let b = self.b_phases();
        CMatrix::from_fn(DIM, DIM, |i, j| b[i] * rotated[(i, j)])
    }

    /// Open-system step with a precomputed dissipator superoperator.
    pub fn apply_lindblad(&self, rho: &CMatrix, dissipator: &CMatrix) -> CMatrix {
        use super::lindblad::{hamiltonian_superoperator, unvectorize, vectorize};
        let w = self.w_phases();
        let inner = conjugate_diag(rho, &w.map(|z| z.conj()));
        let generator = (hamiltonian_superoperator(&self.h) + dissipator) * C64::new(self.tau, 0.0);
        let evolved = unvectorize(&(generator.exp() * vectorize(&inner)));
        let outer = w.component_mul(&self.b_phases());
        conjugate_diag(&evolved, &outer)
    }
}

/// Electron reset to m_s = 0 keeping the nuclear marginal.
pub(crate) fn laser_reset(rho: &CMatrix) -> CMatrix {
    let mut out = CMatrix::zeros(DIM, DIM);
    let base = LevelIndex { ms: 0, mi: 1 }.flat();
    for a in 0..3 {
        for b in 0..3 {
            let mut acc = C64::new(0.0, 0.0);
            for e in 0..3 {
                acc += rho[(3 * e + a, 3 * e + b)];
            }
            out[(base + a, base + b)] = acc;
        }
    }
    out
}
