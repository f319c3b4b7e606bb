//! Lindblad dissipators and column-stacked superoperators.
//!
//! With column stacking vec(AρB) = (Bᵀ ⊗ A)·vec(ρ).

use crate::engine::noise::NoiseModel;
use crate::operators::{c, embed, identity3, spin1_matrices, CMatrix, C64, DIM};

/// Jump operator with its rate in 1/s.
#[derive(Clone, Debug)]
pub struct Dissipator {
    pub op: CMatrix,
    pub rate: f64,
}

/// Dephasing `Sz ⊗ 1` at 2/T2 and, for T1, secular electron jumps
/// |i,m⟩⟨j,m| (i ≠ j, every m) at 1/(3·T1).
///
/// Splitting the T1 jumps per nuclear level keeps every jump an eigen-operator
/// of the free evolution, so the dissipator is the same in every diagonal
/// frame the engine uses.
pub fn lindblad_dissipators(noise: &NoiseModel) -> Vec<Dissipator> {
    let mut out = Vec::new();
    let Some(l) = noise.lindblad else { return out };
    if let Some(t2) = l.t2 {
        out.push(Dissipator { op: embed(&spin1_matrices().z, &identity3()).into_matrix(), rate: 2.0 / t2 });
    }
    if let Some(t1) = l.t1 {
        for i in 0..3 {
            for j in 0..3 {
                if i == j {
                    continue;
                }
                for m in 0..3 {
                    let mut op = CMatrix::zeros(DIM, DIM);
                    op[(3 * i + m, 3 * j + m)] = c(1.0);
                    out.push(Dissipator { op, rate: 1.0 / (3.0 * t1) });
                }
            }
        }
    }
    out
}

fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

/// Σ γ (L*⊗L − ½·1⊗L†L − ½·(L†L)ᵀ⊗1).
pub fn dissipator_superoperator(dissipators: &[Dissipator]) -> CMatrix {
    let id = CMatrix::identity(DIM, DIM);
    let mut d = CMatrix::zeros(DIM * DIM, DIM * DIM);
    for diss in dissipators {
        let l = &diss.op;
        let ldl = l.adjoint() * l;
        let term = kron(&l.map(|z| z.conj()), l) - (kron(&id, &ldl) + kron(&ldl.transpose(), &id)) * c(0.5);
        d += term * c(diss.rate);
    }
    d
}

/// −i2π(1⊗H − Hᵀ⊗1) for H in Hz.
pub fn hamiltonian_superoperator(h: &CMatrix) -> CMatrix {
    let id = CMatrix::identity(DIM, DIM);
    (kron(&id, h) - kron(&h.transpose(), &id)) * C64::new(0.0, -2.0 * std::f64::consts::PI)
}

pub fn vectorize(rho: &CMatrix) -> nalgebra::DVector<C64> {
    nalgebra::DVector::from_column_slice(rho.as_slice())
}

pub fn unvectorize(v: &nalgebra::DVector<C64>) -> CMatrix {
    CMatrix::from_column_slice(DIM, DIM, v.as_slice())
}
