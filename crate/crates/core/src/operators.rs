//! Spin-1 operator algebra on the electron ⊗ ¹⁴N register.
//!
//! The nine product levels |m_s, m_i⟩ are stored in a fixed flat order:
//! m_s ∈ (+1, 0, −1) is the major index and m_i ∈ (+1, 0, −1) the minor
//! index, so `flat = 3·(1 − m_s) + (1 − m_i)`. Every 9×9 literal in the
//! crate uses this order.

use std::fmt;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub type C64 = Complex64;
pub type CMatrix = DMatrix<C64>;

pub const DIM: usize = 9;

const HERMITIAN_TOL: f64 = 1e-10;
const TRACE_TOL: f64 = 1e-10;
const POSITIVITY_TOL: f64 = -1e-9;
const UNITARY_TOL: f64 = 1e-6;

pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A product level |m_s, m_i⟩ of the electron and nuclear spin-1 pair.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct LevelIndex {
    pub ms: i8,
    pub mi: i8,
}

impl LevelIndex {
    pub fn new(ms: i8, mi: i8) -> Result<Self> {
        if !(-1..=1).contains(&ms) || !(-1..=1).contains(&mi) {
            return Err(Error::InvalidParameter(format!(
                "magnetic quantum numbers must lie in {{-1, 0, 1}}, got ({ms}, {mi})"
            )));
        }
        Ok(Self { ms, mi })
    }

    pub const fn flat(self) -> usize {
        (3 * (1 - self.ms as isize) + (1 - self.mi as isize)) as usize
    }

    pub fn from_flat(index: usize) -> Self {
        assert!(index < DIM, "flat level index out of range: {index}");
        Self { ms: 1 - (index / 3) as i8, mi: 1 - (index % 3) as i8 }
    }

    pub fn all() -> impl Iterator<Item = LevelIndex> {
        (0..DIM).map(Self::from_flat)
    }
}

impl fmt::Display for LevelIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{}", self.ms, self.mi)
    }
}

/// Which 4-level subspace of the register carries the two logical qubits.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum System {
    /// Nuclear logical |1⟩ is m_i = −1.
    #[default]
    A,
    /// Nuclear logical |1⟩ is m_i = +1.
    B,
}

impl System {
    /// m_i of the nuclear logical |1⟩ state.
    pub fn nuclear_branch(self) -> i8 {
        match self {
            System::A => -1,
            System::B => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            System::A => "a",
            System::B => "b",
        }
    }
}

impl fmt::Display for System {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for System {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "a" | "A" => Ok(System::A),
            "b" | "B" => Ok(System::B),
            other => Err(Error::InvalidParameter(format!("unknown system '{other}'"))),
        }
    }
}

/// Placement of the logical basis |00⟩, |01⟩, |10⟩, |11⟩ inside the 9 levels.
///
/// Qubit 1 (electron) is the major index: {|0⟩₁, |1⟩₁} = {m_s = 0, m_s = −1};
/// qubit 2 (nucleus) is {m_i = 0, m_i = ∓1} for systems a/b.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct CompEmbedding {
    pub system: System,
    pub levels: [LevelIndex; 4],
}

impl CompEmbedding {
    pub fn new(system: System) -> Self {
        let q = system.nuclear_branch();
        Self {
            system,
            levels: [
                LevelIndex { ms: 0, mi: 0 },
                LevelIndex { ms: 0, mi: q },
                LevelIndex { ms: -1, mi: 0 },
                LevelIndex { ms: -1, mi: q },
            ],
        }
    }

    pub fn flat_indices(&self) -> [usize; 4] {
        self.levels.map(LevelIndex::flat)
    }

    /// Restricts a 9×9 operator to the 4×4 computational block.
    pub fn restrict(&self, op: &CMatrix) -> CMatrix {
        let idx = self.flat_indices();
        CMatrix::from_fn(4, 4, |r, c| op[(idx[r], idx[c])])
    }

    /// Places a 4×4 operator into the computational block of a 9×9 zero matrix.
    pub fn lift(&self, op4: &CMatrix) -> CMatrix {
        let idx = self.flat_indices();
        let mut out = CMatrix::zeros(DIM, DIM);
        for r in 0..4 {
            for c in 0..4 {
                out[(idx[r], idx[c])] = op4[(r, c)];
            }
        }
        out
    }
}

/// A 9×9 operator on the register.
#[derive(Clone, Debug, PartialEq)]
pub struct Operator9(CMatrix);

impl Operator9 {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix, DIM)?;
        Ok(Self(matrix))
    }

    pub fn identity() -> Self {
        Self(CMatrix::identity(DIM, DIM))
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        hermiticity_defect(&self.0) <= tol
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        unitarity_defect(&self.0) <= tol
    }
}

/// A validated 9×9 density matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix9(CMatrix);

impl DensityMatrix9 {
    /// Validates Hermiticity (1e-10), unit trace (1e-10) and positivity
    /// (eigenvalues ≥ −1e-9).
    pub fn new(matrix: CMatrix) -> Result<Self> {
        check_square(&matrix, DIM)?;
        validate_state(&matrix)?;
        Ok(Self(matrix))
    }

    pub(crate) fn from_unchecked(matrix: CMatrix) -> Self {
        debug_assert_eq!(matrix.shape(), (DIM, DIM));
        Self(matrix)
    }

    pub fn maximally_mixed() -> Self {
        Self(CMatrix::identity(DIM, DIM) / c(DIM as f64))
    }

    pub fn pure_level(level: LevelIndex) -> Self {
        let mut m = CMatrix::zeros(DIM, DIM);
        m[(level.flat(), level.flat())] = c(1.0);
        Self(m)
    }

    /// |ψ⟩⟨ψ| for a normalised 9-component state vector.
    pub fn from_pure(amplitudes: &[C64]) -> Result<Self> {
        if amplitudes.len() != DIM {
            return Err(Error::DimensionMismatch { expected: DIM, got: amplitudes.len() });
        }
        let v = nalgebra::DVector::from_column_slice(amplitudes);
        Self::new(&v * v.adjoint())
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn population(&self, level: LevelIndex) -> f64 {
        self.0[(level.flat(), level.flat())].re
    }

    pub fn trace(&self) -> C64 {
        self.0.trace()
    }

    pub fn trace_distance(&self, other: &DensityMatrix9) -> f64 {
        trace_distance(&self.0, &other.0)
    }
}

/// Spin-1 matrices in the (+1, 0, −1) basis.
#[derive(Clone, Debug)]
pub struct Spin1 {
    pub x: CMatrix,
    pub y: CMatrix,
    pub z: CMatrix,
}

pub fn spin1_matrices() -> Spin1 {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    let z = C64::new(0.0, 0.0);
    let r = c(s);
    let i = C64::new(0.0, s);
    Spin1 {
        x: CMatrix::from_row_slice(3, 3, &[z, r, z, r, z, r, z, r, z]),
        y: CMatrix::from_row_slice(3, 3, &[z, -i, z, i, z, -i, z, i, z]),
        z: CMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![c(1.0), z, c(-1.0)])),
    }
}

pub fn identity3() -> CMatrix {
    CMatrix::identity(3, 3)
}

/// Kronecker product electron ⊗ nucleus in the fixed level order.
pub fn embed(op_e: &CMatrix, op_n: &CMatrix) -> Operator9 {
    assert_eq!(op_e.shape(), (3, 3), "electron operator must be 3x3");
    assert_eq!(op_n.shape(), (3, 3), "nuclear operator must be 3x3");
    Operator9(op_e.kronecker(op_n))
}

/// Pauli basis (E, σx, σy, σz) in the logical (|0⟩, |1⟩) order.
pub fn pauli() -> [CMatrix; 4] {
    let o = c(0.0);
    let l = c(1.0);
    let i = C64::new(0.0, 1.0);
    [
        CMatrix::identity(2, 2),
        CMatrix::from_row_slice(2, 2, &[o, l, l, o]),
        CMatrix::from_row_slice(2, 2, &[o, -i, i, o]),
        CMatrix::from_row_slice(2, 2, &[l, o, o, -l]),
    ]
}

/// Projects ρ onto the computational subspace of `emb`.
///
/// Returns the renormalised 4×4 block and the subspace weight Tr(PρP).
pub fn project_computational(rho: &DensityMatrix9, emb: &CompEmbedding) -> Result<(CMatrix, f64)> {
    let block = emb.restrict(rho.matrix());
    let weight = block.trace().re;
    if weight < 1e-12 {
        return Err(Error::DegenerateProjection { weight });
    }
    Ok((block / c(weight), weight))
}

/// Partial trace of a two-qubit state over the nuclear (second) qubit.
pub fn reduced_electron(rho4: &CMatrix) -> Result<CMatrix> {
    check_square(rho4, 4)?;
    Ok(CMatrix::from_fn(2, 2, |r, c| rho4[(2 * r, 2 * c)] + rho4[(2 * r + 1, 2 * c + 1)]))
}

/// Electron state conditioned on the nucleus being in logical `nuclear_bit`.
///
/// This is what transition-selective electron pulses on one nuclear line
/// actually measure.
pub fn conditional_electron(rho4: &CMatrix, nuclear_bit: usize) -> Result<CMatrix> {
    check_square(rho4, 4)?;
    if nuclear_bit > 1 {
        return Err(Error::InvalidParameter(format!("nuclear bit must be 0 or 1, got {nuclear_bit}")));
    }
    let block = CMatrix::from_fn(2, 2, |r, c| rho4[(2 * r + nuclear_bit, 2 * c + nuclear_bit)]);
    let weight = block.trace().re;
    if weight < 1e-12 {
        return Err(Error::DegenerateProjection { weight });
    }
    Ok(block / c(weight))
}

/// F = |Tr(ρ_exp ρ_ideal)|, the overlap used to score tomography results.
///
/// This is not the Uhlmann fidelity; for a pure ideal state it equals
/// ⟨ψ|ρ_exp|ψ⟩.
pub fn fidelity(rho_exp: &CMatrix, rho_ideal: &CMatrix) -> Result<f64> {
    if rho_exp.shape() != rho_ideal.shape() {
        return Err(Error::DimensionMismatch { expected: rho_ideal.nrows(), got: rho_exp.nrows() });
    }
    Ok((rho_exp * rho_ideal).trace().norm())
}

/// Phase-insensitive distance between two unitaries, 1 − |Tr(U†V)|/d.
///
/// Zero exactly when U = e^{iφ}V. Both inputs must be unitary within 1e-6.
pub fn unitary_distance(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() || u.nrows() != u.ncols() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), got: v.nrows() });
    }
    for m in [u, v] {
        let deviation = unitarity_defect(m);
        if deviation > UNITARY_TOL {
            return Err(Error::NotUnitary { deviation });
        }
    }
    let d = u.nrows() as f64;
    Ok((1.0 - (u.adjoint() * v).trace().norm() / d).max(0.0))
}

/// State-averaged gate fidelity (d + |Tr(U†V)|²) / (d(d+1)).
pub fn average_gate_fidelity(u: &CMatrix, v: &CMatrix) -> Result<f64> {
    if u.shape() != v.shape() {
        return Err(Error::DimensionMismatch { expected: u.nrows(), got: v.nrows() });
    }
    let d = u.nrows() as f64;
    let overlap = (u.adjoint() * v).trace().norm_sqr();
    Ok((d + overlap) / (d * (d + 1.0)))
}

/// ½‖A − B‖₁ for Hermitian A, B.
pub fn trace_distance(a: &CMatrix, b: &CMatrix) -> f64 {
    let diff = a - b;
    let herm = (&diff + diff.adjoint()) * c(0.5);
    herm.symmetric_eigenvalues().iter().map(|e| e.abs()).sum::<f64>() * 0.5
}

pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    (m - m.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub fn unitarity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    (m * m.adjoint() - CMatrix::identity(n, n)).iter().map(|z| z.norm()).fold(0.0, f64::max)
}

pub(crate) fn check_square(m: &CMatrix, n: usize) -> Result<()> {
    if m.nrows() != n || m.ncols() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.nrows().max(m.ncols()) });
    }
    Ok(())
}

fn validate_state(m: &CMatrix) -> Result<()> {
    let herm = hermiticity_defect(m);
    if herm > HERMITIAN_TOL {
        return Err(Error::InvalidState(format!("not Hermitian (defect {herm:.3e})")));
    }
    let tr = m.trace();
    if (tr - c(1.0)).norm() > TRACE_TOL {
        return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
    }
    let sym = (m + m.adjoint()) * c(0.5);
    let min = sym.symmetric_eigenvalues().iter().cloned().fold(f64::INFINITY, f64::min);
    if min < POSITIVITY_TOL {
        return Err(Error::InvalidState(format!("negative eigenvalue {min:.3e}")));
    }
    Ok(())
}
