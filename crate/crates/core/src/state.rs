//! Qubit density matrices and photonic polarization ⊗ path states.
//!
//! Basis order is fixed crate-wide: index 0 is the excited level `|e⟩`,
//! index 1 the ground level `|g⟩`. On the photonic side `|H⟩` carries `|e⟩`
//! and `|V⟩` carries `|g⟩`.

use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{psd_project2, CMatrix, LinalgError, Mat2, Tolerances, C64, I, ONE, ZERO};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StateError {
    #[error("density matrix is not Hermitian (deviation {0:e})")]
    NotHermitian(f64),
    #[error("density matrix trace is {0}, expected 1")]
    TraceNotUnit(f64),
    #[error("density matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// A validated qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Mat2", into = "Mat2")]
pub struct DensityMatrix(Mat2);

impl TryFrom<Mat2> for DensityMatrix {
    type Error = StateError;
    fn try_from(m: Mat2) -> Result<Self, StateError> {
        DensityMatrix::new(m)
    }
}

impl From<DensityMatrix> for Mat2 {
    fn from(d: DensityMatrix) -> Mat2 {
        d.0
    }
}

impl DensityMatrix {
    pub fn new(m: Mat2) -> Result<Self, StateError> {
        Self::new_with(m, &Tolerances::default())
    }

    pub fn new_with(m: Mat2, tol: &Tolerances) -> Result<Self, StateError> {
        check_density(&m, tol.hermitian_state, tol.trace, tol.psd)?;
        Ok(DensityMatrix(m))
    }

    /// Validates against loosened tolerances, e.g. for integrator output.
    pub fn new_loose(m: Mat2, tolerance: f64) -> Result<Self, StateError> {
        check_density(&m, tolerance, tolerance, tolerance)?;
        Ok(DensityMatrix(m))
    }

    /// Wraps a matrix without validation. Callers guarantee the invariants.
    pub(crate) fn from_raw(m: Mat2) -> Self {
        DensityMatrix(m)
    }

    /// Nearest valid state: Hermitian part, then unit-trace PSD projection.
    pub fn projected(m: &Mat2) -> Self {
        DensityMatrix(psd_project2(&m.hermitian_part()))
    }

    pub fn pure(psi: [C64; 2]) -> Result<Self, StateError> {
        let norm = (psi[0].norm_sqr() + psi[1].norm_sqr()).sqrt();
        let psi = [psi[0] / norm, psi[1] / norm];
        Self::new(Mat2::outer(psi, psi))
    }

    pub fn excited() -> Self {
        DensityMatrix(Mat2::diag(1.0, 0.0))
    }

    pub fn ground() -> Self {
        DensityMatrix(Mat2::diag(0.0, 1.0))
    }

    /// `(|e⟩ + |g⟩)/√2`.
    pub fn plus() -> Self {
        DensityMatrix(Mat2::from_real(0.5, 0.5, 0.5, 0.5))
    }

    /// `(|e⟩ + i|g⟩)/√2`.
    pub fn plus_i() -> Self {
        DensityMatrix(Mat2::new(
            C64::new(0.5, 0.0),
            C64::new(0.0, -0.5),
            C64::new(0.0, 0.5),
            C64::new(0.5, 0.0),
        ))
    }

    pub fn maximally_mixed() -> Self {
        DensityMatrix(Mat2::diag(0.5, 0.5))
    }

    /// State with Bloch vector `r` (|r| ≤ 1): `(I + r·σ)/2`.
    pub fn from_bloch(r: [f64; 3]) -> Result<Self, StateError> {
        let m = (Mat2::identity()
            + Mat2::pauli_x() * r[0]
            + Mat2::pauli_y() * r[1]
            + Mat2::pauli_z() * r[2])
            * 0.5;
        Self::new(m)
    }

    pub fn bloch_vector(&self) -> [f64; 3] {
        let m = &self.0;
        [
            self.0.trace_product_re(&Mat2::pauli_x()),
            self.0.trace_product_re(&Mat2::pauli_y()),
            (m.0[0][0] - m.0[1][1]).re,
        ]
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn rho(&self, r: usize, c: usize) -> C64 {
        self.0 .0[r][c]
    }

    pub fn expectation(&self, observable: &Mat2) -> f64 {
        self.0.trace_product_re(observable)
    }

    /// Trace distance `½‖ρ − σ‖₁`.
    pub fn trace_distance(&self, other: &DensityMatrix) -> f64 {
        let (vals, _) = (self.0 - other.0).eig_hermitian();
        0.5 * (vals[0].abs() + vals[1].abs())
    }

    /// Uhlmann fidelity `(Tr√(√ρ σ √ρ))²`.
    pub fn fidelity(&self, other: &DensityMatrix) -> f64 {
        let sqrt_rho = self.0.hermitian_fn(|x| x.max(0.0).sqrt());
        let inner = (sqrt_rho * other.0 * sqrt_rho).hermitian_part();
        let (vals, _) = inner.eig_hermitian();
        let root: f64 = vals.iter().map(|v| v.max(0.0).sqrt()).sum();
        root * root
    }

    /// Unitary conjugation `U ρ U†`.
    pub fn conjugated(&self, u: &Mat2) -> DensityMatrix {
        DensityMatrix((*u * self.0 * u.adjoint()).hermitian_part())
    }
}

fn check_density(m: &Mat2, herm: f64, trace: f64, psd: f64) -> Result<(), StateError> {
    let dev = m.hermitian_deviation();
    if dev > herm {
        return Err(StateError::NotHermitian(dev));
    }
    let tr = m.trace().re;
    if (tr - 1.0).abs() > trace {
        return Err(StateError::TraceNotUnit(tr));
    }
    let min = m.min_eigenvalue();
    if min < -psd {
        return Err(StateError::NotPositive(min));
    }
    Ok(())
}

/// Polarization of a photonic mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Polarization {
    H,
    V,
}

impl Polarization {
    pub fn index(self) -> usize {
        match self {
            Polarization::H => 0,
            Polarization::V => 1,
        }
    }
}

pub const PATHS: usize = 4;

/// Single-photon amplitudes over polarization {H, V} ⊗ paths {0, 1, 2, 3}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhotonicState {
    amplitudes: [C64; 8],
}

impl Default for PhotonicState {
    fn default() -> Self {
        PhotonicState {
            amplitudes: [ZERO; 8],
        }
    }
}

impl PhotonicState {
    pub const DIM: usize = 2 * PATHS;

    pub fn index(pol: Polarization, path: usize) -> usize {
        pol.index() * PATHS + path
    }

    pub fn from_amplitudes(amplitudes: [C64; 8]) -> Self {
        PhotonicState { amplitudes }
    }

    /// `|pol⟩|path⟩_p`.
    pub fn basis(pol: Polarization, path: usize) -> Self {
        let mut s = PhotonicState::default();
        s.amplitudes[Self::index(pol, path)] = ONE;
        s
    }

    /// Encodes a qubit state `α|e⟩ + β|g⟩` as `α|H⟩ + β|V⟩` on one path.
    pub fn encode(qubit: [C64; 2], path: usize) -> Self {
        let mut s = PhotonicState::default();
        s.amplitudes[Self::index(Polarization::H, path)] = qubit[0];
        s.amplitudes[Self::index(Polarization::V, path)] = qubit[1];
        s
    }

    pub fn amplitude(&self, pol: Polarization, path: usize) -> C64 {
        self.amplitudes[Self::index(pol, path)]
    }

    pub fn amplitude_mut(&mut self, pol: Polarization, path: usize) -> &mut C64 {
        &mut self.amplitudes[Self::index(pol, path)]
    }

    pub fn amplitudes(&self) -> &[C64; 8] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn inner(&self, other: &PhotonicState) -> C64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum()
    }

    pub fn add(&self, other: &PhotonicState) -> PhotonicState {
        let mut out = *self;
        for (a, b) in out.amplitudes.iter_mut().zip(&other.amplitudes) {
            *a += b;
        }
        out
    }

    pub fn scaled(&self, s: C64) -> PhotonicState {
        let mut out = *self;
        for a in out.amplitudes.iter_mut() {
            *a *= s;
        }
        out
    }

    pub fn max_abs_diff(&self, other: &PhotonicState) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// `|⟨self|other⟩|²` normalised; insensitive to global phase.
    pub fn fidelity(&self, other: &PhotonicState) -> f64 {
        self.inner(other).norm_sqr() / (self.norm_sqr() * other.norm_sqr())
    }

    /// `|ψ⟩⟨ψ|` on the 8-dimensional polarization ⊗ path space.
    pub fn density(&self) -> CMatrix {
        CMatrix::projector(&self.amplitudes)
    }

    /// Polarization state after discarding the path.
    pub fn reduced_polarization(&self) -> Mat2 {
        let mut m = Mat2::zero();
        for path in 0..PATHS {
            let psi = [
                self.amplitude(Polarization::H, path),
                self.amplitude(Polarization::V, path),
            ];
            m += Mat2::outer(psi, psi);
        }
        m
    }
}

/// Traces the path degree of freedom out of an 8×8 operator on
/// polarization ⊗ path (polarization-major index `pol·4 + path`).
pub fn partial_trace_path(rho: &CMatrix) -> Result<DensityMatrix, StateError> {
    if rho.rows() != PhotonicState::DIM || rho.cols() != PhotonicState::DIM {
        return Err(LinalgError::DimensionMismatch {
            expected: "8x8".into(),
            found: format!("{}x{}", rho.rows(), rho.cols()),
        }
        .into());
    }
    let mut m = Mat2::zero();
    for a in 0..2 {
        for b in 0..2 {
            m.0[a][b] = (0..PATHS).map(|k| rho[(a * PATHS + k, b * PATHS + k)]).sum();
        }
    }
    DensityMatrix::new(m)
}

/// Eigenstates of the Pauli operators, in the `|e⟩, |g⟩` basis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PauliEigenstate {
    /// `|e⟩`, +1 of σ_z.
    ZPlus,
    /// `|g⟩`, −1 of σ_z.
    ZMinus,
    XPlus,
    XMinus,
    YPlus,
    YMinus,
}

impl PauliEigenstate {
    pub const ALL: [PauliEigenstate; 6] = [
        PauliEigenstate::ZPlus,
        PauliEigenstate::ZMinus,
        PauliEigenstate::XPlus,
        PauliEigenstate::XMinus,
        PauliEigenstate::YPlus,
        PauliEigenstate::YMinus,
    ];

    pub fn ket(self) -> [C64; 2] {
        let h = C64::new(FRAC_1_SQRT_2, 0.0);
        match self {
            PauliEigenstate::ZPlus => [ONE, ZERO],
            PauliEigenstate::ZMinus => [ZERO, ONE],
            PauliEigenstate::XPlus => [h, h],
            PauliEigenstate::XMinus => [h, -h],
            PauliEigenstate::YPlus => [h, I * h],
            PauliEigenstate::YMinus => [h, -I * h],
        }
    }

    pub fn density(self) -> DensityMatrix {
        let k = self.ket();
        DensityMatrix::from_raw(Mat2::outer(k, k))
    }
}
