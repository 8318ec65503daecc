//! Small dense complex linear algebra.
//!
//! Everything in this crate lives in spaces of dimension 2, 4 or 8, so the
//! routines here favour closed forms and simple sweeps over general-purpose
//! factorizations. [`Mat2`] is the copyable workhorse for qubit operators;
//! [`CMatrix`] covers the 4×4 Choi matrices and 8×8 photonic operators.

use std::fmt;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub type C64 = Complex64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LinalgError {
    #[error("matrix is not Hermitian (max |M - M†| = {deviation:e}, tolerance {tolerance:e})")]
    NotHermitian { deviation: f64, tolerance: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },
    #[error("entry count {entries} does not match shape {rows}x{cols}")]
    BadShape {
        rows: usize,
        cols: usize,
        entries: usize,
    },
    #[error("Jacobi sweeps did not converge (off-diagonal norm {off_norm:e} after {sweeps} sweeps)")]
    NotConverged { sweeps: usize, off_norm: f64 },
}

/// Numerical tolerances shared across the crate.
///
/// The defaults sit roughly two orders of magnitude above double-precision
/// round-off for the depth of the operations that consume them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Max-norm of `M - M†` accepted for Hermitian inputs of eigen-solvers.
    pub hermitian_input: f64,
    /// Max-norm of `ρ - ρ†` accepted for density matrices.
    pub hermitian_state: f64,
    /// Allowed deviation of a density matrix trace from one.
    pub trace: f64,
    /// Most negative eigenvalue accepted as positive semidefinite.
    pub psd: f64,
    /// Jacobi stopping threshold on the off-diagonal Frobenius norm.
    pub jacobi_off_diagonal: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            hermitian_input: 1e-10,
            hermitian_state: 1e-12,
            trace: 1e-10,
            psd: 1e-10,
            jacobi_off_diagonal: 1e-12,
        }
    }
}

/// A 2×2 complex matrix, row-major.
#[derive(Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let m = &self.0;
        write!(
            f,
            "[[{:.6}, {:.6}], [{:.6}, {:.6}]]",
            m[0][0], m[0][1], m[1][0], m[1][1]
        )
    }
}

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub const fn zero() -> Self {
        Mat2([[ZERO, ZERO], [ZERO, ZERO]])
    }

    pub const fn identity() -> Self {
        Mat2([[ONE, ZERO], [ZERO, ONE]])
    }

    pub fn from_real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn diag(a: f64, d: f64) -> Self {
        Mat2::from_real(a, 0.0, 0.0, d)
    }

    pub fn pauli_x() -> Self {
        Mat2::from_real(0.0, 1.0, 1.0, 0.0)
    }

    pub fn pauli_y() -> Self {
        Mat2::new(ZERO, -I, I, ZERO)
    }

    pub fn pauli_z() -> Self {
        Mat2::diag(1.0, -1.0)
    }

    /// `|u⟩⟨v|`.
    pub fn outer(u: [C64; 2], v: [C64; 2]) -> Self {
        Mat2([
            [u[0] * v[0].conj(), u[0] * v[1].conj()],
            [u[1] * v[0].conj(), u[1] * v[1].conj()],
        ])
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.0;
        Mat2([[m[0][0].conj(), m[1][0].conj()], [m[0][1].conj(), m[1][1].conj()]])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn det(&self) -> C64 {
        self.0[0][0] * self.0[1][1] - self.0[0][1] * self.0[1][0]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn apply(&self, v: [C64; 2]) -> [C64; 2] {
        let m = &self.0;
        [m[0][0] * v[0] + m[0][1] * v[1], m[1][0] * v[0] + m[1][1] * v[1]]
    }

    pub fn commutator(&self, other: &Mat2) -> Self {
        *self * *other - *other * *self
    }

    /// Real part of `Tr(self · other)`; the Hilbert–Schmidt inner product
    /// when either factor is Hermitian.
    pub fn trace_product_re(&self, other: &Mat2) -> f64 {
        let a = &self.0;
        let b = &other.0;
        (a[0][0] * b[0][0] + a[0][1] * b[1][0] + a[1][0] * b[0][1] + a[1][1] * b[1][1]).re
    }

    pub fn max_abs(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs_diff(&self, other: &Mat2) -> f64 {
        (*self - *other).max_abs()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.iter().flatten().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        self.max_abs_diff(&self.adjoint())
    }

    /// Hermitian part `(M + M†)/2`.
    pub fn hermitian_part(&self) -> Self {
        (*self + self.adjoint()).scale_re(0.5)
    }

    /// Closed-form eigen-decomposition of a Hermitian 2×2 matrix.
    ///
    /// Only the Hermitian part of `self` is used. Eigenvalues are returned
    /// in descending order; the columns of the returned matrix are the
    /// corresponding orthonormal eigenvectors.
    pub fn eig_hermitian(&self) -> ([f64; 2], Mat2) {
        let a = self.0[0][0].re;
        let d = self.0[1][1].re;
        let b = 0.5 * (self.0[0][1] + self.0[1][0].conj());
        let mean = 0.5 * (a + d);
        let half_diff = 0.5 * (a - d);
        let radius = half_diff.hypot(b.norm());
        let values = [mean + radius, mean - radius];
        if b.norm() <= f64::EPSILON * radius.max(f64::MIN_POSITIVE) || radius == 0.0 {
            let vecs = if a >= d {
                Mat2::identity()
            } else {
                Mat2::from_real(0.0, 1.0, 1.0, 0.0)
            };
            return (values, vecs);
        }
        let cos2 = (half_diff / radius).clamp(-1.0, 1.0);
        let c = ((1.0 + cos2) * 0.5).sqrt();
        let s = ((1.0 - cos2) * 0.5).sqrt();
        // b = |b| e^{iφ}; v₊ = (c, s e^{-iφ}), v₋ = (-s e^{iφ}, c)
        let phase = b / b.norm();
        let vecs = Mat2([
            [C64::new(c, 0.0), -phase * s],
            [phase.conj() * s, C64::new(c, 0.0)],
        ]);
        (values, vecs)
    }

    /// Smallest eigenvalue of the Hermitian part.
    pub fn min_eigenvalue(&self) -> f64 {
        self.eig_hermitian().0[1]
    }

    /// `f(M)` for Hermitian `M` through its spectral decomposition.
    pub fn hermitian_fn(&self, f: impl Fn(f64) -> f64) -> Mat2 {
        let (vals, vecs) = self.eig_hermitian();
        let mut out = Mat2::zero();
        for (k, &v) in vals.iter().enumerate() {
            let col = [vecs.0[0][k], vecs.0[1][k]];
            out += Mat2::outer(col, col).scale_re(f(v));
        }
        out
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        self.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: C64) -> Mat2 {
        self.scale(rhs)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;
    fn mul(self, rhs: f64) -> Mat2 {
        self.scale_re(rhs)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, rhs: Mat2) {
        *self = *self + rhs;
    }
}

impl SubAssign for Mat2 {
    fn sub_assign(&mut self, rhs: Mat2) {
        *self = *self - rhs;
    }
}

/// Dense complex matrix, row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct CMatrix {
    rows: usize,
    cols: usize,
    data: Vec<C64>,
}

impl fmt::Debug for CMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "CMatrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            write!(f, "  ")?;
            for c in 0..self.cols {
                write!(f, "{:.4} ", self[(r, c)])?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl CMatrix {
    pub fn new(rows: usize, cols: usize, data: Vec<C64>) -> Result<Self, LinalgError> {
        if rows * cols != data.len() {
            return Err(LinalgError::BadShape {
                rows,
                cols,
                entries: data.len(),
            });
        }
        Ok(CMatrix { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMatrix {
            rows,
            cols,
            data: vec![ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        CMatrix::from_fn(n, n, |r, c| if r == c { ONE } else { ZERO })
    }

    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> C64) -> Self {
        let data = (0..rows * cols).map(|k| f(k / cols, k % cols)).collect();
        CMatrix { rows, cols, data }
    }

    pub fn from_diag(values: &[f64]) -> Self {
        let n = values.len();
        CMatrix::from_fn(n, n, |r, c| if r == c { values[r].into() } else { ZERO })
    }

    /// `|ψ⟩⟨ψ|` for a column vector `ψ`.
    pub fn projector(psi: &[C64]) -> Self {
        let n = psi.len();
        CMatrix::from_fn(n, n, |r, c| psi[r] * psi[c].conj())
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, c: usize) -> Vec<C64> {
        (0..self.rows).map(|r| self[(r, c)]).collect()
    }

    pub fn adjoint(&self) -> Self {
        CMatrix::from_fn(self.cols, self.rows, |r, c| self[(c, r)].conj())
    }

    pub fn trace(&self) -> C64 {
        (0..self.rows.min(self.cols)).map(|k| self[(k, k)]).sum()
    }

    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix, LinalgError> {
        if self.cols != rhs.rows {
            return Err(LinalgError::DimensionMismatch {
                expected: format!("{} rows", self.cols),
                found: format!("{} rows", rhs.rows),
            });
        }
        let mut out = CMatrix::zeros(self.rows, rhs.cols);
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(r, k)];
                if a == ZERO {
                    continue;
                }
                for c in 0..rhs.cols {
                    out[(r, c)] += a * rhs[(k, c)];
                }
            }
        }
        Ok(out)
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        (0..self.rows)
            .map(|r| (0..self.cols).map(|c| self[(r, c)] * v[c]).sum())
            .collect()
    }

    pub fn kron(&self, rhs: &CMatrix) -> CMatrix {
        CMatrix::from_fn(self.rows * rhs.rows, self.cols * rhs.cols, |r, c| {
            self[(r / rhs.rows, c / rhs.cols)] * rhs[(r % rhs.rows, c % rhs.cols)]
        })
    }

    pub fn scale(&self, s: C64) -> CMatrix {
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &CMatrix) -> f64 {
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn hermitian_deviation(&self) -> f64 {
        if !self.is_square() {
            return f64::INFINITY;
        }
        let n = self.rows;
        let mut dev: f64 = 0.0;
        for r in 0..n {
            for c in r..n {
                dev = dev.max((self[(r, c)] - self[(c, r)].conj()).norm());
            }
        }
        dev
    }

    fn require_hermitian(&self, tol: f64) -> Result<(), LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::DimensionMismatch {
                expected: "square matrix".into(),
                found: format!("{}x{}", self.rows, self.cols),
            });
        }
        let deviation = self.hermitian_deviation();
        if deviation > tol {
            return Err(LinalgError::NotHermitian {
                deviation,
                tolerance: tol,
            });
        }
        Ok(())
    }
}

impl Index<(usize, usize)> for CMatrix {
    type Output = C64;
    fn index(&self, (r, c): (usize, usize)) -> &C64 {
        &self.data[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for CMatrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut C64 {
        &mut self.data[r * self.cols + c]
    }
}

impl Add for &CMatrix {
    type Output = CMatrix;
    fn add(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl Sub for &CMatrix {
    type Output = CMatrix;
    fn sub(self, rhs: &CMatrix) -> CMatrix {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        CMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl From<Mat2> for CMatrix {
    fn from(m: Mat2) -> Self {
        CMatrix {
            rows: 2,
            cols: 2,
            data: vec![m.0[0][0], m.0[0][1], m.0[1][0], m.0[1][1]],
        }
    }
}

impl TryFrom<&CMatrix> for Mat2 {
    type Error = LinalgError;
    fn try_from(m: &CMatrix) -> Result<Self, LinalgError> {
        if m.rows != 2 || m.cols != 2 {
            return Err(LinalgError::DimensionMismatch {
                expected: "2x2".into(),
                found: format!("{}x{}", m.rows, m.cols),
            });
        }
        Ok(Mat2([[m[(0, 0)], m[(0, 1)]], [m[(1, 0)], m[(1, 1)]]]))
    }
}

/// Spectral decomposition of a Hermitian matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    /// Eigenvalues in descending order.
    pub values: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, matching `values`.
    pub vectors: CMatrix,
}

impl Eigen {
    /// `V · diag(f(λ)) · V†`.
    pub fn reconstruct_with(&self, f: impl Fn(f64) -> f64) -> CMatrix {
        let n = self.values.len();
        let v = &self.vectors;
        CMatrix::from_fn(n, n, |r, c| {
            (0..n)
                .map(|k| v[(r, k)] * v[(c, k)].conj() * f(self.values[k]))
                .sum()
        })
    }

    pub fn reconstruct(&self) -> CMatrix {
        self.reconstruct_with(|x| x)
    }
}

pub fn eig_hermitian(m: &CMatrix) -> Result<Eigen, LinalgError> {
    eig_hermitian_with(m, &Tolerances::default())
}

/// Eigen-decomposition of a Hermitian matrix.
///
/// 2×2 inputs use the closed form; larger inputs use cyclic complex Jacobi
/// sweeps until the off-diagonal Frobenius norm falls below
/// `tol.jacobi_off_diagonal` (relative to the matrix norm when that exceeds one).
pub fn eig_hermitian_with(m: &CMatrix, tol: &Tolerances) -> Result<Eigen, LinalgError> {
    m.require_hermitian(tol.hermitian_input)?;
    let n = m.rows();
    if n == 2 {
        let (values, vecs) = Mat2::try_from(m)?.eig_hermitian();
        return Ok(Eigen {
            values: values.to_vec(),
            vectors: vecs.into(),
        });
    }
    let mut a = CMatrix::from_fn(n, n, |r, c| 0.5 * (m[(r, c)] + m[(c, r)].conj()));
    let mut v = CMatrix::identity(n);
    let threshold = tol.jacobi_off_diagonal * a.frobenius_norm().max(1.0);
    let off_norm = |a: &CMatrix| -> f64 {
        let mut s = 0.0;
        for r in 0..n {
            for c in 0..n {
                if r != c {
                    s += a[(r, c)].norm_sqr();
                }
            }
        }
        s.sqrt()
    };
    const MAX_SWEEPS: usize = 64;
    let mut sweeps = 0;
    while off_norm(&a) >= threshold {
        if sweeps == MAX_SWEEPS {
            return Err(LinalgError::NotConverged {
                sweeps,
                off_norm: off_norm(&a),
            });
        }
        sweeps += 1;
        for p in 0..n {
            for q in (p + 1)..n {
                jacobi_rotate(&mut a, &mut v, p, q);
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(j, j)].re.total_cmp(&a[(i, i)].re));
    let values = order.iter().map(|&k| a[(k, k)].re).collect();
    let vectors = CMatrix::from_fn(n, n, |r, c| v[(r, order[c])]);
    Ok(Eigen { values, vectors })
}

/// One complex Jacobi rotation zeroing `a[p][q]`: `A ← J†AJ`, `V ← VJ`.
fn jacobi_rotate(a: &mut CMatrix, v: &mut CMatrix, p: usize, q: usize) {
    let apq = a[(p, q)];
    let b = apq.norm();
    if b < f64::MIN_POSITIVE {
        return;
    }
    let phase = apq / b;
    let theta = (a[(q, q)].re - a[(p, p)].re) / (2.0 * b);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    let n = a.rows();
    // J = [[c, s·e^{iφ}], [-s·e^{-iφ}, c]] on the (p, q) plane
    let jpq = phase * s;
    let jqp = -phase.conj() * s;
    for k in 0..n {
        let akp = a[(k, p)];
        let akq = a[(k, q)];
        a[(k, p)] = akp * c + akq * jqp;
        a[(k, q)] = akp * jpq + akq * c;
    }
    for k in 0..n {
        let apk = a[(p, k)];
        let aqk = a[(q, k)];
        a[(p, k)] = apk * c + aqk * jqp.conj();
        a[(q, k)] = apk * jpq.conj() + aqk * c;
    }
    a[(p, q)] = ZERO;
    a[(q, p)] = ZERO;
    for k in 0..n {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = vkp * c + vkq * jqp;
        v[(k, q)] = vkp * jpq + vkq * c;
    }
}

/// Euclidean projection of `values` onto the probability simplex.
fn project_to_simplex(values: &[f64]) -> Vec<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumulative = 0.0;
    let mut shift = 0.0;
    for (k, &u) in sorted.iter().enumerate() {
        cumulative += u;
        let candidate = (cumulative - 1.0) / (k + 1) as f64;
        if u - candidate > 0.0 {
            shift = candidate;
        }
    }
    values.iter().map(|&x| (x - shift).max(0.0)).collect()
}

/// Nearest (Frobenius) unit-trace positive semidefinite matrix.
///
/// Negative eigenvalues are clipped to zero and the removed mass is spread
/// uniformly over the surviving eigenvalues, repeating until none goes
/// negative. The result is idempotent on valid density matrices.
pub fn psd_project(m: &CMatrix) -> Result<CMatrix, LinalgError> {
    let eig = eig_hermitian(m)?;
    let clipped = project_to_simplex(&eig.values);
    let projected = Eigen {
        values: clipped,
        vectors: eig.vectors,
    };
    let n = projected.values.len();
    let out = CMatrix::from_fn(n, n, |r, c| {
        (0..n)
            .map(|k| {
                projected.vectors[(r, k)] * projected.vectors[(c, k)].conj() * projected.values[k]
            })
            .sum()
    });
    // exact Hermitian symmetry
    Ok(CMatrix::from_fn(n, n, |r, c| {
        if r == c {
            C64::new(out[(r, r)].re, 0.0)
        } else if r < c {
            out[(r, c)]
        } else {
            out[(c, r)].conj()
        }
    }))
}

/// [`psd_project`] specialised to 2×2.
pub fn psd_project2(m: &Mat2) -> Mat2 {
    let (vals, vecs) = m.eig_hermitian();
    let clipped = project_to_simplex(&vals);
    let mut out = Mat2::zero();
    for (k, &w) in clipped.iter().enumerate() {
        let col = [vecs.0[0][k], vecs.0[1][k]];
        out += Mat2::outer(col, col).scale_re(w);
    }
    let off = out.0[0][1];
    Mat2::new(
        C64::new(out.0[0][0].re, 0.0),
        off,
        off.conj(),
        C64::new(out.0[1][1].re, 0.0),
    )
}
