//! X-form qubit channels
//!
//! ```text
//! ρ₁₁ → q ρ₁₁ + (1 − p) ρ₂₂
//! ρ₂₂ → (1 − q) ρ₁₁ + p ρ₂₂
//! ρ₁₂ → √(pq) Z₁ ρ₁₂ + √((1 − q)(1 − p)) Z₂ ρ₂₁
//! ```
//!
//! with index 1 = `|e⟩`. Extraction from trajectories, Choi matrices and the
//! amplitude- and phase-damping special cases.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heom::Trajectory;
use crate::linalg::{eig_hermitian, CMatrix, Mat2, C64, ONE, ZERO};
use crate::state::DensityMatrix;

/// Weight below which a `Z` cannot be identified from data.
pub const ABSENT_WEIGHT: f64 = 1e-8;
/// Slack on probabilities and `|Z|` before clamping.
pub const RANGE_SLACK: f64 = 1e-9;
/// Most negative Choi eigenvalue still accepted as completely positive.
pub const CP_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ChannelError {
    #[error("{name} = {value} is outside [0, 1]")]
    ProbabilityOutOfRange { name: &'static str, value: f64 },
    #[error("|{name}| = {modulus} exceeds 1")]
    OverlapTooLarge { name: &'static str, modulus: f64 },
    #[error("channel is not completely positive (Choi eigenvalue {min_eigenvalue:e})")]
    NotCompletelyPositive { min_eigenvalue: f64, output: Mat2 },
    #[error("trajectories disagree on the time grid")]
    GridMismatch,
    #[error("trajectory `{0}` does not start from the expected initial state")]
    WrongInitialState(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Picture {
    #[default]
    Schrodinger,
    /// Coherences carried in the frame rotating with `H_S`.
    Interaction,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelParams {
    pub time: f64,
    pub p: f64,
    pub q: f64,
    /// `None` when its weight `√(pq)` is below [`ABSENT_WEIGHT`].
    pub z1: Option<C64>,
    /// `None` when its weight `√((1−q)(1−p))` is below [`ABSENT_WEIGHT`].
    pub z2: Option<C64>,
}

fn clamp_probability(name: &'static str, value: f64) -> Result<f64, ChannelError> {
    if !(value >= -RANGE_SLACK && value <= 1.0 + RANGE_SLACK) {
        return Err(ChannelError::ProbabilityOutOfRange { name, value });
    }
    Ok(value.clamp(0.0, 1.0))
}

fn clamp_overlap(name: &'static str, z: Option<C64>) -> Result<Option<C64>, ChannelError> {
    match z {
        Some(z) if !z.is_finite() || z.norm() > 1.0 + RANGE_SLACK => Err(ChannelError::OverlapTooLarge {
            name,
            modulus: z.norm(),
        }),
        Some(z) if z.norm() > 1.0 => Ok(Some(z / z.norm())),
        other => Ok(other),
    }
}

impl ChannelParams {
    /// Validates ranges and stores weight-free `Z`s as absent.
    pub fn new(time: f64, p: f64, q: f64, z1: Option<C64>, z2: Option<C64>) -> Result<Self, ChannelError> {
        let p = clamp_probability("p", p)?;
        let q = clamp_probability("q", q)?;
        let mut params = ChannelParams {
            time,
            p,
            q,
            z1: clamp_overlap("z1", z1)?,
            z2: clamp_overlap("z2", z2)?,
        };
        if params.weight1() < ABSENT_WEIGHT {
            params.z1 = None;
        }
        if params.weight2() < ABSENT_WEIGHT {
            params.z2 = None;
        }
        Ok(params)
    }

    pub fn identity(time: f64) -> Self {
        ChannelParams {
            time,
            p: 1.0,
            q: 1.0,
            z1: Some(ONE),
            z2: None,
        }
    }

    pub fn weight1(&self) -> f64 {
        (self.p * self.q).sqrt()
    }

    pub fn weight2(&self) -> f64 {
        ((1.0 - self.q) * (1.0 - self.p)).sqrt()
    }

    /// `√(pq) Z₁`, zero when absent.
    pub fn coherence_direct(&self) -> C64 {
        self.z1.map_or(ZERO, |z| z * self.weight1())
    }

    /// `√((1−q)(1−p)) Z₂`, zero when absent.
    pub fn coherence_swap(&self) -> C64 {
        self.z2.map_or(ZERO, |z| z * self.weight2())
    }

    /// Action on an arbitrary 2×2 matrix (the map is linear).
    pub fn apply_matrix(&self, m: &Mat2) -> Mat2 {
        let [[r11, r12], [r21, r22]] = m.0;
        let a = self.coherence_direct();
        let b = self.coherence_swap();
        Mat2::new(
            r11 * self.q + r22 * (1.0 - self.p),
            r12 * a + r21 * b,
            r21 * a.conj() + r12 * b.conj(),
            r11 * (1.0 - self.q) + r22 * self.p,
        )
    }

    /// Re-expresses coherences in another picture. Parameters are stored in
    /// the Schrödinger picture; the rotating frame multiplies every output
    /// coherence `ρ₁₂(t)` by `e^{iω₀t}`.
    pub fn in_picture(&self, picture: Picture, omega0: f64) -> ChannelParams {
        match picture {
            Picture::Schrodinger => *self,
            Picture::Interaction => {
                let phase = C64::from_polar(1.0, omega0 * self.time);
                ChannelParams {
                    z1: self.z1.map(|z| z * phase),
                    z2: self.z2.map(|z| z * phase),
                    ..*self
                }
            }
        }
    }

    pub fn is_completely_positive(&self) -> bool {
        choi_matrix(self).cp_ok
    }

    pub const CSV_HEADER: &'static str =
        "time,p,q,re_z1,im_z1,z1_absent,re_z2,im_z2,z2_absent,cp_ok";

    /// Row matching [`Self::CSV_HEADER`]; absent `Z`s print as `0,0,1`.
    pub fn csv_row(&self) -> String {
        let z = |z: Option<C64>| match z {
            Some(z) => format!("{},{},0", z.re, z.im),
            None => "0,0,1".to_string(),
        };
        format!(
            "{},{},{},{},{},{}",
            self.time,
            self.p,
            self.q,
            z(self.z1),
            z(self.z2),
            u8::from(self.is_completely_positive())
        )
    }
}

/// Applies the channel and insists on complete positivity. A CP-invalid
/// channel is reported together with its (possibly unphysical) output.
pub fn apply_channel(params: &ChannelParams, rho0: &DensityMatrix) -> Result<DensityMatrix, ChannelError> {
    let out = params.apply_matrix(rho0.matrix());
    let choi = choi_matrix(params);
    if !choi.cp_ok {
        return Err(ChannelError::NotCompletelyPositive {
            min_eigenvalue: choi.min_eigenvalue,
            output: out,
        });
    }
    // CP maps send states to states; only round-off can push the output off
    Ok(DensityMatrix::projected(&out))
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    /// `Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`, input index major.
    pub matrix: CMatrix,
    pub eigenvalues: Vec<f64>,
    pub min_eigenvalue: f64,
    pub cp_ok: bool,
}

pub fn choi_matrix(params: &ChannelParams) -> ChoiMatrix {
    let mut m = CMatrix::zeros(4, 4);
    for i in 0..2 {
        for j in 0..2 {
            let mut e = Mat2::zero();
            e.0[i][j] = ONE;
            let out = params.apply_matrix(&e);
            for a in 0..2 {
                for b in 0..2 {
                    m[(2 * i + a, 2 * j + b)] = out.0[a][b];
                }
            }
        }
    }
    let eigenvalues = eig_hermitian(&m)
        .expect("Choi matrix of an X-form map is Hermitian")
        .values;
    let min_eigenvalue = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    ChoiMatrix {
        matrix: m,
        cp_ok: min_eigenvalue >= -CP_TOLERANCE,
        eigenvalues,
        min_eigenvalue,
    }
}

/// Recovers `(p, q, Z₁, Z₂)` per grid time from trajectories started in
/// `|e⟩`, `|g⟩`, `(|e⟩+|g⟩)/√2` and `(|e⟩+i|g⟩)/√2`.
pub fn extract_channel_params(
    traj_e: &Trajectory,
    traj_g: &Trajectory,
    traj_plus: &Trajectory,
    traj_plusi: &Trajectory,
) -> Result<Vec<ChannelParams>, ChannelError> {
    for (name, traj, expected) in [
        ("e", traj_e, DensityMatrix::excited()),
        ("g", traj_g, DensityMatrix::ground()),
        ("plus", traj_plus, DensityMatrix::plus()),
        ("plus_i", traj_plusi, DensityMatrix::plus_i()),
    ] {
        if traj.initial_state.matrix().max_abs_diff(expected.matrix()) > 1e-12 {
            return Err(ChannelError::WrongInitialState(name));
        }
        if traj.times != traj_e.times || traj.states.len() != traj_e.times.len() {
            return Err(ChannelError::GridMismatch);
        }
    }
    (0..traj_e.times.len())
        .map(|k| {
            let q = traj_e.states[k].rho(0, 0).re;
            let p = traj_g.states[k].rho(1, 1).re;
            // ρ₁₂ of |+⟩ is (A + B)/2, of |+i⟩ is i(B − A)/2
            let c_plus = traj_plus.states[k].rho(0, 1);
            let c_plusi = traj_plusi.states[k].rho(0, 1);
            let a = c_plus + crate::linalg::I * c_plusi;
            let b = c_plus - crate::linalg::I * c_plusi;
            params_from_coherences(traj_e.times[k], p, q, a, b)
        })
        .collect()
}

/// Builds parameters from the two coherence amplitudes `A = √(pq) Z₁` and
/// `B = √((1−q)(1−p)) Z₂`.
pub fn params_from_coherences(time: f64, p: f64, q: f64, a: C64, b: C64) -> Result<ChannelParams, ChannelError> {
    let p = clamp_probability("p", p)?;
    let q = clamp_probability("q", q)?;
    let w1 = (p * q).sqrt();
    let w2 = ((1.0 - q) * (1.0 - p)).sqrt();
    let z1 = (w1 >= ABSENT_WEIGHT).then(|| a / w1);
    let z2 = (w2 >= ABSENT_WEIGHT).then(|| b / w2);
    ChannelParams::new(time, p, q, z1, z2)
}

/// Amplitude decay: the ground level is stable and the excited population
/// survives with probability `p_ad`. The coherence picks up
/// `e^{i(φ₃ − φ₁)}`; `φ₄` rides on the swap term, which has no weight here.
pub fn amplitude_damping_channel(p_ad: f64, phi1: f64, phi3: f64, _phi4: f64) -> Result<ChannelParams, ChannelError> {
    if !(0.0..=1.0).contains(&p_ad) {
        return Err(ChannelError::ProbabilityOutOfRange {
            name: "p_ad",
            value: p_ad,
        });
    }
    ChannelParams::new(0.0, 1.0, p_ad, Some(C64::from_polar(1.0, phi3 - phi1)), None)
}

/// Dephasing: populations fixed, coherence scaled by `√p_pd`.
pub fn phase_damping_channel(p_pd: f64) -> Result<ChannelParams, ChannelError> {
    if !(0.0..=1.0).contains(&p_pd) {
        return Err(ChannelError::ProbabilityOutOfRange {
            name: "p_pd",
            value: p_pd,
        });
    }
    ChannelParams::new(0.0, 1.0, 1.0, Some(C64::new(p_pd.sqrt(), 0.0)), None)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted(mut v: Vec<f64>) -> Vec<f64> {
        v.sort_by(|a, b| b.total_cmp(a));
        v
    }

    #[test]
    fn identity_channel_is_identity() {
        let id = ChannelParams::identity(0.0);
        let rho = DensityMatrix::from_bloch([0.3, -0.4, 0.5]).unwrap();
        assert!(apply_channel(&id, &rho).unwrap().matrix().max_abs_diff(rho.matrix()) < 1e-15);
        let ev = sorted(choi_matrix(&id).eigenvalues);
        for (e, x) in ev.iter().zip([2.0, 0.0, 0.0, 0.0]) {
            assert!((e - x).abs() < 1e-12);
        }
    }

    #[test]
    fn maximally_mixed_input_populations() {
        let c = ChannelParams::new(0.0, 0.3, 0.8, Some(C64::new(0.2, 0.1)), Some(C64::new(0.0, 0.4))).unwrap();
        let out = apply_channel(&c, &DensityMatrix::maximally_mixed()).unwrap();
        assert!((out.rho(0, 0).re - (0.8 + 1.0 - 0.3) / 2.0).abs() < 1e-15);
        assert!((out.rho(1, 1).re - (1.0 - 0.8 + 0.3) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn depolarizing_diagonal_choi() {
        let c = ChannelParams::new(0.0, 0.5, 0.5, Some(ZERO), Some(ZERO)).unwrap();
        for e in choi_matrix(&c).eigenvalues {
            assert!((e - 0.5).abs() < 1e-12);
        }
    }

    #[test]
    fn amplitude_damping_examples() {
        let id = amplitude_damping_channel(1.0, 0.0, 0.0, 0.0).unwrap();
        let rho = DensityMatrix::from_bloch([0.6, 0.0, 0.2]).unwrap();
        assert!(id.apply_matrix(rho.matrix()).max_abs_diff(rho.matrix()) < 1e-15);

        let full = amplitude_damping_channel(0.0, 0.0, 0.0, 0.0).unwrap();
        assert!(full.z1.is_none() && full.z2.is_none());
        let out = full.apply_matrix(rho.matrix());
        assert!(out.max_abs_diff(DensityMatrix::ground().matrix()) < 1e-15);

        let half = amplitude_damping_channel(0.5, 0.0, 0.0, 0.0).unwrap();
        assert!((half.coherence_direct() - C64::new(0.5f64.sqrt(), 0.0)).norm() < 1e-15);
        let choi = choi_matrix(&half);
        assert!(choi.cp_ok);
        assert!(choi.eigenvalues.iter().any(|e| e.abs() < 1e-12));

        assert!(amplitude_damping_channel(1.5, 0.0, 0.0, 0.0).is_err());
    }

    #[test]
    fn phase_damping_examples() {
        let rho = DensityMatrix::plus();
        let pd = phase_damping_channel(0.25).unwrap();
        let out = pd.apply_matrix(rho.matrix());
        assert!((out.0[0][1] - C64::new(0.25, 0.0)).norm() < 1e-15);
        assert!((out.0[0][0].re - 0.5).abs() < 1e-15);
        let erased = phase_damping_channel(0.0).unwrap().apply_matrix(rho.matrix());
        assert!(erased.0[0][1].norm() < 1e-15);
        assert_eq!(phase_damping_channel(1.0).unwrap(), ChannelParams::identity(0.0));
        assert!(phase_damping_channel(-0.1).is_err());
    }

    #[test]
    fn non_cp_parameters_are_flagged_with_output() {
        // |Z| ≤ 1 always gives a CP map, so bypass the constructor
        let c = ChannelParams {
            time: 0.0,
            p: 0.5,
            q: 0.5,
            z1: Some(C64::new(2.0, 0.0)),
            z2: None,
        };
        match apply_channel(&c, &DensityMatrix::plus()) {
            Err(ChannelError::NotCompletelyPositive { min_eigenvalue, .. }) => assert!(min_eigenvalue < -0.4),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn range_checks() {
        assert!(ChannelParams::new(0.0, 1.1, 0.5, None, None).is_err());
        assert!(ChannelParams::new(0.0, 0.5, 0.5, Some(C64::new(1.1, 0.0)), None).is_err());
        let c = ChannelParams::new(0.0, 1.0 + 5e-10, 0.5, Some(C64::new(1.0 + 5e-10, 0.0)), None).unwrap();
        assert_eq!(c.p, 1.0);
        assert_eq!(c.z1.unwrap().norm(), 1.0);
    }

    #[test]
    fn interaction_picture_rotates_both_coherences() {
        let c = ChannelParams::new(2.0, 0.7, 0.6, Some(C64::new(0.5, 0.0)), Some(C64::new(0.0, 0.5))).unwrap();
        let i = c.in_picture(Picture::Interaction, 1.0);
        let rho = DensityMatrix::from_bloch([0.1, 0.5, -0.3]).unwrap();
        let s = c.apply_matrix(rho.matrix());
        let r = i.apply_matrix(rho.matrix());
        assert!((r.0[0][1] - s.0[0][1] * C64::from_polar(1.0, 2.0)).norm() < 1e-15);
        assert_eq!(c.in_picture(Picture::Schrodinger, 1.0), c);
    }

    #[test]
    fn csv_row_marks_absent() {
        let row = ChannelParams::identity(0.5).csv_row();
        assert_eq!(row, "0.5,1,1,1,0,0,0,0,1,1");
        assert_eq!(ChannelParams::CSV_HEADER.split(',').count(), row.split(',').count());
    }
}
