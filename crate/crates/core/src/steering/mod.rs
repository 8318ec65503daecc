//! Temporal steering: the parameter `S_N` and the steerable weight `W_TS`.
//!
//! Alice prepares eigenstates of her observables with probability ½ each;
//! Bob receives them through a channel. The un-normalized conditioned
//! states form the assemblage.

pub mod sdp;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::channel::{apply_channel, ChannelError, ChannelParams};
use crate::linalg::{C64, Mat2};
use crate::state::DensityMatrix;

pub use sdp::{solve_sdp, solve_sdp_with, Face, Lmi, SdpError, SdpOptions, SdpProblem, SdpSolution};

/// Largest strategy table `m^N` we are willing to enumerate.
pub const MAX_STRATEGIES: usize = 64;
/// Assemblage members whose smaller eigenvalue is at most this are treated
/// as exactly rank-deficient.
pub const RANK_TOLERANCE: f64 = 1e-12;
/// Hidden-state rays closer than this (`1 − |⟨v|w⟩|`) are taken as equal.
const RAY_TOLERANCE: f64 = 1e-9;
/// Largest certified duality gap accepted for `W_TS`.
pub const GAP_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SteeringError {
    #[error("observable {index}: {reason}")]
    InvalidObservable { index: usize, reason: &'static str },
    #[error("{0} measurement settings requested; supported are 2 or 3")]
    UnsupportedSettingCount(usize),
    #[error("Alice and Bob need the same number of observables ({alice} vs {bob})")]
    ObservableCountMismatch { alice: usize, bob: usize },
    #[error("assemblage marginals differ between settings by {deviation:e}")]
    Inconsistent { deviation: f64 },
    #[error("assemblage member ({setting}, {outcome}) is not positive semidefinite (min eigenvalue {min_eigenvalue:e})")]
    NotPositive {
        setting: usize,
        outcome: usize,
        min_eigenvalue: f64,
    },
    #[error("outcome {outcome} of setting {setting} has zero probability")]
    ZeroProbability { setting: usize, outcome: usize },
    #[error("{outcomes}^{settings} strategies exceed the cap of {MAX_STRATEGIES}")]
    TooManyStrategies { settings: usize, outcomes: usize },
    #[error("steering SDP did not converge: W_TS ∈ [{weight_lower}, {weight_upper}]")]
    NotConverged {
        weight_lower: f64,
        weight_upper: f64,
        solution: Box<SdpSolution>,
    },
    #[error(transparent)]
    Sdp(#[from] SdpError),
    #[error(transparent)]
    Channel(#[from] ChannelError),
}

/// Named observable pairs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum MeasurementPair {
    #[default]
    Xz,
    Xy,
}

impl MeasurementPair {
    pub fn name(self) -> &'static str {
        match self {
            MeasurementPair::Xz => "xz",
            MeasurementPair::Xy => "xy",
        }
    }
}

/// Alice's observables `A_i` and Bob's `B_i`, all with eigenvalues ±1.
#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSet {
    alice: Vec<Mat2>,
    bob: Vec<Mat2>,
}

fn check_observable(index: usize, m: &Mat2) -> Result<(), SteeringError> {
    if m.hermitian_deviation() > 1e-12 {
        return Err(SteeringError::InvalidObservable {
            index,
            reason: "not Hermitian",
        });
    }
    if (*m * *m).max_abs_diff(&Mat2::identity()) > 1e-12 {
        return Err(SteeringError::InvalidObservable {
            index,
            reason: "does not square to the identity",
        });
    }
    if m.trace().norm() > 1e-12 {
        return Err(SteeringError::InvalidObservable {
            index,
            reason: "is ±I, not a two-outcome measurement",
        });
    }
    Ok(())
}

impl MeasurementSet {
    /// Same observables on both sides.
    pub fn new(observables: Vec<Mat2>) -> Result<Self, SteeringError> {
        Self::with_bob(observables.clone(), observables)
    }

    pub fn with_bob(alice: Vec<Mat2>, bob: Vec<Mat2>) -> Result<Self, SteeringError> {
        if !(2..=3).contains(&alice.len()) {
            return Err(SteeringError::UnsupportedSettingCount(alice.len()));
        }
        if alice.len() != bob.len() {
            return Err(SteeringError::ObservableCountMismatch {
                alice: alice.len(),
                bob: bob.len(),
            });
        }
        for (i, m) in alice.iter().chain(&bob).enumerate() {
            check_observable(i % alice.len(), m)?;
        }
        Ok(MeasurementSet { alice, bob })
    }

    pub fn pair(pair: MeasurementPair) -> Self {
        let second = match pair {
            MeasurementPair::Xz => Mat2::pauli_z(),
            MeasurementPair::Xy => Mat2::pauli_y(),
        };
        MeasurementSet::new(vec![Mat2::pauli_x(), second]).expect("Pauli pairs are valid")
    }

    pub fn xz() -> Self {
        Self::pair(MeasurementPair::Xz)
    }

    pub fn xy() -> Self {
        Self::pair(MeasurementPair::Xy)
    }

    pub fn len(&self) -> usize {
        self.alice.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alice.is_empty()
    }

    pub fn alice(&self) -> &[Mat2] {
        &self.alice
    }

    pub fn bob(&self) -> &[Mat2] {
        &self.bob
    }

    /// Eigenvectors of `A_i`: index 0 for outcome +1, index 1 for −1.
    pub fn eigenstates(&self, i: usize) -> [DensityMatrix; 2] {
        let (_, vecs) = self.alice[i].eig_hermitian();
        [0, 1].map(|k| {
            DensityMatrix::projected(&Mat2::outer(
                [vecs.0[0][k], vecs.0[1][k]],
                [vecs.0[0][k], vecs.0[1][k]],
            ))
        })
    }
}

/// Un-normalized conditioned states `σ̃_{a|A_i}`; `members[i][0]` belongs
/// to outcome +1 and `members[i][1]` to −1.
#[derive(Debug, Clone, PartialEq)]
pub struct Assemblage {
    members: Vec<[Mat2; 2]>,
    probabilities: Vec<[f64; 2]>,
}

impl Assemblage {
    /// Validates positivity and the settings-independent marginal.
    pub fn new(members: Vec<[Mat2; 2]>) -> Result<Self, SteeringError> {
        if members.is_empty() {
            return Err(SteeringError::UnsupportedSettingCount(0));
        }
        for (i, pair) in members.iter().enumerate() {
            for (a, m) in pair.iter().enumerate() {
                let min_eigenvalue = m.min_eigenvalue();
                if min_eigenvalue < -1e-10 || m.hermitian_deviation() > 1e-10 {
                    return Err(SteeringError::NotPositive {
                        setting: i,
                        outcome: a,
                        min_eigenvalue,
                    });
                }
            }
        }
        let marginal = members[0][0] + members[0][1];
        let deviation = members
            .iter()
            .map(|p| (p[0] + p[1]).max_abs_diff(&marginal))
            .fold(0.0, f64::max);
        if deviation > 1e-8 {
            return Err(SteeringError::Inconsistent { deviation });
        }
        let probabilities = members.iter().map(|p| p.map(|m| m.trace().re)).collect();
        Ok(Assemblage { members, probabilities })
    }

    pub fn members(&self) -> &[[Mat2; 2]] {
        &self.members
    }

    pub fn probabilities(&self) -> &[[f64; 2]] {
        &self.probabilities
    }

    pub fn settings(&self) -> usize {
        self.members.len()
    }

    /// `σ̃_{a|A_i}` with each outcome's sign flipped where `flip[i]` is set.
    pub fn relabeled(&self, flip: &[bool]) -> Assemblage {
        let members = self
            .members
            .iter()
            .zip(flip.iter().chain(std::iter::repeat(&false)))
            .map(|(p, &f)| if f { [p[1], p[0]] } else { *p })
            .collect();
        Assemblage::new(members).expect("relabeling preserves validity")
    }

    /// `(1−s)·self + s·other`, member by member.
    pub fn mix(&self, other: &Assemblage, s: f64) -> Result<Assemblage, SteeringError> {
        let members = self
            .members
            .iter()
            .zip(&other.members)
            .map(|(a, b)| [0, 1].map(|k| a[k].scale_re(1.0 - s) + b[k].scale_re(s)))
            .collect();
        Assemblage::new(members)
    }
}

/// `σ̃_{a|A_i} = ½ Φ(|a_i⟩⟨a_i|)`.
pub fn assemblage_from_channel(params: &ChannelParams, meas: &MeasurementSet) -> Result<Assemblage, SteeringError> {
    let members = (0..meas.len())
        .map(|i| {
            let [plus, minus] = meas.eigenstates(i);
            Ok([
                apply_channel(params, &plus)?.matrix().scale_re(0.5),
                apply_channel(params, &minus)?.matrix().scale_re(0.5),
            ])
        })
        .collect::<Result<Vec<_>, ChannelError>>()?;
    Assemblage::new(members)
}

/// `S_N` together with its per-setting terms
/// `E_i = Σ_a P(a|A_i) ⟨B_i⟩²_{a}`.
#[derive(Debug, Clone, PartialEq)]
pub struct TsParameter {
    pub value: f64,
    pub terms: Vec<f64>,
}

pub fn ts_parameter(assemblage: &Assemblage, meas: &MeasurementSet) -> Result<TsParameter, SteeringError> {
    if assemblage.settings() != meas.len() {
        return Err(SteeringError::ObservableCountMismatch {
            alice: assemblage.settings(),
            bob: meas.len(),
        });
    }
    let mut terms = Vec::with_capacity(meas.len());
    for (i, (pair, b)) in assemblage.members.iter().zip(meas.bob()).enumerate() {
        let mut e = 0.0;
        for (a, sigma) in pair.iter().enumerate() {
            let p = assemblage.probabilities[i][a];
            if p <= 1e-15 {
                return Err(SteeringError::ZeroProbability { setting: i, outcome: a });
            }
            let mean = b.trace_product_re(sigma) / p;
            e += p * mean * mean;
        }
        terms.push(e);
    }
    Ok(TsParameter {
        value: terms.iter().sum(),
        terms,
    })
}

/// Deterministic response functions: `entries[λ][i]` is the outcome index
/// that strategy `λ` assigns to setting `i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeterministicStrategyTable {
    pub settings: usize,
    pub outcomes: usize,
    pub entries: Vec<Vec<usize>>,
}

impl DeterministicStrategyTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `D_λ(a|A_i)`.
    pub fn response(&self, lambda: usize, outcome: usize, setting: usize) -> f64 {
        f64::from(u8::from(self.entries[lambda][setting] == outcome))
    }
}

/// All `m^N` assignments in lexicographic order, setting 0 most significant.
pub fn enumerate_strategies(settings: usize, outcomes: usize) -> Result<DeterministicStrategyTable, SteeringError> {
    let too_many = SteeringError::TooManyStrategies { settings, outcomes };
    let count = u32::try_from(settings)
        .ok()
        .and_then(|n| outcomes.checked_pow(n))
        .ok_or(too_many)?;
    if count > MAX_STRATEGIES {
        return Err(SteeringError::TooManyStrategies { settings, outcomes });
    }
    let entries = (0..count)
        .map(|mut l| {
            let mut digits = vec![0; settings];
            for d in digits.iter_mut().rev() {
                *d = l % outcomes;
                l /= outcomes;
            }
            digits
        })
        .collect();
    Ok(DeterministicStrategyTable {
        settings,
        outcomes,
        entries,
    })
}

/// Steering SDP for an assemblage; constraint `k = 2i + a`.
///
/// Rank-deficient members pin every hidden state below them to a face of
/// the cone. The face is imposed exactly rather than by perturbing the
/// member, which would leave the problem without interior and shift the
/// optimum by about the square root of the perturbation.
pub fn steering_problem(assemblage: &Assemblage, table: &DeterministicStrategyTable) -> SdpProblem {
    let mut faces = vec![Face::Full; table.len()];
    let mut constraints = Vec::new();
    for (i, pair) in assemblage.members.iter().enumerate() {
        for (a, sigma) in pair.iter().enumerate() {
            let terms: Vec<(usize, f64)> = (0..table.len())
                .filter(|&l| table.entries[l][i] == a)
                .map(|l| (l, 1.0))
                .collect();
            let h = sigma.hermitian_part();
            let (vals, vecs) = h.eig_hermitian();
            let lmi = if vals[1] > RANK_TOLERANCE {
                Lmi::new(h, terms)
            } else if vals[0] > RANK_TOLERANCE {
                let v = [vecs.0[0][0], vecs.0[1][0]];
                for &(l, _) in &terms {
                    faces[l] = meet(faces[l], v);
                }
                let mut lmi = Lmi::new(Mat2::outer(v, v).scale_re(vals[0]), terms);
                lmi.compress = Some(v);
                lmi
            } else {
                for &(l, _) in &terms {
                    faces[l] = Face::Zero;
                }
                Lmi::new(Mat2::zero(), terms)
            };
            constraints.push(lmi);
        }
    }
    let mut problem = SdpProblem::new(vec![Mat2::identity(); table.len()], constraints);
    problem.faces = faces;
    problem
}

fn meet(face: Face, v: [C64; 2]) -> Face {
    match face {
        Face::Full => Face::Ray(v),
        Face::Ray(w) => {
            let overlap = (w[0].conj() * v[0] + w[1].conj() * v[1]).norm();
            if overlap >= 1.0 - RAY_TOLERANCE {
                Face::Ray(w)
            } else {
                Face::Zero
            }
        }
        Face::Zero => Face::Zero,
    }
}

/// `W_TS = 1 − max Tr Σ_λ ϱ_λ` with a certified bracket.
///
/// The returned solution is repaired so that its primal point is exactly
/// feasible (hidden states clipped to PSD, then shrunk until every
/// constraint holds) and its dual point is exactly feasible (`F` clipped
/// to PSD, then scaled until `Σ_a,i D_λ F ⪰ I`). Its gap therefore bounds
/// the distance to the true optimum.
pub fn ts_weight(assemblage: &Assemblage) -> Result<(f64, SdpSolution), SteeringError> {
    ts_weight_with(assemblage, &SdpOptions::default())
}

pub fn ts_weight_with(assemblage: &Assemblage, opts: &SdpOptions) -> Result<(f64, SdpSolution), SteeringError> {
    let table = enumerate_strategies(assemblage.settings(), 2)?;
    let problem = steering_problem(assemblage, &table);
    let raw = match solve_sdp_with(&problem, opts) {
        Ok(s) => s,
        Err(SdpError::IterationLimit { best } | SdpError::Stalled { best }) => *best,
        Err(e) => return Err(e.into()),
    };
    let sol = certify(&problem, &table, raw);
    let weight = (1.0 - sol.primal_value).clamp(0.0, 1.0);
    // a stalled or truncated run still counts if its repaired bracket is tight
    if sol.gap > GAP_TOLERANCE {
        return Err(SteeringError::NotConverged {
            weight_lower: (1.0 - sol.dual_value).clamp(0.0, 1.0),
            weight_upper: weight,
            solution: Box::new(sol),
        });
    }
    Ok((weight, sol))
}

fn clip_psd(m: &Mat2) -> Mat2 {
    m.hermitian_fn(|v| v.max(0.0))
}

fn project(face: Face, m: &Mat2) -> Mat2 {
    match face {
        Face::Full => clip_psd(m),
        Face::Ray(v) => {
            let t = m.apply(v);
            let t = (v[0].conj() * t[0] + v[1].conj() * t[1]).re;
            Mat2::outer(v, v).scale_re(t.max(0.0))
        }
        Face::Zero => Mat2::zero(),
    }
}

/// Smallest eigenvalue of `Y + I` restricted to the face.
fn restricted_min(face: Face, m: &Mat2) -> f64 {
    match face {
        Face::Full => m.min_eigenvalue(),
        Face::Ray(v) => {
            let t = m.apply(v);
            (v[0].conj() * t[0] + v[1].conj() * t[1]).re
        }
        Face::Zero => f64::INFINITY,
    }
}

fn certify(problem: &SdpProblem, table: &DeterministicStrategyTable, mut sol: SdpSolution) -> SdpSolution {
    let hidden: Vec<Mat2> = sol
        .primal_matrices
        .iter()
        .enumerate()
        .map(|(l, m)| project(problem.face(l), m))
        .collect();
    let feasible = |t: f64| {
        problem.constraints.iter().all(|c| {
            let mut m = c.constant;
            for &(l, coef) in &c.terms {
                m -= hidden[l].scale_re(coef * t);
            }
            m.min_eigenvalue() >= 0.0
        })
    };
    let shrink = if feasible(1.0) {
        1.0
    } else {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    };
    sol.primal_matrices = hidden.iter().map(|h| h.scale_re(shrink)).collect();
    sol.primal_value = sol.primal_matrices.iter().map(|h| h.trace().re).sum();

    let sums = |duals: &[Mat2]| -> Vec<Mat2> {
        (0..table.len())
            .map(|l| {
                let mut m = Mat2::zero();
                for (k, c) in problem.constraints.iter().enumerate() {
                    if c.terms.iter().any(|&(v, _)| v == l) {
                        m += duals[k];
                    }
                }
                m
            })
            .collect()
    };
    let unit_dual = |c: &Lmi| match c.compress {
        None => Mat2::identity(),
        Some(w) => {
            let n = (w[0].norm_sqr() + w[1].norm_sqr()).sqrt();
            let w = [w[0] / n, w[1] / n];
            Mat2::outer(w, w)
        }
    };
    let mut duals: Vec<Mat2> = sol.dual_matrices.iter().map(clip_psd).collect();
    let weakest = sums(&duals)
        .iter()
        .enumerate()
        .map(|(l, m)| restricted_min(problem.face(l), m))
        .fold(f64::INFINITY, f64::min);
    if weakest > 0.0 && weakest.is_finite() {
        let scale = (1.0 / weakest).max(1.0);
        duals.iter_mut().for_each(|f| *f = f.scale_re(scale));
    } else if !weakest.is_finite() {
        // every hidden state is pinned to zero; no dual weight is needed
        duals = vec![Mat2::zero(); problem.constraints.len()];
    } else {
        // one unit per setting on each face: Σ_a,i D_λ F ⪰ N on the face
        duals = problem.constraints.iter().map(unit_dual).collect();
    }
    sol.variable_duals = sums(&duals).iter().map(|m| *m - Mat2::identity()).collect();
    sol.dual_matrices = duals;
    sol.dual_value = problem
        .constraints
        .iter()
        .zip(&sol.dual_matrices)
        .map(|(c, f)| c.constant.trace_product_re(f))
        .sum();
    sol.gap = sol.dual_value - sol.primal_value;
    sol
}

/// One row of the steering CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct SteeringRow {
    pub time: f64,
    pub s_n: TsParameter,
    pub weight: f64,
    pub gap: f64,
    pub iterations: usize,
}

impl SteeringRow {
    pub fn csv_header(settings: usize) -> String {
        let mut h = "time,S2,W_TS,gap,sdp_iterations".to_string();
        if settings != 2 {
            h = h.replace("S2", &format!("S{settings}"));
        }
        for i in 1..=settings {
            h.push_str(&format!(",E{i}"));
        }
        h
    }

    pub fn csv_row(&self) -> String {
        let mut row = format!(
            "{},{},{},{},{}",
            self.time, self.s_n.value, self.weight, self.gap, self.iterations
        );
        for e in &self.s_n.terms {
            row.push_str(&format!(",{e}"));
        }
        row
    }
}

/// Everything the steering layer reports for one channel.
pub fn steering_row(params: &ChannelParams, meas: &MeasurementSet) -> Result<SteeringRow, SteeringError> {
    let assemblage = assemblage_from_channel(params, meas)?;
    let s_n = ts_parameter(&assemblage, meas)?;
    let (weight, sol) = ts_weight(&assemblage)?;
    Ok(SteeringRow {
        time: params.time,
        s_n,
        weight,
        gap: sol.gap,
        iterations: sol.iterations,
    })
}
