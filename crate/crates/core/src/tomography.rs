//! Shot-noise simulation of qubit state tomography and reconstruction.
//!
//! Counts are drawn for the six Pauli eigenprojectors. Each basis setting
//! (X, Y or Z) has mean total `mean_total`, split by the Born rule.

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Mat2, C64};
use crate::state::{DensityMatrix, PauliEigenstate};

pub const DEFAULT_MEAN_TOTAL: f64 = 1e4;
pub const DEFAULT_RESAMPLES: usize = 200;
/// Stop maximum-likelihood iteration once the log-likelihood moves less.
pub const ML_TOLERANCE: f64 = 1e-10;
const ML_MAX_ITERATIONS: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TomographyError {
    #[error("mean_total must be positive and finite, got {0}")]
    BadMeanTotal(f64),
    #[error("no counts recorded for the {0} basis")]
    EmptyBasis(&'static str),
    #[error("need at least one bootstrap resample")]
    NoResamples,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Basis {
    X,
    Y,
    Z,
}

impl Basis {
    pub const ALL: [Basis; 3] = [Basis::X, Basis::Y, Basis::Z];

    pub fn name(self) -> &'static str {
        match self {
            Basis::X => "x",
            Basis::Y => "y",
            Basis::Z => "z",
        }
    }

    /// Outcomes `(+1, −1)`.
    pub fn outcomes(self) -> [PauliEigenstate; 2] {
        use PauliEigenstate::*;
        match self {
            Basis::X => [XPlus, XMinus],
            Basis::Y => [YPlus, YMinus],
            Basis::Z => [ZPlus, ZMinus],
        }
    }
}

pub fn basis_of(outcome: PauliEigenstate) -> Basis {
    use PauliEigenstate::*;
    match outcome {
        XPlus | XMinus => Basis::X,
        YPlus | YMinus => Basis::Y,
        ZPlus | ZMinus => Basis::Z,
    }
}

/// Identifier used in CSV output, e.g. `x+`.
pub fn outcome_label(outcome: PauliEigenstate) -> &'static str {
    use PauliEigenstate::*;
    match outcome {
        ZPlus => "z+",
        ZMinus => "z-",
        XPlus => "x+",
        XMinus => "x-",
        YPlus => "y+",
        YMinus => "y-",
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountRecord {
    pub basis_id: PauliEigenstate,
    pub counts: u64,
    /// Mean number of detections per basis setting.
    pub expected_total: f64,
}

pub const COUNTS_CSV_HEADER: &str = "time,basis_id,counts,mean_total,seed";

impl CountRecord {
    pub fn csv_row(&self, time: f64, seed: u64) -> String {
        format!(
            "{time},{},{},{},{seed}",
            outcome_label(self.basis_id),
            self.counts,
            self.expected_total
        )
    }
}

/// Independent generator for `(seed, stream)`; every bootstrap resample
/// owns a stream so that batches can be drawn in any order.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Seed for the `index`-th independent experiment under a master seed.
pub fn sub_seed(seed: u64, index: u64) -> u64 {
    stream_rng(seed, index.wrapping_add(1)).next_u64()
}

fn draw(mean: f64, rng: &mut ChaCha8Rng) -> u64 {
    if mean <= 0.0 {
        return 0;
    }
    let d = Poisson::new(mean).expect("positive finite mean");
    d.sample(rng) as u64
}

fn probability(rho: &Mat2, outcome: PauliEigenstate) -> f64 {
    outcome.density().matrix().trace_product_re(rho).clamp(0.0, 1.0)
}

pub fn simulate_counts(rho: &DensityMatrix, mean_total: f64, seed: u64) -> Result<Vec<CountRecord>, TomographyError> {
    if !(mean_total > 0.0 && mean_total.is_finite()) {
        return Err(TomographyError::BadMeanTotal(mean_total));
    }
    let mut rng = stream_rng(seed, 0);
    Ok(PauliEigenstate::ALL
        .iter()
        .map(|&o| CountRecord {
            basis_id: o,
            counts: draw(mean_total * probability(rho.matrix(), o), &mut rng),
            expected_total: mean_total,
        })
        .collect())
}

/// Counts of `(+1, −1)` per basis, in `Basis::ALL` order.
fn tally(records: &[CountRecord]) -> [[u64; 2]; 3] {
    let mut n = [[0u64; 2]; 3];
    for r in records {
        let b = basis_of(r.basis_id);
        let k = Basis::ALL.iter().position(|&x| x == b).expect("listed");
        let a = usize::from(b.outcomes()[1] == r.basis_id);
        n[k][a] += r.counts;
    }
    n
}

fn linear_inversion(n: &[[u64; 2]; 3]) -> Result<Mat2, TomographyError> {
    let mut r = [0.0; 3];
    for (k, b) in Basis::ALL.iter().enumerate() {
        let total = n[k][0] + n[k][1];
        if total == 0 {
            return Err(TomographyError::EmptyBasis(b.name()));
        }
        r[k] = (n[k][0] as f64 - n[k][1] as f64) / total as f64;
    }
    let [x, y, z] = r;
    Ok(Mat2::new(
        C64::new(0.5 * (1.0 + z), 0.0),
        C64::new(0.5 * x, -0.5 * y),
        C64::new(0.5 * x, 0.5 * y),
        C64::new(0.5 * (1.0 - z), 0.0),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    /// Linear inversion followed by projection onto the state space.
    Linear,
    /// Maximum-likelihood fixed point started from the maximally mixed state.
    MaximumLikelihood,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReconstructOptions {
    pub resamples: usize,
    pub seed: u64,
    pub estimator: Estimator,
}

impl Default for ReconstructOptions {
    fn default() -> Self {
        ReconstructOptions {
            resamples: DEFAULT_RESAMPLES,
            seed: 0,
            estimator: Estimator::Linear,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReconstructionResult {
    pub state: DensityMatrix,
    /// Bootstrap standard errors of the real and imaginary parts of each
    /// matrix element.
    pub stderr_re: [[f64; 2]; 2],
    pub stderr_im: [[f64; 2]; 2],
    pub n_resamples: usize,
}

pub const RECONSTRUCTION_CSV_HEADER: &str = "time,re00,im00,re01,im01,re10,im10,re11,im11,\
se_re00,se_im00,se_re01,se_im01,se_re10,se_im10,se_re11,se_im11";

impl ReconstructionResult {
    pub fn csv_row(&self, time: f64) -> String {
        let mut row = time.to_string();
        for r in 0..2 {
            for c in 0..2 {
                let v = self.state.rho(r, c);
                row.push_str(&format!(",{},{}", v.re, v.im));
            }
        }
        for r in 0..2 {
            for c in 0..2 {
                row.push_str(&format!(",{},{}", self.stderr_re[r][c], self.stderr_im[r][c]));
            }
        }
        row
    }
}

fn estimate(n: &[[u64; 2]; 3], estimator: Estimator) -> Result<DensityMatrix, TomographyError> {
    let linear = linear_inversion(n)?;
    Ok(match estimator {
        Estimator::Linear => DensityMatrix::projected(&linear),
        Estimator::MaximumLikelihood => maximum_likelihood(n),
    })
}

pub fn reconstruct(records: &[CountRecord]) -> Result<ReconstructionResult, TomographyError> {
    reconstruct_with(records, &ReconstructOptions::default())
}

/// Point estimate plus a parametric bootstrap: counts are redrawn from
/// Poisson laws with the fitted state's probabilities and the observed
/// basis totals.
pub fn reconstruct_with(records: &[CountRecord], opts: &ReconstructOptions) -> Result<ReconstructionResult, TomographyError> {
    if opts.resamples == 0 {
        return Err(TomographyError::NoResamples);
    }
    let n = tally(records);
    let state = estimate(&n, opts.estimator)?;

    let mut sum = [[C64::new(0.0, 0.0); 2]; 2];
    let mut sum_sq = [[C64::new(0.0, 0.0); 2]; 2];
    let mut used = 0usize;
    for b in 0..opts.resamples {
        let mut rng = stream_rng(opts.seed, b as u64 + 1);
        let mut m = [[0u64; 2]; 3];
        for (k, basis) in Basis::ALL.iter().enumerate() {
            let total = (n[k][0] + n[k][1]) as f64;
            for (a, &o) in basis.outcomes().iter().enumerate() {
                m[k][a] = draw(total * probability(state.matrix(), o), &mut rng);
            }
        }
        // a resample that empties a basis carries no estimate
        let Ok(s) = estimate(&m, opts.estimator) else { continue };
        used += 1;
        for r in 0..2 {
            for c in 0..2 {
                let v = s.rho(r, c);
                sum[r][c] += v;
                sum_sq[r][c] += C64::new(v.re * v.re, v.im * v.im);
            }
        }
    }
    let mut stderr_re = [[0.0; 2]; 2];
    let mut stderr_im = [[0.0; 2]; 2];
    if used > 1 {
        let k = used as f64;
        for r in 0..2 {
            for c in 0..2 {
                let mean = sum[r][c] / k;
                stderr_re[r][c] = ((sum_sq[r][c].re - k * mean.re * mean.re) / (k - 1.0)).max(0.0).sqrt();
                stderr_im[r][c] = ((sum_sq[r][c].im - k * mean.im * mean.im) / (k - 1.0)).max(0.0).sqrt();
            }
        }
    }
    Ok(ReconstructionResult {
        state,
        stderr_re,
        stderr_im,
        n_resamples: used,
    })
}

/// Iterates `ρ ← RρR / Tr(RρR)` with `R = Σ_k n_k Π_k / p_k`.
fn maximum_likelihood(n: &[[u64; 2]; 3]) -> DensityMatrix {
    let outcomes: Vec<(Mat2, f64)> = Basis::ALL
        .iter()
        .enumerate()
        .flat_map(|(k, b)| {
            b.outcomes()
                .into_iter()
                .enumerate()
                .map(move |(a, o)| (*o.density().matrix(), n[k][a] as f64))
        })
        .collect();
    let log_likelihood = |rho: &Mat2| -> f64 {
        outcomes
            .iter()
            .filter(|(_, c)| *c > 0.0)
            .map(|(p, c)| c * p.trace_product_re(rho).max(f64::MIN_POSITIVE).ln())
            .sum()
    };
    let mut rho = Mat2::identity().scale_re(0.5);
    let mut ll = log_likelihood(&rho);
    for _ in 0..ML_MAX_ITERATIONS {
        let mut r = Mat2::zero();
        for (p, c) in &outcomes {
            if *c > 0.0 {
                r += p.scale_re(c / p.trace_product_re(&rho).max(f64::MIN_POSITIVE));
            }
        }
        let next = (r * rho * r).hermitian_part();
        let next = next.scale_re(1.0 / next.trace().re);
        let next_ll = log_likelihood(&next);
        rho = next;
        if (next_ll - ll).abs() < ML_TOLERANCE {
            break;
        }
        ll = next_ll;
    }
    DensityMatrix::projected(&rho)
}

/// Expected counts, for noiseless checks.
pub fn expected_counts(rho: &DensityMatrix, mean_total: f64) -> Vec<(PauliEigenstate, f64)> {
    PauliEigenstate::ALL
        .iter()
        .map(|&o| (o, mean_total * probability(rho.matrix(), o)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn exact(rho: &DensityMatrix, mean_total: f64) -> Vec<CountRecord> {
        expected_counts(rho, mean_total)
            .into_iter()
            .map(|(o, m)| CountRecord {
                basis_id: o,
                counts: m.round() as u64,
                expected_total: mean_total,
            })
            .collect()
    }

    #[test]
    fn zero_probability_outcome_never_fires() {
        let rho = DensityMatrix::excited();
        for seed in 0..50 {
            let c = simulate_counts(&rho, 1e4, seed).unwrap();
            let v = c.iter().find(|r| r.basis_id == PauliEigenstate::ZMinus).unwrap();
            assert_eq!(v.counts, 0);
        }
    }

    #[test]
    fn counts_are_seed_deterministic() {
        let rho = DensityMatrix::plus();
        assert_eq!(simulate_counts(&rho, 1e3, 7).unwrap(), simulate_counts(&rho, 1e3, 7).unwrap());
        assert_ne!(simulate_counts(&rho, 1e3, 7).unwrap(), simulate_counts(&rho, 1e3, 8).unwrap());
    }

    #[test]
    fn noiseless_counts_invert_exactly() {
        // probabilities that are exact multiples of 1/mean_total
        let rho = DensityMatrix::from_bloch([0.2, -0.4, 0.6]).unwrap();
        let res = reconstruct(&exact(&rho, 1e4)).unwrap();
        assert!(res.state.matrix().max_abs_diff(rho.matrix()) < 1e-12);
    }

    #[test]
    fn unphysical_counts_are_projected() {
        // Bloch length √3 from perfectly polarized counts in all bases
        let records: Vec<CountRecord> = [PauliEigenstate::XPlus, PauliEigenstate::YPlus, PauliEigenstate::ZPlus]
            .iter()
            .map(|&o| CountRecord {
                basis_id: o,
                counts: 100,
                expected_total: 100.0,
            })
            .collect();
        let res = reconstruct(&records).unwrap();
        let m = res.state.matrix();
        assert!((m.trace().re - 1.0).abs() < 1e-12);
        assert!(m.min_eigenvalue() >= -1e-12);
    }

    #[test]
    fn empty_basis_is_an_error() {
        let records = vec![CountRecord {
            basis_id: PauliEigenstate::XPlus,
            counts: 10,
            expected_total: 10.0,
        }];
        assert!(matches!(reconstruct(&records), Err(TomographyError::EmptyBasis(_))));
        assert!(simulate_counts(&DensityMatrix::plus(), 0.0, 1).is_err());
    }

    #[test]
    fn maximum_likelihood_agrees_with_inversion_inside_the_ball() {
        let rho = DensityMatrix::from_bloch([0.1, 0.3, -0.2]).unwrap();
        let n = tally(&exact(&rho, 1e4));
        let ml = maximum_likelihood(&n);
        assert!(ml.matrix().max_abs_diff(rho.matrix()) < 1e-6, "{ml:?}");
    }

    #[test]
    fn csv_rows() {
        let r = CountRecord {
            basis_id: PauliEigenstate::YMinus,
            counts: 12,
            expected_total: 100.0,
        };
        assert_eq!(r.csv_row(1.5, 3), "1.5,y-,12,100,3");
        assert_eq!(RECONSTRUCTION_CSV_HEADER.split(',').count(), 17);
    }
}
