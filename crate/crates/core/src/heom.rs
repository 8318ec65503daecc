//! Hierarchical equations of motion for a qubit in a zero-temperature
//! Lorentzian bath.
//!
//! The bath correlation is a single exponential `C(t) = α e^{−νt}` with
//! `α = γλ/2` and `ν = λ + iω₀`, so the hierarchy carries two indices
//! `(m, n)`: `m` counts the `α e^{−νt}` branch acting from the left and `n`
//! its conjugate acting from the right. Times are in units of `1/ω₀`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{Mat2, C64, I};
use crate::ode::{self, OdeError, OdeOptions, OdeStats};
use crate::state::{DensityMatrix, StateError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum HeomError {
    #[error("invalid bath parameter {name} = {value} (must be positive and finite)")]
    InvalidParameter { name: &'static str, value: f64 },
    #[error("time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("time grid must start at 0 and be strictly increasing")]
    BadGrid,
    #[error("tier cap must be at least 2, got {0}")]
    TierTooSmall(usize),
    #[error(
        "hierarchy not converged: tiers {tier} and {next_tier} differ by {discrepancy:e} \
         (tolerance {tolerance:e})"
    )]
    NotConverged {
        tier: usize,
        next_tier: usize,
        discrepancy: f64,
        tolerance: f64,
    },
    #[error("integration failed: {0}")]
    Ode(#[from] OdeError),
    #[error("reduced state left the physical set at t = {time}: {source}")]
    Unphysical { time: f64, source: StateError },
}

/// Lorentzian spectral density `J(ω) = (1/2π) γλ² / ((ω − ω₀)² + λ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BathSpectrum {
    pub gamma: f64,
    pub lambda_width: f64,
    pub omega0: f64,
}

impl BathSpectrum {
    pub fn new(gamma: f64, lambda_width: f64) -> Result<Self, HeomError> {
        let s = BathSpectrum {
            gamma,
            lambda_width,
            omega0: 1.0,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<(), HeomError> {
        for (name, value) in [
            ("gamma", self.gamma),
            ("lambda_width", self.lambda_width),
            ("omega0", self.omega0),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(HeomError::InvalidParameter { name, value });
            }
        }
        Ok(())
    }

    /// `g_eff = sqrt(γλ/2)`.
    pub fn g_eff(&self) -> f64 {
        (0.5 * self.gamma * self.lambda_width).sqrt()
    }

    /// Bath memory time `1/λ`.
    pub fn tau_b(&self) -> f64 {
        1.0 / self.lambda_width
    }

    /// Markovian decay time `1/γ`.
    pub fn tau_s(&self) -> f64 {
        1.0 / self.gamma
    }

    pub fn spectral_density(&self, omega: f64) -> f64 {
        let d = omega - self.omega0;
        self.gamma * self.lambda_width.powi(2)
            / (2.0 * std::f64::consts::PI * (d * d + self.lambda_width.powi(2)))
    }

    /// Prefactor `α` of the correlation function.
    pub fn alpha(&self) -> C64 {
        C64::new(0.5 * self.gamma * self.lambda_width, 0.0)
    }

    /// Decay rate `ν` of the correlation function.
    pub fn nu(&self) -> C64 {
        C64::new(self.lambda_width, self.omega0)
    }
}

pub fn bath_correlation(spec: &BathSpectrum, t: f64) -> Result<C64, HeomError> {
    if !(t >= 0.0) {
        return Err(HeomError::NegativeTime(t));
    }
    Ok(spec.alpha() * (-spec.nu() * t).exp())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    /// `σ_x ⊗ (B + B†)`, counter-rotating terms kept.
    NonRwa,
    /// `σ₊ ⊗ B + σ₋ ⊗ B†`.
    Rwa,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemHamiltonian {
    pub omega0: f64,
    pub coupling: Coupling,
}

impl SystemHamiltonian {
    pub fn new(omega0: f64, coupling: Coupling) -> Result<Self, HeomError> {
        if !(omega0.is_finite() && omega0 > 0.0) {
            return Err(HeomError::InvalidParameter {
                name: "omega0",
                value: omega0,
            });
        }
        Ok(SystemHamiltonian { omega0, coupling })
    }

    pub fn non_rwa() -> Self {
        SystemHamiltonian {
            omega0: 1.0,
            coupling: Coupling::NonRwa,
        }
    }

    pub fn rwa() -> Self {
        SystemHamiltonian {
            omega0: 1.0,
            coupling: Coupling::Rwa,
        }
    }

    /// `(ω₀/2) σ_z` with `|e⟩` first.
    pub fn matrix(&self) -> Mat2 {
        Mat2::pauli_z() * (0.5 * self.omega0)
    }
}

/// `σ₊ = |e⟩⟨g|`.
pub fn sigma_plus() -> Mat2 {
    Mat2::from_real(0.0, 1.0, 0.0, 0.0)
}

/// `σ₋ = |g⟩⟨e|`.
pub fn sigma_minus() -> Mat2 {
    Mat2::from_real(0.0, 0.0, 1.0, 0.0)
}

/// Number of auxiliary matrices with `m + n ≤ tier_cap`.
pub fn hierarchy_size(tier_cap: usize) -> usize {
    (tier_cap + 1) * (tier_cap + 2) / 2
}

fn aux_index(m: usize, n: usize) -> usize {
    let k = m + n;
    k * (k + 1) / 2 + n
}

/// Auxiliary matrices at one time. `aux(0, 0)` is the reduced state.
#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyState {
    pub tier_cap: usize,
    pub time: f64,
    aux: Vec<Mat2>,
}

impl HierarchyState {
    pub fn new(tier_cap: usize, rho0: &DensityMatrix) -> Self {
        let mut aux = vec![Mat2::zero(); hierarchy_size(tier_cap)];
        aux[0] = *rho0.matrix();
        HierarchyState {
            tier_cap,
            time: 0.0,
            aux,
        }
    }

    fn from_flat(tier_cap: usize, time: f64, y: &[C64]) -> Self {
        HierarchyState {
            tier_cap,
            time,
            aux: y.chunks_exact(4).map(unflatten).collect(),
        }
    }

    fn flatten(&self) -> Vec<C64> {
        self.aux
            .iter()
            .flat_map(|a| [a.0[0][0], a.0[0][1], a.0[1][0], a.0[1][1]])
            .collect()
    }

    pub fn aux(&self, m: usize, n: usize) -> Option<&Mat2> {
        (m + n <= self.tier_cap).then(|| &self.aux[aux_index(m, n)])
    }

    pub fn reduced(&self) -> &Mat2 {
        &self.aux[0]
    }

    /// Largest `‖aux(m,n)† − aux(n,m)‖_max` over the hierarchy.
    pub fn pairing_deviation(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for k in 0..=self.tier_cap {
            for m in 0..=k {
                let n = k - m;
                let a = self.aux[aux_index(m, n)].adjoint();
                worst = worst.max(a.max_abs_diff(&self.aux[aux_index(n, m)]));
            }
        }
        worst
    }
}

fn unflatten(c: &[C64]) -> Mat2 {
    Mat2::new(c[0], c[1], c[2], c[3])
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub initial_state: DensityMatrix,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeomOptions {
    pub tier_cap: usize,
    pub max_tier: usize,
    /// Largest allowed change of the reduced state when the tier grows by 2.
    pub convergence_tolerance: f64,
    /// Physicality slack for the reduced state at output times.
    pub state_tolerance: f64,
    pub rtol: f64,
    pub atol: f64,
}

impl Default for HeomOptions {
    fn default() -> Self {
        HeomOptions {
            tier_cap: 20,
            max_tier: 40,
            convergence_tolerance: 1e-6,
            state_tolerance: 1e-6,
            rtol: 1e-9,
            atol: 1e-12,
        }
    }
}

impl HeomOptions {
    fn ode(&self) -> OdeOptions {
        OdeOptions {
            rtol: self.rtol,
            atol: self.atol,
            ..OdeOptions::default()
        }
    }
}

/// Result of a converged hierarchy run.
#[derive(Debug, Clone)]
pub struct HeomRun {
    pub trajectory: Trajectory,
    /// Accepted truncation depth.
    pub tier_cap: usize,
    /// Max deviation of the reduced state from the run at `tier_cap + 2`.
    pub tier_discrepancy: f64,
    pub final_state: HierarchyState,
    pub stats: OdeStats,
}

/// Hierarchy right-hand side with precomputed coupling operators.
struct Generator {
    tier_cap: usize,
    h: Mat2,
    /// Raises the left index: `−i[up_left, ρ_{m+1,n}]`.
    up_left: Mat2,
    /// Raises the right index: `−i[up_right, ρ_{m,n+1}]`.
    up_right: Mat2,
    /// `−i m α down_left ρ_{m−1,n}`.
    down_left: Mat2,
    /// `+i n α* ρ_{m,n−1} down_right`.
    down_right: Mat2,
    alpha: C64,
    nu: C64,
}

impl Generator {
    fn new(spec: &BathSpectrum, h: &SystemHamiltonian, tier_cap: usize) -> Self {
        let (up_left, up_right, down_left, down_right) = match h.coupling {
            Coupling::NonRwa => {
                let x = Mat2::pauli_x();
                (x, x, x, x)
            }
            Coupling::Rwa => (sigma_plus(), sigma_minus(), sigma_minus(), sigma_plus()),
        };
        let spec = BathSpectrum {
            omega0: h.omega0,
            ..*spec
        };
        Generator {
            tier_cap,
            h: h.matrix(),
            up_left,
            up_right,
            down_left,
            down_right,
            alpha: spec.alpha(),
            nu: spec.nu(),
        }
    }

    fn rhs(&self, y: &[C64], dy: &mut [C64]) {
        let get = |m: usize, n: usize| unflatten(&y[4 * aux_index(m, n)..4 * aux_index(m, n) + 4]);
        for k in 0..=self.tier_cap {
            for m in 0..=k {
                let n = k - m;
                let rho = get(m, n);
                let decay = self.nu * m as f64 + self.nu.conj() * n as f64;
                let mut d = self.h.commutator(&rho) * (-I) - rho * decay;
                if k < self.tier_cap {
                    d -= (self.up_left.commutator(&get(m + 1, n))
                        + self.up_right.commutator(&get(m, n + 1)))
                        * I;
                }
                if m > 0 {
                    d -= self.down_left * get(m - 1, n) * (I * self.alpha * m as f64);
                }
                if n > 0 {
                    d += get(m, n - 1) * self.down_right * (I * self.alpha.conj() * n as f64);
                }
                let o = 4 * aux_index(m, n);
                dy[o] = d.0[0][0];
                dy[o + 1] = d.0[0][1];
                dy[o + 2] = d.0[1][0];
                dy[o + 3] = d.0[1][1];
            }
        }
    }
}

fn check_grid(grid: &[f64]) -> Result<(), HeomError> {
    if grid.first() != Some(&0.0) || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(HeomError::BadGrid);
    }
    Ok(())
}

/// Integrates the hierarchy at a fixed truncation depth. Returns the raw
/// reduced matrices on the grid and the final hierarchy.
pub fn evolve_at_tier(
    spec: &BathSpectrum,
    h: &SystemHamiltonian,
    rho0: &DensityMatrix,
    grid: &[f64],
    tier_cap: usize,
    opts: &HeomOptions,
) -> Result<(Vec<Mat2>, HierarchyState, OdeStats), HeomError> {
    spec.validate()?;
    check_grid(grid)?;
    if tier_cap < 2 {
        return Err(HeomError::TierTooSmall(tier_cap));
    }
    let gen = Generator::new(spec, h, tier_cap);
    let y0 = HierarchyState::new(tier_cap, rho0).flatten();
    let mut out = vec![Mat2::zero(); grid.len()];
    let (y_end, stats) = ode::integrate(
        |_t, y, dy| gen.rhs(y, dy),
        0.0,
        &y0,
        grid,
        &opts.ode(),
        |k, y| out[k] = unflatten(&y[..4]),
    )?;
    let t_end = *grid.last().unwrap_or(&0.0);
    Ok((out, HierarchyState::from_flat(tier_cap, t_end, &y_end), stats))
}

/// Runs the hierarchy, escalating the truncation depth by 2 until two
/// consecutive depths agree within `opts.convergence_tolerance`.
pub fn evolve_with(
    spec: &BathSpectrum,
    h: &SystemHamiltonian,
    rho0: &DensityMatrix,
    grid: &[f64],
    opts: &HeomOptions,
) -> Result<HeomRun, HeomError> {
    let mut tier = opts.tier_cap;
    let mut current = evolve_at_tier(spec, h, rho0, grid, tier, opts)?;
    loop {
        let next = evolve_at_tier(spec, h, rho0, grid, tier + 2, opts)?;
        let discrepancy = current
            .0
            .iter()
            .zip(&next.0)
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max);
        if discrepancy < opts.convergence_tolerance {
            let (states, final_state, stats) = current;
            return Ok(HeomRun {
                trajectory: to_trajectory(grid, rho0, states, opts.state_tolerance)?,
                tier_cap: tier,
                tier_discrepancy: discrepancy,
                final_state,
                stats,
            });
        }
        if tier + 2 > opts.max_tier.max(opts.tier_cap) {
            return Err(HeomError::NotConverged {
                tier,
                next_tier: tier + 2,
                discrepancy,
                tolerance: opts.convergence_tolerance,
            });
        }
        tier += 2;
        current = next;
    }
}

fn to_trajectory(
    grid: &[f64],
    rho0: &DensityMatrix,
    states: Vec<Mat2>,
    tolerance: f64,
) -> Result<Trajectory, HeomError> {
    let states = states
        .into_iter()
        .zip(grid)
        .map(|(m, &time)| {
            DensityMatrix::new_loose(m, tolerance)
                .map_err(|source| HeomError::Unphysical { time, source })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Trajectory {
        times: grid.to_vec(),
        states,
        initial_state: *rho0,
    })
}

pub fn evolve_nonrwa(
    spec: &BathSpectrum,
    h: &SystemHamiltonian,
    rho0: &DensityMatrix,
    grid: &[f64],
) -> Result<Trajectory, HeomError> {
    let h = SystemHamiltonian {
        coupling: Coupling::NonRwa,
        ..*h
    };
    Ok(evolve_with(spec, &h, rho0, grid, &HeomOptions::default())?.trajectory)
}

pub fn evolve_rwa(
    spec: &BathSpectrum,
    rho0: &DensityMatrix,
    grid: &[f64],
) -> Result<Trajectory, HeomError> {
    Ok(evolve_with(
        spec,
        &SystemHamiltonian::rwa(),
        rho0,
        grid,
        &HeomOptions::default(),
    )?
    .trajectory)
}

/// Excited-state amplitude `G(t)` of the RWA model in the frame rotating at
/// `ω₀`; `P_AD = |G|²`.
pub fn rwa_survival_amplitude(spec: &BathSpectrum, t: f64) -> C64 {
    let l = spec.lambda_width;
    let disc = l * l - 2.0 * spec.gamma * l;
    let envelope = (-0.5 * l * t).exp();
    let g = if disc.abs() < 1e-14 {
        envelope * (1.0 + 0.5 * l * t)
    } else if disc > 0.0 {
        let w = disc.sqrt();
        envelope * ((0.5 * w * t).cosh() + l / w * (0.5 * w * t).sinh())
    } else {
        let w = (-disc).sqrt();
        envelope * ((0.5 * w * t).cos() + l / w * (0.5 * w * t).sin())
    };
    C64::new(g, 0.0)
}

/// Reduced state of the RWA model in the Schrödinger picture, built from
/// `G(t)`.
pub fn rwa_analytic_state(spec: &BathSpectrum, rho0: &DensityMatrix, t: f64) -> Mat2 {
    let g = rwa_survival_amplitude(spec, t);
    let p = g.norm_sqr();
    let r = rho0.matrix();
    let ee = r.0[0][0] * p;
    let eg = r.0[0][1] * g * C64::from_polar(1.0, -spec.omega0 * t);
    Mat2::new(ee, eg, eg.conj(), C64::new(1.0, 0.0) - ee)
}
