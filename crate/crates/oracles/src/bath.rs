//! Discretized Lorentzian bath: explicit harmonic modes, a Lanczos chain
//! mapping, and wavefunction evolution in a truncated Fock space.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64 as C;

use crate::Qubit;

#[derive(Debug, Clone, Copy)]
pub struct Lorentz {
    pub gamma: f64,
    pub lambda: f64,
    pub omega0: f64,
}

impl Lorentz {
    pub fn new(gamma: f64, lambda: f64) -> Self {
        Lorentz {
            gamma,
            lambda,
            omega0: 1.0,
        }
    }

    pub fn density(&self, w: f64) -> f64 {
        let d = w - self.omega0;
        self.gamma * self.lambda * self.lambda / (2.0 * PI * (d * d + self.lambda * self.lambda))
    }
}

/// `∫ J(ω) e^{−iωt} dω` over `[ω₀ − half_width, ω₀ + half_width]`, composite
/// Simpson with `intervals` (even) panels.
pub fn correlation_quadrature(bath: &Lorentz, t: f64, half_width: f64, intervals: usize) -> C {
    let n = intervals + intervals % 2;
    let a = bath.omega0 - half_width;
    let h = 2.0 * half_width / n as f64;
    let f = |w: f64| C::from_polar(bath.density(w), -w * t);
    let mut acc = f(a) + f(a + 2.0 * half_width);
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += f(a + k as f64 * h) * w;
    }
    acc * (h / 3.0)
}

/// Uniform midpoint sampling of `J` with `g_k = sqrt(J(ω_k) Δ)`.
pub fn discretize(bath: &Lorentz, modes: usize, half_width: f64) -> (Vec<f64>, Vec<f64>) {
    let dw = 2.0 * half_width / modes as f64;
    let freqs: Vec<f64> = (0..modes)
        .map(|k| bath.omega0 - half_width + (k as f64 + 0.5) * dw)
        .collect();
    let g = freqs.iter().map(|&w| (bath.density(w) * dw).sqrt()).collect();
    (freqs, g)
}

/// Star-to-chain map: the qubit couples with strength `coupling` to site 0,
/// sites have energies `onsite` and nearest-neighbour hoppings `hopping`.
#[derive(Debug, Clone)]
pub struct Chain {
    pub coupling: f64,
    pub onsite: Vec<f64>,
    pub hopping: Vec<f64>,
}

pub fn lanczos_chain(freqs: &[f64], g: &[f64], length: usize) -> Chain {
    let norm = g.iter().map(|x| x * x).sum::<f64>().sqrt();
    let mut basis: Vec<Vec<f64>> = vec![g.iter().map(|x| x / norm).collect()];
    let mut onsite = Vec::new();
    let mut hopping = Vec::new();
    for j in 0..length {
        let v = &basis[j];
        let mut w: Vec<f64> = v.iter().zip(freqs).map(|(a, b)| a * b).collect();
        let a = dot(&w, v);
        onsite.push(a);
        if j + 1 == length {
            break;
        }
        // full reorthogonalization, twice for stability
        for _ in 0..2 {
            for u in &basis {
                let c = dot(&w, u);
                for (wi, ui) in w.iter_mut().zip(u) {
                    *wi -= c * ui;
                }
            }
        }
        let b = dot(&w, &w).sqrt();
        hopping.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    Chain {
        coupling: norm,
        onsite,
        hopping,
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Sparse real-symmetric Hamiltonian on `qubit ⊗ chain` with at most
/// `max_excitations` quanta in the chain.
pub struct ChainModel {
    env_dim: usize,
    rows: Vec<Vec<(usize, f64)>>,
}

impl ChainModel {
    pub fn new(chain: &Chain, omega0: f64, rwa: bool, max_excitations: usize) -> Self {
        let sites = chain.onsite.len();
        let mut states = Vec::new();
        enumerate(&mut vec![0u8; sites], 0, max_excitations, &mut states);
        let index: HashMap<Vec<u8>, usize> =
            states.iter().cloned().enumerate().map(|(i, s)| (s, i)).collect();
        let env_dim = states.len();
        let mut rows = vec![Vec::new(); 2 * env_dim];
        for (e, occ) in states.iter().enumerate() {
            let bath_energy: f64 = occ
                .iter()
                .zip(&chain.onsite)
                .map(|(&n, a)| n as f64 * a)
                .sum();
            for q in 0..2 {
                let sz = if q == 0 { 0.5 } else { -0.5 };
                rows[q * env_dim + e].push((q * env_dim + e, sz * omega0 + bath_energy));
            }
            // hopping c_j† c_{j+1} + h.c.
            for j in 0..sites.saturating_sub(1) {
                if occ[j + 1] > 0 {
                    let mut t = occ.clone();
                    t[j] += 1;
                    t[j + 1] -= 1;
                    let amp = chain.hopping[j]
                        * ((occ[j] as f64 + 1.0) * occ[j + 1] as f64).sqrt();
                    let f = index[&t];
                    for q in 0..2 {
                        rows[q * env_dim + f].push((q * env_dim + e, amp));
                        rows[q * env_dim + e].push((q * env_dim + f, amp));
                    }
                }
            }
            // c_0† |occ⟩ and its adjoint
            let total: usize = occ.iter().map(|&n| n as usize).sum();
            if total < max_excitations {
                let mut t = occ.clone();
                t[0] += 1;
                let f = index[&t];
                let amp = chain.coupling * (occ[0] as f64 + 1.0).sqrt();
                // (q_out, q_in) pairs carried by the creation term
                let pairs: &[(usize, usize)] = if rwa { &[(1, 0)] } else { &[(0, 1), (1, 0)] };
                for &(qo, qi) in pairs {
                    rows[qo * env_dim + f].push((qi * env_dim + e, amp));
                    rows[qi * env_dim + e].push((qo * env_dim + f, amp));
                }
            }
        }
        ChainModel { env_dim, rows }
    }

    pub fn dim(&self) -> usize {
        2 * self.env_dim
    }

    fn apply_minus_i(&self, psi: &[C], out: &mut [C]) {
        for (o, row) in out.iter_mut().zip(&self.rows) {
            let mut acc = C::new(0.0, 0.0);
            for &(c, v) in row {
                acc += psi[c] * v;
            }
            *o = C::new(acc.im, -acc.re);
        }
    }

    /// Classical RK4 from the product state `qubit ⊗ vacuum`; returns the
    /// reduced qubit state at `times` (multiples of `dt`).
    pub fn evolve(&self, qubit: [C; 2], times: &[f64], dt: f64) -> Vec<Qubit> {
        let n = self.dim();
        let mut psi = vec![C::new(0.0, 0.0); n];
        psi[0] = qubit[0];
        psi[self.env_dim] = qubit[1];
        let mut k = vec![vec![C::new(0.0, 0.0); n]; 4];
        let mut tmp = vec![C::new(0.0, 0.0); n];
        let mut out = Vec::with_capacity(times.len());
        let mut step = 0usize;
        for &t in times {
            let target = (t / dt).round() as usize;
            while step < target {
                self.apply_minus_i(&psi, &mut k[0]);
                for i in 0..n {
                    tmp[i] = psi[i] + k[0][i] * (0.5 * dt);
                }
                self.apply_minus_i(&tmp, &mut k[1]);
                for i in 0..n {
                    tmp[i] = psi[i] + k[1][i] * (0.5 * dt);
                }
                self.apply_minus_i(&tmp, &mut k[2]);
                for i in 0..n {
                    tmp[i] = psi[i] + k[2][i] * dt;
                }
                self.apply_minus_i(&tmp, &mut k[3]);
                for i in 0..n {
                    psi[i] += (k[0][i] + (k[1][i] + k[2][i]) * 2.0 + k[3][i]) * (dt / 6.0);
                }
                step += 1;
            }
            out.push(self.reduce(&psi));
        }
        out
    }

    fn reduce(&self, psi: &[C]) -> Qubit {
        let (e, g) = psi.split_at(self.env_dim);
        let mut r = [[C::new(0.0, 0.0); 2]; 2];
        for (x, y) in e.iter().zip(g) {
            r[0][0] += x * x.conj();
            r[0][1] += x * y.conj();
            r[1][1] += y * y.conj();
        }
        r[1][0] = r[0][1].conj();
        r
    }
}

fn enumerate(occ: &mut Vec<u8>, site: usize, left: usize, out: &mut Vec<Vec<u8>>) {
    if site == occ.len() {
        out.push(occ.clone());
        return;
    }
    for n in 0..=left {
        occ[site] = n as u8;
        enumerate(occ, site + 1, left - n, out);
    }
    occ[site] = 0;
}

/// Settings of the reference model used by the test suites.
#[derive(Debug, Clone, Copy)]
pub struct DiscreteBathConfig {
    pub modes: usize,
    pub half_width: f64,
    pub chain_length: usize,
    pub max_excitations: usize,
    pub dt: f64,
}

impl Default for DiscreteBathConfig {
    fn default() -> Self {
        DiscreteBathConfig {
            modes: 200,
            half_width: 3.0,
            chain_length: 10,
            max_excitations: 6,
            dt: 0.005,
        }
    }
}

/// Reduced qubit states of the discretized-bath model started from
/// `qubit ⊗ vacuum`.
pub fn discrete_bath_evolution(
    bath: &Lorentz,
    rwa: bool,
    qubit: [C; 2],
    times: &[f64],
    cfg: &DiscreteBathConfig,
) -> Vec<Qubit> {
    let (freqs, g) = discretize(bath, cfg.modes, cfg.half_width);
    let chain = lanczos_chain(&freqs, &g, cfg.chain_length);
    ChainModel::new(&chain, bath.omega0, rwa, cfg.max_excitations).evolve(qubit, times, cfg.dt)
}
