//! Qubit coupled to one damped mode: for a zero-temperature Lorentzian bath
//! the mode at `ω₀` with coupling `sqrt(γλ/2)` and field decay `λ` carries
//! exactly the same correlation function.

use num_complex::Complex64 as C;

use crate::Qubit;

struct Dense {
    n: usize,
    d: Vec<C>,
}

impl Dense {
    fn zeros(n: usize) -> Self {
        Dense {
            n,
            d: vec![C::new(0.0, 0.0); n * n],
        }
    }

    fn mul(&self, b: &Dense, out: &mut Dense) {
        let n = self.n;
        out.d.iter_mut().for_each(|x| *x = C::new(0.0, 0.0));
        for i in 0..n {
            for k in 0..n {
                let a = self.d[i * n + k];
                if a.re == 0.0 && a.im == 0.0 {
                    continue;
                }
                for j in 0..n {
                    out.d[i * n + j] += a * b.d[k * n + j];
                }
            }
        }
    }
}

pub struct Pseudomode {
    n: usize,
    cutoff: usize,
    heff: Dense,
    heff_dag: Dense,
    jump: Dense,
    jump_dag: Dense,
}

impl Pseudomode {
    /// `cutoff` is the largest retained photon number.
    pub fn new(gamma: f64, lambda: f64, omega0: f64, rwa: bool, cutoff: usize) -> Self {
        let m = cutoff + 1;
        let n = 2 * m;
        let idx = |q: usize, k: usize| q * m + k;
        let g = (0.5 * gamma * lambda).sqrt();
        let mut h = Dense::zeros(n);
        let mut a = Dense::zeros(n);
        for q in 0..2 {
            for k in 0..m {
                let sz = if q == 0 { 0.5 } else { -0.5 };
                h.d[idx(q, k) * n + idx(q, k)] = C::new(sz * omega0 + k as f64 * omega0, 0.0);
                if k + 1 < m {
                    a.d[idx(q, k) * n + idx(q, k + 1)] = C::new(((k + 1) as f64).sqrt(), 0.0);
                }
            }
        }
        for k in 0..m - 1 {
            let amp = C::new(g * ((k + 1) as f64).sqrt(), 0.0);
            // qubit flips (q_out ← q_in) accompanying a† (k → k+1)
            let flips: &[(usize, usize)] = if rwa { &[(1, 0)] } else { &[(0, 1), (1, 0)] };
            for &(qo, qi) in flips {
                h.d[idx(qo, k + 1) * n + idx(qi, k)] += amp;
                h.d[idx(qi, k) * n + idx(qo, k + 1)] += amp;
            }
        }
        let kappa = 2.0 * lambda;
        let mut jump = Dense::zeros(n);
        for (j, x) in jump.d.iter_mut().zip(&a.d) {
            *j = x * kappa.sqrt();
        }
        let mut jump_dag = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                jump_dag.d[i * n + j] = jump.d[j * n + i].conj();
            }
        }
        let mut ldl = Dense::zeros(n);
        jump_dag.mul(&jump, &mut ldl);
        let mut heff = Dense::zeros(n);
        for i in 0..n * n {
            heff.d[i] = h.d[i] - ldl.d[i] * C::new(0.0, 0.5);
        }
        let mut heff_dag = Dense::zeros(n);
        for i in 0..n {
            for j in 0..n {
                heff_dag.d[i * n + j] = heff.d[j * n + i].conj();
            }
        }
        Pseudomode {
            n,
            cutoff,
            heff,
            heff_dag,
            jump,
            jump_dag,
        }
    }

    fn rhs(&self, rho: &Dense, out: &mut Dense, t1: &mut Dense, t2: &mut Dense) {
        // −i(H_eff ρ − ρ H_eff†) + L ρ L†
        self.heff.mul(rho, t1);
        rho.mul(&self.heff_dag, t2);
        for i in 0..self.n * self.n {
            let d = t1.d[i] - t2.d[i];
            out.d[i] = C::new(d.im, -d.re);
        }
        self.jump.mul(rho, t1);
        t1.mul(&self.jump_dag, t2);
        for i in 0..self.n * self.n {
            out.d[i] += t2.d[i];
        }
    }

    /// RK4 from `rho0 ⊗ |0⟩⟨0|`; output times must be multiples of `dt`.
    pub fn evolve(&self, rho0: &Qubit, times: &[f64], dt: f64) -> Vec<Qubit> {
        let n = self.n;
        let m = self.cutoff + 1;
        let mut rho = Dense::zeros(n);
        for a in 0..2 {
            for b in 0..2 {
                rho.d[(a * m) * n + b * m] = rho0[a][b];
            }
        }
        let mut k: Vec<Dense> = (0..4).map(|_| Dense::zeros(n)).collect();
        let mut tmp = Dense::zeros(n);
        let mut t1 = Dense::zeros(n);
        let mut t2 = Dense::zeros(n);
        let mut step = 0usize;
        let mut out = Vec::new();
        for &t in times {
            let target = (t / dt).round() as usize;
            while step < target {
                self.rhs(&rho, &mut k[0], &mut t1, &mut t2);
                for (s, c) in [(0.5, 0usize), (0.5, 1), (1.0, 2)] {
                    for i in 0..n * n {
                        tmp.d[i] = rho.d[i] + k[c].d[i] * (s * dt);
                    }
                    let (_, rest) = k.split_at_mut(c + 1);
                    self.rhs(&tmp, &mut rest[0], &mut t1, &mut t2);
                }
                for i in 0..n * n {
                    rho.d[i] +=
                        (k[0].d[i] + (k[1].d[i] + k[2].d[i]) * 2.0 + k[3].d[i]) * (dt / 6.0);
                }
                step += 1;
            }
            let mut r = [[C::new(0.0, 0.0); 2]; 2];
            for a in 0..2 {
                for b in 0..2 {
                    for j in 0..m {
                        r[a][b] += rho.d[(a * m + j) * n + b * m + j];
                    }
                }
            }
            out.push(r);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trace_is_preserved() {
        let p = Pseudomode::new(2.5, 0.05, 1.0, false, 6);
        let rho0 = [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(0.0, 0.0)]];
        for r in p.evolve(&rho0, &[1.0, 3.0], 0.01) {
            assert!(((r[0][0] + r[1][1]).re - 1.0).abs() < 1e-6);
        }
    }
}
