//! Steerable weight by linear programming: each 2×2 positivity condition
//! `s ≥ |r|` on a Bloch-parametrized Hermitian matrix `(s I + r·σ)/2` is
//! replaced by finitely many half-spaces `s + n·r ≥ 0`. Outer relaxations
//! give an upper bound on the hidden-state optimum, inner restrictions and
//! repaired points give feasible lower bounds.

use minilp::{ComparisonOp, LinearExpr, OptimizationDirection, Problem, Variable};

use num_complex::Complex64 as C;

use crate::Qubit;

/// Bracket on the hidden-state optimum `max Tr Σ_λ ϱ_λ`, turned into a
/// bracket on the weight `1 − optimum`.
#[derive(Debug, Clone, Copy)]
pub struct WeightBracket {
    pub weight_lower: f64,
    pub weight_upper: f64,
    pub cuts: usize,
}

fn bloch(m: &Qubit) -> [f64; 4] {
    [
        (m[0][0] + m[1][1]).re,
        2.0 * m[0][1].re,
        -2.0 * m[0][1].im,
        (m[0][0] - m[1][1]).re,
    ]
}

/// Affine expression over the LP variables for `(s, x, y, z)` of one block.
struct Block {
    constant: [f64; 4],
    terms: Vec<(usize, f64)>,
}

impl Block {
    fn value(&self, vals: &[f64]) -> [f64; 4] {
        let mut v = self.constant;
        for &(hidden, c) in &self.terms {
            for k in 0..4 {
                v[k] += c * vals[4 * hidden + k];
            }
        }
        v
    }

    fn cut(&self, vars: &[Variable], n: [f64; 3], scale: f64) -> (LinearExpr, f64) {
        // scale·s + n·r ≥ 0  ⇔  Σ coeff·var ≥ −(constant part)
        let mut e = LinearExpr::empty();
        for &(hidden, c) in &self.terms {
            e.add(vars[4 * hidden], c * scale);
            for k in 0..3 {
                e.add(vars[4 * hidden + 1 + k], c * n[k]);
            }
        }
        let rhs = -(scale * self.constant[0] + n[0] * self.constant[1] + n[1] * self.constant[2] + n[2] * self.constant[3]);
        (e, rhs)
    }
}

/// Fibonacci lattice on the unit sphere.
pub fn sphere_grid(points: usize) -> Vec<[f64; 3]> {
    let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
    (0..points)
        .map(|k| {
            let z = 1.0 - (2.0 * k as f64 + 1.0) / points as f64;
            let rho = (1.0 - z * z).sqrt();
            let phi = golden * k as f64;
            [rho * phi.cos(), rho * phi.sin(), z]
        })
        .collect()
}

/// Largest angular distance from any direction to its nearest grid point,
/// estimated on a much finer lattice and padded by that lattice's own
/// spacing.
fn covering_angle(grid: &[[f64; 3]]) -> f64 {
    let probes = sphere_grid(40 * grid.len());
    let worst = probes
        .iter()
        .map(|p| {
            grid.iter()
                .map(|g| g[0] * p[0] + g[1] * p[1] + g[2] * p[2])
                .fold(-1.0, f64::max)
                .clamp(-1.0, 1.0)
                .acos()
        })
        .fold(0.0, f64::max);
    worst + (4.0 * std::f64::consts::PI / probes.len() as f64).sqrt()
}

fn build_blocks(assemblage: &[[Qubit; 2]]) -> (Vec<Block>, usize) {
    let strategies = 1usize << assemblage.len();
    let mut blocks = Vec::new();
    for l in 0..strategies {
        blocks.push(Block {
            constant: [0.0; 4],
            terms: vec![(l, 1.0)],
        });
    }
    for (i, pair) in assemblage.iter().enumerate() {
        for (a, sigma) in pair.iter().enumerate() {
            blocks.push(Block {
                constant: bloch(sigma),
                terms: (0..strategies)
                    .filter(|l| (l >> i) & 1 == a)
                    .map(|l| (l, -1.0))
                    .collect(),
            });
        }
    }
    (blocks, strategies)
}

/// Maximizes the hidden-state trace with every block constrained by
/// `scale·s + n·r ≥ 0` for all grid directions `n`.
fn polyhedral(
    blocks: &[Block],
    strategies: usize,
    grid: &[[f64; 3]],
    scale: f64,
) -> Option<(minilp::Solution, Vec<Variable>)> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let mut vars = Vec::with_capacity(4 * strategies);
    for _ in 0..strategies {
        vars.push(problem.add_var(1.0, (0.0, 2.0)));
        for _ in 0..3 {
            vars.push(problem.add_var(0.0, (-2.0, 2.0)));
        }
    }
    for b in blocks {
        for &n in grid {
            let (e, rhs) = b.cut(&vars, n, scale);
            problem.add_constraint(e, ComparisonOp::Ge, rhs);
        }
    }
    problem.solve().ok().map(|s| (s, vars))
}

/// `assemblage[i][a]` is the un-normalized state for setting `i`, outcome
/// index `a ∈ {0, 1}`. Strategy `λ` answers outcome `(λ >> i) & 1` to setting
/// `i`.
///
/// The lower weight bound comes from an outer polyhedral relaxation refined
/// by cutting planes until no block is violated by more than `tol`; the
/// upper bound from an inner polyhedral restriction on a `grid_points`
/// lattice, whose points are exactly feasible.
pub fn steering_weight(assemblage: &[[Qubit; 2]], grid_points: usize, tol: f64, max_rounds: usize) -> WeightBracket {
    let (blocks, strategies) = build_blocks(assemblage);
    let grid = sphere_grid(grid_points);

    let (mut sol, vars) =
        polyhedral(&blocks, strategies, &grid, 1.0).expect("outer relaxation contains ϱ = 0");
    let mut cuts = blocks.len() * grid.len();
    for _ in 0..max_rounds {
        let vals: Vec<f64> = vars.iter().map(|v| sol[*v]).collect();
        let mut added = false;
        for b in &blocks {
            let v = b.value(&vals);
            let r = (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt();
            if r - v[0] > tol {
                let (e, rhs) = b.cut(&vars, [-v[1] / r, -v[2] / r, -v[3] / r], 1.0);
                sol = sol
                    .add_constraint(e, ComparisonOp::Ge, rhs)
                    .expect("cut keeps the relaxation feasible");
                cuts += 1;
                added = true;
            }
        }
        if !added {
            break;
        }
    }
    let upper_opt = sol.objective();
    let vals: Vec<f64> = vars.iter().map(|v| sol[*v]).collect();

    // ϱ = 0 is always feasible; the inner problem is empty when some
    // assemblage member is too close to pure for the lattice to resolve
    let scale = covering_angle(&grid).cos();
    let inner = polyhedral(&blocks, strategies, &grid, scale).map_or(0.0, |(s, _)| s.objective());
    let lower_opt = inner.max(repaired_value(&blocks, &vals, strategies));
    WeightBracket {
        weight_lower: 1.0 - upper_opt,
        weight_upper: 1.0 - lower_opt,
        cuts,
    }
}

/// Makes the relaxed optimum feasible: clip each hidden state onto the PSD
/// cone at fixed trace, then shrink all of them by the largest factor that
/// keeps every assemblage constraint PSD.
fn repaired_value(blocks: &[Block], vals: &[f64], strategies: usize) -> f64 {
    let mut fixed = vals.to_vec();
    for l in 0..strategies {
        let s = fixed[4 * l].max(0.0);
        let r = (fixed[4 * l + 1].powi(2) + fixed[4 * l + 2].powi(2) + fixed[4 * l + 3].powi(2)).sqrt();
        fixed[4 * l] = s;
        if r > s {
            for k in 1..4 {
                fixed[4 * l + k] *= s / r;
            }
        }
    }
    let feasible = |t: f64| {
        let scaled: Vec<f64> = fixed.iter().map(|x| x * t).collect();
        blocks[strategies..].iter().all(|b| {
            let v = b.value(&scaled);
            v[0] - (v[1] * v[1] + v[2] * v[2] + v[3] * v[3]).sqrt() >= 0.0
        })
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    if feasible(1.0) {
        lo = 1.0;
    } else {
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if feasible(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    (0..strategies).map(|l| fixed[4 * l]).sum::<f64>() * lo
}

/// Un-normalized assemblage `½ Φ(|a_i⟩⟨a_i|)` for a qubit channel given as a
/// function on 2×2 matrices and measurement eigenvectors `kets[i][a]`.
pub fn channel_assemblage(channel: impl Fn(&Qubit) -> Qubit, kets: &[[[C; 2]; 2]]) -> Vec<[Qubit; 2]> {
    kets.iter()
        .map(|pair| {
            pair.map(|k| {
                let mut p = [[C::new(0.0, 0.0); 2]; 2];
                for r in 0..2 {
                    for c in 0..2 {
                        p[r][c] = k[r] * k[c].conj() * 0.5;
                    }
                }
                channel(&p)
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn kets_xz() -> Vec<[[C; 2]; 2]> {
        let s = 0.5f64.sqrt();
        vec![
            [[C::new(s, 0.0), C::new(s, 0.0)], [C::new(s, 0.0), C::new(-s, 0.0)]],
            [[C::new(1.0, 0.0), C::new(0.0, 0.0)], [C::new(0.0, 0.0), C::new(1.0, 0.0)]],
        ]
    }

    #[test]
    fn unsteerable_assemblage_has_zero_weight() {
        let mixed = |_: &Qubit| {
            [[C::new(0.3, 0.0), C::new(0.1, 0.05)], [C::new(0.1, -0.05), C::new(0.2, 0.0)]]
        };
        let b = steering_weight(&channel_assemblage(mixed, &kets_xz()), 400, 1e-11, 200);
        assert!(b.weight_lower <= 1e-9 && b.weight_upper < 1e-9, "{b:?}");
    }

    #[test]
    fn identity_channel_is_fully_steerable() {
        let b = steering_weight(&channel_assemblage(|r| *r, &kets_xz()), 400, 1e-11, 200);
        assert!(b.weight_lower > 1.0 - 1e-6 && b.weight_upper <= 1.0 + 1e-12, "{b:?}");
    }
}
