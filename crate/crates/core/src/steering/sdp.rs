//! Primal-dual interior point method for small semidefinite programs whose
//! cones are all 2×2 Hermitian blocks.
//!
//! The problem is
//!
//! ```text
//! maximize   Σ_j Tr(C_j X_j)
//! subject to X_j ⪰ 0,
//!            G_k − Σ_j c_kj X_j ⪰ 0
//! ```
//!
//! with dual
//!
//! ```text
//! minimize   Σ_k Tr(G_k F_k)
//! subject to F_k ⪰ 0,
//!            Y_j = Σ_k c_kj F_k − C_j ⪰ 0.
//! ```
//!
//! A variable may be confined to a face of the cone (a ray `t|v⟩⟨v|` or
//! zero) and a constraint may be compressed onto a ray `⟨w|·|w⟩ ≥ 0`. This
//! is how problems without strictly feasible points are made regular.
//!
//! Internally every variable is expanded in real coordinates and every cone
//! becomes a slack block `S = G + Σ x_i H_i` (scalar cones as `s·I`).
//! Search directions use Nesterov–Todd scaling with a Mehrotra
//! predictor-corrector step.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{C64, Mat2, ZERO};

/// Face of the PSD cone a matrix variable is restricted to.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Face {
    #[default]
    Full,
    /// `X = t|v⟩⟨v|`, `t ≥ 0`, for a unit vector `v`.
    Ray([C64; 2]),
    Zero,
}

/// `G − Σ_j c_j X_j ⪰ 0`, or with `compress = Some(w)` the scalar
/// inequality `⟨w|G − Σ_j c_j X_j|w⟩ ≥ 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Lmi {
    pub constant: Mat2,
    pub terms: Vec<(usize, f64)>,
    pub compress: Option<[C64; 2]>,
}

impl Lmi {
    pub fn new(constant: Mat2, terms: Vec<(usize, f64)>) -> Self {
        Lmi {
            constant,
            terms,
            compress: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpProblem {
    /// One objective matrix per PSD variable.
    pub objective: Vec<Mat2>,
    pub constraints: Vec<Lmi>,
    /// One face per variable; an empty list means every variable is free.
    pub faces: Vec<Face>,
}

impl SdpProblem {
    pub fn new(objective: Vec<Mat2>, constraints: Vec<Lmi>) -> Self {
        SdpProblem {
            objective,
            constraints,
            faces: Vec::new(),
        }
    }

    pub fn face(&self, j: usize) -> Face {
        self.faces.get(j).copied().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SdpOptions {
    pub max_iterations: usize,
    /// Relative gap and residual target.
    pub tolerance: f64,
    pub step_fraction: f64,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            max_iterations: 100,
            tolerance: 1e-9,
            step_fraction: 0.98,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SdpSolution {
    pub primal_matrices: Vec<Mat2>,
    pub primal_value: f64,
    /// `F_k`, one per constraint; compressed constraints give `f|w⟩⟨w|`.
    pub dual_matrices: Vec<Mat2>,
    /// `Y_j`, the dual slack of `X_j ⪰ 0` (zero for variables fixed at 0).
    pub variable_duals: Vec<Mat2>,
    pub dual_value: f64,
    pub gap: f64,
    pub iterations: usize,
    pub primal_residual: f64,
    pub dual_residual: f64,
    /// `Σ Tr(S Z)` over all cones.
    pub complementarity: f64,
}

#[derive(Debug, Error)]
pub enum SdpError {
    #[error("constraint {constraint} refers to variable {variable}, but only {count} exist")]
    BadVariable {
        constraint: usize,
        variable: usize,
        count: usize,
    },
    #[error("problem data must be Hermitian (block {0})")]
    NotHermitian(usize),
    #[error("{faces} faces given for {variables} variables")]
    FaceCount { faces: usize, variables: usize },
    #[error("iterates diverge: the problem looks {0} infeasible")]
    Infeasible(&'static str),
    #[error("no convergence after {} iterations (gap {})", best.iterations, best.gap)]
    IterationLimit { best: Box<SdpSolution> },
    /// Round-off stopped further progress; `best` is the most accurate iterate.
    #[error("progress stalled at iteration {} (gap {})", best.iterations, best.gap)]
    Stalled { best: Box<SdpSolution> },
}

/// Iterations without improvement before giving up.
const STALL_ITERATIONS: usize = 5;

/// Orthonormal basis of 2×2 Hermitian matrices under `Tr(AB)`.
fn basis() -> [Mat2; 4] {
    let r = std::f64::consts::FRAC_1_SQRT_2;
    [
        Mat2::diag(1.0, 0.0),
        Mat2::diag(0.0, 1.0),
        Mat2::from_real(0.0, r, r, 0.0),
        Mat2::new(ZERO, C64::new(0.0, -r), C64::new(0.0, r), ZERO),
    ]
}

fn unit(v: [C64; 2]) -> [C64; 2] {
    let n = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    [v[0] / n, v[1] / n]
}

fn expectation(w: &[C64; 2], m: &Mat2) -> f64 {
    let mw = m.apply(*w);
    (w[0].conj() * mw[0] + w[1].conj() * mw[1]).re
}

/// Real coordinates of one variable: the matrices they multiply in `X_j`
/// and in the variable's own cone block.
struct Coords {
    offset: usize,
    in_x: Vec<Mat2>,
    in_cone: Vec<Mat2>,
}

/// `S = G + Σ x_i H_i`.
struct Block {
    constant: Mat2,
    terms: Vec<(usize, Mat2)>,
}

impl Block {
    fn apply(&self, x: &[f64]) -> Mat2 {
        let mut m = self.constant;
        for (i, h) in &self.terms {
            m += h.scale_re(x[*i]);
        }
        m
    }

    fn linear(&self, x: &[f64]) -> Mat2 {
        let mut m = Mat2::zero();
        for (i, h) in &self.terms {
            m += h.scale_re(x[*i]);
        }
        m
    }

    fn adjoint_add(&self, z: &Mat2, out: &mut [f64]) {
        for (i, h) in &self.terms {
            out[*i] += h.trace_product_re(z);
        }
    }
}

/// `a ∘ b = (ab + ba)/2`.
fn jordan(a: &Mat2, b: &Mat2) -> Mat2 {
    (*a * *b + *b * *a).scale_re(0.5).hermitian_part()
}

/// Largest `α ≤ 1` with `S + α dS ⪰ 0`.
fn max_step(s: &Mat2, ds: &Mat2) -> f64 {
    let inv_sqrt = s.hermitian_fn(|v| 1.0 / v.sqrt());
    let m = (inv_sqrt * *ds * inv_sqrt).hermitian_part();
    let worst = -m.min_eigenvalue();
    if worst > 0.0 {
        (1.0 / worst).min(1.0)
    } else {
        1.0
    }
}

struct Scaling {
    w_inv: Mat2,
    w_half: Mat2,
    w_inv_half: Mat2,
    lambda_vals: [f64; 2],
    lambda_vecs: Mat2,
}

fn nt_scaling(s: &Mat2, z: &Mat2) -> Scaling {
    let s_half = s.hermitian_fn(f64::sqrt);
    let mid = (s_half * *z * s_half).hermitian_part();
    let mid_inv_half = mid.hermitian_fn(|v| 1.0 / v.sqrt());
    let w = (s_half * mid_inv_half * s_half).hermitian_part();
    let w_half = w.hermitian_fn(f64::sqrt);
    let w_inv_half = w.hermitian_fn(|v| 1.0 / v.sqrt());
    let lambda = (w_half * *z * w_half).hermitian_part();
    let (lambda_vals, lambda_vecs) = lambda.eig_hermitian();
    Scaling {
        w_inv: w.hermitian_fn(|v| 1.0 / v),
        w_half,
        w_inv_half,
        lambda_vals,
        lambda_vecs,
    }
}

impl Scaling {
    /// Solves `Λ ∘ X = R` in the eigenbasis of `Λ`.
    fn lyapunov(&self, r: &Mat2) -> Mat2 {
        let q = self.lambda_vecs;
        let rq = q.adjoint() * *r * q;
        let l = self.lambda_vals;
        let mut x = Mat2::zero();
        for i in 0..2 {
            for j in 0..2 {
                x.0[i][j] = rq.0[i][j] * (2.0 / (l[i] + l[j]));
            }
        }
        (q * x * q.adjoint()).hermitian_part()
    }

    fn lambda(&self) -> Mat2 {
        let q = self.lambda_vecs;
        q * Mat2::diag(self.lambda_vals[0], self.lambda_vals[1]) * q.adjoint()
    }
}

/// Cholesky when the Schur complement is numerically definite, otherwise a
/// truncated spectral pseudo-inverse (degenerate optimal faces). Both work
/// on the diagonally equilibrated matrix `D M D`.
struct SchurSolver {
    d: DVector<f64>,
    kind: SchurKind,
}

enum SchurKind {
    Cholesky(nalgebra::Cholesky<f64, nalgebra::Dyn>),
    Spectral(nalgebra::SymmetricEigen<f64, nalgebra::Dyn>),
}

impl SchurSolver {
    fn new(mut m: DMatrix<f64>) -> Self {
        let d = m.diagonal().map(|v| if v > 0.0 { 1.0 / v.sqrt() } else { 1.0 });
        for i in 0..m.nrows() {
            for j in 0..m.ncols() {
                m[(i, j)] *= d[i] * d[j];
            }
        }
        let kind = match m.clone().cholesky() {
            Some(ch) => SchurKind::Cholesky(ch),
            None => SchurKind::Spectral(m.symmetric_eigen()),
        };
        SchurSolver { d, kind }
    }

    fn solve(&self, rhs: DVector<f64>) -> DVector<f64> {
        let rhs = rhs.component_mul(&self.d);
        let y = match &self.kind {
            SchurKind::Cholesky(ch) => ch.solve(&rhs),
            SchurKind::Spectral(eig) => {
                let cutoff = 1e-14 * eig.eigenvalues.amax();
                let mut y = eig.eigenvectors.transpose() * rhs;
                for (yi, &l) in y.iter_mut().zip(eig.eigenvalues.iter()) {
                    *yi = if l > cutoff { *yi / l } else { 0.0 };
                }
                &eig.eigenvectors * y
            }
        };
        y.component_mul(&self.d)
    }
}

struct Direction {
    dx: Vec<f64>,
    ds: Vec<Mat2>,
    dz: Vec<Mat2>,
}

/// `X_j = δ·I` (or `δ|v⟩⟨v|` on a ray) for the largest `δ = scale/2^k` that
/// keeps every constraint at least half as far inside the cone as at zero.
fn primal_start(blocks: &[Block], coords: &[Coords], var_blocks: usize, n: usize, scale: f64) -> Option<(Vec<f64>, Vec<Mat2>)> {
    let floor: Vec<f64> = blocks[var_blocks..].iter().map(|b| b.constant.min_eigenvalue()).collect();
    if floor.iter().any(|&f| f <= 0.0) {
        return None;
    }
    let mut delta = scale;
    for _ in 0..80 {
        let mut x = vec![0.0; n];
        for cj in coords {
            let diagonal = cj.in_x.len().min(2);
            x[cj.offset..cj.offset + diagonal].iter_mut().for_each(|v| *v = delta);
        }
        let s: Vec<Mat2> = blocks.iter().map(|b| b.apply(&x)).collect();
        let inside = s[var_blocks..].iter().zip(&floor).all(|(sk, f)| sk.min_eigenvalue() >= 0.5 * f);
        if inside {
            return Some((x, s));
        }
        delta *= 0.5;
    }
    None
}

/// Constraint duals `τ·I` with the variable duals solving the dual equality
/// exactly, for the smallest `τ = scale·2^k` making them all definite.
fn dual_start(blocks: &[Block], coords: &[Coords], var_block: &[Option<usize>], c: &[f64], var_blocks: usize, scale: f64) -> Option<Vec<Mat2>> {
    let mut tau = scale;
    for _ in 0..40 {
        let mut z = vec![Mat2::identity().scale_re(tau); blocks.len()];
        let mut need: Vec<f64> = c.iter().map(|v| -v).collect();
        let mut pushed = vec![0.0; c.len()];
        for (b, zk) in blocks[var_blocks..].iter().zip(&z[var_blocks..]) {
            b.adjoint_add(zk, &mut pushed);
        }
        need.iter_mut().zip(&pushed).for_each(|(r, p)| *r -= p);
        let mut ok = true;
        for (cj, vb) in coords.iter().zip(var_block) {
            let Some(b) = *vb else { continue };
            let mut m = Mat2::zero();
            for (a, h) in cj.in_cone.iter().enumerate() {
                // cone terms are orthonormal, or the single matrix I
                m += h.scale_re(need[cj.offset + a] / h.trace_product_re(h));
            }
            ok &= m.min_eigenvalue() > 0.0;
            z[b] = m;
        }
        if ok {
            return Some(z);
        }
        tau *= 2.0;
    }
    None
}

pub fn solve_sdp(problem: &SdpProblem) -> Result<SdpSolution, SdpError> {
    solve_sdp_with(problem, &SdpOptions::default())
}

pub fn solve_sdp_with(problem: &SdpProblem, opts: &SdpOptions) -> Result<SdpSolution, SdpError> {
    let nvar = problem.objective.len();
    if !problem.faces.is_empty() && problem.faces.len() != nvar {
        return Err(SdpError::FaceCount {
            faces: problem.faces.len(),
            variables: nvar,
        });
    }
    for (j, c) in problem.objective.iter().enumerate() {
        if c.hermitian_deviation() > 1e-12 {
            return Err(SdpError::NotHermitian(j));
        }
    }

    let e = basis();
    let mut coords = Vec::with_capacity(nvar);
    let mut n = 0;
    for j in 0..nvar {
        let (in_x, in_cone) = match problem.face(j) {
            Face::Full => (e.to_vec(), e.to_vec()),
            Face::Ray(v) => {
                let v = unit(v);
                (vec![Mat2::outer(v, v)], vec![Mat2::identity()])
            }
            Face::Zero => (Vec::new(), Vec::new()),
        };
        coords.push(Coords {
            offset: n,
            in_x,
            in_cone,
        });
        n += coords[j].in_x.len();
    }

    // cone blocks of the variables first (only those with coordinates), then
    // one block per constraint
    let mut blocks = Vec::new();
    let mut var_block = vec![None; nvar];
    for (j, cj) in coords.iter().enumerate() {
        if cj.in_cone.is_empty() {
            continue;
        }
        var_block[j] = Some(blocks.len());
        blocks.push(Block {
            constant: Mat2::zero(),
            terms: cj.in_cone.iter().enumerate().map(|(a, h)| (cj.offset + a, *h)).collect(),
        });
    }
    let mut constraint_block = Vec::with_capacity(problem.constraints.len());
    for (k, lmi) in problem.constraints.iter().enumerate() {
        if lmi.constant.hermitian_deviation() > 1e-12 {
            return Err(SdpError::NotHermitian(nvar + k));
        }
        let mut terms = Vec::new();
        for &(j, c) in &lmi.terms {
            let cj = coords.get(j).ok_or(SdpError::BadVariable {
                constraint: k,
                variable: j,
                count: nvar,
            })?;
            for (a, h) in cj.in_x.iter().enumerate() {
                terms.push((cj.offset + a, h.scale_re(-c)));
            }
        }
        let constant = lmi.constant.hermitian_part();
        if terms.is_empty() {
            // nothing to optimize: the constraint either holds or cannot
            let slack = match lmi.compress {
                None => constant.min_eigenvalue(),
                Some(w) => expectation(&unit(w), &constant),
            };
            if slack < -1e-12 {
                return Err(SdpError::Infeasible("primal"));
            }
            constraint_block.push(None);
            continue;
        }
        constraint_block.push(Some(blocks.len()));
        blocks.push(match lmi.compress {
            None => Block { constant, terms },
            Some(w) => {
                let w = unit(w);
                let squash = |m: &Mat2| Mat2::identity().scale_re(expectation(&w, m));
                Block {
                    constant: squash(&constant),
                    terms: terms.iter().map(|(i, h)| (*i, squash(h))).collect(),
                }
            }
        });
    }
    let nb = blocks.len();
    let c: Vec<f64> = coords
        .iter()
        .zip(&problem.objective)
        .flat_map(|(cj, obj)| cj.in_x.iter().map(move |h| h.trace_product_re(obj)))
        .collect();

    let scale = 1.0
        + blocks.iter().map(|b| b.constant.max_abs()).fold(0.0, f64::max)
        + c.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut x = vec![0.0; n];
    let mut s: Vec<Mat2> = vec![Mat2::identity().scale_re(scale); nb];
    let mut z: Vec<Mat2> = vec![Mat2::identity().scale_re(scale); nb];
    // Start from strictly feasible points when they are easy to find, so the
    // residuals stay at round-off instead of shrinking only as fast as the
    // slacks do.
    let var_blocks = nb - constraint_block.iter().flatten().count();
    if let Some((x0, s0)) = primal_start(&blocks, &coords, var_blocks, n, scale) {
        x = x0;
        s = s0;
    }
    if let Some(z0) = dual_start(&blocks, &coords, &var_block, &c, var_blocks, scale) {
        z = z0;
    }

    let mut iterations = 0;
    let mut best: Option<(f64, SdpSolution)> = None;
    let mut stalled = 0;
    loop {
        let rp: Vec<Mat2> = blocks.iter().zip(&s).map(|(b, sk)| *sk - b.apply(&x)).collect();
        let mut rd = c.clone();
        for (b, zk) in blocks.iter().zip(&z) {
            b.adjoint_add(zk, &mut rd);
        }
        let pobj: f64 = c.iter().zip(&x).map(|(a, b)| a * b).sum();
        let dobj: f64 = blocks.iter().zip(&z).map(|(b, zk)| b.constant.trace_product_re(zk)).sum();
        let compl: f64 = s.iter().zip(&z).map(|(a, b)| a.trace_product_re(b)).sum();
        let rp_norm = rp.iter().map(Mat2::max_abs).fold(0.0, f64::max);
        let rd_norm = rd.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let snapshot = |iterations: usize| SdpSolution {
            primal_matrices: coords
                .iter()
                .map(|cj| {
                    let mut m = Mat2::zero();
                    for (a, h) in cj.in_x.iter().enumerate() {
                        m += h.scale_re(x[cj.offset + a]);
                    }
                    m
                })
                .collect(),
            primal_value: pobj,
            dual_matrices: problem
                .constraints
                .iter()
                .zip(&constraint_block)
                .map(|(lmi, b)| match (b, lmi.compress) {
                    (None, _) => Mat2::zero(),
                    (Some(b), None) => z[*b],
                    (Some(b), Some(w)) => {
                        let w = unit(w);
                        Mat2::outer(w, w).scale_re(z[*b].trace().re)
                    }
                })
                .collect(),
            variable_duals: (0..nvar)
                .map(|j| match (var_block[j], problem.face(j)) {
                    (Some(b), Face::Ray(v)) => {
                        let v = unit(v);
                        Mat2::outer(v, v).scale_re(z[b].trace().re)
                    }
                    (Some(b), _) => z[b],
                    (None, _) => Mat2::zero(),
                })
                .collect(),
            dual_value: dobj,
            gap: dobj - pobj,
            iterations,
            primal_residual: rp_norm,
            dual_residual: rd_norm,
            complementarity: compl,
        };
        let rel = 1.0 + pobj.abs() + dobj.abs();
        if rp_norm <= opts.tolerance * scale
            && rd_norm <= opts.tolerance * scale
            && compl <= opts.tolerance * rel
            && (dobj - pobj).abs() <= opts.tolerance * rel
        {
            return Ok(snapshot(iterations));
        }
        let finite = [pobj, dobj, compl].iter().chain(&x).all(|v| v.is_finite());
        if !finite {
            return Err(match best.take() {
                Some((_, b)) => SdpError::Stalled { best: Box::new(b) },
                None => SdpError::Infeasible("numerically"),
            });
        }
        let x_size = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
        let z_size = z.iter().map(Mat2::max_abs).fold(0.0, f64::max);
        if x_size > 1e12 * scale {
            return Err(SdpError::Infeasible("dual"));
        }
        if z_size > 1e12 * scale {
            return Err(SdpError::Infeasible("primal"));
        }
        let merit = [rp_norm / scale, rd_norm / scale, compl / rel, (dobj - pobj).abs() / rel]
            .into_iter()
            .fold(0.0, f64::max);
        if best.as_ref().is_none_or(|(m, _)| merit < *m) {
            best = Some((merit, snapshot(iterations)));
            stalled = 0;
        } else {
            stalled += 1;
            if stalled >= STALL_ITERATIONS {
                let (_, b) = best.take().expect("recorded above");
                return Err(SdpError::Stalled { best: Box::new(b) });
            }
        }
        if iterations >= opts.max_iterations {
            let (_, b) = best.take().expect("recorded above");
            return Err(SdpError::IterationLimit { best: Box::new(b) });
        }
        iterations += 1;

        let scalings: Vec<Scaling> = s.iter().zip(&z).map(|(sk, zk)| nt_scaling(sk, zk)).collect();
        let mut schur = DMatrix::<f64>::zeros(n, n);
        for (b, sc) in blocks.iter().zip(&scalings) {
            let wi = sc.w_inv;
            for (i1, h1) in &b.terms {
                let left = wi * *h1 * wi;
                for (i2, h2) in &b.terms {
                    schur[(*i1, *i2)] += left.trace_product_re(h2);
                }
            }
        }
        let solver = SchurSolver::new(schur);

        let direction = |r: &[Mat2]| -> Direction {
            let t: Vec<Mat2> = scalings
                .iter()
                .zip(r)
                .map(|(sc, rk)| sc.w_inv_half * sc.lyapunov(rk) * sc.w_inv_half)
                .collect();
            let mut rhs = rd.clone();
            for k in 0..nb {
                let wi = scalings[k].w_inv;
                blocks[k].adjoint_add(&t[k], &mut rhs);
                blocks[k].adjoint_add(&(wi * rp[k] * wi), &mut rhs);
            }
            let dx: Vec<f64> = solver.solve(DVector::from_vec(rhs)).iter().copied().collect();
            let ds: Vec<Mat2> = blocks
                .iter()
                .zip(&rp)
                .map(|(b, rpk)| (b.linear(&dx) - *rpk).hermitian_part())
                .collect();
            let dz: Vec<Mat2> = (0..nb)
                .map(|k| {
                    let wi = scalings[k].w_inv;
                    (t[k] - wi * ds[k] * wi).hermitian_part()
                })
                .collect();
            Direction { dx, ds, dz }
        };
        let steps = |d: &Direction| {
            let ap = s.iter().zip(&d.ds).map(|(a, b)| max_step(a, b)).fold(1.0, f64::min);
            let ad = z.iter().zip(&d.dz).map(|(a, b)| max_step(a, b)).fold(1.0, f64::min);
            (ap, ad)
        };

        let mu = compl / (2.0 * nb as f64);
        let minus_lambda_sq: Vec<Mat2> = scalings
            .iter()
            .map(|sc| {
                let l = sc.lambda();
                -(l * l).hermitian_part()
            })
            .collect();
        let affine = direction(&minus_lambda_sq);
        let (ap, ad) = steps(&affine);
        let mu_aff: f64 = (0..nb)
            .map(|k| {
                let sa = s[k] + affine.ds[k].scale_re(ap);
                let za = z[k] + affine.dz[k].scale_re(ad);
                sa.trace_product_re(&za)
            })
            .sum::<f64>()
            / (2.0 * nb as f64);
        let sigma = (mu_aff / mu).clamp(0.0, 1.0).powi(3);
        let corrected: Vec<Mat2> = (0..nb)
            .map(|k| {
                let sc = &scalings[k];
                let ds_t = sc.w_inv_half * affine.ds[k] * sc.w_inv_half;
                let dz_t = sc.w_half * affine.dz[k] * sc.w_half;
                Mat2::identity().scale_re(sigma * mu) + minus_lambda_sq[k] - jordan(&ds_t, &dz_t)
            })
            .collect();
        let d = direction(&corrected);
        let (ap, ad) = steps(&d);
        let (ap, ad) = ((opts.step_fraction * ap).min(1.0), (opts.step_fraction * ad).min(1.0));
        for (xi, dxi) in x.iter_mut().zip(&d.dx) {
            *xi += ap * dxi;
        }
        for k in 0..nb {
            s[k] = (s[k] + d.ds[k].scale_re(ap)).hermitian_part();
            z[k] = (z[k] + d.dz[k].scale_re(ad)).hermitian_part();
        }
    }
}
