//! Adaptive Dormand–Prince 5(4) integration with 4th-order dense output.
//!
//! The state is a flat vector of complex numbers. Output is produced by
//! interpolating inside accepted steps, so the step-size sequence is never
//! distorted by the requested grid.

use thiserror::Error;

use crate::linalg::{C64, ZERO};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum OdeError {
    #[error("step size underflow at t = {t} (h = {h:e})")]
    StepUnderflow { t: f64, h: f64 },
    #[error("maximum number of steps ({max_steps}) exceeded at t = {t}")]
    TooManySteps { t: f64, max_steps: usize },
    #[error("output grid must be non-decreasing and start at t0 = {t0}")]
    BadGrid { t0: f64 },
    #[error("non-finite state encountered at t = {t}")]
    NonFinite { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rtol: f64,
    pub atol: f64,
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        OdeOptions {
            rtol: 1e-9,
            atol: 1e-12,
            h_init: None,
            h_max: f64::INFINITY,
            max_steps: 2_000_000,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;

const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

struct Work {
    k: [Vec<C64>; 7],
    tmp: Vec<C64>,
    y_new: Vec<C64>,
    dense: [Vec<C64>; 5],
}

/// Integrates `dy/dt = f(t, y)` from `t0` and reports the state at every
/// time of `grid` through `observe(index, state)`.
///
/// `grid` must be non-decreasing with `grid[0] >= t0`. Returns the state at
/// the last grid time together with step statistics.
pub fn integrate<F, O>(
    mut f: F,
    t0: f64,
    y0: &[C64],
    grid: &[f64],
    opts: &OdeOptions,
    mut observe: O,
) -> Result<(Vec<C64>, OdeStats), OdeError>
where
    F: FnMut(f64, &[C64], &mut [C64]),
    O: FnMut(usize, &[C64]),
{
    if grid.first().is_some_and(|&g| g < t0) || grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(OdeError::BadGrid { t0 });
    }
    let n = y0.len();
    let mut stats = OdeStats::default();
    let mut y = y0.to_vec();
    let mut t = t0;
    let mut next_out = 0;
    while next_out < grid.len() && grid[next_out] == t0 {
        observe(next_out, &y);
        next_out += 1;
    }
    let Some(&t_end) = grid.last() else {
        return Ok((y, stats));
    };
    if next_out == grid.len() {
        return Ok((y, stats));
    }

    let mut w = Work {
        k: std::array::from_fn(|_| vec![ZERO; n]),
        tmp: vec![ZERO; n],
        y_new: vec![ZERO; n],
        dense: std::array::from_fn(|_| vec![ZERO; n]),
    };
    f(t, &y, &mut w.k[0]);
    stats.rhs_evals += 1;

    let span = t_end - t0;
    let mut h = opts
        .h_init
        .unwrap_or_else(|| initial_step(&y, &w.k[0], opts, span))
        .min(opts.h_max)
        .min(span);
    let mut err_old: f64 = 1e-4;
    let mut last_rejected = false;

    loop {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeError::TooManySteps {
                t,
                max_steps: opts.max_steps,
            });
        }
        if h.abs() <= 1e-14 * t.abs().max(1.0) {
            return Err(OdeError::StepUnderflow { t, h });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        stage(&y, h, &[(A21, 0)], &w.k, &mut w.tmp);
        f(t + C2 * h, &w.tmp, &mut w.k[1]);
        stage(&y, h, &[(A31, 0), (A32, 1)], &w.k, &mut w.tmp);
        f(t + C3 * h, &w.tmp, &mut w.k[2]);
        stage(&y, h, &[(A41, 0), (A42, 1), (A43, 2)], &w.k, &mut w.tmp);
        f(t + C4 * h, &w.tmp, &mut w.k[3]);
        stage(&y, h, &[(A51, 0), (A52, 1), (A53, 2), (A54, 3)], &w.k, &mut w.tmp);
        f(t + C5 * h, &w.tmp, &mut w.k[4]);
        stage(
            &y,
            h,
            &[(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)],
            &w.k,
            &mut w.tmp,
        );
        f(t + h, &w.tmp, &mut w.k[5]);
        stage(
            &y,
            h,
            &[(A71, 0), (A73, 2), (A74, 3), (A75, 4), (A76, 5)],
            &w.k,
            &mut w.y_new,
        );
        f(t + h, &w.y_new, &mut w.k[6]);
        stats.rhs_evals += 6;

        let mut acc = 0.0;
        for i in 0..n {
            let e = (w.k[0][i] * E1
                + w.k[2][i] * E3
                + w.k[3][i] * E4
                + w.k[4][i] * E5
                + w.k[5][i] * E6
                + w.k[6][i] * E7)
                * h;
            let scale = opts.atol + opts.rtol * y[i].norm().max(w.y_new[i].norm());
            acc += (e.norm() / scale).powi(2);
        }
        let err = (acc / n.max(1) as f64).sqrt();
        if !err.is_finite() {
            return Err(OdeError::NonFinite { t });
        }

        const SAFETY: f64 = 0.9;
        const BETA: f64 = 0.04;
        if err <= 1.0 {
            // dense-output coefficients for the accepted step
            for i in 0..n {
                let ydiff = w.y_new[i] - y[i];
                let bspl = w.k[0][i] * h - ydiff;
                w.dense[0][i] = y[i];
                w.dense[1][i] = ydiff;
                w.dense[2][i] = bspl;
                w.dense[3][i] = ydiff - w.k[6][i] * h - bspl;
                w.dense[4][i] = (w.k[0][i] * D1
                    + w.k[2][i] * D3
                    + w.k[3][i] * D4
                    + w.k[4][i] * D5
                    + w.k[5][i] * D6
                    + w.k[6][i] * D7)
                    * h;
            }
            let t_new = if last { t_end } else { t + h };
            while next_out < grid.len() && grid[next_out] <= t_new {
                let theta = (grid[next_out] - t) / h;
                let theta1 = 1.0 - theta;
                for i in 0..n {
                    w.tmp[i] = w.dense[0][i]
                        + (w.dense[1][i]
                            + (w.dense[2][i]
                                + (w.dense[3][i] + w.dense[4][i] * theta1) * theta)
                                * theta1)
                            * theta;
                }
                observe(next_out, &w.tmp);
                next_out += 1;
            }
            std::mem::swap(&mut y, &mut w.y_new);
            w.k.swap(0, 6);
            t = t_new;
            stats.accepted += 1;
            if last || next_out == grid.len() {
                return Ok((y, stats));
            }
            let err_c = err.max(1e-10);
            let mut fac = SAFETY * err_c.powf(-0.2 + 0.75 * BETA) * err_old.powf(BETA);
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            err_old = err_c;
            h = (h * fac).min(opts.h_max);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (SAFETY * err.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
}

fn stage(y: &[C64], h: f64, coeffs: &[(f64, usize)], k: &[Vec<C64>; 7], out: &mut [C64]) {
    out.copy_from_slice(y);
    for &(a, j) in coeffs {
        let ah = a * h;
        for (o, kj) in out.iter_mut().zip(&k[j]) {
            *o += kj * ah;
        }
    }
}

fn initial_step(y: &[C64], dy: &[C64], opts: &OdeOptions, span: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let mut d0 = 0.0;
    let mut d1 = 0.0;
    for (yi, fi) in y.iter().zip(dy) {
        let sc = opts.atol + opts.rtol * yi.norm();
        d0 += (yi.norm() / sc).powi(2);
        d1 += (fi.norm() / sc).powi(2);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span.abs().max(f64::MIN_POSITIVE))
}
