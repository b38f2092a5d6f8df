//! SMO for the soft-margin dual
//!
//! ```text
//! max  W(α) = Σαᵢ − ½ ΣΣ αᵢαⱼ yᵢyⱼ K(xᵢ,xⱼ)
//! s.t. 0 ≤ αᵢ ≤ C,  Σ αᵢyᵢ = 0
//! ```
//!
//! solved as the equivalent minimization of `f = −W`. The working pair is the
//! maximal violator plus the partner with the best second-order gain, and the
//! loop stops once the KKT gap `m(α) − M(α)` drops below `tol`.

use super::kernel::KernelCache;

const TAU: f64 = 1e-12;

pub(crate) struct SolveOutput {
    pub alpha: Vec<f64>,
    pub rho: f64,
    pub converged: bool,
    pub iterations: usize,
    pub objective: f64,
    pub gap: f64,
    pub history: Option<Vec<f64>>,
}

#[inline]
fn in_up(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 { a < c } else { a > 0.0 }
}

#[inline]
fn in_low(y: f64, a: f64, c: f64) -> bool {
    if y > 0.0 { a > 0.0 } else { a < c }
}

fn dual_objective(alpha: &[f64], grad: &[f64]) -> f64 {
    // With G = Qα − e:  W = eᵀα − ½αᵀQα = −½ Σ αᵢ(Gᵢ − 1).
    -0.5 * alpha.iter().zip(grad).map(|(a, g)| a * (g - 1.0)).sum::<f64>()
}

pub(crate) fn smo(cache: &KernelCache<'_>, y: &[f64], c: f64, tol: f64, max_iter: usize, record: bool) -> SolveOutput {
    let m = cache.len();
    let qd = cache.diag();
    let mut alpha = vec![0.0; m];
    let mut grad = vec![-1.0; m];
    let mut history = record.then(|| vec![0.0]);
    let mut iterations = 0;
    let mut converged = false;
    let mut gap = f64::INFINITY;

    while iterations < max_iter {
        let mut gmax = f64::NEG_INFINITY;
        let mut i = usize::MAX;
        for t in 0..m {
            if in_up(y[t], alpha[t], c) {
                let v = -y[t] * grad[t];
                if v >= gmax {
                    gmax = v;
                    i = t;
                }
            }
        }
        let mut gmin = f64::INFINITY;
        let mut j = usize::MAX;
        let mut best = f64::INFINITY;
        let qi = (i != usize::MAX).then(|| cache.row(i));
        for t in 0..m {
            if !in_low(y[t], alpha[t], c) {
                continue;
            }
            let v = -y[t] * grad[t];
            if v < gmin {
                gmin = v;
            }
            let diff = gmax - v;
            if let Some(qi) = &qi {
                if diff > 0.0 {
                    let mut quad = qd[i] + qd[t] - 2.0 * qi[t];
                    if quad <= 0.0 {
                        quad = TAU;
                    }
                    let obj = -(diff * diff) / quad;
                    if obj <= best {
                        best = obj;
                        j = t;
                    }
                }
            }
        }
        gap = gmax - gmin;
        if gap < tol || j == usize::MAX {
            converged = true;
            break;
        }
        let qi = qi.expect("i chosen whenever j is");
        let qj = cache.row(j);
        iterations += 1;

        let (yi, yj) = (y[i], y[j]);
        let (old_i, old_j) = (alpha[i], alpha[j]);
        let quad = qd[i] + qd[j] - 2.0 * qi[j];
        let quad = if quad <= 0.0 { TAU } else { quad };
        if yi != yj {
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }

        let di = alpha[i] - old_i;
        let dj = alpha[j] - old_j;
        for t in 0..m {
            grad[t] += y[t] * (yi * qi[t] * di + yj * qj[t] * dj);
        }
        if let Some(h) = history.as_mut() {
            h.push(dual_objective(&alpha, &grad));
        }
    }

    SolveOutput {
        rho: compute_rho(&alpha, &grad, y, c),
        objective: dual_objective(&alpha, &grad),
        alpha,
        converged,
        iterations,
        gap,
        history,
    }
}

/// Offset `ρ` with decision `f(x) = Σ αᵢyᵢK(xᵢ,x) − ρ`: the mean of `yᵢGᵢ`
/// over free vectors, or the midpoint of the feasible interval when none is
/// free.
fn compute_rho(alpha: &[f64], grad: &[f64], y: &[f64], c: f64) -> f64 {
    let mut ub = f64::INFINITY;
    let mut lb = f64::NEG_INFINITY;
    let mut sum_free = 0.0;
    let mut n_free = 0usize;
    for t in 0..alpha.len() {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            n_free += 1;
            sum_free += yg;
        }
    }
    if n_free > 0 {
        sum_free / n_free as f64
    } else {
        (ub + lb) / 2.0
    }
}
