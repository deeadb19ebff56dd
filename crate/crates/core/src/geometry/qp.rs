//! Minimum-norm point of the convex hull of a finite set of (shifted) points:
//! `min ‖Σ αⱼ pⱼ‖²` over the probability simplex, where `pⱼ = vⱼ − b`.
//!
//! Two solvers share the [`ShiftedPoints`] access trait so they can run on a
//! cached Gram matrix or on explicit coordinates:
//! * Wolfe's active-set minimum-norm-point method (default), which
//!   terminates on the Frank–Wolfe gap `‖x‖² − minⱼ ⟨x, pⱼ⟩ ≤ tol`;
//! * accelerated projected gradient on `α` with exact simplex projection,
//!   stopping on the projected-gradient norm.

use serde::{Deserialize, Serialize};

use super::simplex::project_to_simplex;
use crate::linalg::lu_solve;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum QpMethod {
    #[default]
    MinNormPoint,
    ProjectedGradient,
}

/// Inner-product access to the shifted points `pⱼ = vⱼ − b`.
pub trait ShiftedPoints {
    fn len(&self) -> usize;
    /// `⟨pᵢ, pⱼ⟩`
    fn dot(&self, i: usize, j: usize) -> f64;
    /// `out[j] = ⟨pⱼ, Σᵢ wᵢ pᵢ⟩` for every `j`, where `combo` lists `(i, wᵢ)`.
    fn dots_with(&self, combo: &[(usize, f64)], out: &mut [f64]);
}

#[derive(Debug, Clone)]
pub struct QpSolution {
    /// Sparse weights `(index, α)`, positive and summing to one.
    pub weights: Vec<(usize, f64)>,
    pub iterations: usize,
    pub converged: bool,
}

pub const MAX_ITER: usize = 10_000;

pub fn solve<P: ShiftedPoints>(pts: &P, tol: f64, method: QpMethod) -> QpSolution {
    match method {
        QpMethod::MinNormPoint => min_norm_point(pts, tol, MAX_ITER),
        QpMethod::ProjectedGradient => projected_gradient(pts, tol, MAX_ITER),
    }
}

fn argmin(values: &[f64]) -> usize {
    let mut best = 0;
    for (j, &v) in values.iter().enumerate() {
        if v < values[best] {
            best = j;
        }
    }
    best
}

/// Affine minimizer of `‖Σ vᵢ pᵢ‖²` subject to `Σ vᵢ = 1` over the active
/// set, from the bordered system `[K 1; 1ᵀ 0]`.
fn affine_min(gram: &[f64], s: usize) -> Option<Vec<f64>> {
    let n = s + 1;
    let mut a = vec![0.0; n * n];
    for i in 0..s {
        for j in 0..s {
            a[i * n + j] = gram[i * s + j];
        }
        a[i * n + s] = 1.0;
        a[s * n + i] = 1.0;
    }
    let mut rhs = vec![0.0; n];
    rhs[s] = 1.0;
    let mut v = lu_solve(a, n, rhs)?;
    v.truncate(s);
    Some(v)
}

fn quad_form(gram: &[f64], s: usize, w: &[f64]) -> f64 {
    let mut acc = 0.0;
    for i in 0..s {
        for j in 0..s {
            acc += w[i] * gram[i * s + j] * w[j];
        }
    }
    acc
}

/// Wolfe's minimum-norm-point algorithm.
pub fn min_norm_point<P: ShiftedPoints>(pts: &P, tol: f64, max_iter: usize) -> QpSolution {
    let m = pts.len();
    if m == 1 {
        return QpSolution {
            weights: vec![(0, 1.0)],
            iterations: 0,
            converged: true,
        };
    }
    let start = (0..m)
        .map(|j| (j, pts.dot(j, j)))
        .fold((0, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best })
        .0;
    let mut active: Vec<usize> = vec![start];
    let mut w: Vec<f64> = vec![1.0];
    let mut gram: Vec<f64> = vec![pts.dot(start, start)];
    let mut dots = vec![0.0; m];
    const DROP: f64 = 1e-14;

    for iter in 0..max_iter {
        let s = active.len();
        let combo: Vec<(usize, f64)> = active.iter().copied().zip(w.iter().copied()).collect();
        pts.dots_with(&combo, &mut dots);
        let xx = quad_form(&gram, s, &w);
        let j = argmin(&dots);
        let gap = xx - dots[j];
        if gap <= tol || active.contains(&j) {
            return QpSolution {
                weights: combo,
                iterations: iter,
                converged: gap <= tol,
            };
        }

        // Add j to the active set.
        let s_new = s + 1;
        let mut g2 = vec![0.0; s_new * s_new];
        for a in 0..s {
            for b in 0..s {
                g2[a * s_new + b] = gram[a * s + b];
            }
            let v = pts.dot(active[a], j);
            g2[a * s_new + s] = v;
            g2[s * s_new + a] = v;
        }
        g2[s * s_new + s] = pts.dot(j, j);
        gram = g2;
        active.push(j);
        w.push(0.0);

        // Minor cycles: move toward the affine minimizer, dropping points
        // whose weight would turn negative.
        loop {
            let s = active.len();
            let Some(v) = affine_min(&gram, s) else {
                // Affinely dependent set under rounding: drop the newest
                // point and stop with the current feasible iterate.
                let last = active.len() - 1;
                let weights: Vec<(usize, f64)> =
                    active[..last].iter().copied().zip(w[..last].iter().copied()).collect();
                let total: f64 = weights.iter().map(|x| x.1).sum();
                return QpSolution {
                    weights: weights.into_iter().map(|(i, a)| (i, a / total)).collect(),
                    iterations: iter + 1,
                    converged: false,
                };
            };
            if v.iter().all(|&x| x > DROP) {
                w = v;
                break;
            }
            let mut theta: f64 = 1.0;
            for (&vi, &wi) in v.iter().zip(&w) {
                if vi <= DROP && wi - vi > 0.0 {
                    theta = theta.min(wi / (wi - vi));
                }
            }
            for (wi, &vi) in w.iter_mut().zip(&v) {
                *wi = (1.0 - theta) * *wi + theta * vi;
            }
            // Drop at least the entry that reached zero.
            let min_idx = argmin(&w);
            let keep: Vec<usize> = (0..s).filter(|&i| i != min_idx && w[i] > DROP).collect();
            let s2 = keep.len();
            let mut g2 = vec![0.0; s2 * s2];
            for (a, &ia) in keep.iter().enumerate() {
                for (b, &ib) in keep.iter().enumerate() {
                    g2[a * s2 + b] = gram[ia * s + ib];
                }
            }
            active = keep.iter().map(|&i| active[i]).collect();
            w = keep.iter().map(|&i| w[i]).collect();
            let total: f64 = w.iter().sum();
            w.iter_mut().for_each(|x| *x /= total);
            gram = g2;
            if s2 == 1 {
                break;
            }
        }
    }
    let combo = active.iter().copied().zip(w.iter().copied()).collect();
    QpSolution {
        weights: combo,
        iterations: max_iter,
        converged: false,
    }
}

/// Upper estimate of `λmax(PᵀP)`: a short power iteration with a safety
/// margin, capped by the trace.
fn lipschitz_estimate<P: ShiftedPoints>(pts: &P) -> f64 {
    let m = pts.len();
    let trace: f64 = (0..m).map(|j| pts.dot(j, j)).sum();
    let mut v = vec![1.0 / (m as f64).sqrt(); m];
    let mut out = vec![0.0; m];
    let mut est = 0.0;
    for _ in 0..50 {
        let combo: Vec<(usize, f64)> = v.iter().copied().enumerate().collect();
        pts.dots_with(&combo, &mut out);
        let nrm = out.iter().map(|x| x * x).sum::<f64>().sqrt();
        if nrm == 0.0 {
            break;
        }
        est = nrm;
        v.iter_mut().zip(&out).for_each(|(a, b)| *a = b / nrm);
    }
    (1.5 * est).min(trace).max(f64::MIN_POSITIVE)
}

/// FISTA with adaptive restart on `½‖Pα‖²` over the simplex.
pub fn projected_gradient<P: ShiftedPoints>(pts: &P, tol: f64, max_iter: usize) -> QpSolution {
    let m = pts.len();
    if m == 1 {
        return QpSolution {
            weights: vec![(0, 1.0)],
            iterations: 0,
            converged: true,
        };
    }
    let lipschitz = lipschitz_estimate(pts);
    let step = 1.0 / lipschitz;
    let sparse = |a: &[f64]| -> Vec<(usize, f64)> {
        a.iter()
            .enumerate()
            .filter(|(_, &x)| x != 0.0)
            .map(|(i, &x)| (i, x))
            .collect()
    };
    let mut alpha = vec![1.0 / m as f64; m];
    let mut y = alpha.clone();
    let mut t = 1.0f64;
    let mut grad = vec![0.0; m];
    let mut f_prev = f64::INFINITY;

    for iter in 0..max_iter {
        pts.dots_with(&sparse(&y), &mut grad);
        let next = project_to_simplex(&y.iter().zip(&grad).map(|(a, g)| a - step * g).collect::<Vec<_>>());
        // Gradient mapping at y.
        let gm: f64 = y
            .iter()
            .zip(&next)
            .map(|(a, b)| ((a - b) * lipschitz).powi(2))
            .sum::<f64>()
            .sqrt();
        if gm <= tol {
            return QpSolution {
                weights: sparse(&next),
                iterations: iter,
                converged: true,
            };
        }
        let ns = sparse(&next);
        let mut tmp = vec![0.0; m];
        pts.dots_with(&ns, &mut tmp);
        let f_next: f64 = ns.iter().map(|&(i, a)| a * tmp[i]).sum::<f64>() * 0.5;
        if f_next > f_prev {
            // Restart momentum.
            t = 1.0;
            y = alpha.clone();
            continue;
        }
        let t_next = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
        let mom = (t - 1.0) / t_next;
        // Stays on the affine hull Σ = 1, possibly with negative entries.
        y = next.iter().zip(&alpha).map(|(a, b)| a + mom * (a - b)).collect();
        alpha = next;
        t = t_next;
        f_prev = f_next;
    }
    QpSolution {
        weights: sparse(&alpha),
        iterations: max_iter,
        converged: false,
    }
}
