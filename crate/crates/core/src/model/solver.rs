use serde::{Deserialize, Serialize};

use super::loss::{LossKind, LossModel};
use crate::error::{Error, Result};
use crate::linalg::{axpy, cholesky_in_place, cholesky_solve, dot, norm_inf};

/// Stopping rules shared by both solvers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Convergence threshold on the iterate change and on the KKT residual.
    pub tol: f64,
    /// Sweeps (coordinate descent) or steps (proximal gradient).
    pub max_iter: usize,
    /// Coordinate descent works on a cached `XᵀX` when `p` is at most this.
    pub gram_limit: usize,
    /// Nesterov momentum for the proximal-gradient solver.
    pub accelerate: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            tol: 1e-8,
            max_iter: 100_000,
            gram_limit: 20_000,
            accelerate: false,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "solver tol must be positive, got {}",
                self.tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidConfig("solver max_iter must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub beta: Vec<f64>,
    /// `L(β)`, without the tilt.
    pub loss: f64,
    pub iterations: usize,
    pub kkt_residual: f64,
    pub converged: bool,
}

impl LossModel {
    /// Minimizes `L(β) − tᵀβ` from a zero start.
    ///
    /// Running out of iterations is not an error: the result comes back with
    /// `converged == false`.
    pub fn fit(&self, cfg: &SolverConfig, tilt: Option<&[f64]>) -> Result<FitResult> {
        self.fit_from(cfg, tilt, &vec![0.0; self.p()])
    }

    /// Same as [`LossModel::fit`] but warm-started at `start`.
    pub fn fit_from(&self, cfg: &SolverConfig, tilt: Option<&[f64]>, start: &[f64]) -> Result<FitResult> {
        Ok(self
            .fit_within(cfg, tilt, start, f64::INFINITY)?
            .expect("an infinite radius is never left"))
    }

    /// Warm-started fit that gives up (returning `None`) as soon as an
    /// iterate leaves the ℓ1 ball of radius `radius`. Tilted objectives can be
    /// unbounded below, and their iterates then grow without limit.
    pub fn fit_within(
        &self,
        cfg: &SolverConfig,
        tilt: Option<&[f64]>,
        start: &[f64],
        radius: f64,
    ) -> Result<Option<FitResult>> {
        cfg.validate()?;
        let p = self.p();
        Error::check_len(p, start.len())?;
        if let Some(t) = tilt {
            Error::check_len(p, t.len())?;
        }
        let zeros;
        let tilt = match tilt {
            Some(t) => t,
            None => {
                zeros = vec![0.0; p];
                &zeros
            }
        };
        let mut beta = start.to_vec();
        let stop = Stop {
            tol: cfg.tol,
            max_iter: cfg.max_iter,
            radius,
        };
        let outcome = match self.kind() {
            LossKind::Squared if p <= cfg.gram_limit => cd_gram(self, &stop, tilt, &mut beta)?,
            LossKind::Squared => cd_residual(self, &stop, tilt, &mut beta)?,
            LossKind::Logistic => proximal_gradient(self, &stop, cfg.accelerate, tilt, &mut beta)?,
        };
        let (iterations, converged) = match outcome {
            Outcome::Converged(it) => (it, true),
            Outcome::Exhausted(it) => (it, false),
            Outcome::Escaped => return Ok(None),
        };
        let kkt_residual = self.kkt_residual(&beta, Some(tilt))?;
        let loss = self.eval_loss(&beta)?;
        Ok(Some(FitResult {
            beta,
            loss,
            iterations,
            kkt_residual,
            converged,
        }))
    }
}

struct Stop {
    tol: f64,
    max_iter: usize,
    radius: f64,
}

impl Stop {
    fn escaped(&self, beta: &[f64]) -> bool {
        self.radius.is_finite() && beta.iter().map(|b| b.abs()).sum::<f64>() > self.radius
    }
}

enum Outcome {
    Converged(usize),
    Exhausted(usize),
    Escaped,
}

#[inline]
fn soft_threshold(x: f64, t: f64) -> f64 {
    if x > t {
        x - t
    } else if x < -t {
        x + t
    } else {
        0.0
    }
}

fn sign_pattern(beta: &[f64]) -> Vec<i8> {
    beta.iter()
        .map(|&b| {
            if b > 0.0 {
                1
            } else if b < 0.0 {
                -1
            } else {
                0
            }
        })
        .collect()
}

/// Decides when a candidate iterate is worth certifying and when the sign
/// pattern is stable enough to try an exact solve on its support.
struct Monitor {
    prev: Vec<i8>,
    last_polished: Option<Vec<i8>>,
}

impl Monitor {
    fn new(beta: &[f64]) -> Self {
        Self {
            prev: sign_pattern(beta),
            last_polished: None,
        }
    }

    /// Returns the stable pattern if a polish should be attempted now.
    fn observe(&mut self, beta: &[f64]) -> Option<Vec<i8>> {
        let pattern = sign_pattern(beta);
        let stable = pattern == self.prev;
        self.prev = pattern;
        if stable && self.last_polished.as_ref() != Some(&self.prev) {
            self.last_polished = Some(self.prev.clone());
            Some(self.prev.clone())
        } else {
            None
        }
    }
}

fn certified(model: &LossModel, beta: &[f64], tilt: &[f64], tol: f64) -> Result<bool> {
    Ok(model.kkt_residual(beta, Some(tilt))? <= tol)
}

/// `w X_Sᵀ X_S` and `w X_Sᵀ y` restricted to `support`.
fn support_system(model: &LossModel, support: &[usize], use_gram: bool) -> (Vec<f64>, Vec<f64>) {
    let s = support.len();
    let mut a = vec![0.0; s * s];
    let mut rhs = vec![0.0; s];
    if use_gram {
        let gram = model.gram();
        let p = model.p();
        for (a_i, &i) in support.iter().enumerate() {
            for (a_j, &j) in support.iter().enumerate() {
                a[a_i * s + a_j] = gram.g[i * p + j];
            }
            rhs[a_i] = gram.c[i];
        }
    } else {
        let d = model.data();
        let w = model.weight();
        for (a_i, &i) in support.iter().enumerate() {
            for (a_j, &j) in support.iter().enumerate().skip(a_i) {
                let v = w * dot(d.column(i), d.column(j));
                a[a_i * s + a_j] = v;
                a[a_j * s + a_i] = v;
            }
            rhs[a_i] = w * dot(d.column(i), d.y());
        }
    }
    (a, rhs)
}

enum PatternSolve {
    Candidate(Vec<f64>),
    /// The support columns are linearly dependent.
    Singular,
    /// The exact solution leaves the sign pattern.
    Rejected,
}

/// Exact minimizer of the squared objective on the face of the sign pattern.
fn solve_pattern(model: &LossModel, tilt: &[f64], pattern: &[i8], use_gram: bool) -> PatternSolve {
    let support: Vec<usize> = (0..pattern.len()).filter(|&j| pattern[j] != 0).collect();
    let s = support.len();
    let (mut a, mut rhs) = support_system(model, &support, use_gram);
    for (k, &j) in support.iter().enumerate() {
        rhs[k] += tilt[j] - model.lambda() * f64::from(pattern[j]);
    }
    if !cholesky_in_place(&mut a, s) {
        return PatternSolve::Singular;
    }
    cholesky_solve(&a, s, &mut rhs);
    if support
        .iter()
        .zip(&rhs)
        .any(|(&j, &b)| !(b * f64::from(pattern[j]) > 0.0))
    {
        return PatternSolve::Rejected;
    }
    let mut cand = vec![0.0; pattern.len()];
    for (&j, &b) in support.iter().zip(&rhs) {
        cand[j] = b;
    }
    PatternSolve::Candidate(cand)
}

/// Replaces `beta` by the exact minimizer on its sign pattern when that keeps
/// the pattern and does not raise the tilted objective. With dependent
/// support columns (more active features than rows, say) each pattern with
/// one coordinate released to zero is tried instead.
fn polish_squared(model: &LossModel, tilt: &[f64], pattern: &[i8], beta: &mut [f64], use_gram: bool) -> Result<bool> {
    if pattern.iter().all(|&s| s == 0) {
        return Ok(false);
    }
    let cand = match solve_pattern(model, tilt, pattern, use_gram) {
        PatternSolve::Candidate(c) => c,
        PatternSolve::Rejected => return Ok(false),
        PatternSolve::Singular => {
            let mut best: Option<(f64, Vec<f64>)> = None;
            for j in (0..pattern.len()).filter(|&j| pattern[j] != 0) {
                let mut reduced = pattern.to_vec();
                reduced[j] = 0;
                if reduced.iter().all(|&s| s == 0) {
                    continue;
                }
                if let PatternSolve::Candidate(c) = solve_pattern(model, tilt, &reduced, use_gram) {
                    let f = model.eval_tilted(&c, Some(tilt))?;
                    if best.as_ref().is_none_or(|(g, _)| f < *g) {
                        best = Some((f, c));
                    }
                }
            }
            match best {
                Some((_, c)) => c,
                None => return Ok(false),
            }
        }
    };
    accept_if_better(model, tilt, beta, cand)
}

fn accept_if_better(model: &LossModel, tilt: &[f64], beta: &mut [f64], cand: Vec<f64>) -> Result<bool> {
    let f_old = model.eval_tilted(beta, Some(tilt))?;
    let f_new = model.eval_tilted(&cand, Some(tilt))?;
    if f_new <= f_old + 4.0 * f64::EPSILON * f_old.abs() {
        beta.copy_from_slice(&cand);
        Ok(true)
    } else {
        Ok(false)
    }
}

/// Cyclic coordinate descent on `½βᵀGβ − (c + t)ᵀβ + λ‖β‖₁`, coordinates in
/// order `0..p`.
fn cd_gram(model: &LossModel, cfg: &Stop, tilt: &[f64], beta: &mut [f64]) -> Result<Outcome> {
    let p = model.p();
    let lambda = model.lambda();
    let gram = model.gram();
    let g = &gram.g;
    let lin: Vec<f64> = gram.c.iter().zip(tilt).map(|(c, t)| c + t).collect();
    let recompute_q = |beta: &[f64]| {
        let mut q = vec![0.0; p];
        for (j, &b) in beta.iter().enumerate() {
            if b != 0.0 {
                axpy(b, &g[j * p..(j + 1) * p], &mut q);
            }
        }
        q
    };
    let mut q = recompute_q(beta);
    let mut monitor = Monitor::new(beta);

    for it in 1..=cfg.max_iter {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let gjj = g[j * p + j];
            let bj = beta[j];
            let rho = lin[j] - (q[j] - gjj * bj);
            let new = soft_threshold(rho, lambda) / gjj;
            let delta = new - bj;
            if delta != 0.0 {
                beta[j] = new;
                axpy(delta, &g[j * p..(j + 1) * p], &mut q);
                max_change = max_change.max(delta.abs());
            }
        }
        let mut check = max_change <= cfg.tol;
        if let Some(pattern) = monitor.observe(beta) {
            if polish_squared(model, tilt, &pattern, beta, true)? {
                q = recompute_q(beta);
            }
            check = true;
        }
        if check && certified(model, beta, tilt, cfg.tol)? {
            return Ok(Outcome::Converged(it));
        }
        if cfg.escaped(beta) {
            return Ok(Outcome::Escaped);
        }
    }
    Ok(Outcome::Exhausted(cfg.max_iter))
}

/// Coordinate descent that keeps the residual `y − Xβ` instead of a Gram
/// matrix, for wide problems.
fn cd_residual(model: &LossModel, cfg: &Stop, tilt: &[f64], beta: &mut [f64]) -> Result<Outcome> {
    let d = model.data();
    let p = model.p();
    let w = model.weight();
    let lambda = model.lambda();
    let col_sq: Vec<f64> = (0..p).map(|j| w * dot(d.column(j), d.column(j))).collect();
    let residual = |beta: &[f64]| {
        let xb = d.mul(beta);
        d.y().iter().zip(xb).map(|(y, v)| y - v).collect::<Vec<f64>>()
    };
    let mut r = residual(beta);
    let mut monitor = Monitor::new(beta);

    for it in 1..=cfg.max_iter {
        let mut max_change: f64 = 0.0;
        for j in 0..p {
            let col = d.column(j);
            let bj = beta[j];
            let rho = w * dot(col, &r) + col_sq[j] * bj + tilt[j];
            let new = soft_threshold(rho, lambda) / col_sq[j];
            let delta = new - bj;
            if delta != 0.0 {
                beta[j] = new;
                axpy(-delta, col, &mut r);
                max_change = max_change.max(delta.abs());
            }
        }
        let mut check = max_change <= cfg.tol;
        if let Some(pattern) = monitor.observe(beta) {
            if polish_squared(model, tilt, &pattern, beta, false)? {
                r = residual(beta);
            }
            check = true;
        }
        if check && certified(model, beta, tilt, cfg.tol)? {
            return Ok(Outcome::Converged(it));
        }
        if cfg.escaped(beta) {
            return Ok(Outcome::Escaped);
        }
    }
    Ok(Outcome::Exhausted(cfg.max_iter))
}

/// Smooth part of the tilted objective, from a cached predictor.
fn smooth_tilted(model: &LossModel, xb: &[f64], beta: &[f64], tilt: &[f64]) -> f64 {
    model.smooth_from_predictor(xb) - dot(tilt, beta)
}

/// Proximal gradient with backtracking for the logistic objective.
fn proximal_gradient(
    model: &LossModel,
    cfg: &Stop,
    accelerate: bool,
    tilt: &[f64],
    beta: &mut [f64],
) -> Result<Outcome> {
    let d = model.data();
    let p = model.p();
    let lambda = model.lambda();
    // Global Lipschitz bound of the logistic gradient: w/4 · ‖X‖_F².
    let frob: f64 = (0..p).map(|j| dot(d.column(j), d.column(j))).sum();
    let lipschitz = 0.25 * model.weight() * frob;
    let mut step = 1.0 / lipschitz;

    let mut monitor = Monitor::new(beta);
    // Momentum state (only used when accelerated).
    let mut y = beta.to_vec();
    let mut theta = 1.0f64;

    for it in 1..=cfg.max_iter {
        let base = if accelerate { y.clone() } else { beta.to_vec() };
        let xb = d.mul(&base);
        let f_base = smooth_tilted(model, &xb, &base, tilt);
        let mut grad = d.mul_t(&model.predictor_gradient(&xb));
        for (g, t) in grad.iter_mut().zip(tilt) {
            *g -= t;
        }
        let cand = loop {
            let cand: Vec<f64> = base
                .iter()
                .zip(&grad)
                .map(|(b, g)| soft_threshold(b - step * g, step * lambda))
                .collect();
            let diff: Vec<f64> = cand.iter().zip(&base).map(|(c, b)| c - b).collect();
            let xc = d.mul(&cand);
            let f_c = smooth_tilted(model, &xc, &cand, tilt);
            let bound = f_base + dot(&grad, &diff) + dot(&diff, &diff) / (2.0 * step);
            if f_c <= bound + 1e-15 * f_base.abs() || step < 1e-300 {
                break cand;
            }
            step *= 0.5;
        };
        let change = norm_inf(&cand.iter().zip(beta.iter()).map(|(c, b)| c - b).collect::<Vec<_>>());
        if accelerate {
            let f_old = model.eval_tilted(beta, Some(tilt))?;
            let f_new = model.eval_tilted(&cand, Some(tilt))?;
            if f_new > f_old {
                // Restart momentum from the last iterate.
                theta = 1.0;
                y = beta.to_vec();
                continue;
            }
            let theta_next = 0.5 * (1.0 + (1.0 + 4.0 * theta * theta).sqrt());
            let mom = (theta - 1.0) / theta_next;
            y = cand.iter().zip(beta.iter()).map(|(c, b)| c + mom * (c - b)).collect();
            theta = theta_next;
        }
        beta.copy_from_slice(&cand);
        step *= 1.5;

        let mut check = change <= cfg.tol;
        if let Some(pattern) = monitor.observe(beta) {
            if polish_logistic(model, tilt, &pattern, beta)? && accelerate {
                y = beta.to_vec();
                theta = 1.0;
            }
            check = true;
        }
        if check && certified(model, beta, tilt, cfg.tol)? {
            return Ok(Outcome::Converged(it));
        }
        if cfg.escaped(beta) {
            return Ok(Outcome::Escaped);
        }
    }
    Ok(Outcome::Exhausted(cfg.max_iter))
}

/// Damped Newton on the support of a fixed sign pattern, where the logistic
/// objective is smooth.
fn polish_logistic(model: &LossModel, tilt: &[f64], pattern: &[i8], beta: &mut [f64]) -> Result<bool> {
    let d = model.data();
    let support: Vec<usize> = (0..pattern.len()).filter(|&j| pattern[j] != 0).collect();
    if support.is_empty() {
        return Ok(false);
    }
    let s = support.len();
    let w = model.weight();
    let lambda = model.lambda();
    let y = d.y();
    let mut cand = beta.to_vec();
    let restricted = |cand: &[f64]| -> f64 {
        let xb = d.mul(cand);
        model.smooth_from_predictor(&xb) - dot(tilt, cand)
            + lambda * support.iter().map(|&j| f64::from(pattern[j]) * cand[j]).sum::<f64>()
    };

    let mut f = restricted(&cand);
    for _ in 0..50 {
        let xb = d.mul(&cand);
        let pg = model.predictor_gradient(&xb);
        let curv: Vec<f64> = xb
            .iter()
            .zip(y)
            .map(|(a, yi)| {
                let m = yi * a;
                w * super::loss::sigmoid(m) * super::loss::sigmoid(-m)
            })
            .collect();
        let mut grad = vec![0.0; s];
        let mut hess = vec![0.0; s * s];
        for (a_i, &i) in support.iter().enumerate() {
            let ci = d.column(i);
            grad[a_i] = dot(ci, &pg) - tilt[i] + lambda * f64::from(pattern[i]);
            for (a_j, &j) in support.iter().enumerate().skip(a_i) {
                let cj = d.column(j);
                let h: f64 = ci.iter().zip(cj).zip(&curv).map(|((a, b), c)| a * b * c).sum();
                hess[a_i * s + a_j] = h;
                hess[a_j * s + a_i] = h;
            }
        }
        if !cholesky_in_place(&mut hess, s) {
            break;
        }
        let mut dir: Vec<f64> = grad.iter().map(|g| -g).collect();
        cholesky_solve(&hess, s, &mut dir);
        let decrement = -dot(&grad, &dir);
        if !(decrement > 1e-30) {
            break;
        }
        // Largest step that keeps every support coordinate on its side of zero.
        let mut t_max: f64 = 1.0;
        for (k, &j) in support.iter().enumerate() {
            let b = cand[j];
            if b * dir[k] < 0.0 {
                t_max = t_max.min(0.99 * (-b / dir[k]));
            }
        }
        let mut t = t_max;
        let mut moved = false;
        while t > 1e-12 {
            let mut trial = cand.clone();
            for (k, &j) in support.iter().enumerate() {
                trial[j] += t * dir[k];
            }
            let f_t = restricted(&trial);
            if f_t <= f - 1e-4 * t * decrement || (f_t <= f && decrement < 1e-20) {
                cand = trial;
                f = f_t;
                moved = true;
                break;
            }
            t *= 0.5;
        }
        if !moved || decrement < 1e-24 {
            break;
        }
    }
    if support.iter().any(|&j| !(cand[j] * f64::from(pattern[j]) > 0.0)) {
        return Ok(false);
    }
    accept_if_better(model, tilt, beta, cand)
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::model::{Dataset, FitScale};

    fn one_dim() -> LossModel {
        let d = Dataset::from_rows(&[[1.0]], vec![1.0]).unwrap();
        LossModel::new(LossKind::Squared, 0.3, Arc::new(d)).unwrap()
    }

    fn toy2d() -> LossModel {
        let eps = 1.0 / 40.0;
        let d = Dataset::from_rows(&[[1.0, 1.0], [1.0, 1.0 + eps]], vec![1.0, 1.0]).unwrap();
        LossModel::with_scale(LossKind::Squared, 1.0, FitScale::Sum, Arc::new(d)).unwrap()
    }

    #[test]
    fn soft_threshold_closed_form() {
        let m = one_dim();
        let r = m.fit(&SolverConfig::default(), None).unwrap();
        assert!(r.converged);
        assert!((r.beta[0] - 0.7).abs() < 1e-12);
        let r = m.fit(&SolverConfig::default(), Some(&[1.0])).unwrap();
        assert!((r.beta[0] - 1.7).abs() < 1e-12);
    }

    #[test]
    fn toy2d_optimum() {
        let r = toy2d().fit(&SolverConfig::default(), None).unwrap();
        assert!(r.converged);
        assert!(r.beta[0].abs() < 1e-12);
        // Stationarity on β₂ > 0: β₂ = (1 + ε) / (1 + (1 + ε)²).
        let e = 1.0 + 1.0 / 40.0;
        assert!((r.beta[1] - e / (1.0 + e * e)).abs() < 1e-10);
        let b = r.beta[1];
        let expected = 0.5 * ((b - 1.0).powi(2) + (e * b - 1.0).powi(2)) + b;
        assert!((r.loss - expected).abs() < 1e-14);
        assert!((0.74..=0.76).contains(&r.loss));
    }

    #[test]
    fn residual_path_matches_gram_path() {
        let m = toy2d();
        let gram = m.fit(&SolverConfig::default(), Some(&[0.3, 0.9])).unwrap();
        let cfg = SolverConfig {
            gram_limit: 0,
            ..SolverConfig::default()
        };
        let resid = m.fit(&cfg, Some(&[0.3, 0.9])).unwrap();
        assert!(gram.converged && resid.converged);
        for (a, b) in gram.beta.iter().zip(&resid.beta) {
            assert!((a - b).abs() < 1e-8);
        }
    }

    #[test]
    fn max_iter_exhaustion_is_flagged_not_fatal() {
        let d = Dataset::from_rows(&[[1.0, 0.9], [0.9, 1.0], [0.3, 0.2]], vec![1.0, 2.0, 0.5]).unwrap();
        let m = LossModel::new(LossKind::Squared, 0.01, Arc::new(d)).unwrap();
        let cfg = SolverConfig {
            max_iter: 1,
            ..SolverConfig::default()
        };
        let r = m.fit(&cfg, None).unwrap();
        assert_eq!(r.iterations, 1);
        assert!(!r.converged);
        assert!(r.kkt_residual > cfg.tol);
    }

    #[test]
    fn logistic_fit_is_certified() {
        let rows = [[1.0, 0.5], [0.8, 1.2], [-1.0, -0.3], [-0.6, -1.1], [0.2, -0.4]];
        let d = Dataset::from_rows(&rows, vec![1.0, 1.0, -1.0, -1.0, 1.0]).unwrap();
        let m = LossModel::new(LossKind::Logistic, 0.05, Arc::new(d)).unwrap();
        for accelerate in [false, true] {
            let cfg = SolverConfig {
                accelerate,
                ..SolverConfig::default()
            };
            let r = m.fit(&cfg, None).unwrap();
            assert!(r.converged, "accelerate={accelerate}");
            assert!(r.kkt_residual <= 1e-8);
        }
    }

    #[test]
    fn invalid_config_is_rejected() {
        let m = one_dim();
        let cfg = SolverConfig {
            tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(m.fit(&cfg, None), Err(Error::InvalidConfig(_))));
        assert!(matches!(
            m.fit(&SolverConfig::default(), Some(&[1.0, 2.0])),
            Err(Error::DimensionMismatch { .. })
        ));
    }
}
