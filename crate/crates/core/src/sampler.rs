//! Extreme points of the level set `B(ν) = {β : L(β) ≤ ν}`.
//!
//! For a direction `d` the maximizer of `dᵀβ` over `B(ν)` is found through the
//! Lagrangian `max_β dᵀβ − τ (L(β) − ν)`: for fixed `τ` this is a fit with
//! linear tilt `d/τ`, and `L(β(τ))` decreases as `τ` grows. The multiplier is
//! bracketed by doubling (or halving) from `tau_init` and then bisected until
//! the constraint is active to a relative tolerance.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FitResult, LossModel, SolverConfig};
use crate::rng;

/// Threshold `ν` together with the reference optimum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSet {
    nu: f64,
    nu_star: f64,
    beta_star: Vec<f64>,
}

impl LevelSet {
    pub fn new(nu: f64, nu_star: f64, beta_star: Vec<f64>) -> Result<Self> {
        if !nu.is_finite() || !nu_star.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "nu ({nu}) and nu* ({nu_star}) must be finite"
            )));
        }
        if nu < nu_star - 1e-12 {
            return Err(Error::InvalidConfig(format!(
                "nu = {nu} is below the optimal value {nu_star}; the level set is empty"
            )));
        }
        Ok(Self { nu, nu_star, beta_star })
    }

    /// Level set at `nu` around a reference fit.
    pub fn from_fit(nu: f64, reference: &FitResult) -> Result<Self> {
        Self::new(nu, reference.loss, reference.beta.clone())
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn nu_star(&self) -> f64 {
        self.nu_star
    }

    pub fn beta_star(&self) -> &[f64] {
        &self.beta_star
    }

    /// `|L − ν| / ν`
    pub fn boundary_gap(&self, loss: f64) -> f64 {
        (loss - self.nu).abs() / self.nu.abs()
    }

    fn collapsed(&self) -> bool {
        self.nu <= self.nu_star
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    /// Number of directions `M`.
    pub m: usize,
    pub seed: u64,
    /// Relative boundary tolerance on `|L(β) − ν| / ν`.
    pub tol_nu: f64,
    pub tau_init: f64,
    pub max_doublings: usize,
    pub max_bisections: usize,
    pub solver: SolverConfig,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        Self {
            m: 100,
            seed: 0,
            tol_nu: 1e-6,
            tau_init: 1.0,
            max_doublings: 60,
            max_bisections: 100,
            solver: SolverConfig::default(),
        }
    }
}

impl SamplerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.tol_nu > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "tol_nu must be positive, got {}",
                self.tol_nu
            )));
        }
        if !(self.tau_init > 0.0 && self.tau_init.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "tau_init must be positive, got {}",
                self.tau_init
            )));
        }
        self.solver.validate()
    }
}

/// Fraction of the boundary tolerance the τ search aims for.
const REFINE: f64 = 1e-3;

/// Relative τ-bracket width below which a loss jump is bridged by a segment.
const BRIDGE_WIDTH: f64 = 1e-9;

/// A sampled boundary point `β(d)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtremePoint {
    /// Index of the direction stream that produced this point.
    pub index: usize,
    pub beta: Vec<f64>,
    pub direction: Vec<f64>,
    /// Accepted multiplier; infinite when the level set is a single point.
    pub tau: f64,
    pub loss: f64,
    /// Number of inner fits spent on this direction.
    pub fits: usize,
}

impl AsRef<[f64]> for ExtremePoint {
    fn as_ref(&self) -> &[f64] {
        &self.beta
    }
}

/// Result of [`sample_cloud`]: points ordered by direction index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cloud {
    pub points: Vec<ExtremePoint>,
    /// Directions that failed twice and were dropped.
    pub skipped: Vec<usize>,
    pub requested: usize,
}

impl Cloud {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn betas(&self) -> Vec<Vec<f64>> {
        self.points.iter().map(|p| p.beta.clone()).collect()
    }

    /// Points whose direction index is below `m`, i.e. the cloud that a run
    /// with `M = m` and the same seed would have produced.
    pub fn prefix(&self, m: usize) -> Cloud {
        Cloud {
            points: self.points.iter().filter(|p| p.index < m).cloned().collect(),
            skipped: self.skipped.iter().copied().filter(|&i| i < m).collect(),
            requested: m.min(self.requested),
        }
    }
}

/// Maximizer of `dᵀβ − τ (L(β) − ν)`, i.e. the fit with tilt `d/τ`.
///
/// Returns the coefficients and their untilted loss. `warm` seeds the solver.
pub fn dual_inner(
    model: &LossModel,
    d: &[f64],
    tau: f64,
    solver: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<(Vec<f64>, f64)> {
    if !(tau > 0.0) {
        return Err(Error::InvalidConfig(format!("tau must be positive, got {tau}")));
    }
    Error::check_len(model.p(), d.len())?;
    let tilt: Vec<f64> = d.iter().map(|v| v / tau).collect();
    let fit = match warm {
        Some(w) => model.fit_from(solver, Some(&tilt), w)?,
        None => model.fit(solver, Some(&tilt))?,
    };
    if !fit.converged {
        return Err(Error::NonConvergence {
            iterations: fit.iterations,
            kkt_residual: fit.kkt_residual,
        });
    }
    Ok((fit.beta, fit.loss))
}

#[derive(Clone)]
struct Probe {
    tau: f64,
    beta: Vec<f64>,
    loss: f64,
}

/// Extreme point of `B(ν)` in direction `d`.
pub fn solve_direction(model: &LossModel, level: &LevelSet, d: &[f64], cfg: &SamplerConfig) -> Result<ExtremePoint> {
    solve_direction_indexed(model, level, d, cfg, 0)
}

fn solve_direction_indexed(
    model: &LossModel,
    level: &LevelSet,
    d: &[f64],
    cfg: &SamplerConfig,
    index: usize,
) -> Result<ExtremePoint> {
    cfg.validate()?;
    Error::check_len(model.p(), d.len())?;
    if d.iter().all(|&v| v == 0.0) {
        return Err(Error::InvalidConfig("direction must be nonzero".into()));
    }
    if level.collapsed() {
        return Ok(ExtremePoint {
            index,
            beta: level.beta_star.clone(),
            direction: d.to_vec(),
            tau: f64::INFINITY,
            loss: level.nu_star,
            fits: 0,
        });
    }
    let nu = level.nu;
    let tol = cfg.tol_nu;
    let guard = 10.0 * tol * nu.abs();
    let mut fits = 0usize;
    let accept = |probe: Probe, fits: usize| ExtremePoint {
        index,
        beta: probe.beta,
        direction: d.to_vec(),
        tau: probe.tau,
        loss: probe.loss,
        fits,
    };

    // Every point of B(ν) has ‖β‖₁ ≤ ν/λ. A fit whose iterates leave a much
    // larger ball belongs to a τ that is too small (possibly an unbounded
    // tilted problem) and is recorded with infinite loss.
    let radius = 10.0 * nu.abs() / model.lambda();
    let eval = |tau: f64, warm: &[f64], fits: &mut usize| -> Result<Probe> {
        *fits += 1;
        let tilt: Vec<f64> = d.iter().map(|v| v / tau).collect();
        let escaped = Probe {
            tau,
            beta: level.beta_star.clone(),
            loss: f64::INFINITY,
        };
        match model.fit_within(&cfg.solver, Some(&tilt), warm, radius)? {
            // The next probe restarts from β* rather than from a far-away point.
            Some(fit) if fit.converged && l1_norm(&fit.beta) > radius => Ok(escaped),
            Some(fit) if fit.converged => Ok(Probe {
                tau,
                beta: fit.beta,
                loss: fit.loss,
            }),
            Some(fit) => Err(Error::NonConvergence {
                iterations: fit.iterations,
                kkt_residual: fit.kkt_residual,
            }),
            None => Ok(escaped),
        }
    };

    // Any probe within `tol` is acceptable, but the search continues down to
    // `tol * REFINE` so that the support value dᵀβ is accurate as well. The
    // closest acceptable probe is kept in case the search stalls.
    let mut fallback: Option<Probe> = None;
    let mut settled = |probe: &Probe| {
        let gap = level.boundary_gap(probe.loss);
        if gap <= tol && fallback.as_ref().is_none_or(|f| gap < level.boundary_gap(f.loss)) {
            fallback = Some(probe.clone());
        }
        gap <= tol * REFINE
    };

    let first = eval(cfg.tau_init, &level.beta_star, &mut fits)?;
    if settled(&first) {
        return Ok(accept(first, fits));
    }

    // Exponential phase. `lo` has loss above ν (small τ), `hi` below.
    let (mut lo, mut hi) = if first.loss > nu {
        let mut prev = first;
        let mut steps = 0;
        loop {
            if steps == cfg.max_doublings {
                return Err(Error::BracketFailure {
                    steps,
                    tau: prev.tau,
                    loss: prev.loss,
                    nu,
                });
            }
            steps += 1;
            let next = eval(prev.tau * 2.0, &prev.beta, &mut fits)?;
            if next.loss.is_finite() && next.loss > prev.loss + guard {
                return Err(Error::NonMonotone {
                    tau_lo: prev.tau,
                    tau_hi: next.tau,
                    loss_lo: prev.loss,
                    loss_hi: next.loss,
                    loss_mid: next.loss,
                });
            }
            if settled(&next) {
                return Ok(accept(next, fits));
            }
            if next.loss < nu {
                break (prev, next);
            }
            prev = next;
        }
    } else {
        let mut prev = first;
        let mut steps = 0;
        loop {
            if steps == cfg.max_doublings {
                return Err(Error::BracketFailure {
                    steps,
                    tau: prev.tau,
                    loss: prev.loss,
                    nu,
                });
            }
            steps += 1;
            let next = eval(prev.tau * 0.5, &prev.beta, &mut fits)?;
            if next.loss + guard < prev.loss {
                return Err(Error::NonMonotone {
                    tau_lo: next.tau,
                    tau_hi: prev.tau,
                    loss_lo: next.loss,
                    loss_hi: prev.loss,
                    loss_mid: next.loss,
                });
            }
            if settled(&next) {
                return Ok(accept(next, fits));
            }
            if next.loss > nu {
                break (next, prev);
            }
            prev = next;
        }
    };

    for _ in 0..cfg.max_bisections {
        let tau = 0.5 * (lo.tau + hi.tau);
        if tau <= lo.tau || tau >= hi.tau {
            break;
        }
        // Warm start from the bracket end whose loss is closer to ν.
        let warm = if (lo.loss - nu) < (nu - hi.loss) {
            &lo.beta
        } else {
            &hi.beta
        };
        let mid = match eval(tau, warm, &mut fits) {
            Ok(mid) => mid,
            // Coordinate descent stalls next to a jump of the path, where the
            // tilted problem has a whole segment of minimizers.
            Err(Error::NonConvergence { .. }) if hi.tau - lo.tau <= BRIDGE_WIDTH * hi.tau => break,
            Err(e) => return Err(e),
        };
        if (mid.loss.is_finite() && mid.loss > lo.loss + guard) || mid.loss + guard < hi.loss {
            return Err(Error::NonMonotone {
                tau_lo: lo.tau,
                tau_hi: hi.tau,
                loss_lo: lo.loss,
                loss_hi: hi.loss,
                loss_mid: mid.loss,
            });
        }
        if settled(&mid) {
            return Ok(accept(mid, fits));
        }
        if mid.loss > nu {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // The loss jumps across ν inside a bracket too narrow to split further:
    // the extreme point lies on the segment between the two ends.
    if hi.tau - lo.tau <= BRIDGE_WIDTH * hi.tau {
        if let Some(probe) = bridge(model, level, &lo, &hi, tol) {
            return Ok(accept(probe, fits));
        }
    }
    match fallback {
        Some(probe) => Ok(accept(probe, fits)),
        None => Err(Error::BisectionExhausted(cfg.max_bisections)),
    }
}

/// Point on the segment from `lo` (loss above ν) to `hi` (below) whose loss
/// is ν, found by bisection on the segment parameter. The loss is convex
/// along the segment, so the crossing is unique.
fn bridge(model: &LossModel, level: &LevelSet, lo: &Probe, hi: &Probe, tol: f64) -> Option<Probe> {
    if !lo.loss.is_finite() {
        return None;
    }
    let point = |t: f64| -> Vec<f64> { lo.beta.iter().zip(&hi.beta).map(|(a, b)| a + t * (b - a)).collect() };
    let (mut a, mut b) = (0.0, 1.0);
    let mut best: Option<Probe> = None;
    for _ in 0..200 {
        let t = 0.5 * (a + b);
        let beta = point(t);
        let loss = model.eval_loss(&beta).ok()?;
        let gap = level.boundary_gap(loss);
        if gap <= tol {
            best = Some(Probe {
                tau: 0.5 * (lo.tau + hi.tau),
                beta,
                loss,
            });
            if gap <= tol * REFINE {
                break;
            }
        }
        if loss > level.nu {
            a = t;
        } else {
            b = t;
        }
    }
    best
}

fn l1_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x.abs()).sum()
}

fn solve_stream(
    model: &LossModel,
    level: &LevelSet,
    cfg: &SamplerConfig,
    index: usize,
) -> std::result::Result<ExtremePoint, Error> {
    let mut stream = rng::stream(cfg.seed, index as u64);
    let d = rng::draw_direction(&mut stream, model.p());
    match solve_direction_indexed(model, level, &d, cfg, index) {
        Ok(pt) => Ok(pt),
        Err(Error::InvalidConfig(msg)) => Err(Error::InvalidConfig(msg)),
        Err(_) => {
            // One retry with the next draw from the same stream.
            let d = rng::draw_direction(&mut stream, model.p());
            solve_direction_indexed(model, level, &d, cfg, index)
        }
    }
}

/// Samples `cfg.m` extreme points, one per direction stream.
///
/// Directions that fail twice are dropped and listed in [`Cloud::skipped`];
/// more than 10% failures is an error. With the `parallel` feature the
/// directions are solved on the ambient rayon pool; the output does not depend
/// on its size.
pub fn sample_cloud(model: &LossModel, level: &LevelSet, cfg: &SamplerConfig) -> Result<Cloud> {
    cfg.validate()?;
    Error::check_len(model.p(), level.beta_star.len())?;

    #[cfg(feature = "parallel")]
    let results: Vec<Result<ExtremePoint>> = {
        use rayon::prelude::*;
        (0..cfg.m)
            .into_par_iter()
            .map(|k| solve_stream(model, level, cfg, k))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let results: Vec<Result<ExtremePoint>> = (0..cfg.m).map(|k| solve_stream(model, level, cfg, k)).collect();

    let mut points = Vec::with_capacity(cfg.m);
    let mut skipped = Vec::new();
    let mut last_err = None;
    for (k, r) in results.into_iter().enumerate() {
        match r {
            Ok(pt) => points.push(pt),
            Err(Error::InvalidConfig(msg)) => return Err(Error::InvalidConfig(msg)),
            Err(e) => {
                skipped.push(k);
                last_err = Some(e);
            }
        }
    }
    if skipped.len() * 10 > cfg.m {
        // A single failure on a tiny cloud still reports its own cause.
        if skipped.len() == cfg.m {
            if let Some(e) = last_err {
                return Err(e);
            }
        }
        return Err(Error::TooManyFailures {
            failed: skipped.len(),
            total: cfg.m,
        });
    }
    Ok(Cloud {
        points,
        skipped,
        requested: cfg.m,
    })
}
