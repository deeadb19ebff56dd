//! End-to-end runs: fit the optimum, sample the level set, select hull
//! vertices and score them against an independent evaluation sample.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{distances_to_hull, max_with_index, HausdorffEstimate, Hull, QpMethod};
use crate::io::record::{CloudSummary, EvaluationRecord, RunRecord, SelectedPoint, SelectionRecord, Timings};
use crate::io::{gen_synthetic, read_csv, read_libsvm, SyntheticSpec};
use crate::model::{Dataset, FitResult, FitScale, LossKind, LossModel, SolverConfig};
use crate::rng;
use crate::sampler::{sample_cloud, Cloud, LevelSet, SamplerConfig};
use crate::selector::{greedy_select, naive_greedy, pick_first, HullApproximation, SelectorConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataFormat {
    Libsvm,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum DataSource {
    Synthetic(SyntheticSpec),
    File {
        path: PathBuf,
        format: DataFormat,
        /// 0-based label column for CSV input; last column when unset.
        label_column: Option<usize>,
    },
}

/// How the threshold `ν` is derived from the optimal value `ν*`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", content = "value", rename_all = "lowercase")]
pub enum NuRule {
    Absolute(f64),
    /// `ν = c · ν*`, `c ≥ 1`.
    Factor(f64),
    /// `ν = ν* + δ`, `δ ≥ 0`.
    Offset(f64),
}

impl NuRule {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NuRule::Absolute(v) if !v.is_finite() => Err(Error::InvalidConfig(format!("nu must be finite, got {v}"))),
            NuRule::Factor(c) if !(c >= 1.0 && c.is_finite()) => {
                Err(Error::InvalidConfig(format!("nu factor must be at least 1, got {c}")))
            }
            NuRule::Offset(d) if !(d >= 0.0 && d.is_finite()) => {
                Err(Error::InvalidConfig(format!("nu offset must be nonnegative, got {d}")))
            }
            _ => Ok(()),
        }
    }

    pub fn resolve(&self, nu_star: f64) -> f64 {
        match *self {
            NuRule::Absolute(v) => v,
            NuRule::Factor(c) => c * nu_star,
            NuRule::Offset(d) => nu_star + d,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub source: DataSource,
    pub loss: LossKind,
    pub lambda: f64,
    pub scale: FitScale,
    pub nu: NuRule,
    /// Directions sampled for selection (`M`).
    pub m: usize,
    /// Points selected (`K`).
    pub k: usize,
    /// Directions sampled for evaluation (`M′`).
    pub m_prime: usize,
    pub seed: u64,
    pub tol_nu: f64,
    pub qp_tol: f64,
    pub qp_method: QpMethod,
    pub solver: SolverConfig,
}

impl RunConfig {
    /// Defaults for a synthetic family: the toy systems use a plain ½ scale,
    /// `λ = 1` and `ν = ν* + ε`; the correlated design uses the per-sample
    /// mean, `λ = 0.1` and `ν = 1.01 ν*`.
    pub fn for_synthetic(spec: SyntheticSpec) -> Self {
        use crate::io::Family;
        let nu = match spec.family {
            Family::Example2d | Family::Example3d => NuRule::Offset(spec.epsilon),
            Family::Correlated => NuRule::Factor(1.01),
        };
        Self {
            loss: LossKind::Squared,
            lambda: spec.family.default_lambda(),
            scale: spec.family.default_scale(),
            nu,
            m: 50,
            k: 4,
            m_prime: 1000,
            seed: spec.seed,
            tol_nu: 1e-6,
            qp_tol: 1e-9,
            qp_method: QpMethod::default(),
            solver: SolverConfig::default(),
            source: DataSource::Synthetic(spec),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.lambda > 0.0 && self.lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "lambda must be positive, got {}",
                self.lambda
            )));
        }
        self.nu.validate()?;
        if self.m == 0 || self.m_prime == 0 {
            return Err(Error::InvalidConfig("M and M' must be at least 1".into()));
        }
        self.sampler(self.m, self.seed).validate()?;
        self.selector().validate()
    }

    pub fn sampler(&self, m: usize, seed: u64) -> SamplerConfig {
        SamplerConfig {
            m,
            seed,
            tol_nu: self.tol_nu,
            solver: self.solver,
            ..SamplerConfig::default()
        }
    }

    pub fn selector(&self) -> SelectorConfig {
        SelectorConfig {
            k: self.k,
            qp_tol: self.qp_tol,
            method: self.qp_method,
        }
    }
}

/// Seed of the evaluation sample, independent of the selection sample.
pub fn eval_seed(seed: u64) -> u64 {
    rng::derive_seed(seed, "eval")
}

pub fn load_dataset(source: &DataSource) -> Result<Dataset> {
    match source {
        DataSource::Synthetic(spec) => Ok(gen_synthetic(spec)?.data),
        DataSource::File {
            path,
            format: DataFormat::Libsvm,
            ..
        } => read_libsvm(path),
        DataSource::File {
            path,
            format: DataFormat::Csv,
            label_column,
        } => read_csv(path, *label_column),
    }
}

pub fn load_model(cfg: &RunConfig) -> Result<LossModel> {
    let data = load_dataset(&cfg.source)?;
    LossModel::with_scale(cfg.loss, cfg.lambda, cfg.scale, Arc::new(data))
}

/// Global optimum; a fit that misses the tolerance is an error here.
pub fn fit_optimum(model: &LossModel, solver: &SolverConfig) -> Result<FitResult> {
    let fit = model.fit(solver, None)?;
    if !fit.converged {
        return Err(Error::NonConvergence {
            iterations: fit.iterations,
            kkt_residual: fit.kkt_residual,
        });
    }
    Ok(fit)
}

pub fn level_set(rule: &NuRule, fit: &FitResult) -> Result<LevelSet> {
    LevelSet::from_fit(rule.resolve(fit.loss), fit)
}

/// Intermediate products of a run, alongside its record.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub record: RunRecord,
    pub fit: FitResult,
    pub level: LevelSet,
    pub cloud: Cloud,
    pub eval_cloud: Cloud,
    pub selection: HullApproximation,
}

impl RunOutput {
    pub fn selected_betas(&self) -> Vec<Vec<f64>> {
        self.selection
            .selected
            .iter()
            .map(|&i| self.cloud.points[i].beta.clone())
            .collect()
    }
}

/// Wall-clock timer. Reads zero on wasm32, where `Instant` is unavailable.
#[derive(Clone, Copy)]
struct Clock(#[cfg(not(target_arch = "wasm32"))] std::time::Instant);

impl Clock {
    fn start() -> Self {
        #[cfg(not(target_arch = "wasm32"))]
        {
            Clock(std::time::Instant::now())
        }
        #[cfg(target_arch = "wasm32")]
        {
            Clock()
        }
    }

    fn seconds(self) -> f64 {
        #[cfg(not(target_arch = "wasm32"))]
        {
            self.0.elapsed().as_secs_f64()
        }
        #[cfg(target_arch = "wasm32")]
        {
            0.0
        }
    }
}

fn current_workers() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

fn max_gap(level: &LevelSet, cloud: &Cloud) -> f64 {
    cloud
        .points
        .iter()
        .map(|p| level.boundary_gap(p.loss))
        .fold(0.0, f64::max)
}

/// The full pipeline on one configuration.
pub fn run(cfg: &RunConfig) -> Result<RunOutput> {
    cfg.validate()?;
    let start = Clock::start();
    let model = load_model(cfg)?;

    let t = Clock::start();
    let fit = fit_optimum(&model, &cfg.solver)?;
    let level = level_set(&cfg.nu, &fit)?;
    let fit_seconds = t.seconds();

    let t = Clock::start();
    let cloud = sample_cloud(&model, &level, &cfg.sampler(cfg.m, cfg.seed))?;
    if cloud.is_empty() {
        return Err(Error::Empty("sampled cloud"));
    }
    let sample_seconds = t.seconds();

    let t = Clock::start();
    let first = pick_first(&cloud.points, level.beta_star())?;
    let selection = greedy_select(&cloud.points, first, &cfg.selector())?;
    let select_seconds = t.seconds();

    let t = Clock::start();
    let eval_cloud = sample_cloud(&model, &level, &cfg.sampler(cfg.m_prime, eval_seed(cfg.seed)))?;
    if eval_cloud.is_empty() {
        return Err(Error::Empty("evaluation cloud"));
    }
    let selected: Vec<&[f64]> = selection
        .selected
        .iter()
        .map(|&i| cloud.points[i].beta.as_slice())
        .collect();
    let eval_betas: Vec<&[f64]> = eval_cloud.points.iter().map(|p| p.beta.as_slice()).collect();
    let hausdorff = estimate(&selected, &eval_betas, cfg.qp_tol, cfg.qp_method)?;
    let evaluate_seconds = t.seconds();

    let points = selection
        .selected
        .iter()
        .map(|&i| {
            let pt = &cloud.points[i];
            let loss = model.eval_loss(&pt.beta)?;
            Ok(SelectedPoint {
                cloud_index: i,
                direction_index: pt.index,
                beta: pt.beta.clone(),
                loss,
                boundary_gap: level.boundary_gap(loss),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let data = model.data();
    let record = RunRecord {
        config: cfg.clone(),
        cloud: CloudSummary {
            n: data.n(),
            p: data.p(),
            nu: level.nu(),
            nu_star: level.nu_star(),
            beta_star: fit.beta.clone(),
            fit_iterations: fit.iterations,
            fit_kkt_residual: fit.kkt_residual,
            requested: cloud.requested,
            sampled: cloud.len(),
            skipped: cloud.skipped.clone(),
            max_boundary_gap: max_gap(&level, &cloud),
            total_fits: cloud.points.iter().map(|p| p.fits).sum(),
        },
        selection: SelectionRecord {
            k: cfg.k,
            points,
            step_distance: selection.step_distance.clone(),
            eval_count: selection.eval_count.clone(),
            residual_distance: selection.residual_distance,
            status: selection.status,
        },
        evaluation: EvaluationRecord {
            requested: eval_cloud.requested,
            sampled: eval_cloud.len(),
            skipped: eval_cloud.skipped.clone(),
            hausdorff,
        },
        timings: Timings {
            workers: current_workers(),
            fit_seconds,
            sample_seconds,
            select_seconds,
            evaluate_seconds,
            total_seconds: start.seconds(),
        },
    };
    Ok(RunOutput {
        record,
        fit,
        level,
        cloud,
        eval_cloud,
        selection,
    })
}

fn estimate(q: &[&[f64]], qstar: &[&[f64]], tol: f64, method: QpMethod) -> Result<HausdorffEstimate> {
    let to_q = Hull::from_vertices(q)?;
    let to_qstar = Hull::from_vertices(qstar)?;
    let fwd = distances_to_hull(qstar, &to_q, tol, method)?;
    let bwd = distances_to_hull(q, &to_qstar, tol, method)?;
    let (forward, forward_witness) = max_with_index(&fwd).expect("nonempty");
    let (backward, backward_witness) = max_with_index(&bwd).expect("nonempty");
    Ok(HausdorffEstimate {
        forward,
        backward,
        symmetric: forward.max(backward),
        forward_witness,
        backward_witness,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub m: usize,
    pub k: usize,
    pub forward: f64,
    pub backward: f64,
    pub symmetric: f64,
    /// Distance evaluations spent by the lazy selector up to `k`.
    pub lazy_evals: usize,
    pub naive_evals: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveRun {
    pub m: usize,
    pub sampled: usize,
    pub selected: Vec<usize>,
    pub step_distance: Vec<f64>,
    pub lazy_eval_count: Vec<usize>,
    pub naive_eval_count: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurveReport {
    pub config: RunConfig,
    pub k_grid: Vec<usize>,
    pub m_grid: Vec<usize>,
    pub nu: f64,
    pub nu_star: f64,
    pub eval_sampled: usize,
    pub runs: Vec<CurveRun>,
    pub points: Vec<CurvePoint>,
}

/// Hausdorff estimates over a grid of `K` and `M`.
///
/// The selection clouds for every `M` are prefixes of one sample of size
/// `max(M)`, which is exactly what separate runs with the same seed would
/// draw. Greedy selection is prefix-consistent, so one selection of size
/// `max(K)` per `M` covers the whole `K` grid.
pub fn curve(cfg: &RunConfig, k_grid: &[usize], m_grid: &[usize]) -> Result<CurveReport> {
    if k_grid.is_empty() || m_grid.is_empty() {
        return Err(Error::InvalidConfig("K and M grids must be nonempty".into()));
    }
    if k_grid.contains(&0) || m_grid.contains(&0) {
        return Err(Error::InvalidConfig("grid values must be at least 1".into()));
    }
    let k_max = *k_grid.iter().max().expect("nonempty");
    let m_max = *m_grid.iter().max().expect("nonempty");
    let cfg = RunConfig {
        k: k_max,
        m: m_max,
        ..cfg.clone()
    };
    cfg.validate()?;
    let model = load_model(&cfg)?;
    let fit = fit_optimum(&model, &cfg.solver)?;
    let level = level_set(&cfg.nu, &fit)?;
    let full = sample_cloud(&model, &level, &cfg.sampler(m_max, cfg.seed))?;
    let eval_cloud = sample_cloud(&model, &level, &cfg.sampler(cfg.m_prime, eval_seed(cfg.seed)))?;
    if eval_cloud.is_empty() {
        return Err(Error::Empty("evaluation cloud"));
    }
    let qstar: Vec<&[f64]> = eval_cloud.points.iter().map(|p| p.beta.as_slice()).collect();
    let qstar_hull = Hull::from_vertices(&qstar)?;

    let mut runs = Vec::new();
    let mut points = Vec::new();
    for &m in m_grid {
        let cloud = full.prefix(m);
        if cloud.is_empty() {
            return Err(Error::Empty("sampled cloud"));
        }
        let sel_cfg = cfg.selector();
        let first = pick_first(&cloud.points, level.beta_star())?;
        let lazy = greedy_select(&cloud.points, first, &sel_cfg)?;
        let naive = naive_greedy(&cloud.points, first, &sel_cfg)?;
        let selected: Vec<&[f64]> = lazy.selected.iter().map(|&i| cloud.points[i].beta.as_slice()).collect();
        let backward = distances_to_hull(&selected, &qstar_hull, cfg.qp_tol, cfg.qp_method)?;

        for &k in k_grid {
            let k = k.min(selected.len());
            let hull = Hull::from_vertices(&selected[..k])?;
            let fwd = distances_to_hull(&qstar, &hull, cfg.qp_tol, cfg.qp_method)?;
            let (forward, _) = max_with_index(&fwd).expect("nonempty");
            let (bwd, _) = max_with_index(&backward[..k]).expect("nonempty");
            points.push(CurvePoint {
                m,
                k,
                forward,
                backward: bwd,
                symmetric: forward.max(bwd),
                lazy_evals: lazy.eval_count[..k - 1].iter().sum(),
                naive_evals: naive.eval_count[..(k - 1).min(naive.eval_count.len())].iter().sum(),
            });
        }
        runs.push(CurveRun {
            m,
            sampled: cloud.len(),
            selected: lazy.selected,
            step_distance: lazy.step_distance,
            lazy_eval_count: lazy.eval_count,
            naive_eval_count: naive.eval_count,
        });
    }
    Ok(CurveReport {
        nu: level.nu(),
        nu_star: level.nu_star(),
        eval_sampled: eval_cloud.len(),
        config: cfg,
        k_grid: k_grid.to_vec(),
        m_grid: m_grid.to_vec(),
        runs,
        points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nu_rules() {
        assert_eq!(NuRule::Factor(1.01).resolve(2.0), 2.02);
        assert_eq!(NuRule::Offset(0.5).resolve(2.0), 2.5);
        assert_eq!(NuRule::Absolute(3.0).resolve(2.0), 3.0);
        assert!(NuRule::Factor(0.9).validate().is_err());
        assert!(NuRule::Offset(-1.0).validate().is_err());
    }

    #[test]
    fn example_run_is_prefix_consistent() {
        let mut cfg = RunConfig::for_synthetic(SyntheticSpec::example2d());
        cfg.m = 20;
        cfg.m_prime = 50;
        cfg.k = 2;
        let small = run(&cfg).unwrap();
        cfg.k = 4;
        let large = run(&cfg).unwrap();
        assert_eq!(small.selection.selected[..], large.selection.selected[..2]);
        assert!(large
            .record
            .selection
            .points
            .iter()
            .all(|p| p.boundary_gap <= cfg.tol_nu));
    }

    #[test]
    fn curve_is_monotone_in_k() {
        let mut cfg = RunConfig::for_synthetic(SyntheticSpec::example2d());
        cfg.m_prime = 100;
        let rep = curve(&cfg, &[1, 2, 3, 4], &[30]).unwrap();
        let f: Vec<f64> = rep.points.iter().map(|p| p.forward).collect();
        for w in f.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
        assert_eq!(rep.points[0].lazy_evals, 0);
    }

    #[test]
    fn invalid_configs() {
        let mut cfg = RunConfig::for_synthetic(SyntheticSpec::example2d());
        cfg.lambda = 0.0;
        assert!(matches!(run(&cfg), Err(Error::InvalidConfig(_))));
        let mut cfg = RunConfig::for_synthetic(SyntheticSpec::example2d());
        cfg.k = 0;
        assert!(run(&cfg).is_err());
        assert!(curve(&RunConfig::for_synthetic(SyntheticSpec::example2d()), &[], &[5]).is_err());
    }
}
