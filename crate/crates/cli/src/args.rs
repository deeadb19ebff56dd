use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use hullscope::geometry::QpMethod;
use hullscope::io::{Family, SyntheticSpec};
use hullscope::model::{FitScale, LossKind, SolverConfig};
use hullscope::pipeline::{DataFormat, DataSource, NuRule, RunConfig};

#[derive(Debug, Parser)]
#[command(
    name = "hullscope",
    version,
    about = "Convex-hull summaries of near-optimal L1-regularized solutions"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit, sample, select and evaluate; writes a run record.
    Run(RunArgs),
    /// Hausdorff estimates over grids of K and M, with evaluation counts.
    Curve(CurveArgs),
    /// Project points onto their top two principal axes.
    Project(ProjectArgs),
    /// Write a synthetic dataset to a file.
    Gen(GenArgs),
    /// Fit the optimum only.
    Fit(FitArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Demo {
    Example2d,
    Example3d,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SyntheticFamily {
    Correlated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Libsvm,
    Csv,
}

impl From<Format> for DataFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Libsvm => DataFormat::Libsvm,
            Format::Csv => DataFormat::Csv,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Loss {
    Squared,
    Logistic,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scale {
    Mean,
    Sum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MinNormPoint,
    ProjectedGradient,
}

/// Where the data comes from. Also readable from the config file.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataArgs {
    /// Dataset file (libsvm or headerless CSV).
    #[arg(long)]
    #[serde(default)]
    pub data: Option<PathBuf>,
    /// Dataset format; inferred from the file extension when omitted.
    #[arg(long, value_enum)]
    #[serde(default)]
    pub format: Option<Format>,
    /// 1-based label column for CSV input (default: last).
    #[arg(long = "label-column")]
    #[serde(default, rename = "label-column")]
    pub label_column: Option<usize>,
    /// Built-in toy problem.
    #[arg(long, value_enum)]
    #[serde(default)]
    pub demo: Option<Demo>,
    /// Random design family.
    #[arg(long, value_enum)]
    #[serde(default)]
    pub synthetic: Option<SyntheticFamily>,
    /// Number of features for --synthetic.
    #[arg(long)]
    #[serde(default)]
    pub p: Option<usize>,
    /// Number of rows for --synthetic (default p/2).
    #[arg(long)]
    #[serde(default)]
    pub n: Option<usize>,
    /// Perturbation of the toy problems.
    #[arg(long)]
    #[serde(default)]
    pub epsilon: Option<f64>,
    /// Noise standard deviation for --synthetic.
    #[arg(long = "noise-sd")]
    #[serde(default, rename = "noise-sd")]
    pub noise_sd: Option<f64>,
}

/// Problem and pipeline settings shared by run, curve and fit.
#[derive(Debug, Clone, Default, Args, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub data: DataArgs,
    #[arg(long, value_enum)]
    #[serde(default)]
    pub loss: Option<Loss>,
    /// Penalty weight.
    #[arg(long)]
    #[serde(default)]
    pub lambda: Option<f64>,
    /// Data-fit scaling: `mean` divides by n, `sum` does not.
    #[arg(long, value_enum)]
    #[serde(default)]
    pub scale: Option<Scale>,
    /// Absolute threshold.
    #[arg(long, conflicts_with_all = ["nu_factor", "nu_offset"])]
    #[serde(default)]
    pub nu: Option<f64>,
    /// Threshold as a multiple of the optimal value.
    #[arg(long = "nu-factor", conflicts_with = "nu_offset")]
    #[serde(default, rename = "nu-factor")]
    pub nu_factor: Option<f64>,
    /// Threshold as the optimal value plus an offset.
    #[arg(long = "nu-offset")]
    #[serde(default, rename = "nu-offset")]
    pub nu_offset: Option<f64>,
    /// Sampled directions.
    #[arg(long = "M")]
    #[serde(default, rename = "M")]
    pub m: Option<usize>,
    /// Selected points.
    #[arg(long = "K")]
    #[serde(default, rename = "K")]
    pub k: Option<usize>,
    /// Directions in the evaluation sample.
    #[arg(long = "Mprime")]
    #[serde(default, rename = "Mprime")]
    pub m_prime: Option<usize>,
    /// Master seed.
    #[arg(long, env = "HULLSCOPE_SEED")]
    #[serde(default)]
    pub seed: Option<u64>,
    /// Relative boundary tolerance.
    #[arg(long = "tol-nu")]
    #[serde(default, rename = "tol-nu")]
    pub tol_nu: Option<f64>,
    /// Hull projection tolerance.
    #[arg(long = "qp-tol")]
    #[serde(default, rename = "qp-tol")]
    pub qp_tol: Option<f64>,
    #[arg(long = "qp-method", value_enum)]
    #[serde(default, rename = "qp-method")]
    pub qp_method: Option<Method>,
    /// Solver tolerance on the KKT residual.
    #[arg(long = "solver-tol")]
    #[serde(default, rename = "solver-tol")]
    pub solver_tol: Option<f64>,
    /// Worker threads (default: available parallelism).
    #[arg(long)]
    #[serde(default)]
    pub workers: Option<usize>,
    /// Output directory.
    #[arg(long)]
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// K values for `curve`, e.g. `5,10,20` or `1..4`.
    #[arg(long = "K-grid")]
    #[serde(default, rename = "K-grid")]
    pub k_grid: Option<String>,
    /// M values for `curve`.
    #[arg(long = "M-grid")]
    #[serde(default, rename = "M-grid")]
    pub m_grid: Option<String>,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    /// TOML file whose keys mirror the flag names; flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub problem: ProblemArgs,
    #[arg(long)]
    pub config: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ProjectArgs {
    /// Points to project, one per row.
    #[arg(long)]
    pub points: PathBuf,
    /// Points that define the axes (default: the points themselves).
    #[arg(long)]
    pub reference: Option<PathBuf>,
    /// Output CSV (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Master seed.
    #[arg(long, env = "HULLSCOPE_SEED")]
    pub seed: Option<u64>,
    /// Output file; `.csv` writes CSV, anything else libsvm unless --format says otherwise.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the planted coefficients here (one per line).
    #[arg(long)]
    pub planted: Option<PathBuf>,
}

macro_rules! merge_fields {
    ($dst:expr, $src:expr; $($f:ident),* $(,)?) => {
        $( if $dst.$f.is_none() { $dst.$f = $src.$f.clone(); } )*
    };
}

impl ProblemArgs {
    /// Fills unset flags from the config file, if one is given.
    pub fn with_config(mut self, path: Option<&Path>) -> anyhow::Result<Self> {
        let Some(path) = path else { return Ok(self) };
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let file: ProblemArgs = toml::from_str(&text).map_err(|e| ConfigError(format!("{}: {e}", path.display())))?;
        merge_fields!(self.data, file.data; data, format, label_column, demo, synthetic, p, n, epsilon, noise_sd);
        merge_fields!(self, file; loss, lambda, scale, m, k, m_prime, seed, tol_nu, qp_tol, qp_method,
            solver_tol, workers, out, k_grid, m_grid);
        if self.nu.is_none() && self.nu_factor.is_none() && self.nu_offset.is_none() {
            self.nu = file.nu;
            self.nu_factor = file.nu_factor;
            self.nu_offset = file.nu_offset;
        }
        Ok(self)
    }

    pub fn to_run_config(&self) -> anyhow::Result<RunConfig> {
        let seed = self.seed.unwrap_or(0);
        let source = self.data.source(seed)?;
        let mut cfg = match &source {
            DataSource::Synthetic(spec) => RunConfig::for_synthetic(*spec),
            DataSource::File { .. } => RunConfig {
                source: source.clone(),
                loss: LossKind::Squared,
                lambda: 0.1,
                scale: FitScale::Mean,
                nu: NuRule::Factor(1.05),
                m: 100,
                k: 10,
                m_prime: 1000,
                seed,
                tol_nu: 1e-6,
                qp_tol: 1e-9,
                qp_method: QpMethod::default(),
                solver: SolverConfig::default(),
            },
        };
        if let Some(l) = self.loss {
            cfg.loss = match l {
                Loss::Squared => LossKind::Squared,
                Loss::Logistic => LossKind::Logistic,
            };
        }
        if let Some(s) = self.scale {
            cfg.scale = match s {
                Scale::Mean => FitScale::Mean,
                Scale::Sum => FitScale::Sum,
            };
        }
        if let Some(v) = self.lambda {
            cfg.lambda = v;
        }
        match (self.nu, self.nu_factor, self.nu_offset) {
            (Some(v), None, None) => cfg.nu = NuRule::Absolute(v),
            (None, Some(c), None) => cfg.nu = NuRule::Factor(c),
            (None, None, Some(d)) => cfg.nu = NuRule::Offset(d),
            (None, None, None) => {}
            _ => return Err(ConfigError("give at most one of --nu, --nu-factor, --nu-offset".into()).into()),
        }
        if let Some(v) = self.m {
            cfg.m = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.m_prime {
            cfg.m_prime = v;
        }
        if let Some(v) = self.tol_nu {
            cfg.tol_nu = v;
        }
        if let Some(v) = self.qp_tol {
            cfg.qp_tol = v;
        }
        if let Some(m) = self.qp_method {
            cfg.qp_method = match m {
                Method::MinNormPoint => QpMethod::MinNormPoint,
                Method::ProjectedGradient => QpMethod::ProjectedGradient,
            };
        }
        if let Some(v) = self.solver_tol {
            cfg.solver.tol = v;
        }
        cfg.seed = seed;
        Ok(cfg)
    }
}

impl DataArgs {
    pub fn source(&self, seed: u64) -> anyhow::Result<DataSource> {
        let given = [self.data.is_some(), self.demo.is_some(), self.synthetic.is_some()];
        if given.iter().filter(|&&g| g).count() != 1 {
            return Err(ConfigError("give exactly one of --data, --demo, --synthetic".into()).into());
        }
        if let Some(path) = &self.data {
            if !path.is_file() {
                let err = std::io::Error::new(std::io::ErrorKind::NotFound, "no such file");
                return Err(anyhow::Error::new(err).context(format!("reading {}", path.display())));
            }
            let format = self.format.unwrap_or_else(|| infer_format(path));
            let label_column = match self.label_column {
                Some(0) => return Err(ConfigError("--label-column is 1-based".into()).into()),
                Some(c) => Some(c - 1),
                None => None,
            };
            return Ok(DataSource::File {
                path: path.clone(),
                format: format.into(),
                label_column,
            });
        }
        let mut spec = match (self.demo, self.synthetic) {
            (Some(Demo::Example2d), _) => SyntheticSpec::example2d(),
            (Some(Demo::Example3d), _) => SyntheticSpec::example3d(),
            (None, Some(SyntheticFamily::Correlated)) => {
                let p = self
                    .p
                    .ok_or_else(|| ConfigError("--synthetic correlated needs --p".into()))?;
                SyntheticSpec::correlated(p, seed)
            }
            _ => unreachable!("exactly one source was checked above"),
        };
        if spec.family != Family::Correlated && (self.p.is_some() || self.n.is_some()) {
            return Err(ConfigError("--p and --n only apply to --synthetic".into()).into());
        }
        spec.seed = seed;
        spec.n = self.n;
        if let Some(e) = self.epsilon {
            spec.epsilon = e;
        }
        if let Some(s) = self.noise_sd {
            spec.noise_sd = s;
        }
        Ok(DataSource::Synthetic(spec))
    }
}

pub fn infer_format(path: &Path) -> Format {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("csv") => Format::Csv,
        _ => Format::Libsvm,
    }
}

/// Parses `5,10,20`, `1..4` (inclusive) or mixtures like `1..3,10`.
pub fn parse_grid(text: &str) -> anyhow::Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.trim().parse().with_context(|| format!("bad grid bound {a:?}"))?;
            let b: usize = b
                .trim()
                .trim_start_matches('=')
                .parse()
                .with_context(|| format!("bad grid bound {b:?}"))?;
            if a > b {
                bail!(ConfigError(format!("empty grid range {part}")));
            }
            out.extend(a..=b);
        } else {
            out.push(part.parse().with_context(|| format!("bad grid value {part:?}"))?);
        }
    }
    if out.is_empty() {
        bail!(ConfigError("grid is empty".into()));
    }
    Ok(out)
}

/// A user error in flags or the config file (exit code 2).
#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grids() {
        assert_eq!(parse_grid("5,10, 20").unwrap(), vec![5, 10, 20]);
        assert_eq!(parse_grid("1..4").unwrap(), vec![1, 2, 3, 4]);
        assert_eq!(parse_grid("1..=2,7").unwrap(), vec![1, 2, 7]);
        assert!(parse_grid("").is_err());
        assert!(parse_grid("4..1").is_err());
        assert!(parse_grid("x").is_err());
    }

    #[test]
    fn config_file_fills_unset_flags() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(
            &path,
            "demo = \"example3d\"\nM = 30\nK = 6\nnu-offset = 0.05\nseed = 9\n",
        )
        .unwrap();
        let flags = ProblemArgs {
            m: Some(12),
            ..Default::default()
        };
        let merged = flags.with_config(Some(&path)).unwrap();
        let cfg = merged.to_run_config().unwrap();
        assert_eq!(cfg.m, 12);
        assert_eq!(cfg.k, 6);
        assert_eq!(cfg.seed, 9);
        assert_eq!(cfg.nu, NuRule::Offset(0.05));
    }

    #[test]
    fn unknown_config_keys_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.toml");
        std::fs::write(&path, "demo = \"example2d\"\nbogus = 1\n").unwrap();
        assert!(ProblemArgs::default().with_config(Some(&path)).is_err());
    }

    #[test]
    fn exactly_one_source() {
        assert!(ProblemArgs::default().to_run_config().is_err());
        let both = ProblemArgs {
            data: DataArgs {
                demo: Some(Demo::Example2d),
                synthetic: Some(SyntheticFamily::Correlated),
                ..Default::default()
            },
            ..Default::default()
        };
        assert!(both.to_run_config().is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
