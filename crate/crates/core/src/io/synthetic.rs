use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::cholesky_in_place;
use crate::model::{Dataset, FitScale};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Two nearly collinear features.
    Example2d,
    /// Three nearly collinear features.
    Example3d,
    /// Gaussian design with covariance `exp(−0.1 |i − j|)` and a sparse
    /// planted coefficient vector.
    Correlated,
}

impl Family {
    /// Data-fit scaling the family is usually fitted with: the toy systems
    /// use a plain `½‖Xβ − y‖²`, the random design the per-sample mean.
    pub fn default_scale(self) -> FitScale {
        match self {
            Family::Example2d | Family::Example3d => FitScale::Sum,
            Family::Correlated => FitScale::Mean,
        }
    }

    pub fn default_lambda(self) -> f64 {
        match self {
            Family::Example2d | Family::Example3d => 1.0,
            Family::Correlated => 0.1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub family: Family,
    /// Number of features for the correlated family; fixed by the toy ones.
    pub p: usize,
    /// Perturbation of the toy systems.
    pub epsilon: f64,
    /// Noise standard deviation of the correlated family.
    pub noise_sd: f64,
    /// Number of rows for the correlated family; `p / 2` when unset.
    pub n: Option<usize>,
    pub seed: u64,
}

impl SyntheticSpec {
    pub fn example2d() -> Self {
        Self {
            family: Family::Example2d,
            p: 2,
            epsilon: 1.0 / 40.0,
            noise_sd: 0.1,
            n: None,
            seed: 0,
        }
    }

    pub fn example3d() -> Self {
        Self {
            family: Family::Example3d,
            p: 3,
            ..Self::example2d()
        }
    }

    pub fn correlated(p: usize, seed: u64) -> Self {
        Self {
            family: Family::Correlated,
            p,
            seed,
            ..Self::example2d()
        }
    }
}

#[derive(Debug, Clone)]
pub struct Synthetic {
    pub data: Dataset,
    /// Coefficients used to generate the response, when there are any.
    pub planted: Option<Vec<f64>>,
}

/// `Σᵢⱼ = exp(−0.1 |i − j|)`, row-major.
pub fn correlated_covariance(p: usize) -> Vec<f64> {
    let mut s = vec![0.0; p * p];
    for i in 0..p {
        for j in 0..p {
            s[i * p + j] = (-0.1 * (i as f64 - j as f64).abs()).exp();
        }
    }
    s
}

/// `βᵢ = 10/p` at 1-based positions 1, 11, 21, …, zero elsewhere.
pub fn planted_beta(p: usize) -> Vec<f64> {
    (0..p)
        .map(|i| if i % 10 == 0 { 10.0 / p as f64 } else { 0.0 })
        .collect()
}

pub fn gen_synthetic(spec: &SyntheticSpec) -> Result<Synthetic> {
    match spec.family {
        Family::Example2d => {
            let e = spec.epsilon;
            let data = Dataset::from_rows(&[[1.0, 1.0], [1.0, 1.0 + e]], vec![1.0, 1.0])?;
            Ok(Synthetic { data, planted: None })
        }
        Family::Example3d => {
            let e = spec.epsilon;
            let rows = [[1.0, 1.0, 1.0], [1.0, 1.0 + e, 1.0], [1.0, 1.0, 1.0 + 2.0 * e]];
            let data = Dataset::from_rows(&rows, vec![1.0; 3])?;
            Ok(Synthetic { data, planted: None })
        }
        Family::Correlated => gen_correlated(spec),
    }
}

fn gen_correlated(spec: &SyntheticSpec) -> Result<Synthetic> {
    let p = spec.p;
    if p == 0 || !p.is_multiple_of(2) {
        return Err(Error::InvalidConfig(format!(
            "the correlated family needs an even, positive p, got {p}"
        )));
    }
    if !(spec.noise_sd >= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "noise_sd must be nonnegative, got {}",
            spec.noise_sd
        )));
    }
    let n = spec.n.unwrap_or(p / 2);
    if n == 0 {
        return Err(Error::InvalidConfig("the correlated family needs n >= 1".into()));
    }
    let mut chol = correlated_covariance(p);
    let ok = cholesky_in_place(&mut chol, p);
    assert!(ok, "exponential kernel covariance is positive definite");

    let beta = planted_beta(p);
    let mut stream = rng::stream(rng::derive_seed(spec.seed, "synthetic"), 0);
    let mut rows = Vec::with_capacity(n);
    let mut y = Vec::with_capacity(n);
    let mut z = vec![0.0; p];
    for _ in 0..n {
        z.iter_mut().for_each(|v| *v = rng::standard_normal(&mut stream));
        let x: Vec<f64> = (0..p).map(|i| (0..=i).map(|k| chol[i * p + k] * z[k]).sum()).collect();
        let signal: f64 = x.iter().zip(&beta).map(|(a, b)| a * b).sum();
        y.push(signal + spec.noise_sd * rng::standard_normal(&mut stream));
        rows.push(x);
    }
    Ok(Synthetic {
        data: Dataset::from_rows(&rows, y)?,
        planted: Some(beta),
    })
}
