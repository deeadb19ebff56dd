use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use super::Dataset;
use crate::error::{Error, Result};
use crate::linalg::dot;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LossKind {
    Squared,
    Logistic,
}

/// Weight in front of the data-fit term.
///
/// `Mean` divides by the number of observations, giving the usual
/// `(1/2n)‖Xβ − y‖²` and `(1/n) Σ log(1 + exp(−yᵢ xᵢᵀβ))`. `Sum` drops the
/// `1/n`, which is how the built-in toy problems are written.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitScale {
    #[default]
    Mean,
    Sum,
}

/// An L1-regularized objective `L(β) = w · fit(β) + λ‖β‖₁` over a dataset.
#[derive(Debug, Clone)]
pub struct LossModel {
    kind: LossKind,
    lambda: f64,
    scale: FitScale,
    data: Arc<Dataset>,
    gram: Arc<OnceLock<Gram>>,
}

/// `G = w XᵀX` and `c = w Xᵀy`, row-major.
#[derive(Debug)]
pub(crate) struct Gram {
    pub g: Vec<f64>,
    pub c: Vec<f64>,
}

impl LossModel {
    pub fn new(kind: LossKind, lambda: f64, data: Arc<Dataset>) -> Result<Self> {
        Self::with_scale(kind, lambda, FitScale::Mean, data)
    }

    pub fn with_scale(kind: LossKind, lambda: f64, scale: FitScale, data: Arc<Dataset>) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidConfig(format!("lambda must be positive, got {lambda}")));
        }
        if kind == LossKind::Logistic && !data.has_sign_labels() {
            return Err(Error::InvalidData("logistic loss needs labels in {-1, +1}".to_string()));
        }
        Ok(Self {
            kind,
            lambda,
            scale,
            data,
            gram: Arc::new(OnceLock::new()),
        })
    }

    pub fn kind(&self) -> LossKind {
        self.kind
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn scale(&self) -> FitScale {
        self.scale
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn dataset(&self) -> Arc<Dataset> {
        Arc::clone(&self.data)
    }

    pub fn p(&self) -> usize {
        self.data.p()
    }

    /// Weight `w` of the data-fit term.
    pub fn weight(&self) -> f64 {
        match self.scale {
            FitScale::Mean => 1.0 / self.data.n() as f64,
            FitScale::Sum => 1.0,
        }
    }

    pub(crate) fn gram(&self) -> &Gram {
        self.gram.get_or_init(|| {
            let d = &*self.data;
            let p = d.p();
            let w = self.weight();
            let mut g = vec![0.0; p * p];
            for i in 0..p {
                for j in i..p {
                    let v = w * dot(d.column(i), d.column(j));
                    g[i * p + j] = v;
                    g[j * p + i] = v;
                }
            }
            let c = d.mul_t(d.y()).into_iter().map(|v| w * v).collect();
            Gram { g, c }
        })
    }

    /// Smooth data-fit term evaluated from the linear predictor `Xβ`.
    pub(crate) fn smooth_from_predictor(&self, xb: &[f64]) -> f64 {
        let y = self.data.y();
        let s: f64 = match self.kind {
            LossKind::Squared => 0.5 * xb.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(),
            LossKind::Logistic => xb.iter().zip(y).map(|(a, b)| softplus(-b * a)).sum(),
        };
        self.weight() * s
    }

    /// Gradient of the smooth term with respect to `Xβ`, already weighted.
    pub(crate) fn predictor_gradient(&self, xb: &[f64]) -> Vec<f64> {
        let w = self.weight();
        let y = self.data.y();
        match self.kind {
            LossKind::Squared => xb.iter().zip(y).map(|(a, b)| w * (a - b)).collect(),
            LossKind::Logistic => xb.iter().zip(y).map(|(a, b)| -w * b * sigmoid(-b * a)).collect(),
        }
    }

    /// `L(β)`.
    pub fn eval_loss(&self, beta: &[f64]) -> Result<f64> {
        Error::check_len(self.p(), beta.len())?;
        let xb = self.data.mul(beta);
        Ok(self.smooth_from_predictor(&xb) + self.lambda * l1(beta))
    }

    /// `L(β) − tᵀβ`.
    pub fn eval_tilted(&self, beta: &[f64], tilt: Option<&[f64]>) -> Result<f64> {
        let base = self.eval_loss(beta)?;
        match tilt {
            None => Ok(base),
            Some(t) => {
                Error::check_len(self.p(), t.len())?;
                Ok(base - dot(t, beta))
            }
        }
    }

    /// Gradient of the smooth part of the tilted objective, `∇f(β) − t`.
    pub fn smooth_gradient(&self, beta: &[f64], tilt: Option<&[f64]>) -> Result<Vec<f64>> {
        Error::check_len(self.p(), beta.len())?;
        let xb = self.data.mul(beta);
        let mut g = self.data.mul_t(&self.predictor_gradient(&xb));
        if let Some(t) = tilt {
            Error::check_len(self.p(), t.len())?;
            for (gi, ti) in g.iter_mut().zip(t) {
                *gi -= ti;
            }
        }
        Ok(g)
    }

    /// Largest coordinate-wise distance from zero to the subdifferential of
    /// `L(β) − tᵀβ`. Zero exactly at a minimizer.
    pub fn kkt_residual(&self, beta: &[f64], tilt: Option<&[f64]>) -> Result<f64> {
        let g = self.smooth_gradient(beta, tilt)?;
        Ok(kkt_from_gradient(&g, beta, self.lambda))
    }
}

pub(crate) fn kkt_from_gradient(g: &[f64], beta: &[f64], lambda: f64) -> f64 {
    g.iter()
        .zip(beta)
        .map(|(&gj, &bj)| {
            if bj > 0.0 {
                (gj + lambda).abs()
            } else if bj < 0.0 {
                (gj - lambda).abs()
            } else {
                (gj.abs() - lambda).max(0.0)
            }
        })
        .fold(0.0, f64::max)
}

pub(crate) fn l1(beta: &[f64]) -> f64 {
    beta.iter().map(|b| b.abs()).sum()
}

/// `log(1 + exp(x))` without overflow.
#[inline]
pub(crate) fn softplus(x: f64) -> f64 {
    if x > 0.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_dim() -> LossModel {
        let d = Dataset::from_rows(&[[1.0]], vec![1.0]).unwrap();
        LossModel::new(LossKind::Squared, 0.3, Arc::new(d)).unwrap()
    }

    #[test]
    fn toy2d_loss_at_half() {
        let eps = 1.0 / 40.0;
        let d = Dataset::from_rows(&[[1.0, 1.0], [1.0, 1.0 + eps]], vec![1.0, 1.0]).unwrap();
        let m = LossModel::with_scale(LossKind::Squared, 1.0, FitScale::Sum, Arc::new(d)).unwrap();
        let v = m.eval_loss(&[0.0, 0.5]).unwrap();
        assert!((v - 0.743828125).abs() < 1e-15, "{v}");
    }

    #[test]
    fn zero_coefficients() {
        let d = Dataset::from_rows(&[[1.0, 2.0], [3.0, -1.0]], vec![1.0, -1.0]).unwrap();
        let d = Arc::new(d);
        let lg = LossModel::new(LossKind::Logistic, 0.5, d.clone()).unwrap();
        assert_eq!(lg.eval_loss(&[0.0, 0.0]).unwrap(), std::f64::consts::LN_2);
        let sq = LossModel::new(LossKind::Squared, 0.5, d).unwrap();
        assert_eq!(sq.eval_loss(&[0.0, 0.0]).unwrap(), (1.0 + 1.0) / 4.0);
    }

    #[test]
    fn kkt_closed_form_cases() {
        let m = one_dim();
        assert!(m.kkt_residual(&[0.7], None).unwrap() <= 1e-10);
        assert!((m.kkt_residual(&[0.0], None).unwrap() - 0.7).abs() < 1e-15);
        assert!(m.kkt_residual(&[1.7], Some(&[1.0])).unwrap() <= 1e-10);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = one_dim();
        assert!(matches!(
            m.eval_loss(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 1, got: 2 })
        ));
    }

    #[test]
    fn logistic_rejects_real_labels() {
        let d = Dataset::from_rows(&[[1.0]], vec![0.5]).unwrap();
        assert!(LossModel::new(LossKind::Logistic, 0.1, Arc::new(d)).is_err());
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((sigmoid(0.0) - 0.5).abs() < 1e-16);
    }
}
