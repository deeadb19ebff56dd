use crate::error::{Error, Result};
use crate::linalg::{axpy, dot, norm};

const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITER: usize = 10_000;

/// Centered rows of a point set, with the mean used.
struct Centered {
    mean: Vec<f64>,
    rows: Vec<Vec<f64>>,
}

impl Centered {
    fn new<P: AsRef<[f64]>>(points: &[P], dim: usize) -> Result<Self> {
        let mut mean = vec![0.0; dim];
        for p in points {
            Error::check_len(dim, p.as_ref().len())?;
            axpy(1.0, p.as_ref(), &mut mean);
        }
        mean.iter_mut().for_each(|m| *m /= points.len() as f64);
        let rows = points
            .iter()
            .map(|p| p.as_ref().iter().zip(&mean).map(|(a, b)| a - b).collect())
            .collect();
        Ok(Self { mean, rows })
    }

    /// `AᵀA v`
    fn apply(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for r in &self.rows {
            axpy(dot(r, v), r, &mut out);
        }
        out
    }

    fn trace(&self) -> f64 {
        self.rows.iter().map(|r| dot(r, r)).sum()
    }
}

fn orthogonalize(v: &mut [f64], against: &[Vec<f64>]) {
    for u in against {
        let c = dot(v, u);
        axpy(-c, u, v);
    }
}

/// Leading eigenvector of `AᵀA` restricted to the complement of `found`, or
/// `None` when the remaining variance is negligible.
fn leading_axis(a: &Centered, found: &[Vec<f64>], scale: f64) -> Option<Vec<f64>> {
    let negligible = 1e-12 * scale;
    // Start from the longest centered row outside the found subspace.
    let mut v = a
        .rows
        .iter()
        .map(|r| {
            let mut r = r.clone();
            orthogonalize(&mut r, found);
            r
        })
        .max_by(|x, y| norm(x).total_cmp(&norm(y)))?;
    let n0 = norm(&v);
    if n0 * n0 <= negligible {
        return None;
    }
    v.iter_mut().for_each(|x| *x /= n0);
    for _ in 0..MAX_ITER {
        let mut w = a.apply(&v);
        orthogonalize(&mut w, found);
        let lambda = dot(&w, &v);
        if lambda <= negligible {
            return None;
        }
        let resid = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).powi(2))
            .sum::<f64>()
            .sqrt();
        let nw = norm(&w);
        w.iter_mut().for_each(|x| *x /= nw);
        v = w;
        if resid <= RESIDUAL_TOL * lambda {
            break;
        }
    }
    if let Some(first) = v.iter().copied().find(|x| x.abs() > 1e-12) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
    Some(v)
}

/// Coordinates of `points` on the top two principal axes of `reference`
/// (the points themselves when no reference is given). A direction without
/// variance yields a zero coordinate.
pub fn pca_project_2d<P: AsRef<[f64]>>(points: &[P], reference: Option<&[P]>) -> Result<Vec<[f64; 2]>> {
    let first = points.first().ok_or(Error::Empty("points"))?;
    let dim = first.as_ref().len();
    let source = reference.unwrap_or(points);
    if source.is_empty() {
        return Err(Error::Empty("reference points"));
    }
    let centered = Centered::new(source, dim)?;
    let scale = centered.trace().max(f64::MIN_POSITIVE);
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(2);
    for _ in 0..2.min(dim) {
        match leading_axis(&centered, &axes, scale) {
            Some(v) => axes.push(v),
            None => break,
        }
    }
    points
        .iter()
        .map(|p| {
            let p = p.as_ref();
            Error::check_len(dim, p.len())?;
            let c: Vec<f64> = p.iter().zip(&centered.mean).map(|(a, b)| a - b).collect();
            let mut out = [0.0; 2];
            for (o, ax) in out.iter_mut().zip(&axes) {
                *o = dot(&c, ax);
            }
            Ok(out)
        })
        .collect()
}

/// The principal axes themselves, for inspection and tests.
pub fn principal_axes<P: AsRef<[f64]>>(points: &[P]) -> Result<Vec<Vec<f64>>> {
    let first = points.first().ok_or(Error::Empty("points"))?;
    let centered = Centered::new(points, first.as_ref().len())?;
    let scale = centered.trace().max(f64::MIN_POSITIVE);
    let mut axes = Vec::new();
    for _ in 0..2.min(first.as_ref().len()) {
        match leading_axis(&centered, &axes, scale) {
            Some(v) => axes.push(v),
            None => break,
        }
    }
    Ok(axes)
}
