use serde::{Deserialize, Serialize};

use super::qp::{self, QpMethod, ShiftedPoints};
use crate::error::{Error, Result};
use crate::linalg::{axpy, dist_sq, dot};

/// Vertices closer than this are treated as one.
pub const DEDUP_TOL: f64 = 1e-12;

/// Hulls with more distinct vertices than this are solved on explicit
/// coordinates instead of a cached Gram matrix.
pub const GRAM_CACHE_LIMIT: usize = 2048;

/// Projection of a query point onto a convex hull.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullProjection {
    pub distance: f64,
    /// Convex weights over the hull's vertices in insertion order.
    pub alpha: Vec<f64>,
    /// `Σ αⱼ vⱼ`
    pub witness: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Representative index for every point: the lowest-index earlier point
/// within `tol`, or the point itself.
///
/// Candidates are found through a sorted one-dimensional projection, which
/// cannot separate points closer than `tol`, so the scan only inspects a small
/// window per point.
pub fn dedup_representatives<P: AsRef<[f64]>>(points: &[P], tol: f64) -> Vec<usize> {
    let m = points.len();
    if m == 0 {
        return Vec::new();
    }
    let dim = points[0].as_ref().len();
    let mut dir: Vec<f64> = (0..dim).map(|j| 1.0 + 0.5 * ((j as f64) * 0.618).sin()).collect();
    let nrm = dot(&dir, &dir).sqrt().max(f64::MIN_POSITIVE);
    dir.iter_mut().for_each(|x| *x /= nrm);
    let keys: Vec<f64> = points.iter().map(|p| dot(p.as_ref(), &dir)).collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| keys[a].total_cmp(&keys[b]).then(a.cmp(&b)));
    let sorted_keys: Vec<f64> = order.iter().map(|&i| keys[i]).collect();

    let tol_sq = tol * tol;
    let mut rep: Vec<usize> = (0..m).collect();
    for i in 0..m {
        let lo = sorted_keys.partition_point(|&k| k < keys[i] - tol);
        let mut best = i;
        for &j in order[lo..].iter().take_while(|&&j| keys[j] <= keys[i] + tol) {
            if j < best && rep[j] == j && dist_sq(points[i].as_ref(), points[j].as_ref()) <= tol_sq {
                best = j;
            }
        }
        rep[i] = best;
    }
    rep
}

/// A convex hull given by its vertices, with the distinct vertices' Gram
/// matrix cached while the hull is small enough.
#[derive(Debug, Clone)]
pub struct Hull {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    /// Indices into `vertices` of the distinct vertices.
    unique: Vec<usize>,
    /// Row-major Gram over `unique`, grown incrementally.
    gram: Option<Vec<Vec<f64>>>,
}

impl Hull {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            vertices: Vec::new(),
            unique: Vec::new(),
            gram: Some(Vec::new()),
        }
    }

    pub fn from_vertices<P: AsRef<[f64]>>(vertices: &[P]) -> Result<Self> {
        let first = vertices.first().ok_or(Error::Empty("hull vertices"))?;
        let dim = first.as_ref().len();
        for v in vertices {
            Error::check_len(dim, v.as_ref().len())?;
        }
        let rep = dedup_representatives(vertices, DEDUP_TOL);
        let unique: Vec<usize> = (0..vertices.len()).filter(|&i| rep[i] == i).collect();
        let vertices: Vec<Vec<f64>> = vertices.iter().map(|v| v.as_ref().to_vec()).collect();
        let gram = (unique.len() <= GRAM_CACHE_LIMIT).then(|| {
            unique
                .iter()
                .map(|&a| unique.iter().map(|&b| dot(&vertices[a], &vertices[b])).collect())
                .collect()
        });
        Ok(Self {
            dim,
            vertices,
            unique,
            gram,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn distinct_len(&self) -> usize {
        self.unique.len()
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    /// Adds a vertex, extending the cached Gram matrix by one row.
    pub fn push(&mut self, v: &[f64]) -> Result<()> {
        Error::check_len(self.dim, v.len())?;
        let tol_sq = DEDUP_TOL * DEDUP_TOL;
        let duplicate = self.unique.iter().any(|&u| dist_sq(&self.vertices[u], v) <= tol_sq);
        self.vertices.push(v.to_vec());
        if duplicate {
            return Ok(());
        }
        let idx = self.vertices.len() - 1;
        self.unique.push(idx);
        if self.unique.len() > GRAM_CACHE_LIMIT {
            self.gram = None;
        }
        if let Some(g) = self.gram.as_mut() {
            let row: Vec<f64> = self.unique.iter().map(|&u| dot(&self.vertices[u], v)).collect();
            for (r, &val) in g.iter_mut().zip(&row) {
                r.push(val);
            }
            g.push(row);
        }
        Ok(())
    }

    /// Euclidean projection of `query` onto the hull.
    pub fn project(&self, query: &[f64], tol: f64, method: QpMethod) -> Result<HullProjection> {
        if self.is_empty() {
            return Err(Error::Empty("hull vertices"));
        }
        Error::check_len(self.dim, query.len())?;
        let sol = match &self.gram {
            Some(g) => {
                let vb: Vec<f64> = self.unique.iter().map(|&u| dot(&self.vertices[u], query)).collect();
                let pts = GramPoints {
                    gram: g,
                    vb,
                    bb: dot(query, query),
                };
                qp::solve(&pts, tol, method)
            }
            None => {
                let pts = ExplicitPoints {
                    vertices: &self.vertices,
                    unique: &self.unique,
                    query,
                };
                qp::solve(&pts, tol, method)
            }
        };

        let mut alpha = vec![0.0; self.vertices.len()];
        let mut total = 0.0;
        for &(k, a) in &sol.weights {
            let a = a.max(0.0);
            alpha[self.unique[k]] += a;
            total += a;
        }
        alpha.iter_mut().for_each(|a| *a /= total);
        let mut witness = vec![0.0; self.dim];
        for (v, &a) in self.vertices.iter().zip(&alpha) {
            if a > 0.0 {
                axpy(a, v, &mut witness);
            }
        }
        Ok(HullProjection {
            distance: dist_sq(query, &witness).sqrt(),
            alpha,
            witness,
            iterations: sol.iterations,
            converged: sol.converged,
        })
    }
}

struct GramPoints<'a> {
    gram: &'a [Vec<f64>],
    vb: Vec<f64>,
    bb: f64,
}

impl ShiftedPoints for GramPoints<'_> {
    fn len(&self) -> usize {
        self.vb.len()
    }

    fn dot(&self, i: usize, j: usize) -> f64 {
        self.gram[i][j] - self.vb[i] - self.vb[j] + self.bb
    }

    fn dots_with(&self, combo: &[(usize, f64)], out: &mut [f64]) {
        let total: f64 = combo.iter().map(|c| c.1).sum();
        let wvb: f64 = combo.iter().map(|&(i, w)| w * self.vb[i]).sum();
        for (j, o) in out.iter_mut().enumerate() {
            let row = &self.gram[j];
            let gw: f64 = combo.iter().map(|&(i, w)| w * row[i]).sum();
            *o = gw - total * self.vb[j] - wvb + total * self.bb;
        }
    }
}

struct ExplicitPoints<'a> {
    vertices: &'a [Vec<f64>],
    unique: &'a [usize],
    query: &'a [f64],
}

impl ShiftedPoints for ExplicitPoints<'_> {
    fn len(&self) -> usize {
        self.unique.len()
    }

    fn dot(&self, i: usize, j: usize) -> f64 {
        let a = &self.vertices[self.unique[i]];
        let b = &self.vertices[self.unique[j]];
        a.iter()
            .zip(b)
            .zip(self.query)
            .map(|((x, y), q)| (x - q) * (y - q))
            .sum()
    }

    fn dots_with(&self, combo: &[(usize, f64)], out: &mut [f64]) {
        let mut x = vec![0.0; self.query.len()];
        let mut total = 0.0;
        for &(i, w) in combo {
            axpy(w, &self.vertices[self.unique[i]], &mut x);
            total += w;
        }
        axpy(-total, self.query, &mut x);
        let qx = dot(self.query, &x);
        for (o, &u) in out.iter_mut().zip(self.unique) {
            *o = dot(&self.vertices[u], &x) - qx;
        }
    }
}

/// Distance from `beta` to `conv(vertices)`, solved with the default method.
pub fn dist_to_hull<P: AsRef<[f64]>>(beta: &[f64], vertices: &[P], tol: f64) -> Result<HullProjection> {
    dist_to_hull_with(beta, vertices, tol, QpMethod::default())
}

pub fn dist_to_hull_with<P: AsRef<[f64]>>(
    beta: &[f64],
    vertices: &[P],
    tol: f64,
    method: QpMethod,
) -> Result<HullProjection> {
    Hull::from_vertices(vertices)?.project(beta, tol, method)
}
