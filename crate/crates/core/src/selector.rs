//! Farthest-point greedy selection of hull vertices from a sampled cloud.
//!
//! [`greedy_select`] keeps an upper bound on every candidate's distance to the
//! current hull in a max-heap. Distances to a growing hull only shrink, so a
//! popped key that was computed against the current hull is the true maximum;
//! stale keys are recomputed and pushed back. [`naive_greedy`] recomputes
//! every distance each round and is the reference for the lazy version.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{dedup_representatives, max_with_index, Hull, QpMethod, DEDUP_TOL};
use crate::linalg::dist_sq;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SelectorConfig {
    /// Number of points `K` to select, including the first.
    pub k: usize,
    /// Tolerance handed to the hull projection.
    pub qp_tol: f64,
    pub method: QpMethod,
}

impl Default for SelectorConfig {
    fn default() -> Self {
        Self {
            k: 10,
            qp_tol: 1e-9,
            method: QpMethod::default(),
        }
    }
}

impl SelectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("k must be at least 1".into()));
        }
        if !(self.qp_tol > 0.0) {
            return Err(Error::InvalidConfig(format!(
                "qp_tol must be positive, got {}",
                self.qp_tol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionStatus {
    Complete,
    /// The cloud had fewer distinct points than requested; all were taken.
    Exhausted,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HullApproximation {
    /// Cloud indices in selection order.
    pub selected: Vec<usize>,
    /// `step_distance[i]`: distance from the point added at step `i + 1` to
    /// the hull of the points before it, i.e. the largest cloud-to-hull
    /// distance at that moment.
    pub step_distance: Vec<f64>,
    /// Distance evaluations spent on each addition.
    pub eval_count: Vec<usize>,
    /// Largest cloud-to-hull distance for the final selection.
    pub residual_distance: f64,
    pub status: SelectionStatus,
}

impl HullApproximation {
    pub fn total_evals(&self) -> usize {
        self.eval_count.iter().sum()
    }
}

/// Index of the cloud point farthest from `beta_star`; the lowest index wins
/// ties.
pub fn pick_first<P: AsRef<[f64]>>(cloud: &[P], beta_star: &[f64]) -> Result<usize> {
    if cloud.is_empty() {
        return Err(Error::Empty("cloud"));
    }
    let d: Vec<f64> = cloud
        .iter()
        .map(|p| {
            Error::check_len(beta_star.len(), p.as_ref().len())?;
            Ok(dist_sq(p.as_ref(), beta_star))
        })
        .collect::<Result<_>>()?;
    Ok(max_with_index(&d).expect("nonempty").1)
}

/// Validates inputs and returns the distinct candidates other than `first`.
fn candidates<P: AsRef<[f64]>>(cloud: &[P], first: usize, cfg: &SelectorConfig) -> Result<(Hull, Vec<usize>)> {
    cfg.validate()?;
    if cloud.is_empty() {
        return Err(Error::Empty("cloud"));
    }
    if first >= cloud.len() {
        return Err(Error::InvalidConfig(format!(
            "first index {first} is out of range for a cloud of {}",
            cloud.len()
        )));
    }
    let hull = Hull::from_vertices(&cloud[first..=first])?;
    for p in cloud {
        Error::check_len(hull.dim(), p.as_ref().len())?;
    }
    let rep = dedup_representatives(cloud, DEDUP_TOL);
    let rest = (0..cloud.len())
        .filter(|&i| rep[i] == i && rep[i] != rep[first])
        .collect();
    Ok((hull, rest))
}

/// Distance to the hull, with values at or below the QP tolerance reported
/// as exactly zero. Points inside the hull then tie and fall to the
/// lowest-index rule instead of to rounding noise.
fn distance(hull: &Hull, point: &[f64], cfg: &SelectorConfig) -> Result<f64> {
    let d = hull.project(point, cfg.qp_tol, cfg.method)?.distance;
    Ok(if d <= cfg.qp_tol { 0.0 } else { d })
}

#[derive(Debug, Clone, Copy)]
struct Entry {
    key: f64,
    index: usize,
    /// Hull size the key was computed against.
    stamp: usize,
}

impl PartialEq for Entry {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Entry {}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Entry {
    // Larger key first; on equal keys the lower index is "larger".
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then_with(|| other.index.cmp(&self.index))
    }
}

/// Lazy greedy selection starting from cloud index `first`.
pub fn greedy_select<P: AsRef<[f64]>>(cloud: &[P], first: usize, cfg: &SelectorConfig) -> Result<HullApproximation> {
    let (mut hull, rest) = candidates(cloud, first, cfg)?;
    let project = |hull: &Hull, i: usize| distance(hull, cloud[i].as_ref(), cfg);

    // Initial keys are exact distances to the first point but carry stamp 0,
    // so every step performs at least one evaluation.
    let mut heap: BinaryHeap<Entry> = rest
        .iter()
        .map(|&i| Entry {
            key: dist_sq(cloud[i].as_ref(), cloud[first].as_ref()).sqrt(),
            index: i,
            stamp: 0,
        })
        .collect();
    let mut retired: Vec<Entry> = Vec::new();
    // Set once every remaining candidate is inside the hull; from then on
    // zero keys stay in the heap so the lowest index is picked.
    let mut draining = false;
    let mut selected = vec![first];
    let mut step_distance = Vec::new();
    let mut eval_count = Vec::new();
    let mut status = SelectionStatus::Complete;

    // One more round after the last addition yields the residual distance;
    // its evaluations are not counted.
    let mut residual_distance = 0.0;
    loop {
        let done = selected.len() >= cfg.k;
        let mut evals = 0;
        let picked = loop {
            let Some(top) = heap.pop() else {
                if retired.is_empty() {
                    break None;
                }
                heap.extend(retired.drain(..));
                draining = true;
                continue;
            };
            if top.stamp == selected.len() {
                break Some(top);
            }
            let d = project(&hull, top.index)?;
            evals += 1;
            let e = Entry {
                key: d,
                index: top.index,
                stamp: selected.len(),
            };
            // Points already inside the hull can only stay inside.
            if d == 0.0 && !draining {
                retired.push(e);
            } else {
                heap.push(e);
            }
        };
        let Some(top) = picked else {
            if !done {
                status = SelectionStatus::Exhausted;
            }
            break;
        };
        if done {
            residual_distance = top.key;
            break;
        }
        hull.push(cloud[top.index].as_ref())?;
        selected.push(top.index);
        step_distance.push(top.key);
        eval_count.push(evals);
    }

    Ok(HullApproximation {
        selected,
        step_distance,
        eval_count,
        residual_distance,
        status,
    })
}

/// Greedy selection that recomputes every remaining distance each round.
pub fn naive_greedy<P: AsRef<[f64]>>(cloud: &[P], first: usize, cfg: &SelectorConfig) -> Result<HullApproximation> {
    let (mut hull, mut rest) = candidates(cloud, first, cfg)?;
    let mut selected = vec![first];
    let mut step_distance = Vec::new();
    let mut eval_count = Vec::new();
    let mut status = SelectionStatus::Complete;
    let mut residual_distance = 0.0;
    loop {
        let d: Vec<f64> = rest
            .iter()
            .map(|&i| distance(&hull, cloud[i].as_ref(), cfg))
            .collect::<Result<_>>()?;
        let Some((best, pos)) = max_with_index(&d) else {
            if selected.len() < cfg.k {
                status = SelectionStatus::Exhausted;
            }
            break;
        };
        if selected.len() >= cfg.k {
            residual_distance = best;
            break;
        }
        let idx = rest.remove(pos);
        hull.push(cloud[idx].as_ref())?;
        selected.push(idx);
        step_distance.push(best);
        eval_count.push(d.len());
    }
    Ok(HullApproximation {
        selected,
        step_distance,
        eval_count,
        residual_distance,
        status,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    fn cfg(k: usize) -> SelectorConfig {
        SelectorConfig {
            k,
            ..Default::default()
        }
    }

    #[test]
    fn pick_first_rules() {
        assert_eq!(pick_first(&[[0.0, 0.0], [2.0, 0.0]], &[0.0, 0.0]).unwrap(), 1);
        assert_eq!(pick_first(&[[-1.0, 0.0], [1.0, 0.0]], &[0.0, 0.0]).unwrap(), 0);
        let empty: [[f64; 2]; 0] = [];
        assert!(pick_first(&empty, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn collinear_points() {
        let cloud = [[0.0, 0.0], [1.0, 0.0], [2.0, 0.0]];
        for r in [
            greedy_select(&cloud, 0, &cfg(3)).unwrap(),
            naive_greedy(&cloud, 0, &cfg(3)).unwrap(),
        ] {
            assert_eq!(r.selected, vec![0, 2, 1]);
            assert_eq!(r.step_distance.len(), 2);
            assert!((r.step_distance[0] - 2.0).abs() < 1e-12);
            assert_eq!(r.step_distance[1], 0.0);
            assert_eq!(r.status, SelectionStatus::Complete);
        }
    }

    #[test]
    fn single_point_selection() {
        let cloud = [[0.0, 0.0], [1.0, 0.0]];
        let r = greedy_select(&cloud, 1, &cfg(1)).unwrap();
        assert_eq!(r.selected, vec![1]);
        assert!(r.step_distance.is_empty() && r.eval_count.is_empty());
        assert!((r.residual_distance - 1.0).abs() < 1e-12);
    }

    #[test]
    fn too_few_distinct_points() {
        let cloud = [[0.0, 0.0], [1.0, 0.0], [0.0, 0.0], [1.0, 0.0]];
        let r = greedy_select(&cloud, 0, &cfg(4)).unwrap();
        assert_eq!(r.selected, vec![0, 1]);
        assert_eq!(r.status, SelectionStatus::Exhausted);
        let n = naive_greedy(&cloud, 0, &cfg(4)).unwrap();
        assert_eq!(n.selected, r.selected);
    }

    #[test]
    fn naive_counts_are_remaining_points() {
        let mut s = rng::stream(5, 0);
        let cloud: Vec<Vec<f64>> = (0..100).map(|_| rng::draw_direction(&mut s, 3)).collect();
        let r = naive_greedy(&cloud, 0, &cfg(50)).unwrap();
        for (i, &c) in r.eval_count.iter().enumerate() {
            assert_eq!(c, 100 - (i + 1));
        }
        assert_eq!(r.total_evals(), 3675);
    }

    #[test]
    fn lazy_matches_naive_on_random_clouds() {
        for trial in 0..40 {
            let mut s = rng::stream(11, trial);
            let dim = [2, 3, 5][trial as usize % 3];
            let cloud: Vec<Vec<f64>> = (0..40).map(|_| rng::draw_direction(&mut s, dim)).collect();
            let c = cfg(12);
            let lazy = greedy_select(&cloud, 0, &c).unwrap();
            let naive = naive_greedy(&cloud, 0, &c).unwrap();
            assert_eq!(lazy.selected, naive.selected, "trial {trial}");
            assert!(lazy.total_evals() <= naive.total_evals());
            assert!(lazy.eval_count.iter().all(|&e| e >= 1));
            for w in lazy.step_distance.windows(2) {
                assert!(w[1] <= w[0] + 1e-9);
            }
            assert!((lazy.residual_distance - naive.residual_distance).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_input() {
        let cloud = [[0.0, 0.0]];
        assert!(greedy_select(&cloud, 1, &cfg(1)).is_err());
        assert!(greedy_select(&cloud, 0, &cfg(0)).is_err());
        let ragged: Vec<Vec<f64>> = vec![vec![0.0, 0.0], vec![1.0]];
        assert!(greedy_select(&ragged, 0, &cfg(2)).is_err());
    }
}
