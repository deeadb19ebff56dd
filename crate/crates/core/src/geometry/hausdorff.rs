use serde::{Deserialize, Serialize};

use super::hull::Hull;
use super::qp::QpMethod;
use crate::error::{Error, Result};

/// Sample estimate of the Hausdorff distance between two vertex hulls.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HausdorffEstimate {
    /// Largest distance from a reference vertex to the approximating hull.
    pub forward: f64,
    /// Largest distance from an approximating vertex to the reference hull.
    pub backward: f64,
    pub symmetric: f64,
    pub forward_witness: usize,
    pub backward_witness: usize,
}

/// Distance from every point in `from` to `hull`, in input order.
pub fn distances_to_hull<P: AsRef<[f64]> + Sync>(
    from: &[P],
    hull: &Hull,
    tol: f64,
    method: QpMethod,
) -> Result<Vec<f64>> {
    let one = |v: &P| hull.project(v.as_ref(), tol, method).map(|r| r.distance);
    #[cfg(feature = "parallel")]
    let out: Vec<Result<f64>> = {
        use rayon::prelude::*;
        from.par_iter().map(one).collect()
    };
    #[cfg(not(feature = "parallel"))]
    let out: Vec<Result<f64>> = from.iter().map(one).collect();
    out.into_iter().collect()
}

/// Largest value and its index; the lowest index wins ties.
pub fn max_with_index(values: &[f64]) -> Option<(f64, usize)> {
    let mut best: Option<(f64, usize)> = None;
    for (i, &v) in values.iter().enumerate() {
        if best.is_none_or(|(b, _)| v > b) {
            best = Some((v, i));
        }
    }
    best
}

/// `max over v in from of dist(v, conv(to))` and the maximizing index.
pub fn directed_hull_distance<P, Q>(from: &[P], to: &[Q], tol: f64) -> Result<(f64, usize)>
where
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]>,
{
    directed_hull_distance_with(from, to, tol, QpMethod::default())
}

pub fn directed_hull_distance_with<P, Q>(from: &[P], to: &[Q], tol: f64, method: QpMethod) -> Result<(f64, usize)>
where
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]>,
{
    if from.is_empty() {
        return Err(Error::Empty("source vertices"));
    }
    let hull = Hull::from_vertices(to)?;
    let d = distances_to_hull(from, &hull, tol, method)?;
    Ok(max_with_index(&d).expect("nonempty"))
}

/// Both directed distances between `conv(q)` and `conv(qstar)`.
pub fn hausdorff_estimate<P, Q>(q: &[P], qstar: &[Q], tol: f64) -> Result<HausdorffEstimate>
where
    P: AsRef<[f64]> + Sync,
    Q: AsRef<[f64]> + Sync,
{
    let (forward, forward_witness) = directed_hull_distance(qstar, q, tol)?;
    let (backward, backward_witness) = directed_hull_distance(q, qstar, tol)?;
    Ok(HausdorffEstimate {
        forward,
        backward,
        symmetric: forward.max(backward),
        forward_witness,
        backward_witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const SQUARE: [[f64; 2]; 4] = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]];
    const SEGMENT: [[f64; 2]; 2] = [[0.0, 0.0], [1.0, 0.0]];

    #[test]
    fn directed_examples() {
        let (d, _) = directed_hull_distance(&SQUARE, &SQUARE, 1e-9).unwrap();
        assert!(d < 1e-9);
        let (d, w) = directed_hull_distance(&SQUARE, &SEGMENT, 1e-9).unwrap();
        assert!((d - 1.0).abs() < 1e-9);
        assert_eq!(w, 2);
        let (d, _) = directed_hull_distance(&[[0.5, 0.0]], &SQUARE, 1e-9).unwrap();
        assert!(d < 1e-9);
    }

    #[test]
    fn segment_versus_square() {
        let h = hausdorff_estimate(&SEGMENT, &SQUARE, 1e-9).unwrap();
        assert!((h.forward - 1.0).abs() < 1e-9);
        assert!(h.backward < 1e-9);
        assert_eq!(h.symmetric, h.forward);

        let swapped = hausdorff_estimate(&SQUARE, &SEGMENT, 1e-9).unwrap();
        assert_eq!(swapped.forward, h.backward);
        assert_eq!(swapped.backward, h.forward);
        assert_eq!(swapped.symmetric, h.symmetric);

        let same = hausdorff_estimate(&SQUARE, &SQUARE, 1e-9).unwrap();
        assert!(same.symmetric < 1e-9);
    }

    #[test]
    fn ties_pick_lowest_index() {
        assert_eq!(max_with_index(&[1.0, 3.0, 3.0, 2.0]), Some((3.0, 1)));
        assert_eq!(max_with_index(&[]), None);
    }

    #[test]
    fn empty_source_is_an_error() {
        let empty: [[f64; 2]; 0] = [];
        assert!(directed_hull_distance(&empty, &SQUARE, 1e-9).is_err());
        assert!(directed_hull_distance(&SQUARE, &empty, 1e-9).is_err());
    }
}
