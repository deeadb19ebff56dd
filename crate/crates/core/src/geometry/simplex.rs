/// Euclidean projection of `v` onto the probability simplex
/// `{α : Σα = 1, α ≥ 0}` by the sort-and-threshold rule.
pub fn project_to_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (k, &uk) in u.iter().enumerate() {
        cumsum += uk;
        let t = (cumsum - 1.0) / (k + 1) as f64;
        if uk - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    v.iter().map(|&x| (x - theta).max(0.0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn already_on_simplex() {
        let v = [0.2, 0.3, 0.5];
        let p = project_to_simplex(&v);
        for (a, b) in p.iter().zip(&v) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn shifts_uniformly() {
        assert_eq!(project_to_simplex(&[1.0, 1.0]), vec![0.5, 0.5]);
        assert_eq!(project_to_simplex(&[3.0, 0.0]), vec![1.0, 0.0]);
    }

    proptest! {
        #[test]
        fn lands_on_simplex_and_is_closest(v in prop::collection::vec(-5.0f64..5.0, 1..8),
                                           w in prop::collection::vec(0.0f64..1.0, 8)) {
            let p = project_to_simplex(&v);
            let s: f64 = p.iter().sum();
            prop_assert!((s - 1.0).abs() < 1e-12);
            prop_assert!(p.iter().all(|&x| x >= 0.0));
            // Any other simplex point is no closer.
            let w = &w[..v.len()];
            let ws: f64 = w.iter().sum();
            if ws > 0.0 {
                let q: Vec<f64> = w.iter().map(|x| x / ws).collect();
                let dp: f64 = p.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
                let dq: f64 = q.iter().zip(&v).map(|(a, b)| (a - b).powi(2)).sum();
                prop_assert!(dp <= dq + 1e-12);
            }
        }
    }
}
