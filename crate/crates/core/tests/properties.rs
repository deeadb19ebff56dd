use std::sync::Arc;

use proptest::prelude::*;

use hullscope::geometry::{dist_to_hull, Hull, QpMethod};
use hullscope::model::{Dataset, FitScale, LossKind, LossModel, SolverConfig};
use hullscope::sampler::{sample_cloud, LevelSet, SamplerConfig};
use hullscope::selector::{greedy_select, naive_greedy, pick_first, SelectorConfig};

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn points(dim: usize, count: std::ops::Range<usize>) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-3.0..3.0f64, dim), count)
}

fn cloud_and_query() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (1usize..6).prop_flat_map(|dim| (points(dim, 1..8), prop::collection::vec(-5.0..5.0f64, dim)))
}

fn regression() -> impl Strategy<Value = (Vec<Vec<f64>>, Vec<f64>)> {
    (2usize..8, 2usize..6).prop_flat_map(|(n, p)| (points(p, n..n + 1), prop::collection::vec(-2.0..2.0f64, n)))
}

fn model(rows: &[Vec<f64>], y: &[f64], lambda: f64) -> Option<LossModel> {
    let data = Dataset::from_rows(rows, y.to_vec()).ok()?;
    LossModel::with_scale(LossKind::Squared, lambda, FitScale::Mean, Arc::new(data)).ok()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adding_a_vertex_never_increases_distance((verts, q) in cloud_and_query(), extra in prop::collection::vec(-3.0..3.0f64, 5)) {
        let before = dist_to_hull(&q, &verts, 1e-12).unwrap().distance;
        let mut more = verts.clone();
        more.push(extra[..q.len()].to_vec());
        let after = dist_to_hull(&q, &more, 1e-12).unwrap().distance;
        prop_assert!(after <= before + 1e-7);
    }

    #[test]
    fn witness_is_a_convex_combination((verts, q) in cloud_and_query()) {
        let r = dist_to_hull(&q, &verts, 1e-12).unwrap();
        prop_assert!(r.alpha.iter().all(|&a| a >= 0.0));
        prop_assert!((r.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        for i in 0..q.len() {
            let x: f64 = verts.iter().zip(&r.alpha).map(|(v, a)| a * v[i]).sum();
            prop_assert!((x - r.witness[i]).abs() < 1e-9);
        }
        let gap: f64 = q.iter().zip(&r.witness).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        prop_assert!((gap - r.distance).abs() < 1e-9);
    }

    #[test]
    fn convex_combinations_are_inside((verts, _q) in cloud_and_query(), raw in prop::collection::vec(0.0..1.0f64, 8)) {
        let w: Vec<f64> = raw[..verts.len()].to_vec();
        let total: f64 = w.iter().sum::<f64>() + 1e-12;
        let dim = verts[0].len();
        let inside: Vec<f64> = (0..dim).map(|i| verts.iter().zip(&w).map(|(v, a)| a * v[i]).sum::<f64>() / total).collect();
        prop_assert!(dist_to_hull(&inside, &verts, 1e-12).unwrap().distance < 1e-5);
    }

    #[test]
    fn segment_matches_closed_form(a in prop::collection::vec(-1.0..1.0f64, 1..40), shift in prop::collection::vec(-1.0..1.0f64, 40), q in prop::collection::vec(-2.0..2.0f64, 40)) {
        let dim = a.len();
        let b: Vec<f64> = a.iter().zip(&shift).map(|(x, s)| x + s).collect();
        let q = &q[..dim];
        let ab: Vec<f64> = b.iter().zip(&a).map(|(x, y)| x - y).collect();
        let aq: Vec<f64> = q.iter().zip(&a).map(|(x, y)| x - y).collect();
        let len2 = dot(&ab, &ab);
        prop_assume!(len2 > 1e-6);
        let t = (dot(&aq, &ab) / len2).clamp(0.0, 1.0);
        let expect = aq.iter().zip(&ab).map(|(u, v)| (u - t * v).powi(2)).sum::<f64>().sqrt();
        let hull = Hull::from_vertices(&[a.clone(), b]).unwrap();
        for method in [QpMethod::MinNormPoint, QpMethod::ProjectedGradient] {
            let got = hull.project(q, 1e-12, method).unwrap().distance;
            prop_assert!((got - expect).abs() < 1e-6, "{method:?}: {got} vs {expect}");
        }
    }

    #[test]
    fn lazy_selection_equals_naive(cloud in (2usize..6).prop_flat_map(|d| points(d, 3..40)), k in 1usize..8) {
        let cfg = SelectorConfig { k, ..SelectorConfig::default() };
        let first = pick_first(&cloud, &vec![0.0; cloud[0].len()]).unwrap();
        let lazy = greedy_select(&cloud, first, &cfg).unwrap();
        let naive = naive_greedy(&cloud, first, &cfg).unwrap();
        prop_assert_eq!(&lazy.selected, &naive.selected);
        prop_assert!(lazy.total_evals() <= naive.total_evals());
        prop_assert!(lazy.step_distance.windows(2).all(|w| w[1] <= w[0] + 1e-9));
    }

    #[test]
    fn fit_satisfies_optimality((rows, y) in regression(), lambda in 0.01..1.0f64) {
        let Some(m) = model(&rows, &y, lambda) else { return Ok(()) };
        let cfg = SolverConfig::default();
        let fit = m.fit(&cfg, None).unwrap();
        prop_assert!(fit.converged);
        prop_assert!(fit.kkt_residual <= cfg.tol);
        // no coordinate move improves the objective
        for j in 0..m.p() {
            for step in [1e-3, -1e-3] {
                let mut b = fit.beta.clone();
                b[j] += step;
                prop_assert!(m.eval_loss(&b).unwrap() >= fit.loss - 1e-10);
            }
        }
    }

    #[test]
    fn scaling_labels_and_penalty_scales_the_fit((rows, y) in regression(), lambda in 0.01..1.0f64, c in 0.5..4.0f64) {
        let Some(m) = model(&rows, &y, lambda) else { return Ok(()) };
        let yc: Vec<f64> = y.iter().map(|v| c * v).collect();
        let mc = model(&rows, &yc, c * lambda).unwrap();
        let cfg = SolverConfig::default();
        let (a, b) = (m.fit(&cfg, None).unwrap(), mc.fit(&cfg, None).unwrap());
        // objective values scale by c²; compare through the objective to allow non-unique minimizers
        let scaled: Vec<f64> = a.beta.iter().map(|v| c * v).collect();
        prop_assert!((mc.eval_loss(&scaled).unwrap() - b.loss).abs() <= 1e-7 * (1.0 + b.loss.abs()));
        prop_assert!((c * c * a.loss - b.loss).abs() <= 1e-7 * (1.0 + b.loss.abs()));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sampled_points_support_their_directions((rows, y) in regression(), seed in 0u64..1000) {
        let Some(m) = model(&rows, &y, 0.2) else { return Ok(()) };
        let fit = m.fit(&SolverConfig::default(), None).unwrap();
        let level = LevelSet::from_fit(fit.loss * 1.05 + 1e-3, &fit).unwrap();
        let cfg = SamplerConfig { m: 12, seed, ..SamplerConfig::default() };
        let cloud = sample_cloud(&m, &level, &cfg).unwrap();
        let scale = cloud.points.iter().map(|p| dot(&p.beta, &p.beta).sqrt()).fold(0.0, f64::max);
        for p in &cloud.points {
            prop_assert!(level.boundary_gap(p.loss) <= cfg.tol_nu);
            let own = dot(&p.direction, &p.beta);
            let slack = 1e-6 * dot(&p.direction, &p.direction).sqrt() * scale;
            for o in &cloud.points {
                prop_assert!(own >= dot(&p.direction, &o.beta) - slack);
            }
        }
    }
}
