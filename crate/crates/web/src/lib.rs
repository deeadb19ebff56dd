//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every function takes and returns JSON strings so the page needs no glue
//! beyond what `wasm-bindgen` generates.

use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

use hullscope::geometry::{dist_to_hull, pca_project_2d};
use hullscope::io::SyntheticSpec;
use hullscope::pipeline::{self, NuRule, RunConfig};

fn parse_points(text: &str) -> Result<Vec<Vec<f64>>, String> {
    serde_json::from_str(text).map_err(|e| format!("expected a JSON array of points: {e}"))
}

/// Samples and summarizes one of the toy problems. Returns the cloud and
/// optimum in plot coordinates (raw for `example2d`, principal axes for
/// `example3d`), the selection order and the Hausdorff estimate.
pub fn explore_json(family: &str, offset: f64, m: usize, k: usize, seed: u64) -> Result<String, String> {
    let spec = match family {
        "example2d" => SyntheticSpec::example2d(),
        "example3d" => SyntheticSpec::example3d(),
        other => return Err(format!("unknown problem {other:?}")),
    };
    let mut cfg = RunConfig::for_synthetic(spec);
    cfg.nu = NuRule::Offset(offset);
    cfg.m = m;
    cfg.k = k;
    cfg.m_prime = (4 * m).max(200);
    cfg.seed = seed;
    let out = pipeline::run(&cfg).map_err(|e| e.to_string())?;
    let cloud = out.cloud.betas();
    let beta_star = out.fit.beta.clone();
    let (plot, star): (Vec<[f64; 2]>, [f64; 2]) = if beta_star.len() == 2 {
        (
            cloud.iter().map(|b| [b[0], b[1]]).collect(),
            [beta_star[0], beta_star[1]],
        )
    } else {
        let mut with_star = cloud.clone();
        with_star.push(beta_star);
        let mut xy = pca_project_2d(&with_star, Some(&cloud)).map_err(|e| e.to_string())?;
        let star = xy.pop().expect("optimum was appended");
        (xy, star)
    };
    let rec = &out.record;
    let value = json!({
        "p": rec.cloud.p,
        "nu": rec.cloud.nu,
        "nu_star": rec.cloud.nu_star,
        "beta_star": star,
        "cloud": plot,
        "selected": out.selection.selected,
        "step_distance": out.selection.step_distance,
        "eval_count": out.selection.eval_count,
        "hausdorff": rec.evaluation.hausdorff.symmetric,
    });
    Ok(value.to_string())
}

/// Distance from `(x, y)` to the hull of 2-D `vertices`, with the nearest
/// point of the hull.
pub fn hull_distance_json(vertices: &str, x: f64, y: f64) -> Result<String, String> {
    let vertices = parse_points(vertices)?;
    let proj = dist_to_hull(&[x, y], &vertices, 1e-12).map_err(|e| e.to_string())?;
    Ok(json!({ "distance": proj.distance, "witness": proj.witness }).to_string())
}

/// Coordinates of `points` on their top two principal axes.
pub fn project_json(points: &str) -> Result<String, String> {
    let points = parse_points(points)?;
    let xy = pca_project_2d(&points, None).map_err(|e| e.to_string())?;
    Ok(Value::from(xy.iter().map(|p| json!(p)).collect::<Vec<_>>()).to_string())
}

#[wasm_bindgen]
pub fn explore(family: &str, offset: f64, m: usize, k: usize, seed: u32) -> Result<String, JsError> {
    explore_json(family, offset, m, k, u64::from(seed)).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = hullDistance)]
pub fn hull_distance(vertices: &str, x: f64, y: f64) -> Result<String, JsError> {
    hull_distance_json(vertices, x, y).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn project(points: &str) -> Result<String, JsError> {
    project_json(points).map_err(|e| JsError::new(&e))
}
