use std::io::Write;
use std::path::Path;

use anyhow::Context;
use serde::Serialize;

use hullscope::geometry::pca_project_2d;
use hullscope::io::{self, record::to_json, Synthetic};
use hullscope::pipeline::{self, RunConfig};

use crate::args::{infer_format, parse_grid, ConfigError, Format, GenArgs, ProblemArgs, ProjectArgs};

fn emit(text: &str) -> anyhow::Result<()> {
    let mut out = std::io::stdout().lock();
    out.write_all(text.as_bytes())?;
    out.flush()?;
    Ok(())
}

fn ensure_dir(dir: &Path) -> anyhow::Result<()> {
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

pub fn run(args: &ProblemArgs) -> anyhow::Result<()> {
    let cfg = args.to_run_config()?;
    let out = pipeline::run(&cfg)?;
    match &args.out {
        Some(dir) => {
            ensure_dir(dir)?;
            io::write_run(&out.record, dir.join("run.json"))?;
            io::write_points_csv(&out.cloud.betas(), dir.join("cloud.csv"))?;
            io::write_points_csv(&out.selected_betas(), dir.join("selected.csv"))?;
            io::write_points_csv(&out.eval_cloud.betas(), dir.join("eval_cloud.csv"))?;
            let h = &out.record.evaluation.hausdorff;
            eprintln!(
                "selected {} of {} points; hausdorff {:.6e} (forward {:.6e}); wrote {}",
                out.selection.selected.len(),
                out.cloud.len(),
                h.symmetric,
                h.forward,
                dir.display()
            );
        }
        None => emit(&to_json(&out.record)?)?,
    }
    Ok(())
}

pub fn curve(args: &ProblemArgs) -> anyhow::Result<()> {
    let cfg = args.to_run_config()?;
    let k_grid = match &args.k_grid {
        Some(g) => parse_grid(g)?,
        None => vec![cfg.k],
    };
    let m_grid = match &args.m_grid {
        Some(g) => parse_grid(g)?,
        None => vec![cfg.m],
    };
    let report = pipeline::curve(&cfg, &k_grid, &m_grid)?;
    let text = to_json(&report)?;
    match &args.out {
        Some(dir) => {
            ensure_dir(dir)?;
            std::fs::write(dir.join("curve.json"), text)?;
            write_curve_csv(&report, &dir.join("curve.csv"))?;
        }
        None => emit(&text)?,
    }
    Ok(())
}

fn write_curve_csv(report: &pipeline::CurveReport, path: &Path) -> anyhow::Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(f, "M,K,forward,backward,symmetric,lazy_evals,naive_evals")?;
    for p in &report.points {
        writeln!(
            f,
            "{},{},{},{},{},{},{}",
            p.m, p.k, p.forward, p.backward, p.symmetric, p.lazy_evals, p.naive_evals
        )?;
    }
    f.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct FitReport<'a> {
    config: &'a RunConfig,
    n: usize,
    p: usize,
    nu_star: f64,
    nu: f64,
    iterations: usize,
    kkt_residual: f64,
    support: Vec<usize>,
    beta_star: &'a [f64],
}

pub fn fit(args: &ProblemArgs) -> anyhow::Result<()> {
    let cfg = args.to_run_config()?;
    cfg.validate()?;
    let model = pipeline::load_model(&cfg)?;
    let res = pipeline::fit_optimum(&model, &cfg.solver)?;
    let report = FitReport {
        config: &cfg,
        n: model.data().n(),
        p: model.p(),
        nu_star: res.loss,
        nu: cfg.nu.resolve(res.loss),
        iterations: res.iterations,
        kkt_residual: res.kkt_residual,
        support: (0..res.beta.len()).filter(|&j| res.beta[j] != 0.0).collect(),
        beta_star: &res.beta,
    };
    let text = to_json(&report)?;
    match &args.out {
        Some(dir) => {
            ensure_dir(dir)?;
            std::fs::write(dir.join("fit.json"), text)?;
        }
        None => emit(&text)?,
    }
    Ok(())
}

pub fn project(args: &ProjectArgs) -> anyhow::Result<()> {
    let points = io::read_points_csv(&args.points)?;
    let reference = args.reference.as_ref().map(io::read_points_csv).transpose()?;
    let coords = pca_project_2d(&points, reference.as_deref())?;
    match &args.out {
        Some(path) => io::write_points_csv(&coords, path)?,
        None => {
            let mut text = String::new();
            for [a, b] in coords {
                text.push_str(&format!("{a},{b}\n"));
            }
            emit(&text)?;
        }
    }
    Ok(())
}

pub fn gen(args: &GenArgs) -> anyhow::Result<()> {
    if args.data.data.is_some() {
        return Err(ConfigError("gen takes --demo or --synthetic, not --data".into()).into());
    }
    let source = args.data.source(args.seed.unwrap_or(0))?;
    let pipeline::DataSource::Synthetic(spec) = source else {
        unreachable!("file sources were rejected above");
    };
    let Synthetic { data, planted } = io::gen_synthetic(&spec)?;
    match args.data.format.unwrap_or_else(|| infer_format(&args.out)) {
        Format::Csv => io::write_dataset_csv(&data, &args.out)?,
        Format::Libsvm => io::write_libsvm(&data, &args.out)?,
    }
    if let Some(path) = &args.planted {
        let beta = planted.unwrap_or_default();
        let text: String = beta.iter().map(|v| format!("{v}\n")).collect();
        std::fs::write(path, text)?;
    }
    eprintln!(
        "wrote {} rows x {} features to {}",
        data.n(),
        data.p(),
        args.out.display()
    );
    Ok(())
}
