use std::path::Path;
use std::process::{Command, Output};

use hullscope::io;

fn hullscope(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hullscope"))
        .args(args)
        .env_remove("HULLSCOPE_SEED")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = hullscope(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn code(args: &[&str]) -> i32 {
    hullscope(args).status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn run_writes_record_and_point_files() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    ok(&[
        "run",
        "--demo",
        "example3d",
        "--M",
        "40",
        "--K",
        "5",
        "--Mprime",
        "100",
        "--out",
        s(&out),
    ]);
    let rec = io::read_run(out.join("run.json")).unwrap();
    assert_eq!(rec.config.k, 5);
    assert_eq!(rec.selection.points.len(), 5);
    assert_eq!(rec.cloud.p, 3);
    let cloud = io::read_points_csv(out.join("cloud.csv")).unwrap();
    let selected = io::read_points_csv(out.join("selected.csv")).unwrap();
    assert_eq!(cloud.len(), rec.cloud.sampled);
    assert_eq!(
        io::read_points_csv(out.join("eval_cloud.csv")).unwrap().len(),
        rec.evaluation.sampled
    );
    for (pt, row) in rec.selection.points.iter().zip(&selected) {
        assert_eq!(&pt.beta, row);
        assert_eq!(&cloud[pt.cloud_index], row);
    }
}

#[test]
fn run_without_out_prints_json() {
    let out = ok(&["run", "--demo", "example2d", "--M", "10", "--K", "2", "--Mprime", "20"]);
    let rec: io::RunRecord = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec.selection.k, 2);
}

#[test]
fn generated_file_fits_like_the_builtin_problem() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("d.csv");
    let svm = dir.path().join("d.svm");
    ok(&[
        "gen",
        "--synthetic",
        "correlated",
        "--p",
        "30",
        "--seed",
        "4",
        "--out",
        s(&csv),
    ]);
    ok(&[
        "gen",
        "--synthetic",
        "correlated",
        "--p",
        "30",
        "--seed",
        "4",
        "--out",
        s(&svm),
    ]);
    let parse = |o: Output| -> serde_json::Value { serde_json::from_slice(&o.stdout).unwrap() };
    let common = ["--lambda", "0.1", "--scale", "mean"];
    let a = parse(ok(&[&["fit", "--data", s(&csv)][..], &common].concat()));
    let b = parse(ok(&[&["fit", "--data", s(&svm)][..], &common].concat()));
    let c = parse(ok(&["fit", "--synthetic", "correlated", "--p", "30", "--seed", "4"]));
    let nu = |v: &serde_json::Value| v["nu_star"].as_f64().unwrap();
    assert!((nu(&a) - nu(&c)).abs() <= 1e-10 * nu(&c));
    assert!((nu(&b) - nu(&c)).abs() <= 1e-10 * nu(&c));
    assert_eq!(a["p"], 30);
    assert_eq!(a["n"], 15);
}

#[test]
fn label_column_is_one_based() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("d.csv");
    std::fs::write(&path, "1,1,1\n1,1,1.025\n").unwrap();
    let out = ok(&[
        "fit",
        "--data",
        s(&path),
        "--label-column",
        "1",
        "--scale",
        "sum",
        "--lambda",
        "1",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["p"], 2);
    assert_eq!(code(&["fit", "--data", s(&path), "--label-column", "0"]), 2);
    assert_eq!(code(&["fit", "--data", s(&path), "--label-column", "9"]), 2);
}

#[test]
fn project_gives_two_columns() {
    let dir = tempfile::tempdir().unwrap();
    let pts = dir.path().join("p.csv");
    let out = dir.path().join("xy.csv");
    std::fs::write(&pts, "1,0,0\n0,1,0\n0,0,1\n1,1,1\n").unwrap();
    ok(&["project", "--points", s(&pts), "--out", s(&out)]);
    let xy = io::read_points_csv(&out).unwrap();
    assert_eq!(xy.len(), 4);
    assert!(xy.iter().all(|r| r.len() == 2));
    let stdout = ok(&["project", "--points", s(&pts), "--reference", s(&pts)]).stdout;
    assert_eq!(String::from_utf8(stdout).unwrap().lines().count(), 4);
}

#[test]
fn curve_covers_the_grid() {
    let out = ok(&[
        "curve",
        "--demo",
        "example3d",
        "--K-grid",
        "1..3",
        "--M-grid",
        "20,40",
        "--Mprime",
        "100",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["points"].as_array().unwrap().len(), 6);
    assert_eq!(v["runs"].as_array().unwrap().len(), 2);
}

#[test]
fn config_file_and_flag_precedence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "demo = \"example2d\"\nM = 12\nK = 3\nMprime = 30\nseed = 5\n").unwrap();
    let out = ok(&["run", "--config", s(&cfg), "--K", "2"]);
    let rec: io::RunRecord = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!((rec.config.m, rec.config.k, rec.config.seed), (12, 2, 5));
    std::fs::write(&cfg, "demo = \"example2d\"\nunknown = 1\n").unwrap();
    assert_eq!(code(&["run", "--config", s(&cfg)]), 2);
}

#[test]
fn seed_from_environment() {
    let out = Command::new(env!("CARGO_BIN_EXE_hullscope"))
        .args(["run", "--demo", "example2d", "--M", "5", "--K", "1", "--Mprime", "5"])
        .env("HULLSCOPE_SEED", "17")
        .output()
        .unwrap();
    let rec: io::RunRecord = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec.config.seed, 17);
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "1,2,3\n4,oops,6\n").unwrap();
    // usage and configuration errors
    assert_eq!(code(&["run", "--bogus"]), 2);
    assert_eq!(code(&["run"]), 2);
    assert_eq!(code(&["run", "--demo", "example2d", "--nu", "0.1"]), 2);
    assert_eq!(code(&["run", "--demo", "example2d", "--lambda", "-1"]), 2);
    assert_eq!(code(&["run", "--demo", "example2d", "--workers", "0"]), 2);
    assert_eq!(code(&["curve", "--demo", "example2d", "--K-grid", "3..1"]), 2);
    // data errors
    assert_eq!(code(&["run", "--data", s(&dir.path().join("missing.csv"))]), 3);
    assert_eq!(code(&["run", "--data", s(&bad)]), 3);
    // solver gave up
    assert_eq!(
        code(&[
            "fit",
            "--synthetic",
            "correlated",
            "--p",
            "30",
            "--solver-tol",
            "1e-300"
        ]),
        4
    );
}
