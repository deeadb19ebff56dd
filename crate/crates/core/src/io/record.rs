use std::io::{self, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::ser::{Formatter, PrettyFormatter};

use crate::error::Result;
use crate::geometry::HausdorffEstimate;
use crate::pipeline::RunConfig;
use crate::selector::SelectionStatus;

/// Everything a `run` produced. Re-running with `config` reproduces every
/// block except `timings`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub config: RunConfig,
    pub cloud: CloudSummary,
    pub selection: SelectionRecord,
    pub evaluation: EvaluationRecord,
    pub timings: Timings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CloudSummary {
    pub n: usize,
    pub p: usize,
    pub nu: f64,
    pub nu_star: f64,
    pub beta_star: Vec<f64>,
    pub fit_iterations: usize,
    pub fit_kkt_residual: f64,
    pub requested: usize,
    pub sampled: usize,
    /// Direction indices that failed twice.
    pub skipped: Vec<usize>,
    /// Largest `|L(β) − ν| / ν` over the cloud.
    pub max_boundary_gap: f64,
    pub total_fits: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectedPoint {
    /// Position in the sampled cloud.
    pub cloud_index: usize,
    pub direction_index: usize,
    pub beta: Vec<f64>,
    /// Loss re-evaluated at report time.
    pub loss: f64,
    pub boundary_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionRecord {
    pub k: usize,
    pub points: Vec<SelectedPoint>,
    pub step_distance: Vec<f64>,
    pub eval_count: Vec<usize>,
    pub residual_distance: f64,
    pub status: SelectionStatus,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationRecord {
    pub requested: usize,
    pub sampled: usize,
    pub skipped: Vec<usize>,
    pub hausdorff: HausdorffEstimate,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub workers: usize,
    pub fit_seconds: f64,
    pub sample_seconds: f64,
    pub select_seconds: f64,
    pub evaluate_seconds: f64,
    pub total_seconds: f64,
}

/// Pretty JSON with every float printed to 17 significant digits.
struct Fixed17<'a>(PrettyFormatter<'a>);

impl Formatter for Fixed17<'_> {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        write!(w, "{value:.16e}")
    }

    fn write_f32<W: ?Sized + Write>(&mut self, w: &mut W, value: f32) -> io::Result<()> {
        self.write_f64(w, f64::from(value))
    }

    fn begin_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_array(w)
    }

    fn end_array<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array(w)
    }

    fn begin_array_value<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_array_value(w, first)
    }

    fn end_array_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_array_value(w)
    }

    fn begin_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object(w)
    }

    fn end_object<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object(w)
    }

    fn begin_object_key<W: ?Sized + Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.0.begin_object_key(w, first)
    }

    fn begin_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.begin_object_value(w)
    }

    fn end_object_value<W: ?Sized + Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.0.end_object_value(w)
    }
}

/// Serializes any value the way run records are written. Non-finite floats
/// become `null`.
pub fn to_json<T: Serialize>(value: &T) -> Result<String> {
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, Fixed17(PrettyFormatter::new()));
    value.serialize(&mut ser)?;
    buf.push(b'\n');
    Ok(String::from_utf8(buf).expect("serde_json emits UTF-8"))
}

pub fn write_json<T: Serialize>(value: &T, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, to_json(value)?)?;
    Ok(())
}

pub fn write_run(record: &RunRecord, path: impl AsRef<Path>) -> Result<()> {
    write_json(record, path)
}

pub fn read_json<T: DeserializeOwned>(path: impl AsRef<Path>) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

pub fn read_run(path: impl AsRef<Path>) -> Result<RunRecord> {
    read_json(path)
}
