use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;

fn reader_builder() -> csv::ReaderBuilder {
    let mut b = csv::ReaderBuilder::new();
    b.has_headers(false).flexible(true).trim(csv::Trim::All);
    b
}

fn parse_rows<R: std::io::Read>(reader: R) -> Result<Vec<Vec<f64>>> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (k, rec) in reader_builder().from_reader(reader).records().enumerate() {
        let rec = rec?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line()) as usize;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        let row: Vec<f64> = rec
            .iter()
            .map(|cell| {
                cell.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("non-numeric cell {cell:?}"),
                })
            })
            .collect::<Result<_>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Headerless dense CSV of observations. `label_column` is 0-based; `None`
/// takes the last column.
pub fn parse_csv<R: std::io::Read>(reader: R, label_column: Option<usize>) -> Result<Dataset> {
    let rows = parse_rows(reader)?;
    let width = rows.first().ok_or(Error::Empty("csv file has no rows"))?.len();
    if width < 2 {
        return Err(Error::InvalidData(
            "csv rows need at least one feature and a label".into(),
        ));
    }
    let label = label_column.unwrap_or(width - 1);
    if label >= width {
        return Err(Error::InvalidConfig(format!(
            "label column {label} is out of range for {width} columns"
        )));
    }
    let mut y = Vec::with_capacity(rows.len());
    let features: Vec<Vec<f64>> = rows
        .into_iter()
        .map(|mut r| {
            y.push(r.remove(label));
            r
        })
        .collect();
    Dataset::from_rows(&features, y)
}

pub fn read_csv(path: impl AsRef<Path>, label_column: Option<usize>) -> Result<Dataset> {
    parse_csv(std::fs::File::open(path)?, label_column)
}

/// Reads a headerless CSV of points, one per row.
pub fn read_points_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    parse_rows(std::fs::File::open(path)?)
}

fn write_rows<'a>(path: &Path, rows: impl Iterator<Item = Vec<f64>> + 'a) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)?;
    for r in rows {
        w.write_record(r.iter().map(|v| v.to_string()))?;
    }
    w.flush()?;
    Ok(())
}

/// One row per observation, features first and the label last.
pub fn write_dataset_csv(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    write_rows(
        path.as_ref(),
        (0..data.n()).map(|i| {
            let mut r = data.row(i);
            r.push(data.y()[i]);
            r
        }),
    )
}

/// One point per row, values in shortest round-trip form.
pub fn write_points_csv<P: AsRef<[f64]>>(points: &[P], path: impl AsRef<Path>) -> Result<()> {
    write_rows(path.as_ref(), points.iter().map(|p| p.as_ref().to_vec()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_last_by_default() {
        let d = parse_csv("1.0,2.0,3.0\n".as_bytes(), None).unwrap();
        assert_eq!(d.row(0), vec![1.0, 2.0]);
        assert_eq!(d.y(), &[3.0]);
        let d = parse_csv("1.0,2.0,3.0\n".as_bytes(), Some(0)).unwrap();
        assert_eq!(d.row(0), vec![2.0, 3.0]);
        assert_eq!(d.y(), &[1.0]);
    }

    #[test]
    fn ragged_rows_report_row() {
        match parse_csv("1,2,3\n4,5,6\n7,8\n".as_bytes(), None) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_numeric_cell() {
        assert!(matches!(
            parse_csv("1,2,3\n4,x,6\n".as_bytes(), None),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    #[test]
    fn empty_and_bad_label() {
        assert!(matches!(parse_csv("".as_bytes(), None), Err(Error::Empty(_))));
        assert!(parse_csv("1,2\n".as_bytes(), Some(5)).is_err());
    }

    #[test]
    fn dataset_round_trip() {
        let mut s = crate::rng::stream(1, 0);
        let rows: Vec<Vec<f64>> = (0..7)
            .map(|_| (0..4).map(|_| crate::rng::standard_normal(&mut s) * 1e3).collect())
            .collect();
        let y: Vec<f64> = (0..7).map(|_| crate::rng::standard_normal(&mut s)).collect();
        let d = Dataset::from_rows(&rows, y).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.csv");
        write_dataset_csv(&d, &path).unwrap();
        let back = read_csv(&path, None).unwrap();
        for i in 0..d.n() {
            for j in 0..d.p() {
                let (a, b) = (d.get(i, j), back.get(i, j));
                assert!((a - b).abs() <= 1e-15 * a.abs());
            }
        }
        assert_eq!(back.y(), d.y());
    }

    #[test]
    fn points_file_layout() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("p.csv");
        write_points_csv(&[[0.5, -1.0], [2.0, 0.25]], &path).unwrap();
        assert_eq!(std::fs::read_to_string(&path).unwrap(), "0.5,-1\n2,0.25\n");
        assert_eq!(read_points_csv(&path).unwrap(), vec![vec![0.5, -1.0], vec![2.0, 0.25]]);
    }
}
