use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::model::Dataset;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Parses `label idx:val idx:val …` lines with 1-based, strictly increasing
/// feature indices. Blank lines and `#` comments are skipped. The number of
/// features is the largest index seen.
pub fn parse_libsvm<R: BufRead>(reader: R) -> Result<Dataset> {
    let mut labels = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut p = 0;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label_tok = tokens.next().expect("nonempty line");
        let label: f64 = label_tok
            .parse()
            .map_err(|_| parse_err(lineno, format!("invalid label {label_tok:?}")))?;
        let mut row = Vec::new();
        let mut last = 0;
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(lineno, format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err(lineno, "feature indices are 1-based"));
            }
            if idx <= last {
                return Err(parse_err(
                    lineno,
                    format!("non-increasing feature index {idx} after {last}"),
                ));
            }
            let val: f64 = val
                .parse()
                .map_err(|_| parse_err(lineno, format!("invalid value {val:?}")))?;
            last = idx;
            row.push((idx - 1, val));
        }
        p = p.max(last);
        labels.push(label);
        entries.push(row);
    }
    if labels.is_empty() {
        return Err(Error::Empty("libsvm file has no observations"));
    }
    let n = labels.len();
    if p == 0 {
        return Err(Error::InvalidData("no features in libsvm file".into()));
    }
    let mut cols = vec![0.0; n * p];
    for (i, row) in entries.iter().enumerate() {
        for &(j, v) in row {
            cols[j * n + i] = v;
        }
    }
    Dataset::from_column_major(n, p, cols, labels)
}

pub fn read_libsvm(path: impl AsRef<Path>) -> Result<Dataset> {
    parse_libsvm(BufReader::new(File::open(path)?))
}

/// Writes nonzero entries only; values use the shortest round-trip form.
pub fn write_libsvm(data: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    for i in 0..data.n() {
        write!(w, "{}", data.y()[i])?;
        for j in 0..data.p() {
            let v = data.get(i, j);
            if v != 0.0 {
                write!(w, " {}:{}", j + 1, v)?;
            }
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(s: &str) -> Result<Dataset> {
        parse_libsvm(s.as_bytes())
    }

    #[test]
    fn identity_like() {
        let d = parse("1 1:1\n-1 2:1\n").unwrap();
        assert_eq!((d.n(), d.p()), (2, 2));
        assert_eq!(d.y(), &[1.0, -1.0]);
        assert_eq!(d.row(0), vec![1.0, 0.0]);
        assert_eq!(d.row(1), vec![0.0, 1.0]);
    }

    #[test]
    fn leading_zero_columns_are_named() {
        match parse("+1 3:0.5\n") {
            Err(Error::ZeroColumns { columns }) => assert_eq!(columns, vec![1, 2]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn non_increasing_index() {
        match parse("1 2:1 1:1\n") {
            Err(Error::Parse { line, message }) => {
                assert_eq!(line, 1);
                assert!(message.contains("non-increasing"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_lines_report_position() {
        let err = parse("1 1:1\n# comment\n\n2 1:x\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 4, .. }), "{err:?}");
        assert!(matches!(parse("1 1-1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("abc 1:1\n"), Err(Error::Parse { line: 1, .. })));
        assert!(matches!(parse("1 0:1\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn empty_input() {
        assert!(matches!(parse(""), Err(Error::Empty(_))));
        assert!(matches!(parse("\n# only a comment\n"), Err(Error::Empty(_))));
    }

    #[test]
    fn write_then_read() {
        let d = parse("0.5 1:1.25 3:-2\n-1.5 2:3e-7 3:1\n").unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("d.svm");
        write_libsvm(&d, &path).unwrap();
        assert_eq!(read_libsvm(&path).unwrap(), d);
    }
}
