//! Dataset and matrix CSV files.
//!
//! A dataset has a header `x1,...,xd` optionally followed by `y`, then one
//! row per observation. Values are written with 17 significant digits so a
//! write/read cycle reproduces every bit.

use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::sample::Sample;

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

/// Reads a dataset from any reader; line numbers in errors are 1-based and
/// count the header.
pub fn read_dataset<R: Read>(input: R) -> Result<Sample> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);
    let mut records = reader.records();
    let header = match records.next() {
        Some(h) => h.map_err(|e| parse_err(1, e.to_string()))?,
        None => return Err(parse_err(1, "empty file, expected a header x1,...,xd[,y]")),
    };
    let names: Vec<&str> = header.iter().collect();
    let has_y = names.last() == Some(&"y");
    let d = names.len() - usize::from(has_y);
    if d == 0 {
        return Err(parse_err(1, "header names no x columns"));
    }
    for (k, name) in names[..d].iter().enumerate() {
        if *name != format!("x{}", k + 1) {
            if name.parse::<f64>().is_ok() {
                return Err(parse_err(1, "missing header, expected x1,...,xd[,y]"));
            }
            return Err(parse_err(1, format!("column {} is '{name}', expected 'x{}'", k + 1, k + 1)));
        }
    }
    let width = names.len();
    let mut points = Vec::new();
    let mut y = Vec::new();
    for (idx, rec) in records.enumerate() {
        let line = idx + 2;
        let rec = rec.map_err(|e| parse_err(line, e.to_string()))?;
        if rec.len() != width {
            return Err(parse_err(line, format!("expected {width} fields, found {}", rec.len())));
        }
        for (k, cell) in rec.iter().enumerate() {
            let v: f64 = cell
                .parse()
                .map_err(|_| parse_err(line, format!("'{cell}' is not a number")))?;
            if !v.is_finite() {
                return Err(parse_err(line, format!("non-finite value '{cell}'")));
            }
            if has_y && k == d {
                y.push(v);
            } else {
                points.push(v);
            }
        }
    }
    if points.is_empty() {
        return Err(parse_err(2, "no data rows"));
    }
    Sample::new(points, d, has_y.then_some(y))
}

pub fn parse_dataset(path: &Path) -> Result<Sample> {
    read_dataset(std::fs::File::open(path)?)
}

fn fmt(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_dataset<W: Write>(out: W, sample: &Sample) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header: Vec<String> = (1..=sample.d()).map(|k| format!("x{k}")).collect();
    if sample.response().is_some() {
        header.push("y".into());
    }
    w.write_record(&header)?;
    for (i, row) in sample.rows().enumerate() {
        let mut rec: Vec<String> = row.iter().map(|&v| fmt(v)).collect();
        if let Some(y) = sample.response() {
            rec.push(fmt(y[i]));
        }
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn save_dataset(path: &Path, sample: &Sample) -> Result<()> {
    write_dataset(std::fs::File::create(path)?, sample)
}

/// Matrix with a header `{prefix}1,...`.
pub fn write_matrix<W: Write>(out: W, m: &DMatrix<f64>, prefix: &str) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=m.ncols()).map(|k| format!("{prefix}{k}")))?;
    for r in 0..m.nrows() {
        w.write_record((0..m.ncols()).map(|c| fmt(m[(r, c)])))?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_matrix<R: Read>(input: R) -> Result<DMatrix<f64>> {
    let mut reader = csv::Reader::from_reader(input);
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (idx, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(idx + 2, e.to_string()))?;
        let row = rec
            .iter()
            .map(|c| c.trim().parse::<f64>().map_err(|_| parse_err(idx + 2, format!("'{c}' is not a number"))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    let ncols = rows.first().map_or(0, Vec::len);
    Ok(DMatrix::from_fn(rows.len(), ncols, |r, c| rows[r][c]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_row_with_response() {
        let s = read_dataset("x1,y\n0.5,1.0\n".as_bytes()).unwrap();
        assert_eq!((s.n(), s.d()), (1, 1));
        assert_eq!(s.response(), Some(&[1.0][..]));
    }

    #[test]
    fn design_only() {
        let s = read_dataset("x1,x2\n0.5,1.0\n2,3\n".as_bytes()).unwrap();
        assert_eq!((s.n(), s.d()), (2, 2));
        assert!(s.response().is_none());
    }

    #[test]
    fn errors_name_the_line() {
        let err = read_dataset("x1,y\n0.5,1\n0.2,NaN\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_dataset("x1,y\n0.5,1\n0.2\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = read_dataset("x1,y\n0.5,abc\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }), "{err}");
        let err = read_dataset("0.5,1.0\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }), "{err}");
        assert!(read_dataset("".as_bytes()).is_err());
        assert!(read_dataset("x1,y\n".as_bytes()).is_err());
    }

    #[test]
    fn matrix_roundtrip() {
        let m = DMatrix::from_row_slice(2, 2, &[0.1, 1.0 / 3.0, -2.5e-17, 4.0]);
        let mut buf = Vec::new();
        write_matrix(&mut buf, &m, "p").unwrap();
        assert_eq!(read_matrix(buf.as_slice()).unwrap(), m);
    }
}
