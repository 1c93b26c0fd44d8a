//! CSV dataset format: comma-separated, UTF-8, decimal point, one header
//! row.  Predictor columns keep their file order; the response column is
//! `z` by default and a `label` column, when present, is read back as the
//! component labels.  Values are written with the shortest representation
//! that parses back to the identical float, so a write/load round trip is
//! exact.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::numkernel::Matrix;
use crate::scalar::Real;

use super::Dataset;

pub const DEFAULT_RESPONSE_COLUMN: &str = "z";
pub const LABEL_COLUMN: &str = "label";

/// Writes a dataset; predictors become columns `x1..xp` followed by the
/// response column and, when labels are present, a `label` column.
pub fn save_csv<T: Real>(path: &Path, dataset: &Dataset<T>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut out = std::io::BufWriter::new(file);
    write_csv(&mut out, dataset).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write_csv<T: Real, W: Write>(out: &mut W, dataset: &Dataset<T>) -> std::io::Result<()> {
    let p = dataset.p();
    let mut header = String::new();
    for j in 1..=p {
        let _ = write!(header, "x{j},");
    }
    header.push_str(DEFAULT_RESPONSE_COLUMN);
    if dataset.labels().is_some() {
        header.push(',');
        header.push_str(LABEL_COLUMN);
    }
    writeln!(out, "{header}")?;

    let mut line = String::new();
    for i in 0..dataset.n() {
        line.clear();
        for &v in dataset.row(i) {
            let _ = write!(line, "{v},");
        }
        let _ = write!(line, "{}", dataset.z()[i]);
        if let Some(labels) = dataset.labels() {
            let _ = write!(line, ",{}", labels[i]);
        }
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Loads a dataset from a CSV file.
///
/// `response_column` selects the response by header name (default `z`).
/// Every other column except `label` is a predictor.  Malformed or
/// non-finite cells are rejected with their line and column location.
pub fn load_csv<T: Real>(path: &Path, response_column: Option<&str>) -> Result<Dataset<T>> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_csv(BufReader::new(file), response_column)
}

fn read_csv<T: Real, R: Read>(reader: BufReader<R>, response_column: Option<&str>) -> Result<Dataset<T>> {
    let response_name = response_column.unwrap_or(DEFAULT_RESPONSE_COLUMN);
    let mut lines = reader.lines().enumerate();

    let header = match lines.next() {
        Some((_, Ok(line))) => line,
        Some((_, Err(source))) => {
            return Err(Error::Io {
                path: "<stream>".into(),
                source,
            })
        }
        None => return Err(Error::EmptyInput("csv file")),
    };
    let names: Vec<&str> = header.split(',').map(str::trim).collect();
    let response_idx = names
        .iter()
        .position(|&n| n == response_name)
        .ok_or_else(|| Error::MissingColumn(response_name.to_string()))?;
    let label_idx = names
        .iter()
        .position(|&n| n == LABEL_COLUMN)
        .filter(|&idx| idx != response_idx);
    let predictor_idx: Vec<usize> = (0..names.len())
        .filter(|&j| j != response_idx && Some(j) != label_idx)
        .collect();
    if predictor_idx.is_empty() {
        return Err(Error::MissingColumn("at least one predictor".into()));
    }

    let mut rows: Vec<Vec<T>> = Vec::new();
    let mut z: Vec<T> = Vec::new();
    let mut labels: Vec<u32> = Vec::new();
    for (line_idx, line) in lines {
        let line = line.map_err(|source| Error::Io {
            path: "<stream>".into(),
            source,
        })?;
        let line_no = line_idx + 1;
        if line.trim().is_empty() {
            continue;
        }
        let cells: Vec<&str> = line.split(',').map(str::trim).collect();
        if cells.len() != names.len() {
            return Err(Error::Parse {
                line: line_no,
                column: cells.len().min(names.len()) + 1,
                message: format!("expected {} cells, found {}", names.len(), cells.len()),
            });
        }
        let parse_value = |j: usize| -> Result<T> {
            let cell = cells[j];
            let value: f64 = cell.parse().map_err(|_| Error::Parse {
                line: line_no,
                column: j + 1,
                message: format!("cannot parse {cell:?} as a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Parse {
                    line: line_no,
                    column: j + 1,
                    message: format!("non-finite value {cell:?}"),
                });
            }
            Ok(T::of(value))
        };
        rows.push(
            predictor_idx
                .iter()
                .map(|&j| parse_value(j))
                .collect::<Result<_>>()?,
        );
        z.push(parse_value(response_idx)?);
        if let Some(j) = label_idx {
            labels.push(cells[j].parse().map_err(|_| Error::Parse {
                line: line_no,
                column: j + 1,
                message: format!("cannot parse {:?} as an integer label", cells[j]),
            })?);
        }
    }
    if rows.is_empty() {
        return Err(Error::EmptyInput("csv data rows"));
    }
    let x = Matrix::from_rows(&rows)?;
    Dataset::new(x, z, label_idx.map(|_| labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset<f64>> {
        read_csv(BufReader::new(text.as_bytes()), None)
    }

    #[test]
    fn round_trip_is_exact() {
        let x = Matrix::from_rows(&[
            vec![0.1, -2.5e-17], // 0.1 is not exactly representable; Display round-trips it
            vec![std::f64::consts::PI, 1.0 / 3.0],
        ])
        .unwrap();
        let ds = Dataset::new(x, vec![0.7, -1.25], Some(vec![1, 0])).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut std::io::BufWriter::new(&mut buf), &ds).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let back: Dataset<f64> = read_csv(BufReader::new(text.as_bytes()), None).unwrap();
        assert_eq!(back.x().data(), ds.x().data());
        assert_eq!(back.z(), ds.z());
        assert_eq!(back.labels(), ds.labels());
    }

    #[test]
    fn header_written_as_expected() {
        let x = Matrix::from_rows(&[vec![1.0, 2.0]]).unwrap();
        let ds = Dataset::new(x, vec![3.0], None).unwrap();
        let mut buf = Vec::new();
        write_csv(&mut std::io::BufWriter::new(&mut buf), &ds).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().next().unwrap(), "x1,x2,z");
    }

    #[test]
    fn custom_response_column() {
        let ds: Dataset<f64> = read_csv(
            BufReader::new("a,outcome,b\n1.0,9.0,2.0\n".as_bytes()),
            Some("outcome"),
        )
        .unwrap();
        assert_eq!(ds.p(), 2);
        assert_eq!(ds.z(), &[9.0]);
        assert_eq!(ds.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn missing_response_column_named() {
        match parse("x1,y\n1,2\n") {
            Err(Error::MissingColumn(name)) => assert_eq!(name, "z"),
            other => panic!("expected MissingColumn, got {other:?}"),
        }
    }

    #[test]
    fn nan_cell_rejected_with_location() {
        match parse("x1,z\n1.0,2.0\nNaN,3.0\n") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!((line, column), (3, 1));
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn bad_cell_rejected_with_location() {
        match parse("x1,z\n1.0,two\n") {
            Err(Error::Parse { line, column, .. }) => {
                assert_eq!((line, column), (2, 2));
            }
            other => panic!("expected Parse error, got {other:?}"),
        }
    }

    #[test]
    fn ragged_row_rejected() {
        assert!(matches!(parse("x1,z\n1.0\n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn label_column_is_not_a_predictor() {
        let ds = parse("x1,z,label\n0.5,1.0,2\n").unwrap();
        assert_eq!(ds.p(), 1);
        assert_eq!(ds.labels(), Some(&[2u32][..]));
    }
}
