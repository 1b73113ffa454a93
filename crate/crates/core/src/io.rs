//! CSV input and output.
//!
//! Data files hold one sample per row and one variable per column, with a
//! header row of variable names. Matrix files are square with a header row of
//! labels. Lines starting with `#` are metadata comments and are skipped on
//! input. Numbers are written with 17 significant digits.

use std::io::{Read, Write};
use std::path::Path;

use crate::data::DataMatrix;
use crate::error::{Error, Result};
use crate::linalg::{tol, SymMatrix};

/// Scientific notation with 17 significant digits (round-trips every `f64`).
pub fn format_number(x: f64) -> String {
    if x.is_finite() {
        format!("{x:.16e}")
    } else {
        x.to_string()
    }
}

fn reader<R: Read>(r: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn parse_field(field: &str, row: usize, column: usize) -> Result<f64> {
    let missing = field.is_empty() || matches!(field.to_ascii_lowercase().as_str(), "na" | "nan" | "null");
    if missing {
        return Err(Error::Parse {
            row,
            column,
            message: "missing value (imputation is not supported)".into(),
        });
    }
    match field.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::Parse {
            row,
            column,
            message: format!("'{field}' is not a finite number"),
        }),
    }
}

/// Reads a header + numeric table; rows and columns in errors are 1-based
/// file line and field positions.
fn read_table<R: Read>(r: R) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut rdr = reader(r);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header.is_empty() || header.iter().all(String::is_empty) {
        return Err(Error::EmptyInput("CSV has no header row"));
    }
    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| {
            let row = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                row,
                column: 0,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        let values = record
            .iter()
            .enumerate()
            .map(|(j, f)| parse_field(f, line, j + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
    }
    Ok((header, rows))
}

/// Reads a samples-in-rows data file into a `p x n` matrix.
pub fn read_data_csv<R: Read>(r: R) -> Result<DataMatrix> {
    let (header, rows) = read_table(r)?;
    if rows.is_empty() {
        return Err(Error::EmptyInput("data file has no samples"));
    }
    DataMatrix::from_samples(&rows)?.with_labels(header)
}

pub fn read_data_file(path: impl AsRef<Path>) -> Result<DataMatrix> {
    read_data_csv(std::fs::File::open(path)?)
}

/// Reads a square, symmetric, headered matrix.
pub fn read_matrix_csv<R: Read>(r: R) -> Result<(Vec<String>, SymMatrix)> {
    let (header, rows) = read_table(r)?;
    if rows.len() != header.len() {
        return Err(Error::DimensionMismatch {
            expected: header.len(),
            actual: rows.len(),
        });
    }
    Ok((header, SymMatrix::from_rows(&rows, tol::INPUT_SYMMETRY)?))
}

pub fn read_matrix_file(path: impl AsRef<Path>) -> Result<(Vec<String>, SymMatrix)> {
    read_matrix_csv(std::fs::File::open(path)?)
}

/// Writes `# ` comment lines.
pub fn write_metadata<W: Write>(w: &mut W, metadata: &[String]) -> Result<()> {
    for line in metadata {
        for part in line.lines() {
            writeln!(w, "# {part}")?;
        }
    }
    Ok(())
}

/// Writes a labelled square matrix, preceded by metadata comments.
pub fn write_matrix_csv<W: Write>(w: &mut W, labels: &[String], m: &SymMatrix, metadata: &[String]) -> Result<()> {
    if labels.len() != m.dim() {
        return Err(Error::DimensionMismatch {
            expected: m.dim(),
            actual: labels.len(),
        });
    }
    write_metadata(w, metadata)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(labels)?;
    for i in 0..m.dim() {
        csv.write_record(m.row(i).iter().map(|v| format_number(*v)))?;
    }
    csv.flush()?;
    Ok(())
}

/// Writes a header and rows of already-formatted cells.
pub fn write_table_csv<W: Write>(w: &mut W, header: &[&str], rows: &[Vec<String>], metadata: &[String]) -> Result<()> {
    write_metadata(w, metadata)?;
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(header)?;
    for row in rows {
        csv.write_record(row)?;
    }
    csv.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_samples_in_rows() {
        let text = "# comment\na,b,c\n1,2,3\n4,5,6\n";
        let x = read_data_csv(text.as_bytes()).unwrap();
        assert_eq!((x.p(), x.n()), (3, 2));
        assert_eq!(x.variable(1), &[2.0, 5.0]);
        assert_eq!(x.labels().unwrap(), &["a", "b", "c"]);
    }

    #[test]
    fn rejects_missing_values_with_context() {
        let err = read_data_csv("a,b\n1,2\n3,NA\n".as_bytes()).unwrap_err();
        match err {
            Error::Parse { row, column, .. } => assert_eq!((row, column), (3, 2)),
            e => panic!("unexpected {e}"),
        }
        let err = read_data_csv("a,b\n1,\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, column: 2, .. }));
        let err = read_data_csv("a,b\n1,x\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { .. }));
        let err = read_data_csv("a,b\n1,2,3\n".as_bytes()).unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }));
    }

    #[test]
    fn matrix_round_trip_is_exact() {
        let m = SymMatrix::from_rows(&[vec![1.0 / 3.0, 0.1], vec![0.1, 2e-300]], 0.0).unwrap();
        let labels = vec!["x".to_string(), "y".to_string()];
        let mut buf = Vec::new();
        write_matrix_csv(&mut buf, &labels, &m, &["seed=1".into()]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("# seed=1\nx,y\n"));
        let (l, back) = read_matrix_csv(buf.as_slice()).unwrap();
        assert_eq!(l, labels);
        assert_eq!(back, m);
    }

    #[test]
    fn matrix_must_be_square_and_symmetric() {
        assert!(read_matrix_csv("a,b\n1,0\n".as_bytes()).is_err());
        assert!(read_matrix_csv("a,b\n1,0.5\n0.4,1\n".as_bytes()).is_err());
    }

    #[test]
    fn seventeen_significant_digits() {
        assert_eq!(format_number(0.1), "1.0000000000000001e-1");
        assert_eq!(format_number(-2.0), "-2.0000000000000000e0");
    }
}
