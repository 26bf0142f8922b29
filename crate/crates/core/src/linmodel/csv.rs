//! Headerless CSV of decimal floats, one observation per row.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};
use crate::Real;

pub fn parse_matrix<T: Real>(text: &str) -> Result<DMatrix<T>> {
    let mut rows: Vec<Vec<T>> = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|field| {
                let v: f64 = field.trim().parse().map_err(|e| Error::Parse {
                    line: idx + 1,
                    msg: format!("{field:?}: {e}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: idx + 1,
                        msg: format!("nonfinite value {field:?}"),
                    });
                }
                Ok(T::lit(v))
            })
            .collect::<Result<Vec<T>>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(Error::Parse {
                    line: idx + 1,
                    msg: format!("expected {} fields, found {}", first.len(), row.len()),
                });
            }
        }
        rows.push(row);
    }
    let ncols = rows.first().map(Vec::len).ok_or_else(|| invalid("empty CSV"))?;
    Ok(DMatrix::from_fn(rows.len(), ncols, |i, j| rows[i][j]))
}

/// A vector is a single-column file.
pub fn parse_vector<T: Real>(text: &str) -> Result<DVector<T>> {
    let m = parse_matrix::<T>(text)?;
    if m.ncols() != 1 {
        return Err(invalid(format!("expected a single column, found {}", m.ncols())));
    }
    Ok(m.column(0).into_owned())
}

/// 17 significant digits, enough to round-trip `f64`.
pub fn format_matrix<T: Real>(m: &DMatrix<T>) -> String {
    let mut out = String::new();
    for row in m.row_iter() {
        for (j, v) in row.iter().enumerate() {
            if j > 0 {
                out.push(',');
            }
            let _ = write!(out, "{:.16e}", v.as_f64());
        }
        out.push('\n');
    }
    out
}

pub fn read_matrix<T: Real>(path: impl AsRef<Path>) -> Result<DMatrix<T>> {
    parse_matrix(&fs::read_to_string(path)?)
}

pub fn read_vector<T: Real>(path: impl AsRef<Path>) -> Result<DVector<T>> {
    parse_vector(&fs::read_to_string(path)?)
}

pub fn write_matrix<T: Real>(path: impl AsRef<Path>, m: &DMatrix<T>) -> Result<()> {
    Ok(fs::write(path, format_matrix(m))?)
}

pub fn write_vector<T: Real>(path: impl AsRef<Path>, v: &DVector<T>) -> Result<()> {
    let m = DMatrix::from_column_slice(v.len(), 1, v.as_slice());
    write_matrix(path, &m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trip_is_exact(values in proptest::collection::vec(-1e300f64..1e300, 1..40), cols in 1usize..4) {
            let rows = values.len() / cols;
            prop_assume!(rows > 0);
            let m = DMatrix::from_fn(rows, cols, |i, j| values[i * cols + j]);
            let back: DMatrix<f64> = parse_matrix(&format_matrix(&m)).unwrap();
            prop_assert_eq!(back, m);
        }
    }

    #[test]
    fn ragged_rows_rejected() {
        let err = parse_matrix::<f64>("1,2\n3\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 2, .. }));
    }

    #[test]
    fn vector_needs_one_column() {
        assert!(parse_vector::<f64>("1,2\n").is_err());
        let v: DVector<f64> = parse_vector("1.5\n\n-2\n").unwrap();
        assert_eq!(v.as_slice(), &[1.5, -2.0]);
    }

    #[test]
    fn garbage_rejected() {
        assert!(parse_matrix::<f64>("1,abc\n").is_err());
        assert!(parse_matrix::<f64>("").is_err());
        assert!(parse_matrix::<f64>("nan\n").is_err());
    }
}
