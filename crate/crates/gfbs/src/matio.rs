//! Plain-text matrix format: first line `n m`, then `n` rows of `m`
//! whitespace-separated decimals. Values are written with 17 significant
//! digits so a write/read round trip is exact for f64.

use nalgebra::{DMatrix, DVector};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MatIoError {
    #[error("line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("empty input")]
    Empty,
}

/// Render a matrix in the text format.
pub fn write_matrix(m: &DMatrix<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{} {}", m.nrows(), m.ncols());
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:.16e}", m[(i, j)])).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

/// Column vectors are written as n×1 matrices.
pub fn write_vector(v: &DVector<f64>) -> String {
    write_matrix(&DMatrix::from_column_slice(v.len(), 1, v.as_slice()))
}

/// Parse the text format back into a matrix.
pub fn read_matrix(text: &str) -> Result<DMatrix<f64>, MatIoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty());
    let (hline, header) = lines.next().ok_or(MatIoError::Empty)?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    if dims.len() != 2 {
        return Err(MatIoError::Parse {
            line: hline + 1,
            msg: format!("expected header `n m`, got `{header}`"),
        });
    }
    let parse_dim = |s: &str| {
        s.parse::<usize>().map_err(|_| MatIoError::Parse {
            line: hline + 1,
            msg: format!("bad dimension `{s}`"),
        })
    };
    let (n, m) = (parse_dim(dims[0])?, parse_dim(dims[1])?);
    let mut data = Vec::with_capacity(n * m);
    let mut rows_read = 0;
    for (lineno, line) in lines.take(n) {
        let vals: Result<Vec<f64>, _> = line
            .split_whitespace()
            .map(|tok| {
                tok.parse::<f64>().map_err(|_| MatIoError::Parse {
                    line: lineno + 1,
                    msg: format!("bad number `{tok}`"),
                })
            })
            .collect();
        let vals = vals?;
        if vals.len() != m {
            return Err(MatIoError::Parse {
                line: lineno + 1,
                msg: format!("expected {m} entries, got {}", vals.len()),
            });
        }
        data.extend(vals);
        rows_read += 1;
    }
    if rows_read != n {
        return Err(MatIoError::Parse {
            line: 0,
            msg: format!("expected {n} rows, got {rows_read}"),
        });
    }
    Ok(DMatrix::from_row_slice(n, m, &data))
}

pub fn read_vector(text: &str) -> Result<DVector<f64>, MatIoError> {
    let m = read_matrix(text)?;
    Ok(DVector::from_column_slice(m.as_slice()))
}
