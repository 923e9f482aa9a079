//! Matrix Market coordinate format, real symmetric only.

use std::fmt::Write as _;
use std::path::Path;

use super::SparseSymmetric;
use crate::error::{Error, Result};

const HEADER: &str = "%%MatrixMarket matrix coordinate real symmetric";

pub fn read_matrix_market(text: &str) -> Result<SparseSymmetric> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));

    let (hline, header) = lines.next().ok_or_else(|| Error::parse(1, "empty input"))?;
    let tokens: Vec<String> = header.split_whitespace().map(str::to_ascii_lowercase).collect();
    let expected = ["%%matrixmarket", "matrix", "coordinate", "real", "symmetric"];
    if tokens != expected {
        return Err(Error::parse(hline, format!("unsupported header {header:?}; expected {HEADER:?}")));
    }

    let mut body = lines.filter(|(_, l)| !l.is_empty() && !l.starts_with('%'));
    let (sline, size) = body.next().ok_or_else(|| Error::parse(hline, "missing size line"))?;
    let dims: Vec<usize> = size
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| Error::parse(sline, format!("bad integer {t:?}"))))
        .collect::<Result<_>>()?;
    let [rows, cols, nnz] = dims[..] else {
        return Err(Error::parse(sline, "size line needs rows cols nnz"));
    };
    if rows != cols {
        return Err(Error::parse(sline, format!("symmetric matrix must be square, got {rows}x{cols}")));
    }

    let mut entries = Vec::with_capacity(nnz);
    for (lineno, line) in body {
        let fields: Vec<&str> = line.split_whitespace().collect();
        let [i, j, v] = fields[..] else {
            return Err(Error::parse(lineno, "entry needs `row col value`"));
        };
        let index = |t: &str| -> Result<usize> {
            let k: usize = t.parse().map_err(|_| Error::parse(lineno, format!("bad index {t:?}")))?;
            if k == 0 || k > rows {
                return Err(Error::parse(lineno, format!("index {k} outside 1..={rows}")));
            }
            Ok(k - 1)
        };
        let (i, j) = (index(i)?, index(j)?);
        let v: f64 = v.parse().map_err(|_| Error::parse(lineno, format!("bad value {v:?}")))?;
        if entries.len() == nnz {
            return Err(Error::parse(lineno, format!("more than the declared {nnz} entries")));
        }
        entries.push((i, j, v));
    }
    if entries.len() != nnz {
        return Err(Error::parse(
            text.lines().count(),
            format!("declared {nnz} entries, found {}", entries.len()),
        ));
    }
    SparseSymmetric::from_entries(rows, entries)
}

/// Values are written with 17 significant digits so a read restores them bit for bit.
pub fn write_matrix_market(m: &SparseSymmetric) -> String {
    let tri = m.triangle();
    let mut out = String::with_capacity(32 * (tri.len() + 2));
    let _ = writeln!(out, "{HEADER}");
    let _ = writeln!(out, "{} {} {}", m.n(), m.n(), tri.len());
    for &(i, j, v) in tri {
        let _ = writeln!(out, "{} {} {:.16e}", i + 1, j + 1, v);
    }
    out
}

pub fn read_matrix_market_file(path: impl AsRef<Path>) -> Result<SparseSymmetric> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    read_matrix_market(&text)
}

pub fn write_matrix_market_file(m: &SparseSymmetric, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, write_matrix_market(m)).map_err(|e| Error::io(path, e))
}
