//! Plain-text matrix files: first line `dim`, then `dim` rows of
//! whitespace-separated `re,im` pairs.

use std::fmt::Write as _;

use super::{ComplexMatrix, C64};
use crate::error::{Error, Result};

pub fn parse_matrix(text: &str) -> Result<ComplexMatrix> {
    let mut lines = text.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#'));
    let dim: usize = lines
        .next()
        .ok_or_else(|| Error::InvalidMatrix("empty matrix file".into()))?
        .parse()
        .map_err(|_| Error::InvalidMatrix("first line must be the dimension".into()))?;
    let mut rows = Vec::with_capacity(dim);
    for (r, line) in lines.by_ref().take(dim).enumerate() {
        let row = line
            .split_whitespace()
            .map(|tok| parse_entry(tok).ok_or_else(|| Error::InvalidMatrix(format!("row {}: bad entry `{tok}`", r + 1))))
            .collect::<Result<Vec<_>>>()?;
        if row.len() != dim {
            return Err(Error::InvalidMatrix(format!("row {} has {} entries, expected {dim}", r + 1, row.len())));
        }
        rows.push(row);
    }
    if rows.len() != dim {
        return Err(Error::InvalidMatrix(format!("expected {dim} rows, found {}", rows.len())));
    }
    if lines.next().is_some() {
        return Err(Error::InvalidMatrix("trailing data after matrix".into()));
    }
    ComplexMatrix::from_rows(&rows)
}

fn parse_entry(tok: &str) -> Option<C64> {
    let (re, im) = tok.split_once(',')?;
    Some(C64::new(re.parse().ok()?, im.parse().ok()?))
}

pub fn format_matrix(m: &ComplexMatrix) -> String {
    let mut out = format!("{}\n", m.dim());
    for row in m.rows() {
        let cells: Vec<String> = row.iter().map(|z| format!("{:.16e},{:.16e}", z.re, z.im)).collect();
        let _ = writeln!(out, "{}", cells.join(" "));
    }
    out
}
