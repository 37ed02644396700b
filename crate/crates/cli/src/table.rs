//! CSV tables with a provenance comment block.
//!
//! Layout: `#` comment lines, one header row, then data rows. Reals are
//! written with 17 significant digits so that a parse/emit cycle is lossless.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Cell {
    Int(i64),
    Real(f64),
}

impl Cell {
    pub fn as_f64(self) -> f64 {
        match self {
            Cell::Int(i) => i as f64,
            Cell::Real(x) => x,
        }
    }

    fn render(self, out: &mut String) {
        match self {
            Cell::Int(i) => write!(out, "{i}").unwrap(),
            Cell::Real(x) => write!(out, "{x:.16e}").unwrap(),
        }
    }

    fn parse(token: &str) -> Option<Cell> {
        let t = token.trim();
        if let Ok(i) = t.parse::<i64>() {
            return Some(Cell::Int(i));
        }
        t.parse::<f64>().ok().map(Cell::Real)
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}

impl From<usize> for Cell {
    fn from(i: usize) -> Self {
        Cell::Int(i as i64)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub comments: Vec<String>,
    pub header: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { comments: vec![], header: header.iter().map(|s| s.to_string()).collect(), rows: vec![] }
    }

    pub fn comment(&mut self, line: impl Into<String>) -> &mut Self {
        self.comments.push(line.into());
        self
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width must match the header");
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let k = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[k].as_f64()).collect())
    }

    /// Sorts rows by the leading columns, compared numerically.
    pub fn sort_rows(&mut self) {
        self.rows.sort_by(|a, b| {
            a.iter().zip(b).map(|(x, y)| x.as_f64().total_cmp(&y.as_f64())).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
        });
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for c in &self.comments {
            writeln!(out, "# {c}").unwrap();
        }
        writeln!(out, "{}", self.header.join(",")).unwrap();
        for row in &self.rows {
            for (k, cell) in row.iter().enumerate() {
                if k > 0 {
                    out.push(',');
                }
                cell.render(&mut out);
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let mut comments = vec![];
        let mut header: Option<Vec<String>> = None;
        let mut rows = vec![];
        for (k, line) in text.lines().enumerate() {
            let line_no = k + 1;
            if let Some(c) = line.strip_prefix('#') {
                if header.is_some() {
                    return Err(CliError::Csv { line: line_no, message: "comment after the header".into() });
                }
                comments.push(c.strip_prefix(' ').unwrap_or(c).to_string());
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            match &header {
                None => header = Some(line.split(',').map(|s| s.trim().to_string()).collect()),
                Some(h) => {
                    let row: Option<Vec<Cell>> = line.split(',').map(Cell::parse).collect();
                    let row = row.ok_or_else(|| CliError::Csv { line: line_no, message: format!("non-numeric cell in `{line}`") })?;
                    if row.len() != h.len() {
                        return Err(CliError::Csv { line: line_no, message: format!("{} cells, header has {}", row.len(), h.len()) });
                    }
                    rows.push(row);
                }
            }
        }
        let header = header.ok_or(CliError::Csv { line: 0, message: "missing header row".into() })?;
        Ok(Self { comments, header, rows })
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.render()).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Io { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_idempotent() {
        let mut t = Table::new(&["n", "x"]);
        t.comment("pseudotherm v0.1.0 config=abc seed=0");
        for (n, x) in [(0usize, 0.1), (1, -1.0 / 3.0), (2, 1e-300), (3, f64::MAX)] {
            t.push(vec![n.into(), x.into()]);
        }
        let text = t.render();
        let back = Table::parse(&text).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.render(), text);
    }

    #[test]
    fn malformed_rows_report_the_line() {
        let err = Table::parse("a,b\n1,2\n3\n").unwrap_err();
        assert!(matches!(err, CliError::Csv { line: 3, .. }));
        assert!(matches!(Table::parse("# only\n"), Err(CliError::Csv { .. })));
    }

    #[test]
    fn rows_sort_numerically() {
        let mut t = Table::new(&["k", "v"]);
        t.push(vec![Cell::Real(10.0), Cell::Int(0)]);
        t.push(vec![Cell::Real(2.0), Cell::Int(1)]);
        t.push(vec![Cell::Real(2.0), Cell::Int(0)]);
        t.sort_rows();
        assert_eq!(t.column("k").unwrap(), vec![2.0, 2.0, 10.0]);
        assert_eq!(t.column("v").unwrap(), vec![0.0, 1.0, 0.0]);
    }
}
