//! Columnar text format for quadrature rules.
//!
//! ```text
//! dim level count
//! x_1 ... x_d w
//! ```
//!
//! One row per node, every value with 17 significant digits.

use std::fmt::Write as _;
use std::io::{BufRead, BufReader, Read, Write};

use lti_core::quadrature::SparseGrid;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum GridFileError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
}

/// Nodes (row-major) and weights read back from a grid file.
#[derive(Debug, Clone, PartialEq)]
pub struct GridData {
    pub dim: usize,
    pub level: u32,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GridData {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }
}

impl From<&SparseGrid> for GridData {
    fn from(g: &SparseGrid) -> Self {
        Self { dim: g.dim, level: g.level, nodes: g.nodes.clone(), weights: g.weights.clone() }
    }
}

pub fn format(data: &GridData) -> String {
    let mut out = String::with_capacity(32 * (data.dim + 1) * (data.len() + 1));
    let _ = writeln!(out, "{} {} {}", data.dim, data.level, data.len());
    for i in 0..data.len() {
        for x in data.node(i) {
            let _ = write!(out, "{x:.16e} ");
        }
        let _ = writeln!(out, "{:.16e}", data.weights[i]);
    }
    out
}

pub fn write<W: Write>(mut w: W, data: &GridData) -> std::io::Result<()> {
    w.write_all(format(data).as_bytes())
}

pub fn read<R: Read>(r: R) -> Result<GridData, GridFileError> {
    let mut lines = BufReader::new(r).lines();
    let bad = |line: usize, message: String| GridFileError::Parse { line, message };
    let header = lines.next().ok_or_else(|| bad(1, "empty file".into()))??;
    let fields: Vec<&str> = header.split_whitespace().collect();
    if fields.len() != 3 {
        return Err(bad(1, format!("header needs `dim level count`, got {header:?}")));
    }
    let parse_u = |s: &str, what: &str| s.parse::<usize>().map_err(|e| bad(1, format!("{what}: {e}")));
    let dim = parse_u(fields[0], "dim")?;
    let level = parse_u(fields[1], "level")? as u32;
    let count = parse_u(fields[2], "count")?;
    if dim == 0 {
        return Err(bad(1, "dim must be >= 1".into()));
    }
    let mut nodes = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = i + 2;
        let values = line
            .split_whitespace()
            .map(|s| s.parse::<f64>().map_err(|e| bad(lineno, format!("{s:?}: {e}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if values.len() != dim + 1 {
            return Err(bad(lineno, format!("expected {} columns, found {}", dim + 1, values.len())));
        }
        nodes.extend_from_slice(&values[..dim]);
        weights.push(values[dim]);
    }
    if weights.len() != count {
        return Err(bad(1, format!("header announces {count} nodes, file has {}", weights.len())));
    }
    Ok(GridData { dim, level, nodes, weights })
}

#[cfg(test)]
mod tests {
    use super::*;
    use lti_core::quadrature::{smolyak, Interval, RuleFamily};

    #[test]
    fn round_trip_is_exact() {
        let g = smolyak(2, 3, &vec![RuleFamily::uniform(Interval::UNIT); 2]).unwrap();
        let data = GridData::from(&g);
        let text = format(&data);
        assert!(text.starts_with("2 3 29\n"));
        let back = read(text.as_bytes()).unwrap();
        assert_eq!(back, data);
    }

    #[test]
    fn rejects_short_rows() {
        let err = read("1 0 1\n0.5\n".as_bytes()).unwrap_err();
        assert!(matches!(err, GridFileError::Parse { line: 2, .. }));
        assert!(read("1 0 2\n0.5 1.0\n".as_bytes()).is_err());
    }
}
