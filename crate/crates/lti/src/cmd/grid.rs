use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use lti_core::analysis::source_grid;
use lti_core::quadrature::node_count_asymptotic;

use crate::config::ExperimentSpec;
use crate::error::{CliError, Result};
use crate::gridfile::{self, GridData};

#[derive(Debug, Clone, PartialEq)]
pub struct GridRow {
    pub level: u32,
    pub nodes: usize,
    pub asymptotic: f64,
    pub path: PathBuf,
}

pub fn grid_file_name(dim: usize, level: u32) -> String {
    format!("grid_d{dim}_l{level}.txt")
}

/// Writes one grid file per level into `dir` and returns the node counts.
pub fn cmd_grid(spec: &ExperimentSpec, levels: &[u32], dir: &Path) -> Result<Vec<GridRow>> {
    let resolved = spec.resolve()?;
    if levels.is_empty() {
        return Err(CliError::config("grid.levels", "needs at least one level"));
    }
    std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut rows = Vec::with_capacity(levels.len());
    for &level in levels {
        let grid = source_grid(&resolved.source, level).map_err(|e| CliError::stage("grid", e))?;
        let path = dir.join(grid_file_name(spec.dim, level));
        std::fs::write(&path, gridfile::format(&GridData::from(&grid))).map_err(|e| CliError::io(&path, e))?;
        rows.push(GridRow { level, nodes: grid.len(), asymptotic: node_count_asymptotic(spec.dim, level), path });
    }
    Ok(rows)
}

pub fn format_table(dim: usize, rows: &[GridRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{:>5} {:>10} {:>14} {:>8}  (d = {dim})", "level", "nodes", "2^l d^l / l!", "ratio");
    for r in rows {
        let _ = writeln!(
            out,
            "{:>5} {:>10} {:>14.2} {:>8.3}",
            r.level,
            r.nodes,
            r.asymptotic,
            r.nodes as f64 / r.asymptotic
        );
    }
    out
}
