//! Summary of one or more `run` outputs.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use lti_core::analysis::ErrorReport;

use crate::error::{CliError, Result};

/// Slack used when auditing the error decomposition and Pinsker ordering.
pub const AUDIT_SLACK: f64 = 5e-3;

pub fn read_reports(path: &Path) -> Result<Vec<ErrorReport>> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::io(path, std::io::Error::other(format!("record {}: {e}", i + 1))))
        })
        .collect()
}

pub fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    match n {
        0 => f64::NAN,
        _ if n % 2 == 1 => values[n / 2],
        _ => 0.5 * (values[n / 2 - 1] + values[n / 2]),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub n: usize,
    pub level: u32,
    pub nodes: usize,
    pub runs: usize,
    pub median_total: f64,
    pub max_total: f64,
    pub decomposition_ok: usize,
    pub pinsker_ok: usize,
    pub audited: usize,
}

/// Median total error per `(n, level)` across seeds, with audit counts.
pub fn summarize(reports: &[ErrorReport]) -> Vec<Cell> {
    let mut groups: BTreeMap<(usize, u32), Vec<&ErrorReport>> = BTreeMap::new();
    for r in reports {
        groups.entry((r.sample_size, r.level)).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|((n, level), rs)| {
            let mut totals: Vec<f64> = rs.iter().map(|r| r.total_error).collect();
            let max_total = totals.iter().cloned().fold(0.0, f64::max);
            let audited: Vec<&&ErrorReport> = rs.iter().filter(|r| r.decomposition_holds(0.0).is_some()).collect();
            Cell {
                n,
                level,
                nodes: rs[0].nodes,
                runs: rs.len(),
                median_total: median(&mut totals),
                max_total,
                decomposition_ok: audited.iter().filter(|r| r.decomposition_holds(AUDIT_SLACK) == Some(true)).count(),
                pinsker_ok: rs.iter().filter(|r| r.pinsker_holds(AUDIT_SLACK) == Some(true)).count(),
                audited: audited.len(),
            }
        })
        .collect()
}

pub fn format_summary(cells: &[Cell]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>8} {:>5} {:>7} {:>4} {:>12} {:>12} {:>9} {:>9}",
        "n", "level", "nodes", "runs", "median", "max", "decomp", "pinsker"
    );
    for c in cells {
        let _ = writeln!(
            out,
            "{:>8} {:>5} {:>7} {:>4} {:>12.4e} {:>12.4e} {:>9} {:>9}",
            c.n,
            c.level,
            c.nodes,
            c.runs,
            c.median_total,
            c.max_total,
            format!("{}/{}", c.decomposition_ok, c.audited),
            format!("{}/{}", c.pinsker_ok, c.audited),
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(n: usize, level: u32, total: f64, tv: f64) -> ErrorReport {
        ErrorReport {
            experiment: "t".into(),
            dim: 1,
            level,
            nodes: 5,
            sample_size: n,
            seed: 0,
            qoi: "x".into(),
            qoi_sup_norm: 1.0,
            reference: 0.0,
            estimate: total,
            total_error: total,
            quadrature_error: Some(0.0),
            tv: Some(tv),
            kl: Some(2.0 * tv * tv),
            architecture: vec![2, 4, 1],
            final_nll: None,
            generalization_gap: None,
            max_excursion: 0.0,
        }
    }

    #[test]
    fn medians_and_audits() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
        let rs =
            vec![report(10, 2, 0.1, 0.2), report(10, 2, 0.3, 0.2), report(10, 2, 0.2, 0.2), report(20, 2, 0.0, 0.0)];
        let cells = summarize(&rs);
        assert_eq!(cells.len(), 2);
        assert_eq!(cells[0].median_total, 0.2);
        assert_eq!(cells[0].decomposition_ok, 2);
        assert_eq!(cells[0].pinsker_ok, 3);
        assert!(format_summary(&cells).contains("2/3"));
    }
}
