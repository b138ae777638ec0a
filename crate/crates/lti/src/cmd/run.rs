use std::path::Path;

use lti_core::analysis::{
    divergences, flow_integral_oracle, integrate_via_flow_traced, reference_expectation, source_grid, total_error,
    Divergences, ErrorReport, Probe,
};
use lti_core::flow::FlowMap;
use lti_core::network::MlpVectorField;
use lti_core::quadrature::SparseGrid;
use lti_core::training::{train_erm_observed, EpochRecord, TrainConfig};
use lti_core::transport::sample_density;
use lti_core::Executor;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checkpoint;
use crate::config::ExperimentSpec;
use crate::error::{CliError, Result};
use crate::telemetry::Telemetry;

/// One line of the convergence table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: usize,
    pub level: u32,
    pub m_nodes: usize,
    pub total: f64,
    pub quad: Option<f64>,
    pub tv: Option<f64>,
    pub kl: Option<f64>,
    pub seed: u64,
}

impl From<&ErrorReport> for TableRow {
    fn from(r: &ErrorReport) -> Self {
        Self {
            n: r.sample_size,
            level: r.level,
            m_nodes: r.nodes,
            total: r.total_error,
            quad: r.quadrature_error,
            tv: r.tv,
            kl: r.kl,
            seed: r.seed,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainedModel {
    pub sample_size: usize,
    pub field: MlpVectorField,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub reference: f64,
    pub reports: Vec<ErrorReport>,
    pub models: Vec<TrainedModel>,
}

impl RunOutcome {
    pub fn rows(&self) -> Vec<TableRow> {
        self.reports.iter().map(TableRow::from).collect()
    }
}

/// Target samples for size `n`: uniform points pushed through the exact
/// triangular map, from a ChaCha8 stream keyed by `(seed, n)`.
pub fn draw_samples(spec: &ExperimentSpec, target: &lti_core::transport::Density, n: usize) -> Result<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(n as u64);
    sample_density(target, n, &mut rng).map_err(|e| match e {
        lti_core::transport::TransportError::UnsupportedDimension { .. } => CliError::config("target", e),
        other => CliError::stage("sampling", other),
    })
}

fn training_config(spec: &ExperimentSpec) -> TrainConfig {
    TrainConfig { seed: spec.training.seed.wrapping_add(spec.seed), ..spec.training.clone() }
}

/// Sample, train and integrate for every sample size and level.
pub fn run_experiment<E: Executor>(spec: &ExperimentSpec, exec: &E, telemetry: &mut Telemetry) -> Result<RunOutcome> {
    let r = spec.resolve()?;
    let reference = reference_expectation(&r.target, &r.qoi, exec).map_err(|e| CliError::stage("reference", e))?;
    let grids: Vec<SparseGrid> = spec
        .grid
        .levels
        .iter()
        .map(|&l| source_grid(&r.source, l).map_err(|e| CliError::stage("grid", e)))
        .collect::<Result<_>>()?;
    let quad_enabled = spec.analysis.quadrature_error.unwrap_or(spec.dim <= 2);
    let probe = spec.analysis.probe.unwrap_or_else(|| Probe::default_for(spec.dim));
    let config = training_config(spec);
    telemetry.event("start", json!({ "experiment": spec.name, "seed": spec.seed, "reference": reference }))?;

    let mut reports = Vec::new();
    let mut models = Vec::new();
    for &n in &spec.sample_sizes {
        let samples = draw_samples(spec, &r.target, n)?;
        let mut epochs: Vec<EpochRecord> = Vec::new();
        let trained =
            train_erm_observed(&config, &samples, spec.dim, &r.source, exec, &mut |rec| epochs.push(rec.clone()))
                .map_err(|e| CliError::Training(format!("n = {n}: {e}")))?;
        for rec in &epochs {
            telemetry.event("epoch", json!({ "n": n, "record": rec }))?;
        }
        telemetry.event(
            "trained",
            json!({
                "n": n,
                "initial_nll": trained.initial_nll,
                "final_nll": trained.final_nll,
                "holdout_nll": trained.holdout_nll,
                "best_epoch": trained.best_epoch,
            }),
        )?;

        let fm = FlowMap::new(&trained.field, config.flow_steps).map_err(|e| CliError::stage("integration", e))?;
        let div: Option<Divergences> = if spec.analysis.divergences {
            Some(divergences(&r.target, &fm, &r.source, probe, exec).map_err(|e| CliError::stage("divergences", e))?)
        } else {
            None
        };
        let oracle = if quad_enabled {
            Some(
                flow_integral_oracle(
                    &fm,
                    &r.qoi,
                    &r.source,
                    spec.analysis.oracle_panels,
                    spec.analysis.oracle_order,
                    exec,
                )
                .map_err(|e| CliError::stage("integration", e))?,
            )
        } else {
            None
        };
        let architecture = trained.architecture().widths.clone();
        for grid in &grids {
            let (estimate, excursion) =
                integrate_via_flow_traced(grid, &fm, &r.qoi, exec).map_err(|e| CliError::stage("integration", e))?;
            let report = ErrorReport {
                experiment: spec.name.clone(),
                dim: spec.dim,
                level: grid.level,
                nodes: grid.len(),
                sample_size: n,
                seed: spec.seed,
                qoi: r.qoi.name().to_string(),
                qoi_sup_norm: r.qoi.sup_norm(),
                reference,
                estimate,
                total_error: total_error(reference, estimate),
                quadrature_error: oracle.map(|o| (o - estimate).abs()),
                tv: div.map(|d| d.tv),
                kl: div.map(|d| d.kl),
                architecture: architecture.clone(),
                final_nll: Some(trained.final_nll),
                generalization_gap: trained.generalization_gap,
                max_excursion: excursion,
            };
            telemetry.event(
                "level",
                json!({ "n": n, "level": grid.level, "nodes": grid.len(), "estimate": estimate, "total": report.total_error }),
            )?;
            reports.push(report);
        }
        models.push(TrainedModel { sample_size: n, field: trained.field });
    }
    telemetry.event("done", json!({ "reports": reports.len() }))?;
    telemetry.flush()?;
    Ok(RunOutcome { reference, reports, models })
}

pub fn format_table(rows: &[TableRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row).map_err(|e| CliError::stage("output", e))?;
    }
    w.into_inner().map_err(|e| CliError::stage("output", e))
}

pub fn read_table(path: &Path) -> Result<Vec<TableRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::io(path, std::io::Error::other(e)))?;
    r.deserialize().collect::<std::result::Result<_, _>>().map_err(|e| CliError::io(path, std::io::Error::other(e)))
}

/// [`run_experiment`] plus the report, table, telemetry and checkpoint files
/// under the output directory.
pub fn cmd_run<E: Executor>(spec: &ExperimentSpec, exec: &E) -> Result<RunOutcome> {
    let out = &spec.outputs;
    let write = |rel: &Path, bytes: &[u8]| {
        let path = out.path(rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
        std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))
    };
    std::fs::create_dir_all(&out.dir).map_err(|e| CliError::io(&out.dir, e))?;
    let mut telemetry = Telemetry::to_file(&out.path(&out.telemetry), out.timing)?;
    let outcome = run_experiment(spec, exec, &mut telemetry)?;

    let mut jsonl = String::new();
    for report in &outcome.reports {
        jsonl.push_str(&serde_json::to_string(report).map_err(|e| CliError::stage("output", e))?);
        jsonl.push('\n');
    }
    write(&out.reports, jsonl.as_bytes())?;
    write(&out.table, &format_table(&outcome.rows())?)?;
    for m in &outcome.models {
        let name = format!("{}_n{}_seed{}.ckpt", spec.name, m.sample_size, spec.seed);
        write(&out.checkpoints.join(name), checkpoint::format(&m.field).as_bytes())?;
    }
    Ok(outcome)
}
