//! The learned-transport integration pipeline and its error decomposition:
//! estimate, total error against a reference, measured quadrature error and
//! the learning error through TV and KL divergences.

mod divergence;
mod qoi;

pub use divergence::{divergences, Divergences, Probe};
pub use qoi::{Qoi, QoiSpec};

use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Executor;
use crate::flow::{FlowError, FlowMap, VectorField};
use crate::quadrature::gauss::composite_gauss;
use crate::quadrature::{smolyak, Interval, QuadratureError, RuleFamily, SparseGrid, Weight};
use crate::transport::{Density, TransportError, Univariate};
use crate::NeumaierSum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AnalysisError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("flow failed at node {node}: {source}")]
    Node { node: usize, source: FlowError },
    #[error("model density is not positive at {point:?}")]
    Domain { point: Vec<f64> },
    #[error("dense reference integration is limited to d <= {max}, got d = {dim}")]
    UnsupportedDimension { dim: usize, max: usize },
    #[error(transparent)]
    Quadrature(#[from] QuadratureError),
    #[error(transparent)]
    Transport(#[from] TransportError),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

pub type Result<T> = core::result::Result<T, AnalysisError>;

/// One row of an experiment: estimate, reference and the error terms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorReport {
    pub experiment: String,
    pub dim: usize,
    pub level: u32,
    pub nodes: usize,
    pub sample_size: usize,
    pub seed: u64,
    pub qoi: String,
    pub qoi_sup_norm: f64,
    pub reference: f64,
    pub estimate: f64,
    pub total_error: f64,
    pub quadrature_error: Option<f64>,
    pub tv: Option<f64>,
    pub kl: Option<f64>,
    pub architecture: Vec<usize>,
    pub final_nll: Option<f64>,
    /// Held-out minus training NLL at the trained parameters.
    pub generalization_gap: Option<f64>,
    pub max_excursion: f64,
}

impl ErrorReport {
    /// `‖qoi‖_∞ · TV + quadrature error`, when both terms were measured.
    pub fn decomposition_bound(&self) -> Option<f64> {
        Some(self.qoi_sup_norm * self.tv? + self.quadrature_error?)
    }

    pub fn decomposition_holds(&self, slack: f64) -> Option<bool> {
        Some(self.total_error <= self.decomposition_bound()? + slack)
    }

    /// `TV <= sqrt(KL / 2) + slack`.
    pub fn pinsker_holds(&self, slack: f64) -> Option<bool> {
        Some(self.tv? <= crate::math::sqrt(self.kl?.max(0.0) / 2.0) + slack)
    }
}

/// `|reference - estimate|`.
pub fn total_error(reference: f64, estimate: f64) -> f64 {
    (reference - estimate).abs()
}

/// Smolyak grid of level `level` for a factorized source density.
pub fn source_grid(source: &Density, level: u32) -> Result<SparseGrid> {
    let factors = source.factors().ok_or_else(|| {
        AnalysisError::InvalidArgument("the source density must be a product of univariate densities".into())
    })?;
    let families: Vec<RuleFamily> = factors
        .iter()
        .map(|u| match u {
            Univariate::Uniform => RuleFamily::uniform(Interval::UNIT),
            other => {
                let f = other.clone();
                RuleFamily {
                    domain: Interval::UNIT,
                    weight: Weight::density(alloc::format!("{other:?}"), move |x| f.pdf(x)),
                }
            }
        })
        .collect();
    Ok(smolyak(source.dim(), level, &families)?)
}

/// `Σ_j w_j qoi(Φ(ξ_j))` and the largest cube excursion along the way.
pub fn integrate_via_flow_traced<F: VectorField, E: Executor>(
    grid: &SparseGrid,
    fm: &FlowMap<F>,
    qoi: &Qoi,
    exec: &E,
) -> Result<(f64, f64)> {
    if grid.dim != fm.dim() || qoi.dim() != grid.dim {
        return Err(AnalysisError::InvalidArgument("grid, flow and qoi dimensions differ".into()));
    }
    let outcomes = exec.map(grid.len(), |j| {
        fm.forward_traced(grid.node(j), 1.0)
            .map(|o| (qoi.eval(&o.point), o.excursion))
            .map_err(|source| AnalysisError::Node { node: j, source })
    });
    let mut values = Vec::with_capacity(grid.len());
    let mut worst = 0.0f64;
    for o in outcomes {
        let (v, e) = o?;
        values.push(v);
        worst = worst.max(e);
    }
    Ok((grid.reduce(&values)?, worst))
}

pub fn integrate_via_flow<F: VectorField, E: Executor>(
    grid: &SparseGrid,
    fm: &FlowMap<F>,
    qoi: &Qoi,
    exec: &E,
) -> Result<f64> {
    Ok(integrate_via_flow_traced(grid, fm, qoi, exec)?.0)
}

/// Tensor composite Gauss rule on the cube, `panels` panels of `order`
/// points per axis; panel edges include `1/2` whenever `panels` is even.
pub fn dense_tensor_integral<E, G>(dim: usize, panels: usize, order: usize, exec: &E, g: G) -> Result<f64>
where
    E: Executor,
    G: Fn(&[f64]) -> Result<f64> + Sync + Send,
{
    let rule = composite_gauss(Interval::UNIT, panels, order)?;
    let m = rule.point_count();
    let rows = crate::math::powi(m as f64, (dim - 1) as u32) as usize;
    // one task per slab of the last axes; the first axis is summed inside
    let parts = exec.map(rows, |r| {
        let mut x = alloc::vec![0.0; dim];
        let mut w_rest = 1.0;
        let mut rr = r;
        for xi in x.iter_mut().skip(1) {
            *xi = rule.nodes[rr % m];
            w_rest *= rule.weights[rr % m];
            rr /= m;
        }
        let mut acc = NeumaierSum::new();
        for i in 0..m {
            x[0] = rule.nodes[i];
            acc.add(rule.weights[i] * g(&x)?);
        }
        Ok::<f64, AnalysisError>(w_rest * acc.value())
    });
    let mut total = NeumaierSum::new();
    for p in parts {
        total.add(p?);
    }
    Ok(total.value())
}

/// `E_μ[qoi]`: univariate integrals for product densities, otherwise a dense
/// tensor rule (`d <= 3`).
pub fn reference_expectation<E: Executor>(target: &Density, qoi: &Qoi, exec: &E) -> Result<f64> {
    if let Some(v) = target.factors().and_then(|f| qoi.product_expectation(f)) {
        return Ok(v);
    }
    let d = target.dim();
    if d > 3 {
        return Err(AnalysisError::UnsupportedDimension { dim: d, max: 3 });
    }
    dense_tensor_integral(d, 16, 8, exec, |x| Ok(qoi.eval(x) * target.eval(x)))
}

/// Dense-grid value of `∫ qoi(Φ(x)) dν(x)` (`d <= 3`).
pub fn flow_integral_oracle<F: VectorField, E: Executor>(
    fm: &FlowMap<F>,
    qoi: &Qoi,
    source: &Density,
    panels: usize,
    order: usize,
    exec: &E,
) -> Result<f64> {
    let d = fm.dim();
    if d > 3 {
        return Err(AnalysisError::UnsupportedDimension { dim: d, max: 3 });
    }
    dense_tensor_integral(d, panels, order, exec, |x| Ok(qoi.eval(&fm.forward(x, 1.0)?) * source.eval(x)))
}

/// `|oracle - Σ_j w_j qoi(Φ(ξ_j))|`.
pub fn quadrature_error_measured<F: VectorField, E: Executor>(
    grid: &SparseGrid,
    fm: &FlowMap<F>,
    qoi: &Qoi,
    oracle: f64,
    exec: &E,
) -> Result<f64> {
    Ok((oracle - integrate_via_flow(grid, fm, qoi, exec)?).abs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flow::ZeroField;
    use crate::transport::KrTransport;
    use crate::Serial;
    use alloc::vec;

    fn two_x() -> Density {
        Density::product(vec![Univariate::LinearTilt { a: 0.0, b: 2.0 }]).unwrap()
    }

    #[test]
    fn identity_flow_and_constant() {
        let grid = source_grid(&Density::uniform(2), 3).unwrap();
        let fm = FlowMap::new(ZeroField::new(2), 4).unwrap();
        let one = Qoi::from_spec(&QoiSpec::Constant { value: 1.0 }, 2).unwrap();
        assert!((integrate_via_flow(&grid, &fm, &one, &Serial).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn kr_flow_integrates_mean() {
        let grid = source_grid(&Density::uniform(1), 4).unwrap();
        let fm = FlowMap::new(KrTransport::new(Density::uniform(1), two_x()).unwrap(), 64).unwrap();
        let q = Qoi::from_spec(&QoiSpec::Coordinate { axis: 0 }, 1).unwrap();
        let v = integrate_via_flow(&grid, &fm, &q, &Serial).unwrap();
        assert!((v - 2.0 / 3.0).abs() < 1e-3, "{v}");
    }

    #[test]
    fn kr_flow_two_dimensional_product() {
        let tilt = Univariate::LinearTilt { a: 0.5, b: 1.0 };
        let target = Density::product(vec![tilt.clone(), tilt.clone()]).unwrap();
        let grid = source_grid(&Density::uniform(2), 4).unwrap();
        let fm = FlowMap::new(KrTransport::new(Density::uniform(2), target.clone()).unwrap(), 64).unwrap();
        let q = Qoi::from_spec(&QoiSpec::Product, 2).unwrap();
        let v = integrate_via_flow(&grid, &fm, &q, &Serial).unwrap();
        let m1 = tilt.moment(1);
        assert!((v - m1 * m1).abs() < 1e-3, "{v} vs {}", m1 * m1);
        assert!((reference_expectation(&target, &q, &Serial).unwrap() - m1 * m1).abs() < 1e-15);
    }

    #[test]
    fn identity_polynomial_is_exact() {
        let fm = FlowMap::new(ZeroField::new(1), 2).unwrap();
        let q = Qoi::from_spec(&QoiSpec::Monomial { exponents: vec![4] }, 1).unwrap();
        let grid = source_grid(&Density::uniform(1), 3).unwrap();
        let oracle = flow_integral_oracle(&fm, &q, &Density::uniform(1), 8, 8, &Serial).unwrap();
        assert!(quadrature_error_measured(&grid, &fm, &q, oracle, &Serial).unwrap() < 1e-11);
        let est = integrate_via_flow(&grid, &fm, &q, &Serial).unwrap();
        assert!(total_error(0.2, est) < 1e-12);
    }

    #[test]
    fn weighted_source_grid() {
        let source = Density::product(vec![Univariate::LinearTilt { a: 1.0, b: 1.0 }]).unwrap();
        let grid = source_grid(&source, 3).unwrap();
        let fm = FlowMap::new(ZeroField::new(1), 2).unwrap();
        let q = Qoi::from_spec(&QoiSpec::Monomial { exponents: vec![3] }, 1).unwrap();
        let v = integrate_via_flow(&grid, &fm, &q, &Serial).unwrap();
        assert!((v - Univariate::LinearTilt { a: 1.0, b: 1.0 }.moment(3)).abs() < 1e-12);
        assert!(source_grid(&Density::cosine_coupling(2, 0.3).unwrap(), 1).is_err());
    }

    #[test]
    fn reference_for_coupled_density() {
        let target = Density::cosine_coupling(2, 0.5).unwrap();
        let q = Qoi::from_spec(&QoiSpec::Product, 2).unwrap();
        // ∫ x cos(πx) dx = -2/π², so E[x1 x2] = 1/4 + c (2/π²)²
        let pi2 = core::f64::consts::PI * core::f64::consts::PI;
        let exact = 0.25 + 0.5 * (2.0 / pi2) * (2.0 / pi2);
        assert!((reference_expectation(&target, &q, &Serial).unwrap() - exact).abs() < 1e-13);
    }

    #[test]
    fn report_checks() {
        let mut r = ErrorReport {
            experiment: "t".into(),
            dim: 1,
            level: 2,
            nodes: 5,
            sample_size: 10,
            seed: 0,
            qoi: "x1".into(),
            qoi_sup_norm: 1.0,
            reference: 0.5,
            estimate: 0.51,
            total_error: 0.01,
            quadrature_error: Some(0.001),
            tv: Some(0.02),
            kl: Some(0.002),
            architecture: vec![2, 4, 1],
            final_nll: None,
            generalization_gap: None,
            max_excursion: 0.0,
        };
        assert_eq!(r.decomposition_holds(0.0), Some(true));
        assert_eq!(r.pinsker_holds(0.0), Some(true));
        r.tv = None;
        assert_eq!(r.decomposition_holds(0.0), None);
    }
}
