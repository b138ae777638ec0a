use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

use super::clenshaw_curtis::cc_abscissa;
use super::{growth, MultiIndex, QuadratureError, Result, Rule1D, RuleFamily};
use crate::exec::Executor;
use crate::math::{binomial, factorial, powi};
use crate::NeumaierSum;

/// Nodes and weights of one tensorized rule `I_k^d`, flat row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorRule {
    pub dim: usize,
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl TensorRule {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn apply<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> f64 {
        (0..self.len()).map(|i| self.weights[i] * f(self.node(i))).collect::<NeumaierSum>().value()
    }
}

/// Cartesian product of `rules` selected by `index`.
pub fn tensor_rule(index: &MultiIndex, rules: &[Rule1D]) -> Result<TensorRule> {
    let dim = index.dim();
    if rules.len() != dim {
        return Err(QuadratureError::InvalidArgument(alloc::format!(
            "multi-index has dimension {dim} but {} rules were given",
            rules.len()
        )));
    }
    for (i, (&k, rule)) in index.entries().iter().zip(rules).enumerate() {
        let m = growth(k)?;
        if rule.point_count() != m {
            return Err(QuadratureError::InvalidArgument(alloc::format!(
                "rule {i} has {} points, level {k} needs {m}",
                rule.point_count()
            )));
        }
    }
    let count: usize = rules.iter().map(Rule1D::point_count).product();
    let mut nodes = Vec::with_capacity(count * dim);
    let mut weights = Vec::with_capacity(count);
    let mut cursor = alloc::vec![0usize; dim];
    for _ in 0..count {
        let mut w = 1.0;
        for (i, rule) in rules.iter().enumerate() {
            nodes.push(rule.nodes[cursor[i]]);
            w *= rule.weights[cursor[i]];
        }
        weights.push(w);
        advance(&mut cursor, |i| rules[i].point_count());
    }
    Ok(TensorRule { dim, nodes, weights })
}

/// Odometer increment, last axis fastest.
fn advance(cursor: &mut [usize], extent: impl Fn(usize) -> usize) {
    for i in (0..cursor.len()).rev() {
        cursor[i] += 1;
        if cursor[i] < extent(i) {
            return;
        }
        cursor[i] = 0;
    }
}

/// One term of the Smolyak combination formula.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CombinationTerm {
    pub index: MultiIndex,
    pub coefficient: i64,
}

/// Deduplicated Smolyak rule `S_{ℓ+d}^d`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseGrid {
    pub dim: usize,
    pub level: u32,
    /// Flat row-major node coordinates, `dim` per node.
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub combination_terms: Vec<CombinationTerm>,
}

impl SparseGrid {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn node(&self, i: usize) -> &[f64] {
        &self.nodes[i * self.dim..(i + 1) * self.dim]
    }

    pub fn total_weight(&self) -> f64 {
        crate::sum::compensated_sum(self.weights.iter().copied())
    }

    /// `Σ_j w_j f(ξ_j)` with compensated summation.
    pub fn apply<F: FnMut(&[f64]) -> f64>(&self, mut f: F) -> Result<f64> {
        let mut acc = NeumaierSum::new();
        for i in 0..self.len() {
            let value = f(self.node(i));
            if !value.is_finite() {
                return Err(QuadratureError::EvaluationFailure { node: i, value });
            }
            acc.add(self.weights[i] * value);
        }
        Ok(acc.value())
    }

    /// As [`SparseGrid::apply`], with node evaluations delegated to `exec`.
    pub fn apply_with<E, F>(&self, exec: &E, f: F) -> Result<f64>
    where
        E: Executor,
        F: Fn(&[f64]) -> f64 + Sync + Send,
    {
        let values = exec.map(self.len(), |i| f(self.node(i)));
        self.reduce(&values)
    }

    /// Weighted sum of precomputed node values, in node order.
    pub fn reduce(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.len() {
            return Err(QuadratureError::InvalidArgument(alloc::format!(
                "expected {} values, got {}",
                self.len(),
                values.len()
            )));
        }
        let mut acc = NeumaierSum::new();
        for (i, (&w, &v)) in self.weights.iter().zip(values).enumerate() {
            if !v.is_finite() {
                return Err(QuadratureError::EvaluationFailure { node: i, value: v });
            }
            acc.add(w * v);
        }
        Ok(acc.value())
    }
}

/// All multi-indices of dimension `dim` with `lo <= |k| <= hi`, lexicographic.
pub(crate) fn multi_indices(dim: usize, lo: u32, hi: u32) -> Vec<MultiIndex> {
    fn rec(prefix: &mut Vec<u32>, dim: usize, lo: u32, hi: u32, out: &mut Vec<MultiIndex>) {
        let used: u32 = prefix.iter().sum();
        let remaining = (dim - prefix.len()) as u32;
        if remaining == 0 {
            if used >= lo && used <= hi {
                out.push(MultiIndex(prefix.clone()));
            }
            return;
        }
        // every later entry takes at least 1
        let max_here = hi.saturating_sub(used + remaining - 1);
        for k in 1..=max_here {
            prefix.push(k);
            rec(prefix, dim, lo, hi, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(&mut Vec::with_capacity(dim), dim, lo, hi, &mut out);
    out
}

/// Smolyak sparse grid of sparsity level `level` with one rule family per axis.
///
/// Coincident nodes are merged through their integer position on the finest
/// nested Chebyshev lattice, never by comparing coordinates.
pub fn smolyak(dim: usize, level: u32, families: &[RuleFamily]) -> Result<SparseGrid> {
    if dim == 0 {
        return Err(QuadratureError::InvalidArgument("dimension must be >= 1".into()));
    }
    if families.len() != dim {
        return Err(QuadratureError::InvalidArgument(alloc::format!(
            "need one rule family per dimension: dim {dim}, got {}",
            families.len()
        )));
    }
    let max_level = level + 1;
    if max_level > 30 {
        return Err(QuadratureError::InvalidArgument(alloc::format!("level {level} too large")));
    }
    // rules[axis][level - 1]
    let rules: Vec<Vec<Rule1D>> = families
        .iter()
        .map(|fam| (1..=max_level).map(|l| fam.rule(l)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;

    let q = level + dim as u32;
    let lo = (q + 1).saturating_sub(dim as u32).max(dim as u32);
    let finest = if max_level == 1 { 0usize } else { 1usize << (max_level - 1) };
    let lattice = |lev: u32, j: usize| -> u32 {
        match (max_level, lev) {
            (1, _) => 0,
            (_, 1) => (finest / 2) as u32,
            _ => (j << (max_level - lev)) as u32,
        }
    };

    let mut terms = Vec::new();
    let mut merged: BTreeMap<Vec<u32>, NeumaierSum> = BTreeMap::new();
    for index in multi_indices(dim, lo, q) {
        let gap = q - index.order();
        let magnitude = binomial(dim as u32 - 1, gap) as i64;
        let coefficient = if gap % 2 == 0 { magnitude } else { -magnitude };
        if coefficient == 0 {
            continue;
        }
        let axis_rules: Vec<&Rule1D> =
            index.entries().iter().enumerate().map(|(i, &k)| &rules[i][k as usize - 1]).collect();
        let mut cursor = alloc::vec![0usize; dim];
        let count: usize = axis_rules.iter().map(|r| r.point_count()).product();
        for _ in 0..count {
            let mut w = coefficient as f64;
            let mut key = Vec::with_capacity(dim);
            for (i, rule) in axis_rules.iter().enumerate() {
                w *= rule.weights[cursor[i]];
                key.push(lattice(index.entries()[i], cursor[i]));
            }
            merged.entry(key).or_default().add(w);
            advance(&mut cursor, |i| axis_rules[i].point_count());
        }
        terms.push(CombinationTerm { index, coefficient });
    }

    let mut nodes = Vec::with_capacity(merged.len() * dim);
    let mut weights = Vec::with_capacity(merged.len());
    for (key, w) in merged {
        // cancelled nodes stay in the grid so counts and nesting follow the index set
        let w = w.value();
        let w = if w.abs() < 1e-15 { 0.0 } else { w };
        for (axis, &idx) in key.iter().enumerate() {
            let domain = families[axis].domain;
            let x =
                if finest == 0 { domain.midpoint() } else { domain.from_reference(cc_abscissa(idx as usize, finest)) };
            nodes.push(x);
        }
        weights.push(w);
    }
    Ok(SparseGrid { dim, level, nodes, weights, combination_terms: terms })
}

/// `(2^ℓ / ℓ!) d^ℓ`, the large-`d` node count estimate.
pub fn node_count_asymptotic(dim: usize, level: u32) -> f64 {
    powi(2.0, level) / factorial(level) * powi(dim as f64, level)
}
