use std::collections::BTreeSet;

use lti_core::quadrature::{
    cc_nodes, cc_weights, growth, node_count_asymptotic, smolyak, tensor_rule, Interval, MultiIndex, Rule1D,
    RuleFamily, Weight,
};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const POINT_COUNTS: [usize; 6] = [1, 3, 5, 9, 17, 33];

fn unit_families(d: usize) -> Vec<RuleFamily> {
    vec![RuleFamily::uniform(Interval::UNIT); d]
}

// All multi-indices k >= 1 with lo <= |k| <= hi, by plain nested enumeration.
fn admissible(d: usize, lo: u32, hi: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut k = vec![1u32; d];
    loop {
        let s: u32 = k.iter().sum();
        if s >= lo && s <= hi {
            out.push(k.clone());
        }
        let mut i = 0;
        loop {
            if i == d {
                return out;
            }
            k[i] += 1;
            if k.iter().sum::<u32>() <= hi {
                break;
            }
            k[i] = 1;
            i += 1;
        }
    }
}

fn binom(n: u32, k: u32) -> i64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1i64, |acc, i| acc * (n - i) as i64 / (i + 1) as i64)
}

/// Σ_{q-d+1 <= |k| <= q} (-1)^{q-|k|} C(d-1, q-|k|) I_k(f), every tensor rule kept separate.
fn alternating_sum<F: Fn(&[f64]) -> f64>(d: usize, level: u32, f: F) -> f64 {
    let q = level + d as u32;
    let lo = (q + 1).saturating_sub(d as u32).max(d as u32);
    let mut total = 0.0;
    for k in admissible(d, lo, q) {
        let gap = q - k.iter().sum::<u32>();
        let c = binom(d as u32 - 1, gap) * if gap % 2 == 0 { 1 } else { -1 };
        let rules: Vec<Rule1D> = k
            .iter()
            .map(|&ki| Rule1D::clenshaw_curtis(growth(ki).unwrap(), Interval::UNIT, &Weight::Uniform).unwrap())
            .collect();
        let t = tensor_rule(&MultiIndex::new(k.clone()).unwrap(), &rules).unwrap();
        total += c as f64 * t.apply(&f);
    }
    total
}

fn union_count(d: usize, level: u32) -> usize {
    let q = level + d as u32;
    let lo = (q + 1).saturating_sub(d as u32).max(d as u32);
    let mut seen = BTreeSet::new();
    for k in admissible(d, lo, q) {
        let axes: Vec<Vec<f64>> = k.iter().map(|&ki| cc_nodes(growth(ki).unwrap(), Interval::UNIT).unwrap()).collect();
        let mut cursor = vec![0usize; d];
        'outer: loop {
            // 1e-12 buckets; nested nodes agree to far better than that
            let key: Vec<i64> = (0..d).map(|i| (axes[i][cursor[i]] * 1e12).round() as i64).collect();
            seen.insert(key);
            let mut i = 0;
            loop {
                if i == d {
                    break 'outer;
                }
                cursor[i] += 1;
                if cursor[i] < axes[i].len() {
                    break;
                }
                cursor[i] = 0;
                i += 1;
            }
        }
    }
    seen.len()
}

struct Poly {
    terms: Vec<(f64, Vec<u32>)>,
}

impl Poly {
    fn random(rng: &mut ChaCha8Rng, d: usize, max_degree: u32) -> Self {
        let terms = (0..6)
            .map(|_| {
                let c = rng.random_range(-1.0..1.0);
                let e = (0..d).map(|_| rng.random_range(0..=max_degree)).collect();
                (c, e)
            })
            .collect();
        Self { terms }
    }

    fn eval(&self, x: &[f64]) -> f64 {
        self.terms.iter().map(|(c, e)| c * x.iter().zip(e).map(|(xi, &p)| xi.powi(p as i32)).product::<f64>()).sum()
    }
}

#[test]
fn cc_rule_exact_on_monomials() {
    for &m in &POINT_COUNTS {
        let rule = Rule1D::clenshaw_curtis(m, Interval::UNIT, &Weight::Uniform).unwrap();
        for p in 0..m as i32 {
            let got = rule.apply(|x| x.powi(p));
            let exact = 1.0 / (p as f64 + 1.0);
            assert!((got - exact).abs() <= 1e-11, "m={m} p={p}: {got} vs {exact}");
        }
    }
}

#[test]
fn cc_rule_symmetric_domain() {
    let w = cc_weights(5, Interval::SYMMETRIC, &Weight::Uniform).unwrap();
    let x = cc_nodes(5, Interval::SYMMETRIC).unwrap();
    let s: f64 = w.iter().sum();
    let m2: f64 = w.iter().zip(&x).map(|(w, x)| w * x * x).sum();
    let m4: f64 = w.iter().zip(&x).map(|(w, x)| w * x.powi(4)).sum();
    assert!((s - 2.0).abs() < 1e-14);
    assert!((m2 - 2.0 / 3.0).abs() < 1e-14);
    assert!((m4 - 0.4).abs() < 1e-14);
}

#[test]
fn weighted_rule_reproduces_density_moments() {
    // f(x) = 6x(1-x) + 0.1, normalized on [0,1]
    let z = 1.1;
    let weight = Weight::density("bump", move |x: f64| (6.0 * x * (1.0 - x) + 0.1) / z);
    for &m in &POINT_COUNTS[1..5] {
        let rule = Rule1D::clenshaw_curtis(m, Interval::UNIT, &weight).unwrap();
        for p in 0..m as i32 {
            let exact = (6.0 / (p as f64 + 2.0) - 6.0 / (p as f64 + 3.0) + 0.1 / (p as f64 + 1.0)) / z;
            let got = rule.apply(|x| x.powi(p));
            assert!((got - exact).abs() < 1e-10, "m={m} p={p}");
        }
    }
}

#[test]
fn smolyak_matches_alternating_tensor_sum() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for d in [2usize, 3] {
        for level in 0..=3u32 {
            let grid = smolyak(d, level, &unit_families(d)).unwrap();
            for _ in 0..50 {
                let poly = Poly::random(&mut rng, d, 6);
                let a = grid.apply(|x| poly.eval(x)).unwrap();
                let b = alternating_sum(d, level, |x| poly.eval(x));
                assert!((a - b).abs() <= 1e-12, "d={d} level={level}: {a} vs {b}");
            }
        }
    }
}

#[test]
fn smolyak_node_count_is_union_of_tensor_grids() {
    for d in [2usize, 3] {
        for level in 0..=3u32 {
            let grid = smolyak(d, level, &unit_families(d)).unwrap();
            assert_eq!(grid.len(), union_count(d, level), "d={d} level={level}");
        }
    }
    assert_eq!(smolyak(2, 3, &unit_families(2)).unwrap().len(), 29);
    assert_eq!(smolyak(2, 4, &unit_families(2)).unwrap().len(), 65);
}

#[test]
fn smolyak_one_dimension_collapses() {
    for level in 0..6u32 {
        let grid = smolyak(1, level, &unit_families(1)).unwrap();
        let m = growth(level + 1).unwrap();
        let x = cc_nodes(m, Interval::UNIT).unwrap();
        let w = cc_weights(m, Interval::UNIT, &Weight::Uniform).unwrap();
        assert_eq!(grid.len(), m);
        for j in 0..m {
            assert!((grid.node(j)[0] - x[j]).abs() < 1e-15);
            assert!((grid.weights[j] - w[j]).abs() < 1e-14);
        }
    }
}

#[test]
fn smolyak_levels_are_nested() {
    for d in [2usize, 3] {
        for level in 0..4u32 {
            let a = smolyak(d, level, &unit_families(d)).unwrap();
            let b = smolyak(d, level + 1, &unit_families(d)).unwrap();
            let finer: BTreeSet<Vec<u64>> =
                (0..b.len()).map(|i| b.node(i).iter().map(|x| x.to_bits()).collect()).collect();
            for i in 0..a.len() {
                let key: Vec<u64> = a.node(i).iter().map(|x| x.to_bits()).collect();
                assert!(finer.contains(&key), "d={d} level={level} node {:?}", a.node(i));
            }
        }
    }
}

#[test]
fn smolyak_combination_terms_sum_to_mass() {
    for d in 1..=4usize {
        for level in 0..4u32 {
            let grid = smolyak(d, level, &unit_families(d)).unwrap();
            let q = level + d as u32;
            let mut s = 0i64;
            for term in &grid.combination_terms {
                let k = term.index.order();
                assert!(k + d as u32 > q && k <= q);
                let gap = q - k;
                assert_eq!(term.coefficient, binom(d as u32 - 1, gap) * if gap % 2 == 0 { 1 } else { -1 });
                s += term.coefficient;
            }
            assert_eq!(s, 1);
            assert!((grid.total_weight() - 1.0).abs() < 1e-12);
        }
    }
}

#[test]
fn smolyak_smooth_integrand_converges() {
    let exact = 1f64.sin().powi(2);
    let mut prev = f64::INFINITY;
    for level in 1..=6u32 {
        let grid = smolyak(2, level, &unit_families(2)).unwrap();
        let err = (grid.apply(|x| x[0].cos() * x[1].cos()).unwrap() - exact).abs();
        assert!(err <= prev * 1.1 + 1e-15, "level {level}: {err} after {prev}");
        if level >= 4 {
            assert!(err < 1e-8);
        }
        prev = err;
    }
}

#[test]
fn node_count_asymptotic_within_factor_three() {
    for d in [4usize, 6, 8] {
        for level in 1..=3u32 {
            let exact = smolyak(d, level, &unit_families(d)).unwrap().len() as f64;
            let est = node_count_asymptotic(d, level);
            let ratio = exact / est;
            assert!((1.0 / 3.0..=3.0).contains(&ratio), "d={d} level={level}: {exact} vs {est}");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn cc_exact_on_any_interval(a in -3.0f64..3.0, len in 0.1f64..4.0, idx in 0usize..6, p_frac in 0.0f64..1.0) {
        let m = POINT_COUNTS[idx];
        let dom = Interval::new(a, a + len).unwrap();
        let p = ((m as f64) * p_frac).floor().min(m as f64 - 1.0) as i32;
        let rule = Rule1D::clenshaw_curtis(m, dom, &Weight::Uniform).unwrap();
        let b = a + len;
        let exact = (b.powi(p + 1) - a.powi(p + 1)) / (p as f64 + 1.0);
        let got = rule.apply(|x| x.powi(p));
        prop_assert!((got - exact).abs() <= 1e-11 * exact.abs().max(1.0));
    }

    #[test]
    fn cc_nodes_sorted_and_in_domain(idx in 0usize..6) {
        let m = POINT_COUNTS[idx];
        let x = cc_nodes(m, Interval::UNIT).unwrap();
        prop_assert_eq!(x.len(), m);
        prop_assert!(x.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(x.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn apply_order_independent(seed in any::<u64>(), level in 0u32..5) {
        let grid = smolyak(2, level, &unit_families(2)).unwrap();
        let f = |x: &[f64]| (3.0 * x[0]).exp() - 20.0 * x[1].sin();
        let values: Vec<f64> = (0..grid.len()).map(|i| f(grid.node(i))).collect();
        let forward = grid.reduce(&values).unwrap();
        let mut order: Vec<usize> = (0..grid.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in (1..order.len()).rev() {
            order.swap(i, rng.random_range(0..=i));
        }
        let mut sum = lti_core::NeumaierSum::default();
        for &i in &order {
            sum.add(grid.weights[i] * values[i]);
        }
        prop_assert!((sum.value() - forward).abs() <= 1e-13 * forward.abs().max(1.0));
    }
}
