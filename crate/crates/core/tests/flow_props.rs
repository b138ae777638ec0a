use lti_core::analysis::dense_tensor_integral;
use lti_core::flow::{log_density_gradient, AdjointWorkspace, FlowMap, FnField, ZeroField};
use lti_core::network::{Activation, MlpVectorField};
use lti_core::transport::{Density, KrTransport, Univariate};
use lti_core::Serial;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn field(seed: u64, d: usize, spread: f64) -> MlpVectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut f = MlpVectorField::random(d, &[12, 12], Activation::ReluPower(2), true, &mut rng).unwrap();
    let p: Vec<f64> = (0..f.param_count()).map(|_| rng.random_range(-spread..spread)).collect();
    f.set_params(&p).unwrap();
    f
}

fn source(d: usize) -> Density {
    match d {
        1 => Density::product(vec![Univariate::Cosine { coeffs: vec![0.3] }]).unwrap(),
        _ => Density::product(vec![Univariate::LinearTilt { a: 1.0, b: 0.5 }, Univariate::Uniform]).unwrap(),
    }
}

fn det(m: &[f64], d: usize) -> f64 {
    match d {
        1 => m[0],
        2 => m[0] * m[3] - m[1] * m[2],
        _ => unreachable!(),
    }
}

#[test]
fn liouville_matches_jacobian_change_of_variables() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut checked = 0;
    for d in [1usize, 2] {
        let src = source(d);
        let fm = FlowMap::new(field(100 + d as u64, d, 0.8), 64).unwrap();
        for _ in 0..50 {
            let y: Vec<f64> = (0..d).map(|_| rng.random_range(0.02..0.98)).collect();
            let model = fm.log_pushforward_density(&src, &y).unwrap().exp();
            let x = fm.inverse(&y, 1.0).unwrap();
            let h = 1e-6;
            let mut jac = vec![0.0; d * d];
            for j in 0..d {
                let mut p = x.clone();
                p[j] = x[j] + h;
                let up = fm.forward(&p, 1.0).unwrap();
                p[j] = x[j] - h;
                let dn = fm.forward(&p, 1.0).unwrap();
                for i in 0..d {
                    jac[i * d + j] = (up[i] - dn[i]) / (2.0 * h);
                }
            }
            let cov = src.eval(&x) / det(&jac, d).abs();
            assert!((model - cov).abs() <= 1e-4, "d={d} y={y:?}: {model} vs {cov}");
            checked += 1;
        }
    }
    assert_eq!(checked, 100);
}

#[test]
fn pushforward_density_has_unit_mass() {
    for d in [1usize, 2] {
        let src = source(d);
        let fm = FlowMap::new(field(200 + d as u64, d, 0.8), 32).unwrap();
        let (panels, order) = if d == 1 { (32, 8) } else { (16, 4) };
        let mass = dense_tensor_integral(d, panels, order, &Serial, |y| {
            Ok(fm.log_pushforward_density(&src, y).unwrap().exp())
        })
        .unwrap();
        assert!((mass - 1.0).abs() <= 1e-3, "d={d}: mass {mass}");
    }
}

#[test]
fn zero_field_is_identity() {
    let fm = FlowMap::new(ZeroField::new(2), 8).unwrap();
    let src = source(2);
    let y = [0.3, 0.8];
    assert_eq!(fm.forward(&y, 1.0).unwrap(), y.to_vec());
    assert!((fm.log_pushforward_density(&src, &y).unwrap() - src.ln_eval(&y)).abs() < 1e-15);
}

#[test]
fn kr_field_pushes_source_to_target() {
    let target = Density::product(vec![Univariate::LinearTilt { a: 0.5, b: 1.0 }]).unwrap();
    let kr = KrTransport::new(Density::uniform(1), target.clone()).unwrap();
    let fm = FlowMap::new(&kr, 64).unwrap();
    for i in 1..20 {
        let y = [i as f64 / 20.0];
        let got = fm.log_pushforward_density(&Density::uniform(1), &y).unwrap();
        assert!((got - target.ln_eval(&y)).abs() < 1e-5, "y={y:?}");
    }
}

#[test]
fn rk4_is_fourth_order() {
    // logistic field: x(t) = x0 e^t / (1 - x0 + x0 e^t)
    let logistic = FnField::new(1, |x, _t, out| out[0] = x[0] * (1.0 - x[0]));
    let x0 = 0.2f64;
    let exact = x0 * 1f64.exp() / (1.0 - x0 + x0 * 1f64.exp());
    let err = |n: usize| (FlowMap::new(logistic.clone(), n).unwrap().forward(&[x0], 1.0).unwrap()[0] - exact).abs();
    for n in [4usize, 8, 16] {
        let ratio = err(n) / err(2 * n);
        assert!((12.0..=20.0).contains(&ratio), "n={n}: ratio {ratio}");
    }
}

#[test]
fn adjoint_gradient_matches_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for d in [1usize, 2] {
        let src = source(d);
        let mut f = field(300 + d as u64, d, 0.7);
        let steps = 8;
        for _ in 0..5 {
            let y: Vec<f64> = (0..d).map(|_| rng.random_range(0.05..0.95)).collect();
            let mut ws = AdjointWorkspace::new(&f, steps);
            let mut g = vec![0.0; f.param_count()];
            let v = log_density_gradient(&f, steps, &src, &y, &mut ws, &mut g).unwrap();
            let direct = FlowMap::new(&f, steps).unwrap().log_pushforward_density(&src, &y).unwrap();
            assert!((v - direct).abs() < 1e-12);
            let theta = f.params().to_vec();
            let h = 1e-6;
            let mut num = 0.0;
            let mut den = 0.0;
            for k in 0..theta.len() {
                let mut p = theta.clone();
                p[k] = theta[k] + h;
                f.set_params(&p).unwrap();
                let up = FlowMap::new(&f, steps).unwrap().log_pushforward_density(&src, &y).unwrap();
                p[k] = theta[k] - h;
                f.set_params(&p).unwrap();
                let dn = FlowMap::new(&f, steps).unwrap().log_pushforward_density(&src, &y).unwrap();
                let fd = (up - dn) / (2.0 * h);
                num += (g[k] - fd).powi(2);
                den += fd * fd;
            }
            f.set_params(&theta).unwrap();
            assert!(num.sqrt() <= 1e-5 * den.sqrt().max(1e-8), "d={d}: {}", num.sqrt() / den.sqrt());
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn time_reversal(seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let fm = FlowMap::new(field(seed, 2, 0.6), 64).unwrap();
        let x = [a, b];
        let back = fm.inverse(&fm.forward(&x, 1.0).unwrap(), 1.0).unwrap();
        prop_assert!((back[0] - a).abs() < 1e-7 && (back[1] - b).abs() < 1e-7);
    }

    #[test]
    fn masked_flow_stays_in_cube(seed in 0u64..1000, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        // RK4 may overshoot a face by O(h^4); the endpoint is clamped and the overshoot reported
        let coarse = FlowMap::new(field(seed, 2, 0.3), 16).unwrap().forward_traced(&[a, b], 1.0).unwrap();
        let fine = FlowMap::new(field(seed, 2, 0.3), 64).unwrap().forward_traced(&[a, b], 1.0).unwrap();
        prop_assert!(coarse.point.iter().all(|v| (0.0..=1.0).contains(v)));
        prop_assert!(coarse.excursion < 1e-2, "coarse {}", coarse.excursion);
        prop_assert!(fine.excursion < 1e-4, "fine {}", fine.excursion);
    }
}
