use lti_core::network::{Activation, MlpVectorField};
use lti_core::training::{
    adaptive_architecture, batch_gradient, empirical_nll, sample_threshold, train_erm, ArchitectureChoice, TrainConfig,
};
use lti_core::transport::{sample_density, Density, Univariate};
use lti_core::Serial;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn two_x() -> Density {
    Density::product(vec![Univariate::LinearTilt { a: 0.0, b: 2.0 }]).unwrap()
}

fn quick_config(seed: u64) -> TrainConfig {
    TrainConfig { epochs: 8, batch_size: 32, flow_steps: 8, seed, ..TrainConfig::default() }
}

#[test]
fn nll_gradient_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for (depth, width) in [(1usize, 4usize), (2, 8), (3, 16), (2, 16)] {
        for d in [1usize, 2] {
            let src = Density::uniform(d);
            let mut f =
                MlpVectorField::random(d, &vec![width; depth], Activation::ReluPower(2), true, &mut rng).unwrap();
            let p: Vec<f64> = (0..f.param_count()).map(|_| rng.random_range(-0.6..0.6)).collect();
            f.set_params(&p).unwrap();
            let samples: Vec<f64> = (0..8 * d).map(|_| rng.random_range(0.02..0.98)).collect();
            let idx: Vec<usize> = (0..8).collect();
            let steps = 6;
            let mut g = vec![0.0; f.param_count()];
            let v = batch_gradient(&f, steps, &src, &samples, &idx, &Serial, &mut g).unwrap();
            let nll = empirical_nll(&f, steps, &src, &samples, &Serial).unwrap();
            assert!((v - nll).abs() < 1e-12);
            let theta = f.params().to_vec();
            let h = 1e-6;
            let (mut num, mut den) = (0.0, 0.0);
            for k in 0..theta.len() {
                let mut q = theta.clone();
                q[k] = theta[k] + h;
                f.set_params(&q).unwrap();
                let up = empirical_nll(&f, steps, &src, &samples, &Serial).unwrap();
                q[k] = theta[k] - h;
                f.set_params(&q).unwrap();
                let dn = empirical_nll(&f, steps, &src, &samples, &Serial).unwrap();
                let fd = (up - dn) / (2.0 * h);
                num += (g[k] - fd).powi(2);
                den += fd * fd;
            }
            f.set_params(&theta).unwrap();
            let rel = num.sqrt() / den.sqrt().max(1e-8);
            assert!(rel <= 1e-5, "L={depth} W={width} d={d}: relative error {rel}");
        }
    }
}

#[test]
fn training_lowers_nll_on_linear_target() {
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    let samples = sample_density(&two_x(), 400, &mut rng).unwrap();
    let result = train_erm(&quick_config(1), &samples, 1, &Density::uniform(1), &Serial).unwrap();
    // the target's negative entropy is ln 2 - 1/2, about 0.19
    assert!(result.final_nll < result.initial_nll);
    assert!(result.final_nll < -0.1, "final nll {}", result.final_nll);
    assert!(result.field.params().iter().all(|v| v.abs() <= 1.0));
    assert_eq!(result.nll_trace.len(), result.records.len() + 1);
}

#[test]
fn source_equals_target_stays_near_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    let samples: Vec<f64> = (0..600).map(|_| rng.random::<f64>()).collect();
    let cfg = TrainConfig { zero_init: true, ..quick_config(2) };
    let result = train_erm(&cfg, &samples, 2, &Density::uniform(2), &Serial).unwrap();
    assert_eq!(result.initial_nll, 0.0);
    assert!(result.final_nll <= 0.0);
    assert!(result.holdout_nll.unwrap().abs() < 0.05, "holdout {:?}", result.holdout_nll);
}

#[test]
fn training_is_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    let samples = sample_density(&two_x(), 200, &mut rng).unwrap();
    let a = train_erm(&quick_config(5), &samples, 1, &Density::uniform(1), &Serial).unwrap();
    let b = train_erm(&quick_config(5), &samples, 1, &Density::uniform(1), &Serial).unwrap();
    assert_eq!(a.theta_hat(), b.theta_hat());
    assert_eq!(a.nll_trace, b.nll_trace);
}

#[test]
fn more_samples_do_not_hurt_on_average() {
    // holdout NLL against the true negative entropy, averaged over seeds
    let truth = 2f64.ln() - 0.5;
    let gap = |n: usize| -> f64 {
        (0..3u64)
            .map(|s| {
                let mut rng = ChaCha8Rng::seed_from_u64(100 + s);
                let samples = sample_density(&two_x(), n, &mut rng).unwrap();
                let fresh = sample_density(&two_x(), 2000, &mut rng).unwrap();
                let r = train_erm(&quick_config(s), &samples, 1, &Density::uniform(1), &Serial).unwrap();
                let test = empirical_nll(&r.field, 8, &Density::uniform(1), &fresh, &Serial).unwrap();
                test + truth
            })
            .sum::<f64>()
            / 3.0
    };
    let small = gap(100);
    let large = gap(800);
    assert!(large <= small + 0.02, "n=100: {small}, n=800: {large}");
}

#[test]
fn invalid_configs_are_rejected() {
    let bad = [
        TrainConfig { beta: 0.5, ..TrainConfig::default() },
        TrainConfig { holdout: 1.0, ..TrainConfig::default() },
        TrainConfig { batch_size: 0, ..TrainConfig::default() },
        TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
        TrainConfig { architecture: ArchitectureChoice::Fixed { depth: 0, width: 4 }, ..TrainConfig::default() },
    ];
    for cfg in bad {
        assert!(cfg.validate().is_err(), "{cfg:?}");
    }
    assert!(TrainConfig::default().validate().is_ok());
}

#[test]
fn schedule_grows_with_sample_size() {
    assert_eq!(adaptive_architecture(1e6, 0.25, 1.0, 1).width, 2);
    let mut prev = adaptive_architecture(10.0, 0.25, 1.0, 1);
    for e in 2..=12 {
        let s = adaptive_architecture(10f64.powi(e), 0.25, 1.0, 1);
        assert!(s.width >= prev.width && s.depth >= prev.depth && s.cells >= prev.cells);
        prev = s;
    }
    assert_eq!(prev.width, (1e12f64.ln().ln()).floor() as usize);
}

proptest! {
    #[test]
    fn threshold_is_zero_for_unit_confidence(eps in 0.01f64..1.0, beta in 0.01f64..0.49) {
        prop_assert_eq!(sample_threshold(eps, 1.0, beta, 1.0, 1.0).value, Some(0));
    }

    #[test]
    fn threshold_monotone_in_accuracy(eps in 0.05f64..1.0, delta in 0.01f64..0.9) {
        let a = sample_threshold(eps, delta, 0.25, 1.0, 1.0);
        let b = sample_threshold(eps / 2.0, delta, 0.25, 1.0, 1.0);
        prop_assert!(b.log10 > a.log10);
    }
}
