use heavytail::convergence::{
    a_gamma_bound, constant_step_bound, optimal_c_gamma, rate_slope, run_convergence, ConvergenceConfig, NoiseModel,
};
use heavytail::objective::{power_norm, quadratic};
use heavytail::RngStream;
use proptest::prelude::*;

#[test]
fn c_gamma_minimises_the_bound_on_a_grid() {
    for &(gamma, sigma, m, gap, k) in &[(0.4, 1.3, 1.5, 2.0, 1000u64), (1.0, 1.0, 1.0, 1.0, 100), (0.15, 0.7, 1.8, 5.0, 10_000)] {
        let c = optimal_c_gamma(gamma, sigma, m, gap).unwrap();
        let scale = (k as f64).powf(1.0 / (1.0 + gamma));
        let bound = |eta: f64| constant_step_bound(k, eta, gamma, sigma, m, gap).unwrap();
        let (best_eta, _) = (0..=20_000)
            .map(|i| {
                let eta = c / scale * 10f64.powf(-2.0 + 4.0 * i as f64 / 20_000.0);
                (eta, bound(eta))
            })
            .fold((0.0, f64::INFINITY), |acc, (e, b)| if b < acc.1 { (e, b) } else { acc });
        assert!((best_eta * scale / c - 1.0).abs() < 0.01, "gamma {gamma}");
        // First-order condition at c_gamma: gap/(K eta) = gamma * noise term.
        let eta = c / scale;
        let first = gap / (k as f64 * eta);
        let second = m / (1.0 + gamma) * eta.powf(gamma) * sigma.powf(1.0 + gamma);
        assert!((first - gamma * second).abs() < 1e-10 * first);
    }
}

proptest! {
    #[test]
    fn a_gamma_dominates_optimised_bound(gamma in 0.05f64..=1.0, sigma in 0.1f64..5.0, m in 0.1f64..5.0, gap in 0.01f64..10.0, k in 1u64..100_000) {
        let c = optimal_c_gamma(gamma, sigma, m, gap).unwrap();
        let eta = c / (k as f64).powf(1.0 / (1.0 + gamma));
        let b = constant_step_bound(k, eta, gamma, sigma, m, gap).unwrap();
        let a = a_gamma_bound(gamma, sigma, m, gap).unwrap() / (k as f64).powf(gamma / (1.0 + gamma));
        prop_assert!(b <= a * (1.0 + 1e-12));
    }
}

#[test]
fn measured_points_respect_the_bound() {
    let runs = [
        (power_norm(5, 0.4).unwrap(), NoiseModel::Stable { alpha: 1.6, scale: 0.5 }, 0.4, 2f64.powf(0.6)),
        (quadratic(5).unwrap(), NoiseModel::Gaussian { std: 0.5 }, 1.0, 1.0),
        (quadratic(5).unwrap(), NoiseModel::None, 1.0, 1.0),
    ];
    for (i, (obj, noise, gamma, m)) in runs.iter().enumerate() {
        let mut cfg = ConvergenceConfig::new(*gamma, *m, vec![50, 500], vec![1.0; 5]);
        cfg.replicates = 50;
        for p in run_convergence(obj, noise, &cfg, &RngStream::new(i as u64)).unwrap() {
            assert!(p.min_grad_sq_mean <= p.bound + 3.0 * p.min_grad_sq_stderr, "run {i}: {p:?}");
            assert_eq!(p.diverged_fraction, 0.0);
        }
    }
}

#[test]
fn heavier_tails_converge_slower() {
    let ks = vec![100, 1000, 10_000];
    let heavy = {
        let cfg = ConvergenceConfig::new(0.15, 2f64.powf(0.85), ks.clone(), vec![1.0; 10]);
        let noise = NoiseModel::Stable { alpha: 1.2, scale: 1.0 };
        rate_slope(&run_convergence(&power_norm(10, 0.15).unwrap(), &noise, &cfg, &RngStream::new(5)).unwrap())
    };
    let gaussian = {
        let cfg = ConvergenceConfig::new(1.0, 1.0, ks, vec![1.0; 10]);
        rate_slope(&run_convergence(&quadratic(10).unwrap(), &NoiseModel::Gaussian { std: 1.0 }, &cfg, &RngStream::new(6)).unwrap())
    };
    assert!(heavy > gaussian, "{heavy} vs {gaussian}");
}

#[test]
fn sweep_is_reproducible() {
    let cfg = ConvergenceConfig::new(0.3, 1.0, vec![20, 40], vec![0.5; 3]);
    let noise = NoiseModel::Stable { alpha: 1.5, scale: 1.0 };
    let obj = power_norm(3, 0.3).unwrap();
    let a = run_convergence(&obj, &noise, &cfg, &RngStream::new(9)).unwrap();
    let b = run_convergence(&obj, &noise, &cfg, &RngStream::new(9)).unwrap();
    assert_eq!(a, b);
}
