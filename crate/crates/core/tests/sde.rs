use heavytail::metastability::two_well_stationary;
use heavytail::objective::{double_well, quadratic};
use heavytail::sde::{
    euler_update, first_exit, first_exit_replicates, occupancy, occupancy_replicates, simulate, summarize_exits,
    suggest_step_size, transition_replicates, LevyNormalization, SdeConfig,
};
use heavytail::stats;
use heavytail::RngStream;
use proptest::prelude::*;

#[test]
fn gradient_descent_without_noise() {
    let cfg = SdeConfig::levy(1.7, 0.0, 0.1, vec![1.0], 30);
    let path = simulate(&cfg, &quadratic(1).unwrap(), &RngStream::new(1)).unwrap();
    for (k, p) in path.iter().enumerate() {
        assert!((p[0] - 0.9f64.powi(k as i32)).abs() < 1e-15);
    }
}

#[test]
fn gaussian_noise_gives_discrete_ou_variance() {
    let (eps, eta) = (0.3, 0.1);
    let cfg = SdeConfig::levy(2.0, eps, eta, vec![0.0], 100_000);
    let path = simulate(&cfg, &quadratic(1).unwrap(), &RngStream::new(2)).unwrap();
    let xs: Vec<f64> = path.iter().skip(1_000).map(|p| p[0]).collect();
    let var = stats::std_dev(&xs).powi(2);
    let want = eps * eps * 2.0 * eta / (1.0 - (1.0 - eta) * (1.0 - eta));
    assert!((var / want - 1.0).abs() < 0.05, "{var} vs {want}");
}

#[test]
fn trajectories_are_reproducible() {
    let cfg = SdeConfig {
        sigma_brownian: 0.7,
        ..SdeConfig::levy(1.3, 0.2, 0.01, vec![0.3, -0.2], 2_000)
    };
    let q = quadratic(2).unwrap();
    let a = simulate(&cfg, &q, &RngStream::new(3)).unwrap();
    let b = simulate(&cfg, &q, &RngStream::new(3)).unwrap();
    let bits = |t: &heavytail::sde::Trajectory| t.iter().flat_map(|p| p.iter().map(|v| v.to_bits()).collect::<Vec<_>>()).collect::<Vec<_>>();
    assert_eq!(bits(&a), bits(&b));
    assert_ne!(bits(&a), bits(&simulate(&cfg, &q, &RngStream::new(4)).unwrap()));
}

#[test]
fn stable_update_reduces_to_langevin_at_alpha_two() {
    // One step with the same standard normal z: the alpha = 2 Levy term
    // eps sqrt(eta) S with S = sqrt(2) z must equal a Brownian term of
    // amplitude eps sqrt(2) and the unadjusted Langevin step.
    let f = double_well(-1.0, 2.0, 1.0).unwrap();
    let (eta, eps, z) = (0.01, 0.4, 0.8123);
    let w = [0.37];
    let mut levy = [0.0];
    let mut brown = [0.0];
    euler_update(&f, &w, eta, 0.0, eps * eta.sqrt(), &[0.0], &[2f64.sqrt() * z], &mut levy);
    euler_update(&f, &w, eta, eps * 2f64.sqrt() * eta.sqrt(), 0.0, &[z], &[0.0], &mut brown);
    let ula = w[0] - eta * f.gradient_vec(&w)[0] + (2.0 * eta).sqrt() * eps * z;
    assert!((levy[0] - ula).abs() < 1e-15);
    assert!((brown[0] - ula).abs() < 1e-15);
}

#[test]
fn divergence_is_flagged_and_counted() {
    let f = double_well(-1.0, 2.0, 1.0).unwrap();
    let cfg = SdeConfig::levy(0.5, 1.0, 0.1, vec![-1.0], 100_000);
    let recs = first_exit_replicates(&cfg, &f, &[-1.0], 1e300, 0.0, &RngStream::new(5), 20).unwrap();
    let summary = summarize_exits(&recs);
    assert!(summary.diverged > 0);
    assert_eq!(summary.diverged, recs.iter().filter(|r| r.diverged).count());
    assert!(recs.iter().filter(|r| r.diverged).all(|r| r.exited && r.exit_step.is_some()));
    let path = simulate(&cfg, &f, &RngStream::new(5).substream(recs.iter().position(|r| r.diverged).unwrap() as u64)).unwrap();
    assert!(path.diverged_at.is_some());
    assert!(path.iter().all(|p| p[0].is_finite()));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn larger_balls_exit_later(seed in any::<u64>(), a in 0.1f64..1.0, grow in 0.0f64..1.5) {
        let cfg = SdeConfig::levy(1.5, 0.3, 0.01, vec![0.0], 50_000);
        let q = quadratic(1).unwrap();
        let s = RngStream::new(seed);
        let small = first_exit(&cfg, &q, &[0.0], a, 0.0, &s).unwrap();
        let big = first_exit(&cfg, &q, &[0.0], a + grow, 0.0, &s).unwrap();
        let step = |r: &heavytail::sde::ExitTimeRecord| r.exit_step.unwrap_or(u64::MAX);
        prop_assert!(step(&small) <= step(&big));
    }

    #[test]
    fn exit_record_invariant(seed in any::<u64>(), xi in 0.0f64..0.3) {
        let cfg = SdeConfig::levy(1.2, 0.2, 0.01, vec![0.1], 20_000);
        let q = quadratic(1).unwrap();
        let s = RngStream::new(seed);
        let rec = first_exit(&cfg, &q, &[0.0], 0.5, xi, &s).unwrap();
        let path = simulate(&cfg, &q, &s).unwrap();
        if let Some(k) = rec.exit_step {
            let k = k as usize;
            prop_assert!(path.iter().take(k).all(|p| p[0].abs() <= 0.5 + xi));
            prop_assert!(k >= path.len() || path.point(k)[0].abs() > 0.5 + xi);
            prop_assert!((rec.exit_time.unwrap() - k as f64 * 0.01).abs() < 1e-12);
        } else {
            prop_assert!(path.iter().all(|p| p[0].abs() <= 0.5 + xi));
        }
    }
}

#[test]
fn symmetric_wells_share_time_equally() {
    let f = double_well(-1.0, 1.0, 1.0).unwrap();
    let cfg = SdeConfig::levy(1.2, 0.1, 2e-3, vec![-1.0], 1_000_000)
        .with_normalization(LevyNormalization::UnitJumpDensity);
    let occ = occupancy_replicates(&cfg, &f, &RngStream::new(6), 4).unwrap().fractions();
    assert!((occ[0] - 0.5).abs() < 0.05, "{occ:?}");
}

#[test]
fn occupancy_of_stored_path_sums_to_one() {
    let f = double_well(-1.0, 2.0, 1.0).unwrap();
    let cfg = SdeConfig::levy(1.2, 0.3, 1e-3, vec![-1.0], 20_000);
    let path = simulate(&cfg, &f, &RngStream::new(7)).unwrap();
    let occ = occupancy(&path, &f).unwrap();
    assert!((occ.iter().sum::<f64>() - 1.0).abs() < 1e-12);
}

#[test]
fn transition_times_scale_with_noise_level() {
    let alpha = 1.2;
    let f = double_well(-1.0, 2.0, 1.0).unwrap();
    let eta = 2e-3;
    let mut eps_grid = Vec::new();
    let mut means = Vec::new();
    for eps in [0.02f64, 0.01, 0.005] {
        let horizon = (20.0 / eps.powf(alpha) / eta) as u64;
        let cfg = SdeConfig::levy(alpha, eps, eta, vec![-1.0], horizon)
            .with_normalization(LevyNormalization::UnitJumpDensity);
        let traces = transition_replicates(&cfg, &f, 0.3, &RngStream::new(9), 20).unwrap();
        let records: Vec<_> = traces.iter().flat_map(|t| t.records.iter()).collect();
        // Two valleys: every transition out of valley 0 lands in valley 1.
        assert!(records.iter().all(|r| r.end_basin != r.start_basin));
        assert!(records.iter().filter(|r| r.start_basin == 0).all(|r| r.end_basin == 1));
        let times: Vec<f64> = records.iter().map(|r| r.transition_time).collect();
        assert!(times.len() > 100);
        eps_grid.push(eps);
        means.push(stats::mean(&times));
    }
    let slope = stats::loglog_slope(&eps_grid, &means);
    assert!((slope + alpha).abs() <= 0.15, "slope {slope}");
}

#[test]
fn occupancy_matches_two_well_law_roughly() {
    let alpha = 1.2;
    let f = double_well(-1.0, 2.0, 1.0).unwrap();
    let mut counts = [0u64; 2];
    for (i, w0) in [-1.0, 2.0].into_iter().enumerate() {
        let cfg = SdeConfig::levy(alpha, 0.05, 2e-3, vec![w0], 1_000_000)
            .with_normalization(LevyNormalization::UnitJumpDensity);
        let c = occupancy_replicates(&cfg, &f, &RngStream::new(10).substream(i as u64), 10).unwrap();
        counts[0] += c.counts[0];
        counts[1] += c.counts[1];
    }
    let frac = counts[0] as f64 / (counts[0] + counts[1]) as f64;
    let pi = two_well_stationary(-1.0, 2.0, alpha);
    assert!((frac - pi[0]).abs() < 0.05, "{frac} vs {}", pi[0]);
}

#[test]
fn suggested_step_is_conservative() {
    let f = double_well(-1.0, 2.0, 1.0).unwrap();
    let eta = suggest_step_size(&f, &[2.0], 0.5);
    assert!(eta > 0.0 && eta * f.second_derivative(2.0).unwrap() <= 0.1);
}

#[test]
fn refined_grid_keeps_horizon() {
    let cfg = SdeConfig::levy(1.5, 0.1, 0.01, vec![0.0], 1_000);
    let fine = cfg.refined(10);
    assert!((fine.eta * fine.max_steps as f64 - cfg.eta * cfg.max_steps as f64).abs() < 1e-9);
}
