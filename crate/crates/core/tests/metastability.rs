use heavytail::metastability::{
    exit_survival, expected_exit_time, generator_matrix, stationary_distribution, two_well_stationary,
};

/// Rate from valley `i` to valley `j`, spelled out with explicit infinite
/// endpoints.
fn rate_oracle(minima: &[f64], saddles: &[f64], alpha: f64, i: usize, j: usize) -> f64 {
    let mut bounds = vec![f64::NEG_INFINITY];
    bounds.extend_from_slice(saddles);
    bounds.push(f64::INFINITY);
    let term = |s: f64| if s.is_infinite() { 0.0 } else { (s - minima[i]).abs().powf(-alpha) };
    (term(bounds[j]) - term(bounds[j + 1])).abs() / alpha
}

#[test]
fn three_valley_generator_matches_oracle() {
    let minima = [-2.0, 0.5, 3.0];
    let saddles = [-0.7, 1.4];
    for alpha in [0.6, 1.0, 1.3, 1.9] {
        let model = generator_matrix(&minima, &saddles, alpha).unwrap();
        for i in 0..3 {
            let mut off = 0.0;
            for j in 0..3 {
                if i != j {
                    let want = rate_oracle(&minima, &saddles, alpha, i, j);
                    assert!((model.rate(i, j) - want).abs() < 1e-14, "alpha {alpha} ({i},{j})");
                    off += want;
                }
            }
            assert!((model.rate(i, i) + off).abs() < 1e-14);
        }
        let pi = stationary_distribution(&model).unwrap();
        assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(pi.iter().all(|&p| p >= 0.0));
        for j in 0..3 {
            let flux: f64 = (0..3).map(|i| pi[i] * model.rate(i, j)).sum();
            assert!(flux.abs() < 1e-10);
        }
    }
}

#[test]
fn two_well_closed_form() {
    for alpha in [0.8, 1.2, 1.8] {
        let model = generator_matrix(&[-1.0, 2.0], &[0.0], alpha).unwrap();
        let pi = stationary_distribution(&model).unwrap();
        let closed = two_well_stationary(-1.0, 2.0, alpha);
        assert!((pi[0] - closed[0]).abs() < 1e-12 && (pi[1] - closed[1]).abs() < 1e-12);
        assert!((pi[1] / pi[0] - 2f64.powf(alpha)).abs() < 1e-12);
    }
    let sym = stationary_distribution(&generator_matrix(&[-1.0, 1.0], &[0.0], 1.4).unwrap()).unwrap();
    assert!((sym[0] - 0.5).abs() < 1e-12);
}

#[test]
fn wider_valley_gets_more_mass() {
    let mut last = 0.0;
    for i in 1..=40 {
        let m2 = 0.25 * i as f64;
        let pi = stationary_distribution(&generator_matrix(&[-1.0, m2], &[0.0], 1.2).unwrap()).unwrap();
        assert!(pi[1] > last);
        last = pi[1];
    }
}

#[test]
fn exit_time_is_scale_free() {
    for c in [0.1, 0.5, 3.0, 17.0] {
        for alpha in [0.7, 1.5, 2.0] {
            let base = expected_exit_time(0.8, 0.05, alpha);
            let scaled = expected_exit_time(0.8 * c, 0.05 * c, alpha);
            assert!((base - scaled).abs() <= 1e-12 * base);
        }
    }
}

#[test]
fn exit_formula_plug_ins() {
    assert!((expected_exit_time(1.0, 0.1, 1.0) - 5.0).abs() < 1e-12);
    assert!((expected_exit_time(1.0, 1.0, 2.0) - 1.0).abs() < 1e-12);
    assert!((expected_exit_time(2.0, 0.1, 1.5) - 0.75 * 2f64.powf(1.5) * 10f64.powf(1.5)).abs() < 1e-9);
    assert_eq!(exit_survival(0.0, 1.0, 0.1, 1.0), 1.0);
    let mean = expected_exit_time(0.7, 0.03, 1.3);
    assert!((exit_survival(mean, 0.7, 0.03, 1.3) - (-1f64).exp()).abs() < 1e-12);
    assert!((exit_survival(5.0, 1.0, 0.1, 1.0) - (-1f64).exp()).abs() < 1e-12);
}

#[test]
fn ordering_violations_rejected() {
    assert!(generator_matrix(&[1.0, -1.0], &[0.0], 1.0).is_err());
    assert!(generator_matrix(&[-1.0, 1.0], &[2.0], 1.0).is_err());
    assert!(generator_matrix(&[-1.0, 1.0], &[], 1.0).is_err());
    assert!(generator_matrix(&[-1.0, 1.0], &[0.0], 2.5).is_err());
}
