use nalgebra::SymmetricEigen;
use proptest::prelude::*;

use super::*;

#[test]
fn matern_values() {
    assert_eq!(matern52(0.0, 1.0), 1.0);
    let expect = (1.0 + 5f64.sqrt() + 5.0 / 3.0) * (-(5f64.sqrt())).exp();
    assert!((matern52(1.0, 1.0) - expect).abs() < 1e-15);
    assert!((matern52(1.0, 1.0) - 0.524_00).abs() < 1e-5);
    let mut prev = 1.0;
    for k in 1..200 {
        let v = matern52(k as f64 * 0.1, 1.0);
        assert!(v < prev && v > 0.0);
        prev = v;
    }
    assert!(matern52(50.0, 1.0) < 1e-40);
}

#[test]
fn single_point_interpolates() {
    let m = gp_fit(&[vec![0.3]], &[2.5], 1.0, 0.0).unwrap();
    let (mean, sd) = gp_posterior(&m, &[0.3]);
    assert!((mean - 2.5).abs() < 1e-6);
    assert!(sd < 1e-4);
}

#[test]
fn duplicate_points_average() {
    let m = gp_fit(&[vec![0.5], vec![0.5]], &[1.0, 3.0], 1.0, 0.0).unwrap();
    let (mean, _) = gp_posterior(&m, &[0.5]);
    assert!((mean - 2.0).abs() < 1e-6);
}

#[test]
fn regression_beats_prior_sd() {
    let f = |x: f64| (3.0 * x).sin() + 0.5 * x;
    let xs: Vec<Vec<f64>> = (0..20).map(|k| vec![k as f64 / 19.0]).collect();
    let us: Vec<f64> = xs.iter().map(|x| f(x[0])).collect();
    let m = gp_fit(&xs, &us, 1.0, 1e-6).unwrap();
    let held: Vec<f64> = (0..19).map(|k| (k as f64 + 0.5) / 19.0).collect();
    let rmse = (held.iter().map(|x| (gp_posterior(&m, &[*x]).0 - f(*x)).powi(2)).sum::<f64>() / held.len() as f64).sqrt();
    assert!(rmse < m.prior_sd() * 0.01, "rmse {rmse}");
}

#[test]
fn far_queries_revert_to_prior() {
    let xs = vec![vec![0.0], vec![0.2]];
    let m = gp_fit(&xs, &[1.0, 3.0], 1.0, 1e-8).unwrap();
    let (mean, sd) = gp_posterior(&m, &[80.0]);
    assert!((mean - 2.0).abs() < 1e-10);
    assert!((sd - m.prior_sd()).abs() < 1e-10);
}

#[test]
fn symmetric_data_gives_symmetric_mean() {
    let xs: Vec<Vec<f64>> = [0.1, 0.3, 0.7, 0.9].iter().map(|v| vec![*v]).collect();
    let us = [1.0, 2.0, 2.0, 1.0];
    let m = gp_fit(&xs, &us, 1.0, 1e-6).unwrap();
    for k in 0..50 {
        let x = k as f64 / 100.0;
        let (a, _) = gp_posterior(&m, &[x]);
        let (b, _) = gp_posterior(&m, &[1.0 - x]);
        assert!((a - b).abs() < 1e-8);
    }
}

#[test]
fn interpolation_with_tiny_noise() {
    let xs: Vec<Vec<f64>> = (0..8).map(|k| vec![k as f64 / 7.0, (k as f64 * 0.37) % 1.0]).collect();
    let us: Vec<f64> = xs.iter().map(|x| x[0] * x[0] - x[1]).collect();
    let m = gp_fit(&xs, &us, 1.0, 1e-10).unwrap();
    for (x, u) in xs.iter().zip(&us) {
        assert!((gp_posterior(&m, x).0 - u).abs() <= 1e-4);
    }
}

#[test]
fn ucb_cases() {
    let xs = vec![vec![0.2], vec![0.8]];
    let m = gp_fit(&xs, &[1.0, 1.0], 1.0, 1e-10).unwrap();
    let (mean, _) = gp_posterior(&m, &[0.5]);
    assert_eq!(ucb(&m, &[0.5], 0.0), mean);
    // Equal means, so kappa ranks by uncertainty.
    assert!(ucb(&m, &[0.5], 2.56) > ucb(&m, &[0.2], 2.56));
    let (m0, sd0) = gp_posterior(&m, &[0.2]);
    assert!((ucb(&m, &[0.2], 2.56) - m0 - 2.56 * sd0).abs() < 1e-12);
}

#[test]
fn kernel_matrices_are_psd() {
    let mut r = rng::from_seed(3);
    for _ in 0..20 {
        let xs: Vec<Vec<f64>> = (0..30).map(|_| (0..3).map(|_| r.random::<f64>()).collect()).collect();
        let eig = SymmetricEigen::new(kernel_matrix(&xs, 1.0));
        assert!(eig.eigenvalues.min() >= -1e-8);
    }
}

#[test]
fn acquisition_finds_quadratic_peak() {
    let xs: Vec<Vec<f64>> = [0.0, 0.15, 0.5, 0.8, 1.0].iter().map(|v| vec![*v]).collect();
    let us: Vec<f64> = xs.iter().map(|x| -(x[0] - 0.3).powi(2)).collect();
    let m = gp_fit(&xs, &us, 1.0, 1e-10).unwrap();
    let (d, _) = maximize_acquisition(&m, &[(0.0, 1.0)], 0.0, 8, &mut rng::from_seed(0));
    assert!((d[0] - 0.3).abs() < 0.05, "{d:?}");
}

#[test]
fn acquisition_is_feasible_and_beats_starts() {
    let m = gp_fit(&[vec![0.4, 0.4]], &[1.0], 1.0, 0.0).unwrap();
    let bounds = [(0.0, 1.0), (0.0, 1.0)];
    let (d, v) = maximize_acquisition(&m, &bounds, 2.56, 32, &mut rng::from_seed(9));
    assert!(d.iter().all(|x| (0.0..=1.0).contains(x)));
    let mut r = rng::from_seed(9);
    for _ in 0..32 {
        let s: Vec<f64> = bounds.iter().map(|(lo, hi)| r.random_range(*lo..=*hi)).collect();
        assert!(v >= ucb(&m, &s, 2.56));
    }
    let again = maximize_acquisition(&m, &bounds, 2.56, 32, &mut rng::from_seed(9));
    assert_eq!(again.0, d);
}

#[test]
fn bo_finds_quadratic_optimum() {
    let cfg = BoConfig {
        max_iter: 40,
        seed: 1,
        ..BoConfig::default()
    };
    let res = bo_optimize(|d| Ok(-(d[0] - 0.7).powi(2)), &cfg).unwrap();
    assert!((res.d_star[0] - 0.7).abs() <= 0.05, "{:?}", res.d_star);
    for w in res.history.windows(2) {
        assert!(w[1].incumbent_u >= w[0].incumbent_u);
    }
}

#[test]
fn bo_constant_objective_and_failures() {
    let cfg = BoConfig {
        max_iter: 15,
        ..BoConfig::default()
    };
    let mut calls = 0;
    let res = bo_optimize(
        |d| {
            calls += 1;
            if calls == 2 {
                Err(Error::Config("boom".into()))
            } else {
                Ok(0.25 + 0.0 * d[0])
            }
        },
        &cfg,
    )
    .unwrap();
    assert_eq!(res.u_star, 0.25);
    assert!(res.history[1].u.is_nan());
    assert!(res.history.len() <= cfg.n_init + cfg.max_iter);
}

#[test]
fn bo_retune_runs() {
    let cfg = BoConfig {
        max_iter: 25,
        retune: true,
        patience: 100,
        seed: 4,
        ..BoConfig::default()
    };
    let res = bo_optimize(|d| Ok((-(d[0] - 0.2).powi(2) / 0.002).exp()), &cfg).unwrap();
    assert!(res.u_star > 0.5, "{}", res.u_star);
}

proptest! {
    #[test]
    fn ucb_dominates_mean(q in 0.0f64..1.0, kappa in 0.0f64..5.0) {
        let xs: Vec<Vec<f64>> = [0.1, 0.45, 0.9].iter().map(|v| vec![*v]).collect();
        let m = gp_fit(&xs, &[0.3, -1.0, 2.0], 1.0, 1e-6).unwrap();
        prop_assert!(ucb(&m, &[q], kappa) >= gp_posterior(&m, &[q]).0);
    }
}
