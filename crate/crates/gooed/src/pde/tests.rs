use super::*;
use crate::stats;

fn heat_kernel(x: [f64; 2], center: [f64; 2], sd0: f64, t: f64) -> f64 {
    let v = sd0 * sd0 + 2.0 * t;
    let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
    sd0 * sd0 / v * (-r2 / (2.0 * v)).exp()
}

fn diffusion_cfg(dt: f64, t_end: f64) -> SolverConfig {
    SolverConfig {
        dt,
        t_end,
        snapshot_times: vec![t_end],
        velocity: Velocity::Zero,
        initial: InitialCondition::Gaussian {
            center: [0.5, 0.5],
            sd: 0.1,
            amplitude: 1.0,
        },
    }
}

fn no_source() -> SourceParams {
    SourceParams {
        s: 0.0,
        ..SourceParams::new([0.5, 0.5])
    }
}

/// Discrete L2 error against the heat kernel over `[0, 1]^2`.
fn l2_error(f: &Field) -> f64 {
    let g = f.grid;
    let mut acc = 0.0;
    for j in 0..g.n() {
        for i in 0..g.n() {
            let x = [g.coord(i), g.coord(j)];
            if x.iter().all(|v| (-1e-9..=1.0 + 1e-9).contains(v)) {
                acc += (f.at(i, j) - heat_kernel(x, [0.5, 0.5], 0.1, f.t)).powi(2) * g.dx() * g.dx();
            }
        }
    }
    acc.sqrt()
}

#[test]
fn grid_geometry() {
    let g = Grid2D::desk();
    assert_eq!(g.n(), 61);
    assert_eq!(g.node_of(1.0), Some(40));
    assert_eq!(Grid2D::paper().n(), 301);
    assert!(Grid2D::new(0.07).is_err());
}

#[test]
fn zero_source_stays_zero() {
    let sol = solve(&no_source(), &Grid2D::desk(), &SolverConfig::desk()).unwrap();
    assert_eq!(sol.fields.len(), 2);
    for f in &sol.fields {
        assert!(f.c.iter().all(|v| *v == 0.0));
    }
}

#[test]
fn tridiagonal_solve_matches_dense_product() {
    let n = 7;
    let r = 0.8;
    let t = Tridiag::new(n, r);
    let x: Vec<f64> = (0..n).map(|k| (k as f64 * 0.7).sin()).collect();
    // b = (I - r D2) x with mirrored ends.
    let b: Vec<f64> = (0..n)
        .map(|k| {
            let l = if k == 0 { x[1] } else { x[k - 1] };
            let rr = if k + 1 == n { x[n - 2] } else { x[k + 1] };
            x[k] - r * (l - 2.0 * x[k] + rr)
        })
        .collect();
    let mut v = b.clone();
    t.solve(&mut v, 0, 1);
    for (a, e) in v.iter().zip(&x) {
        assert!((a - e).abs() < 1e-12);
    }
}

#[test]
fn mass_balance_on_desk_grid() {
    let theta = [0.257, 0.528];
    let sol = solve(&SourceParams::new(theta), &Grid2D::desk(), &SolverConfig::desk()).unwrap();
    for f in &sol.fields {
        let expect = 2.0 * f.t;
        assert!((f.total_mass() - expect).abs() / expect < 0.005, "t={} mass {}", f.t, f.total_mass());
    }
    assert!(sol.max_cfl <= 1.0 && sol.warnings.is_empty());
}

#[test]
fn plume_drifts_to_top_right() {
    let sol = solve(&SourceParams::new([0.257, 0.528]), &Grid2D::desk(), &SolverConfig::desk()).unwrap();
    let (a, b) = (sol.fields[0].centroid(), sol.fields[1].centroid());
    assert!(b[0] > a[0] && b[1] > a[1], "{a:?} -> {b:?}");
}

#[test]
fn early_plume_translates_with_source() {
    let cfg = SolverConfig {
        t_end: 0.01,
        snapshot_times: vec![0.01],
        ..SolverConfig::desk()
    };
    let cfg = SolverConfig { dt: 1e-3, ..cfg };
    let g = Grid2D::new(0.025).unwrap();
    let a = solve(&SourceParams::new([0.3, 0.5]), &g, &cfg).unwrap().fields[0].centroid();
    let b = solve(&SourceParams::new([0.4, 0.5]), &g, &cfg).unwrap().fields[0].centroid();
    assert!(((b[0] - a[0]) - 0.1).abs() < 0.01, "{a:?} {b:?}");
    assert!((b[1] - a[1]).abs() < 0.01);
}

#[test]
fn spatial_order_is_two() {
    let t_end = 0.01;
    let errors: Vec<f64> = [0.05, 0.025, 0.0125, 0.00625]
        .iter()
        .map(|&dx| {
            let g = Grid2D::new(dx).unwrap();
            let sol = solve(&no_source(), &g, &diffusion_cfg(t_end / (100.0 * 0.05 / dx), t_end)).unwrap();
            l2_error(&sol.fields[0])
        })
        .collect();
    let hs = [0.05, 0.025, 0.0125, 0.00625];
    let p = stats::power_law_exponent(&hs, &errors);
    assert!((1.7..=2.3).contains(&p), "order {p}, errors {errors:?}");
}

#[test]
fn temporal_order_is_two() {
    let g = Grid2D::new(0.025).unwrap();
    let t_end = 0.016;
    let reference = solve(&no_source(), &g, &diffusion_cfg(t_end / 1024.0, t_end)).unwrap().fields[0].clone();
    let dts = [0.004, 0.002, 0.001];
    let errs: Vec<f64> = dts
        .iter()
        .map(|&dt| {
            let f = &solve(&no_source(), &g, &diffusion_cfg(dt, t_end)).unwrap().fields[0];
            f.c.iter().zip(&reference.c).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt()
        })
        .collect();
    let p = stats::power_law_exponent(&dts, &errs);
    assert!((1.7..=2.3).contains(&p), "order {p}, errors {errs:?}");
}

#[test]
fn sampling_and_flux_on_synthetic_fields() {
    let g = Grid2D::desk();
    let mut f = Field::zeros(g, 0.0);
    for j in 0..g.n() {
        for i in 0..g.n() {
            f.c[j * g.n() + i] = 3.0;
        }
    }
    assert_eq!(sample_concentration(&f, [0.123, -0.7]).unwrap(), 3.0);
    assert_eq!(right_boundary_flux(&f), 0.0);
    assert!(sample_concentration(&f, [2.1, 0.0]).is_err());

    for j in 0..g.n() {
        for i in 0..g.n() {
            f.c[j * g.n() + i] = -g.coord(i);
        }
    }
    assert!((right_boundary_flux(&f) - 2.0).abs() < 1e-12);
    assert!((sample_concentration(&f, [0.4125, 0.3]).unwrap() + 0.4125).abs() < 1e-12);
    assert_eq!(sample_concentration(&f, [0.05, 0.0]).unwrap(), f.at(21, 20));

    for j in 0..g.n() {
        for i in 0..g.n() {
            f.c[j * g.n() + i] = g.coord(j);
        }
    }
    assert!(right_boundary_flux(&f).abs() < 1e-12);
}

#[test]
fn flux_is_positive_for_plume_left_of_boundary() {
    let cfg = SolverConfig {
        velocity: Velocity::Zero,
        ..SolverConfig::desk()
    };
    let sol = solve(&SourceParams::new([0.3, 0.2]), &Grid2D::desk(), &cfg).unwrap();
    assert!(right_boundary_flux(&sol.fields[1]) > 0.0);
}

#[test]
fn surrogate_is_exact_at_knots() {
    let g = Grid2D::desk();
    let cfg = SolverConfig::desk();
    let tab = tabulate_surrogate(5, &g, &cfg).unwrap();
    let theta = [0.25, 0.75];
    let sol = solve(&SourceParams::new(theta), &g, &cfg).unwrap();
    for x in [[0.0, 0.0], [0.5, 0.35], [1.0, 1.0]] {
        let direct = sample_concentration(&sol.fields[1], x).unwrap();
        assert!((tab.concentration(T2, &theta, x) - direct).abs() < 1e-12);
    }
    assert!((tab.flux(&theta) - right_boundary_flux(&sol.fields[1])).abs() < 1e-12);
    assert!(tab.concentration(T1, &[1.2, 0.5], [0.5, 0.5]).is_nan());
}

#[test]
fn surrogate_refinement_reduces_error() {
    use rand::Rng as _;
    let g = Grid2D::desk();
    let cfg = SolverConfig::desk();
    let coarse = tabulate_surrogate(5, &g, &cfg).unwrap();
    let fine = tabulate_surrogate(9, &g, &cfg).unwrap();
    let mut r = crate::rng::from_seed(2);
    let (mut e5, mut e9) = (0.0f64, 0.0f64);
    for _ in 0..20 {
        let theta = [r.random::<f64>(), r.random::<f64>()];
        let x = [r.random::<f64>(), r.random::<f64>()];
        let sol = solve(&SourceParams::new(theta), &g, &cfg).unwrap();
        let direct = sample_concentration(&sol.fields[0], x).unwrap();
        e5 = e5.max((coarse.concentration(T1, &theta, x) - direct).abs());
        e9 = e9.max((fine.concentration(T1, &theta, x) - direct).abs());
    }
    assert!(e9 < e5, "{e9} vs {e5}");
}

#[test]
fn tabulated_mass_is_theta_independent() {
    // Mass is s t for every source location, so interpolating it in theta
    // is exact up to truncation.
    let g = Grid2D::desk();
    let cfg = SolverConfig::desk();
    let theta = [0.37, 0.61];
    let sol = solve(&SourceParams::new(theta), &g, &cfg).unwrap();
    let knots: Vec<f64> = [[0.25, 0.5], [0.5, 0.5], [0.25, 0.75], [0.5, 0.75]]
        .iter()
        .map(|t| solve(&SourceParams::new(*t), &g, &cfg).unwrap().fields[0].total_mass())
        .collect();
    let (wa, wb) = ((0.37 - 0.25) / 0.25, (0.61 - 0.5) / 0.25);
    let interp = (1.0 - wb) * ((1.0 - wa) * knots[0] + wa * knots[1]) + wb * ((1.0 - wa) * knots[2] + wa * knots[3]);
    assert!((interp - sol.fields[0].total_mass()).abs() < 1e-3);
    assert!((interp - 2.0 * T_OBSERVE).abs() < 1e-3);
}

#[test]
fn sensor_problem_shapes() {
    let tab = Arc::new(tabulate_surrogate(5, &Grid2D::desk(), &SolverConfig::desk()).unwrap());
    let p = build_sensor_problem(
        2,
        QoiSpec::ConcentrationPlusFlux { xi: [0.1, 1.0] },
        SurrogateSpec::Tabulated(tab.clone()),
    )
    .unwrap();
    assert_eq!((p.dims.theta, p.dims.y, p.dims.z, p.dims.d), (2, 2, 2, 4));
    let y = p.observe_mean(&[0.5, 0.5], &[0.5, 0.5, 0.9, 0.1]).unwrap();
    assert!((y[0] - tab.concentration(T1, &[0.5, 0.5], [0.5, 0.5])).abs() < 1e-15);
    assert!(build_sensor_problem(4, QoiSpec::Flux, SurrogateSpec::Tabulated(tab.clone())).is_err());
    assert!(build_sensor_problem(1, QoiSpec::Concentration { xi: vec![[1.5, 0.0]] }, SurrogateSpec::Tabulated(tab)).is_err());
}

#[test]
fn direct_and_tabulated_agree_at_knots() {
    let g = Grid2D::desk();
    let cfg = SolverConfig::desk();
    let tab = Arc::new(tabulate_surrogate(5, &g, &cfg).unwrap());
    let qoi = QoiSpec::ConcentrationPlusFlux { xi: [1.0, 1.0] };
    let a = build_sensor_problem(1, qoi.clone(), SurrogateSpec::Tabulated(tab)).unwrap();
    let b = build_sensor_problem(1, qoi, SurrogateSpec::Direct { grid: g, cfg }).unwrap();
    let theta = [0.5, 0.25];
    let d = [0.3, 0.65];
    let (ya, yb) = (a.observe_mean(&theta, &d).unwrap(), b.observe_mean(&theta, &d).unwrap());
    assert!((ya[0] - yb[0]).abs() < 1e-12);
    let mut r = crate::rng::from_seed(0);
    let (za, zb) = (a.predict_qoi(&theta, &mut r).unwrap(), b.predict_qoi(&theta, &mut r).unwrap());
    for k in 0..2 {
        assert!((za[k] - zb[k]).abs() < 1e-12);
    }
}

use std::sync::Arc;
