//! Cross-validated KDE bandwidth for a bimodal sample, and the fitted log
//! density against the true mixture.
//!
//! `cargo run --release --example kde_bandwidth`

use gooed::kde::{cv_select_bandwidth, fit, logspace};
use gooed::{rng, Result, Samples};
use rand_distr::{Distribution, Normal};

fn main() -> Result<()> {
    let mut r = rng::from_seed(9);
    let (left, right) = (Normal::new(-1.0, 0.3).unwrap(), Normal::new(1.5, 0.5).unwrap());
    let z: Vec<f64> = (0..2000).map(|i| if i % 2 == 0 { left.sample(&mut r) } else { right.sample(&mut r) }).collect();
    let samples = Samples::scalar(z);
    let grid = logspace(0.01, 1.0, 25);
    let b = cv_select_bandwidth(&samples, &grid, 5, &mut r)?;
    println!("cv bandwidth {b:.4}");
    let kde = fit(samples, b)?;
    let pdf = |x: f64, m: f64, s: f64| (-0.5 * ((x - m) / s).powi(2)).exp() / (s * (2.0 * std::f64::consts::PI).sqrt());
    println!("    z  log kde  log true");
    for k in 0..=8 {
        let x = -2.0 + 0.5 * k as f64;
        let truth = 0.5 * pdf(x, -1.0, 0.3) + 0.5 * pdf(x, 1.5, 0.5);
        println!("{x:5.1} {:8.3} {:9.3}", kde.log_density(&[x]), truth.ln());
    }
    Ok(())
}
