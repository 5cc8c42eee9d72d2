//! Ensemble stretch-move sampling of a correlated 2-D Gaussian restricted
//! to the unit box.
//!
//! `cargo run --release --example stretch_sampler`

use gooed::mcmc::{run_chain, StretchConfig};
use gooed::problem::PriorSpec;
use gooed::{rng, Result};

fn main() -> Result<()> {
    let (rho, s) = (0.9f64, 0.1f64);
    let mut log_post = |x: &[f64]| {
        let (a, b) = ((x[0] - 0.5) / s, (x[1] - 0.5) / s);
        -(a * a - 2.0 * rho * a * b + b * b) / (2.0 * (1.0 - rho * rho))
    };
    let cfg = StretchConfig { burn_in: 200, ..StretchConfig::for_dim(2) };
    let mut r = rng::from_seed(4);
    let out = run_chain(&cfg, &mut log_post, &PriorSpec::uniform_unit(2), &[0.5, 0.5], 20000, &mut r)?;
    let n = out.samples.len() as f64;
    let mean = |k: usize| out.samples.rows().map(|x| x[k]).sum::<f64>() / n;
    let (m0, m1) = (mean(0), mean(1));
    let cov = |i: usize, j: usize| {
        let m = [m0, m1];
        out.samples.rows().map(|x| (x[i] - m[i]) * (x[j] - m[j])).sum::<f64>() / (n - 1.0)
    };
    println!("mean [{m0:.4}, {m1:.4}] (0.5, 0.5)");
    println!("sd [{:.4}, {:.4}] ({s})", cov(0, 0).sqrt(), cov(1, 1).sqrt());
    println!("corr {:.3} ({rho})", cov(0, 1) / (cov(0, 0) * cov(1, 1)).sqrt());
    println!("acceptance {:.3}", out.acceptance_rate);
    Ok(())
}
