//! Nested Monte Carlo against the closed-form EIG of the linear-Gaussian
//! model, `0.5 ln(1 + d^2 / sigma^2)`.
//!
//! `cargo run --release --example linear_gaussian`

use gooed::eig::{expected_utility_nmc, prior_predictive_setup, NmcConfig};
use gooed::problem::linear_gaussian;
use gooed::Result;

fn main() -> Result<()> {
    let sigma = 0.5;
    let p = linear_gaussian(sigma);
    let cfg = NmcConfig::new(500, 500, 1);
    let cache = prior_predictive_setup(&p, cfg.n_out, &Default::default(), cfg.self_evaluation, cfg.seed)?;
    println!("   d    nmc  exact");
    for k in 0..=4 {
        let d = 0.5 * k as f64;
        let est = expected_utility_nmc(&p, &p.design(vec![d])?, &cfg, &cache)?;
        let exact = 0.5 * (1.0 + d * d / (sigma * sigma)).ln();
        println!("{d:4.1} {:6.3} {exact:6.3}", est.u);
    }
    Ok(())
}
