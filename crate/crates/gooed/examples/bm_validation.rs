//! Benchmark problem: NMC utility curve next to the grid reference for
//! `z = theta`.
//!
//! `cargo run --release --example bm_validation`

use gooed::eig::{expected_utility_grid, expected_utility_nmc, prior_predictive_setup, GridTarget, NmcConfig};
use gooed::problem::builtin_problem;
use gooed::stats::spearman;
use gooed::Result;

fn main() -> Result<()> {
    let p = builtin_problem("bm", None)?;
    let cfg = NmcConfig::new(300, 300, 3);
    let cache = prior_predictive_setup(&p, cfg.n_out, &Default::default(), cfg.self_evaluation, cfg.seed)?;
    let (mut nmc, mut grid) = (Vec::new(), Vec::new());
    println!("   d    nmc   grid");
    for k in 0..=10 {
        let d = p.design(vec![k as f64 / 10.0])?;
        let u = expected_utility_nmc(&p, &d, &cfg, &cache)?.u;
        let g = expected_utility_grid(&p, &d, 1000, 1000, 5, GridTarget::QoiIdentity)?;
        println!("{:4.1} {u:6.3} {g:6.3}", d.coords()[0]);
        nmc.push(u);
        grid.push(g);
    }
    println!("spearman {:.3}", spearman(&nmc, &grid));
    Ok(())
}
