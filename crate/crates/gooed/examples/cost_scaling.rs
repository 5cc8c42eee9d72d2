//! Per-outer-iteration cost of the nested estimator on `ndim`: against the
//! inner sample size at N = 1, and against N at fixed sample sizes.
//!
//! `cargo run --release --example cost_scaling`

use gooed::eig::{expected_utility_nmc, prior_predictive_setup, NmcConfig};
use gooed::problem::builtin_problem;
use gooed::stats::power_law_exponent;
use gooed::Result;

fn stage_times(n: usize, n_out: usize, n_in: usize) -> Result<(f64, f64)> {
    let p = builtin_problem("ndim", Some(n))?;
    let cfg = NmcConfig::new(n_out, n_in, 11);
    let cache = prior_predictive_setup(&p, n_out, &Default::default(), cfg.self_evaluation, 11)?;
    let d = p.design(vec![0.6; n])?;
    let e = expected_utility_nmc(&p, &d, &cfg, &cache)?;
    let t = e.times;
    let total = t.mcmc_s + t.predict_s + t.kde_s;
    Ok((t.mcmc_s / n_out as f64, total / n_out as f64))
}

fn main() -> Result<()> {
    let n_ins = [250usize, 500, 1000];
    let mut mcmc = Vec::new();
    let mut outer = Vec::new();
    println!("n_in  mcmc_s/outer  total_s/outer  mcmc share");
    for &n_in in &n_ins {
        let (m, t) = stage_times(1, 40, n_in)?;
        println!("{n_in:5} {m:13.6} {t:14.6} {:10.3}", m / t);
        mcmc.push(m);
        outer.push(t);
    }
    let x: Vec<f64> = n_ins.iter().map(|v| *v as f64).collect();
    println!("power-law exponent: mcmc {:.3}, outer {:.3}", power_law_exponent(&x, &mcmc), power_law_exponent(&x, &outer));

    println!("\n N  mcmc_s/outer  total_s/outer  mcmc share");
    for n in [1usize, 2, 4] {
        let (m, t) = stage_times(n, 40, 500)?;
        println!("{n:2} {m:13.6} {t:14.6} {:10.3}", m / t);
    }
    Ok(())
}
