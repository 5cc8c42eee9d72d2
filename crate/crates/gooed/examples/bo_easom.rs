//! Bayesian optimization of the goal-oriented utility on the 2-D Easom
//! problem, with a shared prior-predictive cache across evaluations.
//!
//! `cargo run --release --example bo_easom`

use gooed::bo::{bo_optimize, BoConfig};
use gooed::eig::{expected_utility_nmc, prior_predictive_setup, NmcConfig};
use gooed::problem::builtin_problem;
use gooed::Result;

fn main() -> Result<()> {
    let p = builtin_problem("easom2d", None)?;
    let cfg = NmcConfig::new(150, 150, 7);
    let cache = prior_predictive_setup(&p, cfg.n_out, &Default::default(), cfg.self_evaluation, cfg.seed)?;
    let bo = BoConfig {
        bounds: p.design_bounds.clone(),
        max_iter: 25,
        length_scale: 0.3,
        seed: 7,
        ..Default::default()
    };
    let res = bo_optimize(|d| Ok(expected_utility_nmc(&p, &p.design(d.to_vec())?, &cfg, &cache)?.u), &bo)?;
    for r in &res.history {
        println!("{:3} [{:.3}, {:.3}] u {:.4} best {:.4}", r.iter, r.d[0], r.d[1], r.u, r.incumbent_u);
    }
    println!("d* = [{:.3}, {:.3}], u* = {:.4}", res.d_star[0], res.d_star[1], res.u_star);
    Ok(())
}
