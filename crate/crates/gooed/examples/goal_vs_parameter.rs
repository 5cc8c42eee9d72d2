//! Goal-oriented utility of a test problem next to the parameter EIG. The
//! two curves peak at different designs.
//!
//! `cargo run --release --example goal_vs_parameter [t1|t2|t3]`

use gooed::eig::{expected_utility_grid, expected_utility_nmc, prior_predictive_setup, GridTarget, NmcConfig};
use gooed::problem::builtin_problem;
use gooed::Result;

fn main() -> Result<()> {
    let name = std::env::args().nth(1).unwrap_or_else(|| "t3".into());
    let p = builtin_problem(&name, None)?;
    let cfg = NmcConfig::new(300, 300, 1);
    let cache = prior_predictive_setup(&p, cfg.n_out, &Default::default(), cfg.self_evaluation, cfg.seed)?;
    let mut best = [(f64::NEG_INFINITY, 0.0); 2];
    println!("   d   goal  param");
    for k in 0..=10 {
        let x = k as f64 / 10.0;
        let d = p.design(vec![x])?;
        let goal = expected_utility_nmc(&p, &d, &cfg, &cache)?.u;
        let param = expected_utility_grid(&p, &d, 1000, 1000, 5, GridTarget::Parameter)?;
        println!("{x:4.1} {goal:6.3} {param:6.3}");
        for (b, u) in best.iter_mut().zip([goal, param]) {
            if u > b.0 {
                *b = (u, x);
            }
        }
    }
    println!("argmax: goal {:.1}, param {:.1}", best[0].1, best[1].1);
    Ok(())
}
