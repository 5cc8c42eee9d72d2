//! Smaller KDE bandwidths inflate the estimate: the same frozen samples
//! evaluated at two fixed bandwidths and the adaptive one.
//!
//! `cargo run --release --example bandwidth_envelope`

use gooed::eig::{expected_utility_nmc, prior_predictive_setup, NmcConfig};
use gooed::kde::BandwidthPolicy;
use gooed::problem::builtin_problem;
use gooed::Result;

fn main() -> Result<()> {
    let p = builtin_problem("bm", None)?;
    let adaptive = NmcConfig::new(300, 300, 2);
    let cache = prior_predictive_setup(&p, adaptive.n_out, &Default::default(), adaptive.self_evaluation, 2)?;
    let fixed = |b| NmcConfig { bandwidth: BandwidthPolicy::Fixed { b }, ..adaptive.clone() };
    let (narrow, wide) = (fixed(0.0035), fixed(0.006));
    println!("   d  b=0.0035  b=0.006  adaptive (b)");
    for k in 0..=5 {
        let d = p.design(vec![k as f64 / 5.0])?;
        let n = expected_utility_nmc(&p, &d, &narrow, &cache)?.u;
        let w = expected_utility_nmc(&p, &d, &wide, &cache)?.u;
        let a = expected_utility_nmc(&p, &d, &adaptive, &cache)?;
        println!("{:4.1} {n:9.3} {w:8.3} {:9.3} ({:.4})", d.coords()[0], a.u, a.bandwidth);
    }
    Ok(())
}
