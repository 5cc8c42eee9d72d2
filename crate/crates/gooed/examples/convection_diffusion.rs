//! Forward solve of the source-driven convection-diffusion problem.
//! Writes both snapshots to `target/convection_diffusion/`.
//!
//! `cargo run --release --example convection_diffusion [theta1 theta2]`

use gooed::pde::{right_boundary_flux, sample_concentration, solve, Grid2D, SolverConfig, SourceParams};
use gooed::Result;

fn main() -> Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let theta = if args.len() == 2 { [args[0], args[1]] } else { [0.257, 0.528] };
    let sol = solve(&SourceParams::new(theta), &Grid2D::desk(), &SolverConfig::desk())?;
    let dir = std::path::Path::new("target/convection_diffusion");
    std::fs::create_dir_all(dir)?;
    for f in &sol.fields {
        let c = f.centroid();
        println!(
            "t {:.2}: mass {:.5}, centroid [{:.3}, {:.3}], min {:.2e}, flux {:.5}, c(0.5,0.5) {:.5}",
            f.t,
            f.total_mass(),
            c[0],
            c[1],
            f.min(),
            right_boundary_flux(f),
            sample_concentration(f, [0.5, 0.5])?
        );
        f.export(dir, &format!("snapshot_t{}", f.t), theta, &[])?;
    }
    println!("max cfl {:.3}", sol.max_cfl);
    for w in &sol.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
