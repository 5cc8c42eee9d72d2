//! Config-driven sweep of one sensor location for the flux QoI, using the
//! same entry point as the `gooed` binary. Results go to
//! `target/sensor_placement/`.
//!
//! `cargo run --release --example sensor_placement`

use gooed::study::{self, Command, RunOptions, StudyConfig};
use gooed::Result;

const CONFIG: &str = r#"{
    "problem": { "name": "pde-sensor", "sensors": 1, "qoi": { "kind": "flux" } },
    "estimator": { "n_out": 100, "n_in": 100 },
    "sweep": { "points_per_axis": 5 }
}"#;

fn main() -> Result<()> {
    let cfg = StudyConfig::from_json(CONFIG)?;
    let opts = RunOptions {
        out: "target/sensor_placement".into(),
        seed: 1,
        threads: 1,
        paper_resolution: false,
        emit_plot_script: true,
    };
    let out = study::run(Command::Sweep, &cfg, &opts)?;
    let text = std::fs::read_to_string(opts.out.join("sweep.csv"))?;
    let mut rows: Vec<Vec<String>> = text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect();
    rows.sort_by(|a, b| b[3].parse::<f64>().unwrap().total_cmp(&a[3].parse::<f64>().unwrap()));
    println!("best sensor locations (d1, d2, u):");
    for r in rows.iter().take(5) {
        println!("  {}, {}, {}", r[1], r[2], r[3]);
    }
    for f in &out.files {
        println!("wrote {}", f.display());
    }
    Ok(())
}
