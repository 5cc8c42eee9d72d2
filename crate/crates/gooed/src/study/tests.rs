use super::*;

fn small_bm(extra: &str) -> String {
    format!(
        r#"{{
            "problem": {{ "name": "bm" }},
            "estimator": {{ "n_out": 40, "n_in": 40 }},
            "sweep": {{ "points_per_axis": 5 }}{extra}
        }}"#
    )
}

fn opts(dir: &Path, threads: usize) -> RunOptions {
    RunOptions {
        out: dir.to_path_buf(),
        seed: 3,
        threads,
        paper_resolution: false,
        emit_plot_script: false,
    }
}

#[test]
fn exactly_one_of_sweep_and_bo() {
    let both = r#"{"problem": {"name": "bm"}, "sweep": {"points_per_axis": 3}, "bo": {}}"#;
    let none = r#"{"problem": {"name": "bm"}}"#;
    assert!(matches!(StudyConfig::from_json(both), Err(Error::Config(_))));
    assert!(matches!(StudyConfig::from_json(none), Err(Error::Config(_))));
    assert!(StudyConfig::from_json(&small_bm("")).is_ok());
}

#[test]
fn unknown_fields_are_rejected() {
    let text = r#"{"problem": {"name": "bm"}, "sweep": {"points_per_axis": 3}, "estimatr": {}}"#;
    assert!(matches!(StudyConfig::from_json(text), Err(Error::Config(_))));
}

#[test]
fn hash_ignores_field_order_and_spelled_out_defaults() {
    let a = StudyConfig::from_json(&small_bm("")).unwrap();
    let b = StudyConfig::from_json(
        r#"{
            "sweep": { "points_per_axis": 5 },
            "estimator": { "n_in": 40, "kind": "nmc", "n_out": 40 },
            "problem": { "name": "bm" }
        }"#,
    )
    .unwrap();
    assert_eq!(a.hash("sweep", 1, false), b.hash("sweep", 1, false));
    assert_ne!(a.hash("sweep", 1, false), a.hash("sweep", 2, false));
    assert_ne!(a.hash("sweep", 1, false), a.hash("sweep", 1, true));
    assert_eq!(a.hash("sweep", 1, false).len(), 64);
}

#[test]
fn sweep_grid_order_and_limits() {
    let s = SweepConfig {
        points_per_axis: Some(3),
        designs: None,
    };
    let d = s.designs(&[(0.0, 1.0), (0.0, 2.0)]).unwrap();
    assert_eq!(d.len(), 9);
    assert_eq!(d[0], vec![0.0, 0.0]);
    assert_eq!(d[1], vec![0.0, 1.0]);
    assert_eq!(d[3], vec![0.5, 0.0]);
    let big = SweepConfig {
        points_per_axis: Some(400),
        designs: None,
    };
    assert!(big.designs(&[(0.0, 1.0); 2]).is_err());
    let outside = SweepConfig {
        points_per_axis: None,
        designs: Some(vec![vec![1.5]]),
    };
    assert!(outside.designs(&[(0.0, 1.0)]).is_err());
}

#[test]
fn sweep_is_deterministic_across_threads() {
    let cfg = StudyConfig::from_json(&small_bm("")).unwrap();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run(Command::Sweep, &cfg, &opts(a.path(), 1)).unwrap();
    run(Command::Sweep, &cfg, &opts(b.path(), 4)).unwrap();
    let fa = std::fs::read(a.path().join("sweep.csv")).unwrap();
    let fb = std::fs::read(b.path().join("sweep.csv")).unwrap();
    assert_eq!(fa, fb);
    let text = String::from_utf8(fa).unwrap();
    assert_eq!(text.lines().count(), 6);
    assert!(text.contains(&cfg.hash("sweep", 3, false)));
}

#[test]
fn sweep_resumes_after_interruption() {
    let cfg = StudyConfig::from_json(&small_bm("")).unwrap();
    let full = tempfile::tempdir().unwrap();
    run(Command::Sweep, &cfg, &opts(full.path(), 2)).unwrap();
    let reference = std::fs::read_to_string(full.path().join("sweep.csv")).unwrap();

    // Keep the header, two rows and half of a third.
    let cut = tempfile::tempdir().unwrap();
    let lines: Vec<&str> = reference.lines().collect();
    let partial = format!("{}\n{}\n{}\n{}", lines[0], lines[1], lines[2], &lines[3][..10]);
    std::fs::write(cut.path().join("sweep.csv"), partial).unwrap();
    let out = run(Command::Sweep, &cfg, &opts(cut.path(), 2)).unwrap();
    assert!(out.messages[0].contains("2 of 5"));
    assert_eq!(std::fs::read_to_string(cut.path().join("sweep.csv")).unwrap(), reference);

    // A different seed refuses to mix into the same file.
    let mut o = opts(cut.path(), 2);
    o.seed = 4;
    assert!(matches!(run(Command::Sweep, &cfg, &o), Err(Error::Config(_))));
}

#[test]
fn large_bandwidth_fails_validation_with_diagnosis() {
    let text = r#"{
        "problem": { "name": "bm" },
        "estimator": { "n_out": 60, "n_in": 60, "bandwidth": { "kind": "fixed", "b": 10.0 } },
        "validate": { "grid_nodes": 400, "reference_n_out": 400 },
        "sweep": { "points_per_axis": 5 }
    }"#;
    let cfg = StudyConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let out = run(Command::Validate, &cfg, &opts(dir.path(), 2)).unwrap();
    assert!(!out.passed);
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("validate.json")).unwrap()).unwrap();
    assert_eq!(report["passed"], false);
    assert!(report["diagnosis"][0].as_str().unwrap().starts_with("underestimation"));
}

#[test]
fn validate_rejects_high_dimension() {
    let text = r#"{"problem": {"name": "ndim", "n": 3}, "sweep": {"designs": [[0.1, 0.2, 0.3]]}}"#;
    let cfg = StudyConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        run(Command::Validate, &cfg, &opts(dir.path(), 1)),
        Err(Error::UnsupportedDimension(3))
    ));
}

#[test]
fn optimize_writes_report_and_history() {
    let text = r#"{
        "problem": { "name": "linear-gaussian" },
        "estimator": { "kind": "grid-parameter", "n_out": 200, "grid_nodes": 200 },
        "bo": { "max_iter": 6 }
    }"#;
    let cfg = StudyConfig::from_json(text).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let mut o = opts(dir.path(), 2);
    o.emit_plot_script = true;
    run(Command::Optimize, &cfg, &o).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("optimize.json")).unwrap()).unwrap();
    assert_eq!(report["seed"], 3);
    assert!(report["u_star"].as_f64().unwrap() > 0.0);
    let history = std::fs::read_to_string(dir.path().join("history.csv")).unwrap();
    assert_eq!(history.lines().count(), 1 + report["evaluations"].as_u64().unwrap() as usize);
    assert!(dir.path().join("history.gp").exists());
}

#[test]
fn unknown_problem_and_pde_fields() {
    let bad = r#"{"problem": {"name": "nope"}, "sweep": {"points_per_axis": 3}}"#;
    let cfg = StudyConfig::from_json(bad).unwrap();
    assert!(matches!(cfg.build_problem(false), Err(Error::Config(_))));
    let misplaced = r#"{"problem": {"name": "bm", "sensors": 2}, "sweep": {"points_per_axis": 3}}"#;
    let cfg = StudyConfig::from_json(misplaced).unwrap();
    assert!(matches!(cfg.build_problem(false), Err(Error::Config(_))));
}
