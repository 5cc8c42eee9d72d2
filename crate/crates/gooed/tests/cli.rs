use std::path::Path;
use std::process::Command;

fn gooed(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_gooed")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, text: &str) -> String {
    let p = dir.join("study.json");
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn run(cmd: &str, config: &str, out: &Path, seed: &str, threads: &str) -> std::process::Output {
    gooed(&[cmd, "--config", config, "--out", out.to_str().unwrap(), "--seed", seed, "--threads", threads])
}

const SWEEP: &str = r#"{"problem": {"name": "bm"}, "estimator": {"n_out": 30, "n_in": 30}, "sweep": {"points_per_axis": 4}}"#;

#[test]
fn sweep_succeeds() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let out = dir.path().join("out");
    let o = run("sweep", &cfg, &out, "3", "1");
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 5);
}

#[test]
fn failed_validation_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        r#"{
            "problem": {"name": "bm"},
            "estimator": {"n_out": 60, "n_in": 60, "bandwidth": {"kind": "fixed", "b": 10.0}},
            "validate": {"grid_nodes": 400, "reference_n_out": 400},
            "sweep": {"points_per_axis": 5}
        }"#,
    );
    let o = run("validate", &cfg, &dir.path().join("out"), "1", "1");
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn config_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");

    let bad = write_config(dir.path(), r#"{"problem": {"name": "bm"}, "sweep": {"points_per_axis": 4}, "typo": 1}"#);
    assert_eq!(run("sweep", &bad, &out, "1", "1").status.code(), Some(3));

    let missing = dir.path().join("nope.json");
    assert_eq!(run("sweep", missing.to_str().unwrap(), &out, "1", "1").status.code(), Some(3));

    let cfg = write_config(dir.path(), SWEEP);
    assert_eq!(gooed(&["sweep", "--config", &cfg, "--out", out.to_str().unwrap()]).status.code(), Some(3));
    assert_eq!(run("sweep", &cfg, &out, "1", "0").status.code(), Some(3));
}

#[test]
fn unwritable_output_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let file = dir.path().join("plain");
    std::fs::write(&file, "x").unwrap();
    let o = run("sweep", &cfg, &file.join("sub"), "1", "1");
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn thread_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), SWEEP);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert_eq!(run("sweep", &cfg, &a, "9", "1").status.code(), Some(0));
    assert_eq!(run("sweep", &cfg, &b, "9", "8").status.code(), Some(0));
    let read = |p: &Path| std::fs::read(p.join("sweep.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
}
