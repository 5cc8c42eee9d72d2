//! Config-driven batch commands: design sweeps, BO, validation against
//! reference estimators, and the convection-diffusion demo.
//!
//! Every command writes into one output directory. CSV rows and JSON files
//! carry the config hash, the seed and the toolkit version; wall times go
//! to separate `*_timing.csv` files so that the record files are
//! byte-identical across re-runs and thread counts.
//!
//! Record schemas (column order fixed):
//! * `sweep.csv`: `index, d1..dk, u, term_inner_mean, term_prior_pred_mean,
//!   n_out, n_in, bandwidth, retries, mean_acceptance, seed, config_hash, version`
//! * `sweep_timing.csv`: `index, wall_time_s, mcmc_s, predict_s, kde_s, seed, config_hash`
//! * `history.csv`: `iter, d1..dk, u, incumbent_u, acquisition_value, seed, config_hash, version`
//! * `validate.csv`: `index, d1..dk, u_nmc, u_reference, delta, u_analytic, seed, config_hash, version`
//! * `readouts.csv`: `index, d1..dk, y1..yn, seed, config_hash, version`
//!   (noise-free sensor readings for the demo source)

mod config;
mod output;

use std::path::{Path, PathBuf};

use serde_json::json;

pub use config::{
    resolution, BoSection, EstimatorConfig, EstimatorKind, McmcOverrides, PdeDemoConfig, ProblemConfig, StudyConfig,
    SweepConfig, ValidateConfig, MAX_SWEEP_POINTS,
};

use crate::bo::bo_optimize;
use crate::eig::{self, GridTarget, NmcConfig, PriorPredictiveCache, StageTimes};
use crate::error::{Error, Result};
use crate::pde::{self, SourceParams, T_OBSERVE, T_PREDICT};
use crate::problem::Problem;
use crate::stats;
use output::{design_columns, num, Plot, RecordWriter};

/// Toolkit version written into every record.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Sweep,
    Optimize,
    Validate,
    PdeDemo,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Sweep => "sweep",
            Command::Optimize => "optimize",
            Command::Validate => "validate",
            Command::PdeDemo => "pde-demo",
        }
    }
}

/// Command-line settings shared by all commands.
#[derive(Debug, Clone)]
pub struct RunOptions {
    pub out: PathBuf,
    pub seed: u64,
    /// Worker threads.
    pub threads: usize,
    pub paper_resolution: bool,
    pub emit_plot_script: bool,
}

/// What a command produced.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    /// `false` when `validate` thresholds were violated.
    pub passed: bool,
    pub files: Vec<PathBuf>,
    /// One-line summaries for the console.
    pub messages: Vec<String>,
}

/// Expected-utility evaluator shared by the commands.
pub struct Evaluator {
    pub problem: Problem,
    kind: EstimatorKind,
    nmc: NmcConfig,
    cache: Option<PriorPredictiveCache>,
    grid_nodes: usize,
}

/// One design evaluation.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub u: f64,
    pub term_inner_mean: f64,
    pub term_prior_pred_mean: f64,
    pub n_out: usize,
    pub n_in: usize,
    pub bandwidth: f64,
    pub retries: usize,
    pub mean_acceptance: f64,
    pub times: StageTimes,
}

impl Evaluator {
    /// Builds the prior-predictive cache once for NMC.
    pub fn new(problem: Problem, est: &EstimatorConfig, seed: u64) -> Result<Self> {
        let nmc = est.nmc(problem.dims.theta, seed);
        nmc.validate()?;
        let cache = match est.kind {
            EstimatorKind::Nmc => Some(eig::prior_predictive_setup(
                &problem,
                est.n_out,
                &est.prior_bandwidth,
                est.self_evaluation,
                seed,
            )?),
            EstimatorKind::GridParameter => {
                if problem.dims.theta > 2 {
                    return Err(Error::UnsupportedDimension(problem.dims.theta));
                }
                None
            }
        };
        Ok(Self {
            problem,
            kind: est.kind,
            nmc,
            cache,
            grid_nodes: est.grid_nodes,
        })
    }

    pub fn evaluate(&self, d: &[f64]) -> Result<Evaluation> {
        let dp = self.problem.design(d.to_vec())?;
        match &self.cache {
            Some(cache) => {
                let e = eig::expected_utility_nmc(&self.problem, &dp, &self.nmc, cache)?;
                Ok(Evaluation {
                    u: e.u,
                    term_inner_mean: e.term_inner_mean,
                    term_prior_pred_mean: e.term_prior_pred_mean,
                    n_out: e.n_out,
                    n_in: e.n_in,
                    bandwidth: e.bandwidth,
                    retries: e.retries,
                    mean_acceptance: e.mean_acceptance,
                    times: e.times,
                })
            }
            None => {
                let start = std::time::Instant::now();
                let u = eig::expected_utility_grid(
                    &self.problem,
                    &dp,
                    self.grid_nodes,
                    self.nmc.n_out,
                    self.nmc.seed,
                    GridTarget::Parameter,
                )?;
                Ok(Evaluation {
                    u,
                    term_inner_mean: f64::NAN,
                    term_prior_pred_mean: f64::NAN,
                    n_out: self.nmc.n_out,
                    n_in: self.grid_nodes,
                    bandwidth: f64::NAN,
                    retries: 0,
                    mean_acceptance: f64::NAN,
                    times: StageTimes {
                        wall_s: start.elapsed().as_secs_f64(),
                        ..StageTimes::default()
                    },
                })
            }
        }
    }

    pub fn kind(&self) -> EstimatorKind {
        self.kind
    }
}

/// Checks that `dir` can be written, creating it if needed.
fn prepare_output_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let probe = dir.join(".gooed-write-test");
    std::fs::write(&probe, b"")?;
    std::fs::remove_file(&probe)?;
    Ok(())
}

struct Ctx<'a> {
    cfg: &'a StudyConfig,
    opts: &'a RunOptions,
    hash: String,
    out: Outcome,
}

impl Ctx<'_> {
    fn seed(&self) -> u64 {
        self.opts.seed
    }

    fn path(&self, name: &str) -> PathBuf {
        self.opts.out.join(name)
    }

    /// `seed, config_hash, version` cells.
    fn tail(&self) -> [String; 3] {
        [self.seed().to_string(), self.hash.clone(), VERSION.to_string()]
    }

    fn meta(&self) -> serde_json::Value {
        json!({ "config_hash": self.hash, "seed": self.seed(), "version": VERSION })
    }

    fn plot(&mut self, csv: &Path, header: &[String], plot: Plot) -> Result<()> {
        if self.opts.emit_plot_script {
            let p = output::write_plot_script(csv, header, plot)?;
            self.out.files.push(p);
        }
        Ok(())
    }

    /// Utility plot over the design coordinates: a curve for 1D designs, a
    /// colored map for 2D, against the row index otherwise.
    fn design_plot(&mut self, csv: &Path, header: &[String], k: usize, u_col: usize) -> Result<()> {
        let plot = match k {
            1 => Plot::Lines { x: 2, ys: &[u_col], xlabel: "d", ylabel: "expected utility" },
            2 => Plot::Map { x: 2, y: 3, z: u_col, xlabel: "d1", ylabel: "d2" },
            _ => Plot::Lines { x: 1, ys: &[u_col], xlabel: "index", ylabel: "expected utility" },
        };
        self.plot(csv, header, plot)
    }
}

/// Runs one command on a worker pool of `opts.threads` threads.
pub fn run(cmd: Command, cfg: &StudyConfig, opts: &RunOptions) -> Result<Outcome> {
    if opts.threads == 0 {
        return Err(Error::Config("--threads must be >= 1".into()));
    }
    if cmd == Command::Optimize && cfg.bo.is_none() {
        return Err(Error::Config("optimize needs a 'bo' section".into()));
    }
    if matches!(cmd, Command::Sweep | Command::Validate) && cfg.sweep.is_none() {
        return Err(Error::Config(format!("{} needs a 'sweep' section", cmd.name())));
    }
    if cmd == Command::PdeDemo && cfg.problem.name != "pde-sensor" {
        return Err(Error::Config("pde-demo needs problem 'pde-sensor'".into()));
    }
    prepare_output_dir(&opts.out)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    let mut ctx = Ctx {
        cfg,
        opts,
        hash: cfg.hash(cmd.name(), opts.seed, opts.paper_resolution),
        out: Outcome {
            passed: true,
            ..Outcome::default()
        },
    };
    pool.install(|| {
        match cmd {
            Command::Sweep => {
                let ev = Evaluator::new(cfg.build_problem(opts.paper_resolution)?, &cfg.estimator, opts.seed)?;
                sweep(&mut ctx, &ev)?;
            }
            Command::Optimize => {
                let ev = Evaluator::new(cfg.build_problem(opts.paper_resolution)?, &cfg.estimator, opts.seed)?;
                optimize(&mut ctx, &ev)?;
            }
            Command::Validate => validate(&mut ctx)?,
            Command::PdeDemo => pde_demo(&mut ctx)?,
        }
        Ok::<_, Error>(())
    })?;
    Ok(ctx.out)
}

fn sweep(ctx: &mut Ctx, ev: &Evaluator) -> Result<Vec<(Vec<f64>, f64)>> {
    let sweep_cfg = ctx.cfg.sweep.as_ref().expect("checked by run");
    let designs = sweep_cfg.designs(&ev.problem.design_bounds)?;
    let k = ev.problem.dims.d;
    let mut header = vec!["index".to_string()];
    header.extend(design_columns(k));
    for h in [
        "u",
        "term_inner_mean",
        "term_prior_pred_mean",
        "n_out",
        "n_in",
        "bandwidth",
        "retries",
        "mean_acceptance",
        "seed",
        "config_hash",
        "version",
    ] {
        header.push(h.into());
    }
    let u_col = k + 2;
    let path = ctx.path("sweep.csv");
    let (mut w, kept) = RecordWriter::open_resumable(&path, &header, &ctx.hash)?;
    let timing_header: Vec<String> = ["index", "wall_time_s", "mcmc_s", "predict_s", "kde_s", "seed", "config_hash"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    let mut timing = output::open_append(&ctx.path("sweep_timing.csv"), &timing_header, kept.is_empty())?;

    let mut results: Vec<(Vec<f64>, f64)> = Vec::with_capacity(designs.len());
    let mut done = vec![false; designs.len()];
    for row in &kept {
        let idx: usize = row[0].parse().map_err(|_| Error::Config("corrupt index in sweep.csv".into()))?;
        if idx >= designs.len() {
            return Err(Error::Config("sweep.csv has more rows than the sweep".into()));
        }
        done[idx] = true;
    }
    if !kept.is_empty() {
        ctx.out.messages.push(format!("resuming sweep: {} of {} designs done", kept.len(), designs.len()));
    }
    for (idx, d) in designs.iter().enumerate() {
        if done[idx] {
            continue;
        }
        let e = ev.evaluate(d)?;
        let mut row = vec![idx.to_string()];
        row.extend(d.iter().map(|x| num(*x)));
        row.extend([
            num(e.u),
            num(e.term_inner_mean),
            num(e.term_prior_pred_mean),
            e.n_out.to_string(),
            e.n_in.to_string(),
            num(e.bandwidth),
            e.retries.to_string(),
            num(e.mean_acceptance),
        ]);
        row.extend(ctx.tail());
        w.write(&row)?;
        let t = e.times;
        timing.write_record([
            idx.to_string(),
            num(t.wall_s),
            num(t.mcmc_s),
            num(t.predict_s),
            num(t.kde_s),
            ctx.seed().to_string(),
            ctx.hash.clone(),
        ])?;
        timing.flush()?;
    }
    // Read back the finished file so resumed rows count too.
    let mut r = csv::Reader::from_path(&path)?;
    for rec in r.records() {
        let rec = rec?;
        let d: Vec<f64> = (1..=k).map(|c| rec[c].parse().unwrap_or(f64::NAN)).collect();
        results.push((d, rec[u_col - 1].parse().unwrap_or(f64::NAN)));
    }
    let us: Vec<f64> = results.iter().map(|r| r.1).collect();
    let best = stats::argmax(&us);
    ctx.out.messages.push(format!(
        "sweep: {} designs, max u = {:.4} at d = {:?}",
        results.len(),
        us[best],
        results[best].0
    ));
    ctx.out.files.push(path.clone());
    ctx.out.files.push(ctx.path("sweep_timing.csv"));
    ctx.design_plot(&path, &header, k, u_col)?;
    Ok(results)
}

fn optimize(ctx: &mut Ctx, ev: &Evaluator) -> Result<()> {
    let section = ctx.cfg.bo.as_ref().expect("checked by run");
    let bo_cfg = section.to_bo_config(&ev.problem.design_bounds, ctx.seed())?;
    let res = bo_optimize(|d| ev.evaluate(d).map(|e| e.u), &bo_cfg)?;
    let k = ev.problem.dims.d;
    let mut header = vec!["iter".to_string()];
    header.extend(design_columns(k));
    for h in ["u", "incumbent_u", "acquisition_value", "seed", "config_hash", "version"] {
        header.push(h.into());
    }
    let path = ctx.path("history.csv");
    let mut w = RecordWriter::create(&path, &header)?;
    for rec in &res.history {
        let mut row = vec![rec.iter.to_string()];
        row.extend(rec.d.iter().map(|x| num(*x)));
        row.extend([num(rec.u), num(rec.incumbent_u), num(rec.acquisition_value)]);
        row.extend(ctx.tail());
        w.write(&row)?;
    }
    let mut report = ctx.meta();
    report["d_star"] = json!(res.d_star);
    report["u_star"] = json!(res.u_star);
    report["evaluations"] = json!(res.history.len());
    report["problem"] = json!(ev.problem.name);
    let json_path = ctx.path("optimize.json");
    output::write_json(&json_path, &report)?;
    ctx.out.messages.push(format!(
        "optimize: d_star = {:?}, u_star = {:.4} after {} evaluations",
        res.d_star,
        res.u_star,
        res.history.len()
    ));
    ctx.out.files.push(json_path);
    ctx.out.files.push(path.clone());
    let (inc, u) = (k + 3, k + 2);
    ctx.plot(&path, &header, Plot::Lines { x: 1, ys: &[u, inc], xlabel: "evaluation", ylabel: "expected utility" })
}

/// Reference curve used by `validate`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Reference {
    /// Closed form, with the grid as a second opinion.
    Analytic,
    /// Grid EIG of an identity QoI: equal in expectation.
    GridQoi,
    /// Grid EIG of the parameters: an upper bound.
    GridParameterBound,
}

fn validate(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let problem = cfg.build_problem(ctx.opts.paper_resolution)?;
    let n_theta = problem.dims.theta;
    if n_theta > 2 {
        return Err(Error::UnsupportedDimension(n_theta));
    }
    let designs = cfg.sweep.as_ref().expect("checked by run").designs(&problem.design_bounds)?;
    let v = &cfg.validate;
    let reference = if problem.name == "linear-gaussian" {
        Reference::Analytic
    } else if problem.predict_is_identity {
        Reference::GridQoi
    } else {
        Reference::GridParameterBound
    };
    let target = if reference == Reference::GridParameterBound {
        GridTarget::Parameter
    } else {
        GridTarget::QoiIdentity
    };
    let noise_sd = problem.noise.sd[0];
    let ev = Evaluator::new(problem, &cfg.estimator, ctx.seed())?;
    let nodes = if n_theta == 2 { v.grid_nodes.min(200) } else { v.grid_nodes };

    let mut rows = Vec::with_capacity(designs.len());
    for d in &designs {
        let u_nmc = ev.evaluate(d)?.u;
        let dp = ev.problem.design(d.clone())?;
        let u_grid = eig::expected_utility_grid(&ev.problem, &dp, nodes, v.reference_n_out, ctx.seed(), target)?;
        let u_analytic = if reference == Reference::Analytic {
            0.5 * (1.0 + d[0] * d[0] / (noise_sd * noise_sd)).ln()
        } else {
            f64::NAN
        };
        let u_ref = if reference == Reference::Analytic { u_analytic } else { u_grid };
        rows.push((d.clone(), u_nmc, u_ref, u_analytic));
    }

    let k = ev.problem.dims.d;
    let mut header = vec!["index".to_string()];
    header.extend(design_columns(k));
    for h in ["u_nmc", "u_reference", "delta", "u_analytic", "seed", "config_hash", "version"] {
        header.push(h.into());
    }
    let path = ctx.path("validate.csv");
    let mut w = RecordWriter::create(&path, &header)?;
    for (idx, (d, a, b, c)) in rows.iter().enumerate() {
        let mut row = vec![idx.to_string()];
        row.extend(d.iter().map(|x| num(*x)));
        row.extend([num(*a), num(*b), num(a - b), num(*c)]);
        row.extend(ctx.tail());
        w.write(&row)?;
    }

    let nmc: Vec<f64> = rows.iter().map(|r| r.1).collect();
    let refs: Vec<f64> = rows.iter().map(|r| r.2).collect();
    let deltas: Vec<f64> = nmc.iter().zip(&refs).map(|(a, b)| a - b).collect();
    let rho = if rows.len() >= 3 { stats::spearman(&nmc, &refs) } else { f64::NAN };
    let (i_nmc, i_ref) = (stats::argmax(&nmc), stats::argmax(&refs));
    let argmax_distance = rows[i_nmc]
        .0
        .iter()
        .zip(&rows[i_ref].0)
        .map(|(a, b)| (a - b).powi(2))
        .sum::<f64>()
        .sqrt();
    let mean_delta = stats::mean(&deltas);
    let max_abs = deltas.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let max_excess = deltas.iter().fold(f64::NEG_INFINITY, |m, x| m.max(*x));

    let mut failures = Vec::new();
    let mut diagnosis = Vec::new();
    if !deltas.iter().all(|x| x.is_finite()) {
        failures.push("non-finite utility estimates".to_string());
    }
    match reference {
        Reference::GridParameterBound => {
            if max_excess > v.bound_tolerance {
                failures.push(format!(
                    "QoI EIG exceeds the parameter EIG by {max_excess:.4} > {}",
                    v.bound_tolerance
                ));
                diagnosis.push("overestimation: the posterior-predictive bandwidth is likely too small".to_string());
            }
        }
        Reference::Analytic | Reference::GridQoi => {
            if rows.len() >= 3 && !(rho >= v.min_spearman) {
                failures.push(format!("Spearman correlation {rho:.4} < {}", v.min_spearman));
            }
            if !(argmax_distance <= v.max_argmax_distance) {
                failures.push(format!("argmax distance {argmax_distance:.4} > {}", v.max_argmax_distance));
            }
            if reference == Reference::Analytic && !(max_abs <= v.max_abs_error) {
                failures.push(format!("max |NMC - analytic| = {max_abs:.4} > {}", v.max_abs_error));
            }
            if mean_delta < -v.max_mean_bias {
                failures.push(format!("mean bias {mean_delta:.4} < -{}", v.max_mean_bias));
                diagnosis.push(
                    "underestimation: NMC sits below the reference; the posterior-predictive bandwidth is likely too large"
                        .to_string(),
                );
            } else if mean_delta > v.max_mean_bias {
                failures.push(format!("mean bias {mean_delta:.4} > {}", v.max_mean_bias));
                diagnosis.push(
                    "overestimation: NMC sits above the reference; the posterior-predictive bandwidth is likely too small"
                        .to_string(),
                );
            }
        }
    }
    let passed = failures.is_empty();
    let mut report = ctx.meta();
    report["problem"] = json!(ev.problem.name);
    report["reference"] = json!(match reference {
        Reference::Analytic => "analytic",
        Reference::GridQoi => "grid-qoi",
        Reference::GridParameterBound => "grid-parameter-bound",
    });
    report["designs"] = json!(rows.len());
    report["spearman"] = finite_or_null(rho);
    report["argmax_nmc"] = json!(rows[i_nmc].0);
    report["argmax_reference"] = json!(rows[i_ref].0);
    report["argmax_distance"] = json!(argmax_distance);
    report["mean_delta"] = finite_or_null(mean_delta);
    report["max_abs_delta"] = finite_or_null(max_abs);
    report["passed"] = json!(passed);
    report["failures"] = json!(failures);
    report["diagnosis"] = json!(diagnosis);
    let json_path = ctx.path("validate.json");
    output::write_json(&json_path, &report)?;

    ctx.out.passed = passed;
    ctx.out.messages.push(format!(
        "validate ({}): spearman {rho:.4}, argmax distance {argmax_distance:.4}, mean delta {mean_delta:.4}, max |delta| {max_abs:.4}",
        report["reference"].as_str().unwrap()
    ));
    ctx.out.messages.extend(failures.iter().map(|f| format!("FAILED: {f}")));
    ctx.out.messages.extend(diagnosis);
    ctx.out.files.push(json_path);
    ctx.out.files.push(path.clone());
    if k == 1 {
        ctx.plot(&path, &header, Plot::Lines { x: 2, ys: &[3, 4], xlabel: "d", ylabel: "expected utility" })?;
    } else {
        ctx.design_plot(&path, &header, k, k + 2)?;
    }
    Ok(())
}

fn finite_or_null(x: f64) -> serde_json::Value {
    if x.is_finite() {
        json!(x)
    } else {
        serde_json::Value::Null
    }
}

fn pde_demo(ctx: &mut Ctx) -> Result<()> {
    let cfg = ctx.cfg;
    let theta = cfg.pde_demo.theta;
    if theta.iter().any(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::Config(format!("demo source {theta:?} outside [0, 1]^2")));
    }
    let (grid, solver) = resolution(ctx.opts.paper_resolution);
    let sol = pde::solve(&SourceParams::new(theta), &grid, &solver)?;
    let mut snapshots = Vec::new();
    for f in &sol.fields {
        let stem = format!("snapshot_t{}", f.t);
        let flux = pde::right_boundary_flux(f);
        let extra = [
            ("config_hash", json!(ctx.hash)),
            ("seed", json!(ctx.seed())),
            ("version", json!(VERSION)),
            ("flux", json!(flux)),
        ];
        f.export(&ctx.opts.out, &stem, theta, &extra)?;
        if ctx.opts.emit_plot_script {
            let header: Vec<String> = ["x1", "x2", "c"].iter().map(|s| s.to_string()).collect();
            let csv = ctx.path(&format!("{stem}.csv"));
            ctx.plot(&csv, &header, Plot::Map { x: 1, y: 2, z: 3, xlabel: "x1", ylabel: "x2" })?;
        }
        ctx.out.files.push(ctx.path(&format!("{stem}.csv")));
        snapshots.push(json!({
            "t": f.t,
            "file": format!("{stem}.csv"),
            "total_mass": f.total_mass(),
            "centroid": f.centroid(),
            "flux": flux,
        }));
    }
    let mut report = ctx.meta();
    report["theta"] = json!(theta);
    report["dx"] = json!(grid.dx());
    report["dt"] = json!(solver.dt);
    report["max_cfl"] = json!(sol.max_cfl);
    report["warnings"] = json!(sol.warnings);
    report["snapshots"] = json!(snapshots);
    let json_path = ctx.path("demo.json");
    output::write_json(&json_path, &report)?;
    ctx.out.files.push(json_path);
    ctx.out.messages.push(format!(
        "pde-demo: snapshots at t = {T_OBSERVE} and {T_PREDICT} for theta = {theta:?}, max CFL {:.3}",
        sol.max_cfl
    ));

    let ev = Evaluator::new(cfg.build_problem(ctx.opts.paper_resolution)?, &cfg.estimator, ctx.seed())?;
    if cfg.sweep.is_some() {
        let results = sweep(ctx, &ev)?;
        write_readouts(ctx, &sol.fields[0], &results)?;
    } else {
        optimize(ctx, &ev)?;
    }
    Ok(())
}

/// Noise-free sensor readings of the demo field at each swept design.
fn write_readouts(ctx: &mut Ctx, field: &pde::Field, results: &[(Vec<f64>, f64)]) -> Result<()> {
    let k = results.first().map_or(0, |r| r.0.len());
    let n = k / 2;
    let mut header = vec!["index".to_string()];
    header.extend(design_columns(k));
    header.extend((1..=n).map(|i| format!("y{i}")));
    for h in ["seed", "config_hash", "version"] {
        header.push(h.into());
    }
    let path = ctx.path("readouts.csv");
    let mut w = RecordWriter::create(&path, &header)?;
    for (idx, (d, _)) in results.iter().enumerate() {
        let mut row = vec![idx.to_string()];
        row.extend(d.iter().map(|x| num(*x)));
        for s in 0..n {
            row.push(num(pde::sample_concentration(field, [d[2 * s], d[2 * s + 1]])?));
        }
        row.extend(ctx.tail());
        w.write(&row)?;
    }
    ctx.out.files.push(path);
    Ok(())
}

#[cfg(test)]
mod tests;
