//! Study configuration files.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bo::BoConfig;
use crate::eig::NmcConfig;
use crate::error::{Error, Result};
use crate::kde::{BandwidthPolicy, SelfEvaluation};
use crate::mcmc::StretchConfig;
use crate::pde::{self, Grid2D, QoiSpec, SolverConfig, SurrogateSpec};
use crate::problem::{builtin_problem, linear_gaussian, Problem};

/// One study. Exactly one of `sweep` and `bo` must be present.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    pub problem: ProblemConfig,
    #[serde(default)]
    pub estimator: EstimatorConfig,
    #[serde(default)]
    pub sweep: Option<SweepConfig>,
    #[serde(default)]
    pub bo: Option<BoSection>,
    #[serde(default)]
    pub validate: ValidateConfig,
    #[serde(default)]
    pub pde_demo: PdeDemoConfig,
    /// Output directory; the `--out` flag takes precedence.
    #[serde(default)]
    pub output: Option<PathBuf>,
    /// Master seed; the `--seed` flag takes precedence.
    #[serde(default)]
    pub seed: Option<u64>,
}

/// Problem name plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    /// A built-in name, or `pde-sensor`.
    pub name: String,
    /// Dimension of `ndim`.
    #[serde(default)]
    pub n: Option<usize>,
    /// Observation noise sd override.
    #[serde(default)]
    pub noise_sd: Option<f64>,
    /// Sensor count of `pde-sensor`.
    #[serde(default)]
    pub sensors: Option<usize>,
    /// QoI of `pde-sensor`.
    #[serde(default)]
    pub qoi: Option<QoiSpec>,
    /// Source locations per axis of the tabulated `pde-sensor` surrogate.
    #[serde(default)]
    pub surrogate_points: Option<usize>,
}

/// Which expected-utility estimator fills the records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EstimatorKind {
    /// Nested Monte Carlo on the QoI.
    #[default]
    Nmc,
    /// Grid quadrature of the parameter EIG (`n_theta <= 2`).
    GridParameter,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimatorConfig {
    pub kind: EstimatorKind,
    pub n_out: usize,
    pub n_in: usize,
    /// Posterior-predictive bandwidth.
    pub bandwidth: BandwidthPolicy,
    /// Prior-predictive bandwidth.
    pub prior_bandwidth: BandwidthPolicy,
    pub self_evaluation: SelfEvaluation,
    pub mcmc: McmcOverrides,
    /// Parameter grid nodes per axis for `grid-parameter`.
    pub grid_nodes: usize,
}

impl Default for EstimatorConfig {
    fn default() -> Self {
        Self {
            kind: EstimatorKind::Nmc,
            n_out: 1000,
            n_in: 1000,
            bandwidth: BandwidthPolicy::default(),
            prior_bandwidth: BandwidthPolicy::default(),
            self_evaluation: SelfEvaluation::Inclusive,
            mcmc: McmcOverrides::default(),
            grid_nodes: 200,
        }
    }
}

impl EstimatorConfig {
    pub fn nmc(&self, n_theta: usize, seed: u64) -> NmcConfig {
        let mut cfg = NmcConfig::new(self.n_out, self.n_in, seed);
        cfg.mcmc = Some(self.mcmc.apply(StretchConfig::for_dim(n_theta)));
        cfg.bandwidth = self.bandwidth.clone();
        cfg.self_evaluation = self.self_evaluation;
        cfg
    }
}

/// Sampler settings that replace the per-dimension defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct McmcOverrides {
    pub n_walkers: Option<usize>,
    pub a: Option<f64>,
    pub burn_in: Option<usize>,
    pub thin: Option<usize>,
    pub init_jitter_sd: Option<f64>,
}

impl McmcOverrides {
    fn apply(&self, mut c: StretchConfig) -> StretchConfig {
        c.n_walkers = self.n_walkers.unwrap_or(c.n_walkers);
        c.a = self.a.unwrap_or(c.a);
        c.burn_in = self.burn_in.unwrap_or(c.burn_in);
        c.thin = self.thin.unwrap_or(c.thin);
        c.init_jitter_sd = self.init_jitter_sd.unwrap_or(c.init_jitter_sd);
        c
    }
}

/// Designs of a sweep: a tensor grid over the design bounds or an explicit
/// list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default)]
    pub points_per_axis: Option<usize>,
    #[serde(default)]
    pub designs: Option<Vec<Vec<f64>>>,
}

/// Largest sweep accepted.
pub const MAX_SWEEP_POINTS: usize = 100_000;

impl SweepConfig {
    /// Design coordinates in sweep order. Grids vary the last coordinate
    /// fastest.
    pub fn designs(&self, bounds: &[(f64, f64)]) -> Result<Vec<Vec<f64>>> {
        let designs = match (&self.points_per_axis, &self.designs) {
            (Some(m), None) => {
                let m = *m;
                if m < 2 {
                    return Err(Error::Config("points_per_axis must be >= 2".into()));
                }
                let total = (m as f64).powi(bounds.len() as i32);
                if total > MAX_SWEEP_POINTS as f64 {
                    return Err(Error::Config(format!("sweep grid has {total} points, limit {MAX_SWEEP_POINTS}")));
                }
                let total = total as usize;
                (0..total)
                    .map(|idx| {
                        let mut rest = idx;
                        let mut d = vec![0.0; bounds.len()];
                        for k in (0..bounds.len()).rev() {
                            let (lo, hi) = bounds[k];
                            d[k] = lo + (hi - lo) * (rest % m) as f64 / (m - 1) as f64;
                            rest /= m;
                        }
                        d
                    })
                    .collect()
            }
            (None, Some(list)) => {
                if list.is_empty() || list.len() > MAX_SWEEP_POINTS {
                    return Err(Error::Config(format!(
                        "design list must hold 1..={MAX_SWEEP_POINTS} entries"
                    )));
                }
                list.clone()
            }
            _ => return Err(Error::Config("sweep needs exactly one of points_per_axis and designs".into())),
        };
        for d in &designs {
            if d.len() != bounds.len() {
                return Err(Error::Config(format!("design {d:?} must have {} coordinates", bounds.len())));
            }
            if d.iter().zip(bounds).any(|(x, (lo, hi))| !(x >= lo && x <= hi)) {
                return Err(Error::Config(format!("design {d:?} outside the design bounds {bounds:?}")));
            }
        }
        Ok(designs)
    }
}

/// Optimizer settings; bounds default to the problem's design bounds and
/// the seed comes from the study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoSection {
    pub bounds: Option<Vec<(f64, f64)>>,
    pub n_init: usize,
    pub max_iter: usize,
    pub kappa: f64,
    pub restarts: usize,
    pub length_scale: f64,
    pub noise_fraction: f64,
    pub eps_improvement: f64,
    pub patience: usize,
    pub retune: bool,
}

impl Default for BoSection {
    fn default() -> Self {
        let d = BoConfig::default();
        Self {
            bounds: None,
            n_init: d.n_init,
            max_iter: d.max_iter,
            kappa: d.kappa,
            restarts: d.restarts,
            length_scale: d.length_scale,
            noise_fraction: d.noise_fraction,
            eps_improvement: d.eps_improvement,
            patience: d.patience,
            retune: d.retune,
        }
    }
}

impl BoSection {
    pub fn to_bo_config(&self, problem_bounds: &[(f64, f64)], seed: u64) -> Result<BoConfig> {
        let bounds = self.bounds.clone().unwrap_or_else(|| problem_bounds.to_vec());
        if bounds.len() != problem_bounds.len() {
            return Err(Error::Config(format!(
                "BO bounds have {} coordinates, the design has {}",
                bounds.len(),
                problem_bounds.len()
            )));
        }
        let cfg = BoConfig {
            bounds,
            n_init: self.n_init,
            max_iter: self.max_iter,
            kappa: self.kappa,
            restarts: self.restarts,
            length_scale: self.length_scale,
            noise_fraction: self.noise_fraction,
            eps_improvement: self.eps_improvement,
            patience: self.patience,
            retune: self.retune,
            seed,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Thresholds and reference settings of `validate`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ValidateConfig {
    /// Nodes per parameter axis of the grid reference.
    pub grid_nodes: usize,
    /// Outer samples of the grid reference.
    pub reference_n_out: usize,
    pub min_spearman: f64,
    pub max_argmax_distance: f64,
    /// Largest `|NMC - analytic|`, where an analytic EIG exists.
    pub max_abs_error: f64,
    /// Largest mean shortfall of NMC below an exact reference.
    pub max_mean_bias: f64,
    /// Slack of `NMC <= parameter EIG` when the QoI is not the parameter.
    pub bound_tolerance: f64,
}

impl Default for ValidateConfig {
    fn default() -> Self {
        Self {
            grid_nodes: 1000,
            reference_n_out: 2000,
            min_spearman: 0.9,
            max_argmax_distance: 0.1,
            max_abs_error: 0.15,
            max_mean_bias: 0.5,
            bound_tolerance: 0.15,
        }
    }
}

/// Settings of `pde-demo`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PdeDemoConfig {
    /// Source location of the exported snapshots.
    pub theta: [f64; 2],
}

impl Default for PdeDemoConfig {
    fn default() -> Self {
        Self { theta: [0.257, 0.528] }
    }
}

/// Solver resolution.
pub fn resolution(paper: bool) -> (Grid2D, SolverConfig) {
    if paper {
        (Grid2D::paper(), SolverConfig::paper())
    } else {
        (Grid2D::desk(), SolverConfig::desk())
    }
}

impl StudyConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: StudyConfig = serde_json::from_str(text).map_err(|e| Error::Config(format!("config: {e}")))?;
        cfg.check()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn check(&self) -> Result<()> {
        if self.sweep.is_some() == self.bo.is_some() {
            return Err(Error::Config("config needs exactly one of 'sweep' and 'bo'".into()));
        }
        let e = &self.estimator;
        if e.n_out < 2 || e.n_in < 2 {
            return Err(Error::Config("estimator needs n_out >= 2 and n_in >= 2".into()));
        }
        e.bandwidth.validate()?;
        e.prior_bandwidth.validate()?;
        if e.kind == EstimatorKind::GridParameter && e.grid_nodes < 2 {
            return Err(Error::Config("grid_nodes must be >= 2".into()));
        }
        Ok(())
    }

    /// SHA-256 of the canonical JSON of this config (sorted keys, defaults
    /// filled in, output directory and seed removed) together with the
    /// effective `seed`, the command and the resolution flag.
    pub fn hash(&self, command: &str, seed: u64, paper_resolution: bool) -> String {
        let mut c = self.clone();
        c.output = None;
        c.seed = None;
        let canonical = serde_json::json!({
            "command": command,
            "config": serde_json::to_value(&c).expect("config serializes"),
            "paper_resolution": paper_resolution,
            "seed": seed,
        });
        hex::encode(Sha256::digest(canonical.to_string().as_bytes()))
    }

    /// Builds the problem. `pde-sensor` tabulates its surrogate here.
    pub fn build_problem(&self, paper_resolution: bool) -> Result<Problem> {
        let pc = &self.problem;
        let pde_only = pc.sensors.is_some() || pc.qoi.is_some() || pc.surrogate_points.is_some();
        let problem = match pc.name.as_str() {
            "pde-sensor" => {
                let qoi = pc
                    .qoi
                    .clone()
                    .ok_or_else(|| Error::Config("pde-sensor needs a 'qoi'".into()))?;
                let (grid, solver) = resolution(paper_resolution);
                let tab = pde::tabulate_surrogate(pc.surrogate_points.unwrap_or(17), &grid, &solver)?;
                pde::build_sensor_problem(pc.sensors.unwrap_or(1), qoi, SurrogateSpec::Tabulated(Arc::new(tab)))?
            }
            _ if pde_only => {
                return Err(Error::Config(format!(
                    "sensors, qoi and surrogate_points only apply to pde-sensor, not '{}'",
                    pc.name
                )))
            }
            "linear-gaussian" => linear_gaussian(pc.noise_sd.unwrap_or(0.1)),
            name => builtin_problem(name, pc.n)?,
        };
        match pc.noise_sd {
            Some(sd) if !(sd > 0.0 && sd.is_finite()) => Err(Error::Config("noise_sd must be positive".into())),
            Some(sd) => Ok(problem.with_noise_sd(sd)),
            None => Ok(problem),
        }
    }
}
