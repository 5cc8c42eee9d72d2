//! Quadrature references for low-dimensional parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::PriorPredictiveCache;
use crate::error::{Error, Result};
use crate::kde::{self, BandwidthPolicy};
use crate::mcmc::{self, StretchConfig};
use crate::problem::{DesignPoint, Problem};
use crate::rng::{self, purpose};
use crate::stats::log_sum_exp;

/// What the grid reference measures information about.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridTarget {
    /// EIG in the parameters.
    Parameter,
    /// EIG in the QoI; only defined when the prediction is the identity.
    QoiIdentity,
}

/// Midpoint tensor grid over the prior's integration box, with G(theta, d)
/// and the log prior tabulated at every node.
struct ParamGrid {
    log_prior: Vec<f64>,
    g: Vec<f64>,
    ln_cell: f64,
    ny: usize,
}

impl ParamGrid {
    fn new(p: &Problem, d: &[f64], nodes_per_axis: usize) -> Result<Self> {
        let nt = p.dims.theta;
        if nt > 2 {
            return Err(Error::UnsupportedDimension(nt));
        }
        if nodes_per_axis < 2 {
            return Err(Error::Config("grid needs at least 2 nodes per axis".into()));
        }
        let ranges = p.prior.integration_range();
        let widths: Vec<f64> = ranges.iter().map(|(lo, hi)| (hi - lo) / nodes_per_axis as f64).collect();
        let axis = |k: usize, j: usize| ranges[k].0 + (j as f64 + 0.5) * widths[k];
        let total = nodes_per_axis.pow(nt as u32);
        let ny = p.dims.y;
        let mut log_prior = Vec::with_capacity(total);
        let mut g = vec![0.0; total * ny];
        let mut theta = vec![0.0; nt];
        for (n, out) in g.chunks_exact_mut(ny).enumerate() {
            let mut rem = n;
            for k in (0..nt).rev() {
                theta[k] = axis(k, rem % nodes_per_axis);
                rem /= nodes_per_axis;
            }
            log_prior.push(p.prior.log_density(&theta));
            p.model.observe(&theta, d, out);
            if out.iter().any(|v| !v.is_finite()) {
                return Err(Error::ModelEvaluation {
                    theta: theta.clone(),
                    design: d.to_vec(),
                });
            }
        }
        Ok(Self {
            log_prior,
            g,
            ln_cell: widths.iter().map(|w| w.ln()).sum(),
            ny,
        })
    }

    /// KL(posterior || prior) for data `y`, by midpoint quadrature.
    fn kl(&self, p: &Problem, y: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        scratch.extend(self.g.chunks_exact(self.ny).map(|g| {
            let mut ll = 0.0;
            for ((gi, yi), s) in g.iter().zip(y).zip(&p.noise.sd) {
                let r = (yi - gi) / s;
                ll -= 0.5 * r * r;
            }
            ll
        }));
        // log of the evidence up to the likelihood's constant, which cancels.
        let ln_z = log_sum_exp(scratch.iter().zip(&self.log_prior).map(|(l, p)| l + p)) + self.ln_cell;
        let mut kl = 0.0;
        for (l, lp) in scratch.iter().zip(&self.log_prior) {
            let w = (lp + l - ln_z + self.ln_cell).exp();
            if w > 0.0 {
                kl += w * (l - ln_z);
            }
        }
        kl
    }
}

/// Grid reference for the expected information gain: an outer Monte Carlo
/// average over `(theta, y)` of the KL divergence from prior to posterior,
/// with the posterior normalized on a midpoint grid of `nodes_per_axis`
/// nodes in each parameter coordinate (`n_theta <= 2`).
pub fn expected_utility_grid(
    p: &Problem,
    d: &DesignPoint,
    nodes_per_axis: usize,
    n_out: usize,
    seed: u64,
    target: GridTarget,
) -> Result<f64> {
    if target == GridTarget::QoiIdentity && !p.predict_is_identity {
        return Err(Error::Config(format!(
            "problem '{}' has a non-identity prediction; the grid QoI reference is undefined",
            p.name
        )));
    }
    if n_out == 0 {
        return Err(Error::Config("n_out must be >= 1".into()));
    }
    let grid = ParamGrid::new(p, d.coords(), nodes_per_axis)?;
    let kls: Vec<f64> = (0..n_out)
        .into_par_iter()
        .map_init(Vec::new, |scratch, i| {
            let mut r = rng::stream(seed, purpose::GRID_OUTER, i as u64);
            let mut theta = vec![0.0; p.dims.theta];
            p.prior.sample_into(&mut r, &mut theta);
            let y = p.simulate_observation(&theta, d.coords(), &mut r)?;
            Ok(grid.kl(p, &y, scratch))
        })
        .collect::<Result<_>>()?;
    Ok(kls.iter().sum::<f64>() / n_out as f64)
}

/// Settings for single-realization information gains.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationConfig {
    /// Parameter grid nodes per axis.
    pub grid_nodes: usize,
    /// QoI quadrature nodes.
    pub z_nodes: usize,
    pub n_in: usize,
    pub mcmc: Option<StretchConfig>,
    pub bandwidth: BandwidthPolicy,
    pub seed: u64,
}

impl Default for RealizationConfig {
    fn default() -> Self {
        Self {
            grid_nodes: 2000,
            z_nodes: 2001,
            n_in: 1000,
            mcmc: None,
            bandwidth: BandwidthPolicy::default(),
            seed: 0,
        }
    }
}

/// Information gained from one simulated data set.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InfoGain {
    pub ig_theta: f64,
    pub ig_z: f64,
}

/// Simulates one `y` at `theta_true` and returns KL(posterior || prior) for
/// the parameters (grid quadrature) and for the scalar QoI (posterior- and
/// prior-predictive KDEs integrated on a uniform z grid). The data and
/// sampler randomness depend only on `cfg.seed`, so different designs see
/// the same noise draw.
pub fn info_gain_realization(
    p: &Problem,
    d: &DesignPoint,
    theta_true: &[f64],
    cache: &PriorPredictiveCache,
    cfg: &RealizationConfig,
) -> Result<InfoGain> {
    if p.dims.z != 1 {
        return Err(Error::Config("QoI information gain is implemented for scalar QoIs".into()));
    }
    if cfg.z_nodes < 2 {
        return Err(Error::Config("z_nodes must be >= 2".into()));
    }
    let mut r = rng::stream(cfg.seed, purpose::REALIZATION, 0);
    let y = p.simulate_observation(theta_true, d.coords(), &mut r)?;

    let grid = ParamGrid::new(p, d.coords(), cfg.grid_nodes)?;
    let ig_theta = grid.kl(p, &y, &mut Vec::new());

    let stretch = cfg.mcmc.clone().unwrap_or_else(|| StretchConfig::for_dim(p.dims.theta));
    let mut log_post = p.log_posterior(&y, d.coords());
    let chain = mcmc::run_chain(&stretch, &mut log_post, &p.prior, theta_true, cfg.n_in, &mut r)?;
    let mut zs = Vec::with_capacity(cfg.n_in);
    let mut z = [0.0];
    for row in chain.samples.rows() {
        p.predict_into(row, &mut r, &mut z)?;
        zs.push(z[0]);
    }
    let post_samples = crate::Samples::scalar(zs);
    let mut cv_rng = rng::stream(cfg.seed, purpose::CV, u64::MAX - 1);
    let b = kde::resolve_bandwidth(
        &cfg.bandwidth,
        std::slice::from_ref(&post_samples),
        &cache.scale,
        cache.reference_range,
        &mut cv_rng,
    )?;
    let post = kde::fit(post_samples.clone(), b)?;

    let pad = 3.0 * b.max(cache.kde.bandwidth());
    let all = cache.z_samples.as_flat().iter().chain(post_samples.as_flat());
    let lo = all.clone().copied().fold(f64::INFINITY, f64::min) - pad;
    let hi = all.copied().fold(f64::NEG_INFINITY, f64::max) + pad;
    let h = (hi - lo) / (cfg.z_nodes - 1) as f64;
    let nodes: Vec<(f64, f64)> = (0..cfg.z_nodes)
        .map(|k| {
            let z = [lo + k as f64 * h];
            (post.log_density(&z), cache.kde.log_density(&z))
        })
        .collect();
    // Renormalize the posterior on the grid so quadrature error cancels.
    let ln_mass = log_sum_exp(nodes.iter().map(|(lq, _)| *lq)) + h.ln();
    let mut ig_z = 0.0;
    for (lq, lp) in &nodes {
        let lq = lq - ln_mass;
        let w = (lq + h.ln()).exp();
        if w > 0.0 {
            ig_z += w * (lq - lp);
        }
    }
    Ok(InfoGain { ig_theta, ig_z })
}
