//! Expected-utility estimators.
//!
//! The nested Monte Carlo estimator averages, over outer draws
//! `theta_i ~ p(theta)`, `y_i ~ p(y | theta_i, d)`, the difference between
//! the posterior-predictive and prior-predictive log densities of the QoI:
//!
//! `U(d) ~= mean_i [ mean_j ln p(z_ij | y_i, d) - ln p(z_i) ]`
//!
//! Posterior samples come from the stretch-move sampler started at
//! `theta_i`; both densities are kernel density estimates. The
//! prior-predictive term does not depend on `d` and is computed once
//! ([`PriorPredictiveCache`]).
//!
//! Outer iteration `i` draws all of its randomness from a stream keyed on
//! `(seed, i)`, so estimates at different designs share common random
//! numbers and results do not depend on the number of worker threads.

mod grid;

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kde::{self, BandwidthPolicy, KdeModel, SelfEvaluation};
use crate::mcmc::{self, StretchConfig};
use crate::problem::{DesignPoint, Problem};
use crate::rng::{self, purpose, Rng};
use crate::samples::Samples;
use crate::stats;

pub use grid::{expected_utility_grid, info_gain_realization, GridTarget, InfoGain, RealizationConfig};

/// Settings of the nested Monte Carlo estimator.
#[derive(Debug, Clone, PartialEq)]
pub struct NmcConfig {
    pub n_out: usize,
    pub n_in: usize,
    /// Sampler settings; `None` uses [`StretchConfig::for_dim`].
    pub mcmc: Option<StretchConfig>,
    /// Bandwidth of the posterior-predictive estimates.
    pub bandwidth: BandwidthPolicy,
    pub self_evaluation: SelfEvaluation,
    pub seed: u64,
}

impl NmcConfig {
    pub fn new(n_out: usize, n_in: usize, seed: u64) -> Self {
        Self {
            n_out,
            n_in,
            mcmc: None,
            bandwidth: BandwidthPolicy::default(),
            self_evaluation: SelfEvaluation::Inclusive,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_out == 0 || self.n_in < 2 {
            return Err(Error::Config("need n_out >= 1 and n_in >= 2".into()));
        }
        self.bandwidth.validate()
    }

    fn stretch(&self, n_theta: usize) -> StretchConfig {
        self.mcmc.clone().unwrap_or_else(|| StretchConfig::for_dim(n_theta))
    }
}

/// Wall-clock seconds spent in each stage, summed over outer iterations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimes {
    /// Posterior sampling.
    pub mcmc_s: f64,
    /// Pushing posterior samples through the prediction model.
    pub predict_s: f64,
    /// Bandwidth selection, fitting and evaluation.
    pub kde_s: f64,
    /// Whole call.
    pub wall_s: f64,
}

/// One expected-utility estimate.
#[derive(Debug, Clone)]
pub struct EigEstimate {
    /// `term_inner_mean - term_prior_pred_mean`, in nats.
    pub u: f64,
    pub term_inner_mean: f64,
    pub term_prior_pred_mean: f64,
    pub n_out: usize,
    pub n_in: usize,
    pub d: DesignPoint,
    /// Bandwidth used for the posterior-predictive estimates.
    pub bandwidth: f64,
    /// Outer iterations that needed their one retry.
    pub retries: usize,
    pub mean_acceptance: f64,
    pub times: StageTimes,
}

/// Per-design output record.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DesignRecord {
    pub d: Vec<f64>,
    pub u: f64,
    pub term_inner_mean: f64,
    pub term_prior_pred_mean: f64,
    pub n_out: usize,
    pub n_in: usize,
    pub bandwidth: f64,
    pub wall_time_s: f64,
}

impl From<&EigEstimate> for DesignRecord {
    fn from(e: &EigEstimate) -> Self {
        Self {
            d: e.d.coords().to_vec(),
            u: e.u,
            term_inner_mean: e.term_inner_mean,
            term_prior_pred_mean: e.term_prior_pred_mean,
            n_out: e.n_out,
            n_in: e.n_in,
            bandwidth: e.bandwidth,
            wall_time_s: e.times.wall_s,
        }
    }
}

/// Prior samples, their QoIs and the prior-predictive density at them.
#[derive(Debug, Clone)]
pub struct PriorPredictiveCache {
    pub theta_samples: Samples,
    pub z_samples: Samples,
    pub kde: KdeModel,
    pub log_pz: Vec<f64>,
    /// Per-coordinate kernel scale shared by all QoI density estimates.
    pub scale: Vec<f64>,
    /// Size of relative bandwidth grids.
    pub reference_range: f64,
}

impl PriorPredictiveCache {
    pub fn n_out(&self) -> usize {
        self.theta_samples.len()
    }

    pub fn term_mean(&self) -> f64 {
        stats::mean(&self.log_pz)
    }
}

/// Draws `n_out` prior samples, pushes them through the prediction model and
/// fits the prior-predictive KDE.
///
/// Scalar QoIs use the isotropic kernel as is. Vector QoIs are scaled by the
/// prior-predictive sd of each coordinate so that one bandwidth fits all.
pub fn prior_predictive_setup(
    p: &Problem,
    n_out: usize,
    policy: &BandwidthPolicy,
    self_evaluation: SelfEvaluation,
    seed: u64,
) -> Result<PriorPredictiveCache> {
    if n_out < 2 {
        return Err(Error::Config("prior-predictive cache needs n_out >= 2".into()));
    }
    let mut r = rng::stream(seed, purpose::PRIOR_PREDICTIVE, 0);
    let (nt, nz) = (p.dims.theta, p.dims.z);
    let mut thetas = vec![0.0; n_out * nt];
    let mut zs = vec![0.0; n_out * nz];
    for (t, z) in thetas.chunks_exact_mut(nt).zip(zs.chunks_exact_mut(nz)) {
        p.prior.sample_into(&mut r, t);
        p.predict_into(t, &mut r, z)?;
    }
    let theta_samples = Samples::new(nt, thetas);
    let z_samples = Samples::new(nz, zs);

    let scale = if nz == 1 {
        vec![1.0]
    } else {
        (0..nz)
            .map(|k| {
                let sd = stats::variance(&z_samples.column(k)).sqrt();
                if sd > 0.0 && sd.is_finite() {
                    sd
                } else {
                    1.0
                }
            })
            .collect()
    };
    let mut reference_range = kde::median_range(&z_samples, &scale);
    if !(reference_range > 0.0) || !reference_range.is_finite() {
        // Constant pushforward: any positive scale works, the smallest
        // candidate wins.
        reference_range = 1.0;
    }

    let mut cv_rng = rng::stream(seed, purpose::CV, u64::MAX);
    let b = kde::resolve_bandwidth(
        policy,
        std::slice::from_ref(&z_samples),
        &scale,
        reference_range,
        &mut cv_rng,
    )?;
    let model = kde::fit_scaled(z_samples.clone(), b, scale.clone())?;
    let log_pz: Vec<f64> = (0..n_out).map(|i| model.log_density_at_sample(i, self_evaluation)).collect();
    if let Some(i) = log_pz.iter().position(|v| !v.is_finite()) {
        return Err(Error::Estimation {
            outer: i,
            reason: "non-finite prior-predictive log density".into(),
        });
    }
    Ok(PriorPredictiveCache {
        theta_samples,
        z_samples,
        kde: model,
        log_pz,
        scale,
        reference_range,
    })
}

/// Posterior-predictive samples of one outer iteration.
struct OuterDraw {
    z: Samples,
    acceptance: f64,
    mcmc_s: f64,
    predict_s: f64,
}

fn outer_draw(
    p: &Problem,
    d: &[f64],
    theta: &[f64],
    n_in: usize,
    stretch: &StretchConfig,
    rng: &mut Rng,
) -> Result<OuterDraw> {
    let y = p.simulate_observation(theta, d, rng)?;
    let t0 = Instant::now();
    let mut log_post = p.log_posterior(&y, d);
    let chain = mcmc::run_chain(stretch, &mut log_post, &p.prior, theta, n_in, rng)?;
    let mcmc_s = t0.elapsed().as_secs_f64();

    let t1 = Instant::now();
    let nz = p.dims.z;
    let mut z = vec![0.0; n_in * nz];
    for (row, out) in chain.samples.rows().zip(z.chunks_exact_mut(nz)) {
        p.predict_into(row, rng, out)?;
    }
    Ok(OuterDraw {
        z: Samples::new(nz, z),
        acceptance: chain.acceptance_rate,
        mcmc_s,
        predict_s: t1.elapsed().as_secs_f64(),
    })
}

struct OuterResult {
    inner: f64,
    retried: bool,
    acceptance: f64,
    mcmc_s: f64,
    predict_s: f64,
    kde_s: f64,
}

/// Nested Monte Carlo estimate of the expected information gain in the QoI
/// at design `d`.
///
/// With an adaptive bandwidth policy the first `n_warm` outer iterations
/// are cross-validated, their picks averaged, and that one bandwidth is
/// used for every outer iteration at this design.
pub fn expected_utility_nmc(
    p: &Problem,
    d: &DesignPoint,
    cfg: &NmcConfig,
    cache: &PriorPredictiveCache,
) -> Result<EigEstimate> {
    cfg.validate()?;
    if d.len() != p.dims.d {
        return Err(Error::Dimension {
            what: "design",
            expected: p.dims.d,
            got: d.len(),
        });
    }
    if cache.n_out() < cfg.n_out || cache.z_samples.dim() != p.dims.z {
        return Err(Error::Config(format!(
            "prior-predictive cache ({} samples of dim {}) incompatible with n_out = {}, n_z = {}",
            cache.n_out(),
            cache.z_samples.dim(),
            cfg.n_out,
            p.dims.z
        )));
    }
    let start = Instant::now();
    let stretch = cfg.stretch(p.dims.theta);
    stretch.validate(p.dims.theta)?;
    let coords = d.coords();

    let draw = |i: usize, retry: bool| -> Result<OuterDraw> {
        let which = if retry { purpose::OUTER_RETRY } else { purpose::OUTER };
        let mut r = rng::stream(cfg.seed, which, i as u64);
        outer_draw(p, coords, cache.theta_samples.row(i), cfg.n_in, &stretch, &mut r)
    };
    let score = |z: Samples, b: f64| -> Result<f64> {
        let m = kde::fit_scaled(z, b, cache.scale.clone())?;
        let v = m.mean_self_log_density(cfg.self_evaluation);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::KdeFit("non-finite posterior-predictive log density".into()))
        }
    };
    // First attempt, then one retry on a fresh stream.
    let draw_with_retry = |i: usize| -> Result<(OuterDraw, bool)> {
        match draw(i, false) {
            Ok(o) => Ok((o, false)),
            Err(first) => draw(i, true).map(|o| (o, true)).map_err(|second| Error::Estimation {
                outer: i,
                reason: format!("{first}; retry: {second}"),
            }),
        }
    };

    // Bandwidth for this design.
    let (b, warm, warm_kde_s) = match &cfg.bandwidth {
        BandwidthPolicy::Fixed { b } => (*b, Vec::new(), 0.0),
        BandwidthPolicy::Adaptive { n_warm, .. } => {
            let n_warm = (*n_warm).min(cfg.n_out);
            let warm: Vec<(OuterDraw, bool)> = (0..n_warm)
                .into_par_iter()
                .map(draw_with_retry)
                .collect::<Result<_>>()?;
            let t = Instant::now();
            let sets: Vec<Samples> = warm.iter().map(|(o, _)| o.z.clone()).collect();
            let mut cv_rng = rng::stream(cfg.seed, purpose::CV, 0);
            let b = kde::resolve_bandwidth(&cfg.bandwidth, &sets, &cache.scale, cache.reference_range, &mut cv_rng)?;
            (b, warm, t.elapsed().as_secs_f64())
        }
    };

    let finish = |i: usize, drawn: (OuterDraw, bool)| -> Result<OuterResult> {
        let (mut o, mut retried) = drawn;
        let t = Instant::now();
        let inner = match score(o.z.clone(), b) {
            Ok(v) => v,
            Err(first) if !retried => {
                o = draw(i, true).map_err(|e| Error::Estimation {
                    outer: i,
                    reason: format!("{first}; retry: {e}"),
                })?;
                retried = true;
                score(o.z.clone(), b).map_err(|e| Error::Estimation {
                    outer: i,
                    reason: format!("{first}; retry: {e}"),
                })?
            }
            Err(e) => {
                return Err(Error::Estimation {
                    outer: i,
                    reason: e.to_string(),
                })
            }
        };
        Ok(OuterResult {
            inner,
            retried,
            acceptance: o.acceptance,
            mcmc_s: o.mcmc_s,
            predict_s: o.predict_s,
            kde_s: t.elapsed().as_secs_f64(),
        })
    };

    let n_warm = warm.len();
    let mut results: Vec<OuterResult> = warm
        .into_par_iter()
        .enumerate()
        .map(|(i, o)| finish(i, o))
        .collect::<Result<_>>()?;
    let rest: Vec<OuterResult> = (n_warm..cfg.n_out)
        .into_par_iter()
        .map(|i| finish(i, draw_with_retry(i)?))
        .collect::<Result<_>>()?;
    results.extend(rest);

    // Sequential reductions in index order keep the sums reproducible.
    let inner: Vec<f64> = results.iter().map(|r| r.inner).collect();
    let term_inner_mean = stats::mean(&inner);
    let term_prior_pred_mean = stats::mean(&cache.log_pz[..cfg.n_out]);
    let mut times = StageTimes {
        kde_s: warm_kde_s,
        ..StageTimes::default()
    };
    for r in &results {
        times.mcmc_s += r.mcmc_s;
        times.predict_s += r.predict_s;
        times.kde_s += r.kde_s;
    }
    times.wall_s = start.elapsed().as_secs_f64();
    Ok(EigEstimate {
        u: term_inner_mean - term_prior_pred_mean,
        term_inner_mean,
        term_prior_pred_mean,
        n_out: cfg.n_out,
        n_in: cfg.n_in,
        d: d.clone(),
        bandwidth: b,
        retries: results.iter().filter(|r| r.retried).count(),
        mean_acceptance: results.iter().map(|r| r.acceptance).sum::<f64>() / results.len() as f64,
        times,
    })
}

/// Posterior-predictive samples of the first `n` outer iterations at `d`,
/// exactly as [`expected_utility_nmc`] draws them (no retries).
pub fn posterior_predictive_sets(
    p: &Problem,
    d: &DesignPoint,
    cfg: &NmcConfig,
    cache: &PriorPredictiveCache,
    n: usize,
) -> Result<Vec<Samples>> {
    let stretch = cfg.stretch(p.dims.theta);
    (0..n.min(cache.n_out()))
        .into_par_iter()
        .map(|i| {
            let mut r = rng::stream(cfg.seed, purpose::OUTER, i as u64);
            outer_draw(p, d.coords(), cache.theta_samples.row(i), cfg.n_in, &stretch, &mut r).map(|o| o.z)
        })
        .collect()
}
