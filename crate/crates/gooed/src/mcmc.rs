//! Affine-invariant ensemble sampler (stretch move).
//!
//! Walkers are split into two halves; every walker in one half proposes
//! `partner + gamma * (self - partner)` with a partner drawn from the other,
//! frozen half, and accepts with probability
//! `min(1, gamma^(n-1) * p(proposal) / p(current))`. Only unnormalized log
//! posteriors are needed because the evidence cancels in the ratio.
//!
//! In the design setting the parameter that generated the data is known, so
//! [`run_chain`] starts all walkers in a tight cloud around it.

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::problem::PriorSpec;
use crate::rng::Rng;
use crate::samples::Samples;

/// Sampler settings.
#[derive(Debug, Clone, PartialEq)]
pub struct StretchConfig {
    pub n_walkers: usize,
    /// Stretch scale, `a > 1`.
    pub a: f64,
    /// Post-burn-in length of a free-running chain (see [`Ensemble::run`]).
    pub n_steps: usize,
    pub burn_in: usize,
    /// Steps between pooled ensemble snapshots in [`run_chain`].
    pub thin: usize,
    /// Initial jitter sd around the start point, as a fraction of the prior
    /// scale of each coordinate.
    pub init_jitter_sd: f64,
}

impl StretchConfig {
    /// Defaults for an `n_theta`-dimensional target: `a = 2`,
    /// `max(2 n_theta, 10)` walkers, 50 burn-in steps, snapshots every
    /// 10 steps, jitter of 1e-4 prior widths.
    pub fn for_dim(n_theta: usize) -> Self {
        let w = (2 * n_theta).max(10);
        Self {
            n_walkers: w + w % 2,
            a: 2.0,
            n_steps: 1000,
            burn_in: 50,
            thin: 10,
            init_jitter_sd: 1e-4,
        }
    }

    pub fn validate(&self, n_theta: usize) -> Result<()> {
        if self.n_walkers % 2 != 0 || self.n_walkers < 4.max(2 * n_theta) {
            return Err(Error::Config(format!(
                "n_walkers = {} must be even and >= max(4, 2 n_theta = {})",
                self.n_walkers,
                2 * n_theta
            )));
        }
        if !(self.a > 1.0) {
            return Err(Error::Config("stretch scale a must exceed 1".into()));
        }
        if self.thin == 0 {
            return Err(Error::Config("thin must be >= 1".into()));
        }
        if !(self.init_jitter_sd >= 0.0) {
            return Err(Error::Config("init_jitter_sd must be >= 0".into()));
        }
        Ok(())
    }
}

/// Inverse CDF of `p(gamma) ~ 1/sqrt(gamma)` on `[1/a, a]`.
pub fn gamma_from_uniform(a: f64, u: f64) -> f64 {
    let g = (a - 1.0) * u + 1.0;
    g * g / a
}

/// Draws a stretch factor.
pub fn sample_gamma(a: f64, rng: &mut Rng) -> f64 {
    gamma_from_uniform(a, rng.random::<f64>())
}

/// Analytic CDF of the stretch factor density.
pub fn gamma_cdf(a: f64, gamma: f64) -> f64 {
    let lo = (1.0 / a).sqrt();
    ((gamma.sqrt() - lo) / (a.sqrt() - lo)).clamp(0.0, 1.0)
}

/// `partner + gamma * (current - partner)`.
pub fn propose(current: &[f64], partner: &[f64], gamma: f64, out: &mut [f64]) {
    for ((o, c), p) in out.iter_mut().zip(current).zip(partner) {
        *o = p + gamma * (c - p);
    }
}

/// Log acceptance probability of a stretch proposal.
pub fn log_acceptance(dim: usize, gamma: f64, lp_proposal: f64, lp_current: f64) -> f64 {
    if !lp_proposal.is_finite() {
        return f64::NEG_INFINITY;
    }
    ((dim as f64 - 1.0) * gamma.ln() + lp_proposal - lp_current).min(0.0)
}

/// Walker positions with cached log posteriors.
#[derive(Debug, Clone)]
pub struct Ensemble {
    dim: usize,
    positions: Vec<f64>,
    log_posts: Vec<f64>,
    accepted: u64,
    proposed: u64,
}

impl Ensemble {
    /// Builds an ensemble, evaluating the log posterior at every walker.
    pub fn new(
        dim: usize,
        positions: Vec<f64>,
        log_post: &mut impl FnMut(&[f64]) -> f64,
    ) -> Result<Self> {
        if dim == 0 || positions.len() % dim != 0 {
            return Err(Error::Initialization("position buffer not a multiple of dim".into()));
        }
        let n = positions.len() / dim;
        if n < 4 || n % 2 != 0 {
            return Err(Error::Initialization(format!("need an even number >= 4 of walkers, got {n}")));
        }
        let log_posts: Vec<f64> = positions.chunks_exact(dim).map(|p| log_post(p)).collect();
        if let Some(i) = log_posts.iter().position(|lp| !lp.is_finite()) {
            return Err(Error::Initialization(format!(
                "walker {i} at {:?} has non-finite log posterior",
                &positions[i * dim..(i + 1) * dim]
            )));
        }
        Ok(Self {
            dim,
            positions,
            log_posts,
            accepted: 0,
            proposed: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn n_walkers(&self) -> usize {
        self.log_posts.len()
    }

    pub fn position(&self, k: usize) -> &[f64] {
        &self.positions[k * self.dim..(k + 1) * self.dim]
    }

    pub fn positions(&self) -> &[f64] {
        &self.positions
    }

    pub fn log_posts(&self) -> &[f64] {
        &self.log_posts
    }

    pub fn counts(&self) -> (u64, u64) {
        (self.accepted, self.proposed)
    }

    /// One sweep: the first half moves against the second, then vice versa.
    pub fn stretch_step(&mut self, log_post: &mut impl FnMut(&[f64]) -> f64, a: f64, rng: &mut Rng) {
        let n = self.n_walkers();
        let half = n / 2;
        let mut proposal = vec![0.0; self.dim];
        for (active, other) in [(0..half, half..n), (half..n, 0..half)] {
            // Proposals for the active half only see the frozen other half, so
            // the order of updates inside a half does not matter.
            let frozen = self.positions[other.start * self.dim..other.end * self.dim].to_vec();
            for k in active {
                let j = rng.random_range(0..other.len());
                let gamma = sample_gamma(a, rng);
                let u: f64 = rng.random();
                propose(
                    self.position(k),
                    &frozen[j * self.dim..(j + 1) * self.dim],
                    gamma,
                    &mut proposal,
                );
                let lp_new = log_post(&proposal);
                let log_alpha = log_acceptance(self.dim, gamma, lp_new, self.log_posts[k]);
                self.proposed += 1;
                if u.ln() < log_alpha {
                    self.positions[k * self.dim..(k + 1) * self.dim].copy_from_slice(&proposal);
                    self.log_posts[k] = lp_new;
                    self.accepted += 1;
                }
            }
        }
        #[cfg(debug_assertions)]
        {
            let again = log_post(self.position(0));
            debug_assert!(
                again == self.log_posts[0],
                "cached log posterior drifted: {again} vs {}",
                self.log_posts[0]
            );
        }
    }

    /// Runs `steps` sweeps, calling `snapshot` after each one.
    pub fn run(
        &mut self,
        steps: usize,
        log_post: &mut impl FnMut(&[f64]) -> f64,
        a: f64,
        rng: &mut Rng,
        mut snapshot: impl FnMut(usize, &Ensemble),
    ) {
        for s in 0..steps {
            self.stretch_step(log_post, a, rng);
            snapshot(s, self);
        }
    }
}

/// Accepted over proposed moves.
pub fn acceptance_rate(e: &Ensemble) -> Result<f64> {
    if e.proposed == 0 {
        return Err(Error::Diagnostic("no proposals made yet".into()));
    }
    Ok(e.accepted as f64 / e.proposed as f64)
}

/// Output of [`run_chain`].
#[derive(Debug, Clone)]
pub struct ChainOutput {
    pub samples: Samples,
    pub acceptance_rate: f64,
    pub snapshots: usize,
}

/// Samples `n_samples` pooled walker positions.
///
/// Walkers start at `init_center` plus Gaussian jitter (reflected into the
/// prior box). After `burn_in` sweeps, one ensemble snapshot is kept every
/// `thin` sweeps until `ceil(n_samples / n_walkers)` snapshots exist; the
/// last `n_samples` pooled positions are returned.
pub fn run_chain(
    cfg: &StretchConfig,
    log_post: &mut impl FnMut(&[f64]) -> f64,
    prior: &PriorSpec,
    init_center: &[f64],
    n_samples: usize,
    rng: &mut Rng,
) -> Result<ChainOutput> {
    let dim = init_center.len();
    cfg.validate(dim)?;
    if !prior.contains(init_center) {
        return Err(Error::Initialization(format!(
            "start point {init_center:?} outside prior support"
        )));
    }
    let center_lp = log_post(init_center);
    if !center_lp.is_finite() {
        return Err(Error::Initialization(format!(
            "start point {init_center:?} has non-finite log posterior"
        )));
    }

    let scale = prior.scale();
    let mut positions = Vec::with_capacity(cfg.n_walkers * dim);
    let mut walker = vec![0.0; dim];
    for _ in 0..cfg.n_walkers {
        // A few redraws, then fall back to the center itself.
        let mut placed = false;
        for _ in 0..10 {
            for k in 0..dim {
                let e: f64 = rng.sample(StandardNormal);
                walker[k] = init_center[k] + cfg.init_jitter_sd * scale[k] * e;
            }
            prior.reflect_into_support(&mut walker);
            if log_post(&walker).is_finite() {
                placed = true;
                break;
            }
        }
        if !placed {
            walker.copy_from_slice(init_center);
        }
        positions.extend_from_slice(&walker);
    }

    let mut ensemble = Ensemble::new(dim, positions, log_post)?;
    for _ in 0..cfg.burn_in {
        ensemble.stretch_step(log_post, cfg.a, rng);
    }

    let snapshots = n_samples.div_ceil(cfg.n_walkers).max(1);
    let mut pooled = Vec::with_capacity(snapshots * cfg.n_walkers * dim);
    for _ in 0..snapshots {
        for _ in 0..cfg.thin {
            ensemble.stretch_step(log_post, cfg.a, rng);
        }
        pooled.extend_from_slice(ensemble.positions());
    }
    let keep = n_samples * dim;
    let start = pooled.len() - keep;
    Ok(ChainOutput {
        samples: Samples::new(dim, pooled.split_off(start)),
        acceptance_rate: acceptance_rate(&ensemble)?,
        snapshots,
    })
}
