//! Bayesian optimization of a noisy utility over a box.
//!
//! A zero-mean GP with a Matérn-5/2 kernel (length scale 1 unless re-tuned)
//! is fitted to centered utility values; the next design maximizes the upper
//! confidence bound `mean + kappa * sd` by multistart projected ascent.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{self, purpose, Rng};
use crate::stats;

/// Smallest noise term relative to the signal variance.
const LAMBDA_FLOOR: f64 = 1e-10;

/// Matérn kernel with smoothness 5/2 and unit variance.
pub fn matern52(r: f64, l: f64) -> f64 {
    let s = 5f64.sqrt() * r / l;
    (1.0 + s + s * s / 3.0) * (-s).exp()
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

/// Kernel matrix of `x` (unit variance, no noise).
pub fn kernel_matrix(x: &[Vec<f64>], l: f64) -> DMatrix<f64> {
    let k = x.len();
    DMatrix::from_fn(k, k, |i, j| matern52(distance(&x[i], &x[j]), l))
}

/// GP regression state.
///
/// Utilities are centered by their mean and the kernel is scaled by their
/// sample variance (1 when there are fewer than two distinct values).
#[derive(Debug, Clone)]
pub struct GpModel {
    x: Vec<Vec<f64>>,
    u: Vec<f64>,
    offset: f64,
    amplitude: f64,
    length_scale: f64,
    lambda: f64,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

/// Fits a GP to `(x, u)`. The noise term starts at `max(lambda, floor)` and
/// is raised up to three times (`lambda <- max(lambda, 1e-8) * 10`) if the
/// Cholesky factorization fails.
pub fn gp_fit(x: &[Vec<f64>], u: &[f64], l: f64, lambda: f64) -> Result<GpModel> {
    if x.is_empty() || x.len() != u.len() {
        return Err(Error::GpFit(format!("{} designs but {} utilities", x.len(), u.len())));
    }
    if !(l > 0.0) || !(lambda >= 0.0) {
        return Err(Error::GpFit("length scale must be positive and lambda non-negative".into()));
    }
    if u.iter().any(|v| !v.is_finite()) {
        return Err(Error::GpFit("non-finite utility".into()));
    }
    let offset = stats::mean(u);
    let var = if u.len() > 1 { stats::variance(u) } else { 0.0 };
    let amplitude = if var > 0.0 { var } else { 1.0 };
    let base = kernel_matrix(x, l) * amplitude;
    let mut lambda = lambda.max(LAMBDA_FLOOR * amplitude);
    for attempt in 0..4 {
        let mut k = base.clone();
        for i in 0..x.len() {
            k[(i, i)] += lambda;
        }
        if let Some(chol) = Cholesky::new(k) {
            let centered = DVector::from_iterator(u.len(), u.iter().map(|v| v - offset));
            let alpha = chol.solve(&centered);
            return Ok(GpModel {
                x: x.to_vec(),
                u: u.to_vec(),
                offset,
                amplitude,
                length_scale: l,
                lambda,
                chol,
                alpha,
            });
        }
        if attempt < 3 {
            lambda = lambda.max(1e-8) * 10.0;
        }
    }
    Err(Error::GpFit(format!("kernel matrix not positive definite with lambda = {lambda}")))
}

impl GpModel {
    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn length_scale(&self) -> f64 {
        self.length_scale
    }

    /// Prior sd far from the data.
    pub fn prior_sd(&self) -> f64 {
        self.amplitude.sqrt()
    }

    pub fn training_points(&self) -> &[Vec<f64>] {
        &self.x
    }

    /// Log marginal likelihood of the centered data.
    pub fn log_marginal_likelihood(&self) -> f64 {
        let centered = DVector::from_iterator(self.u.len(), self.u.iter().map(|v| v - self.offset));
        let log_det: f64 = self.chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>() * 2.0;
        -0.5 * centered.dot(&self.alpha) - 0.5 * log_det - 0.5 * self.u.len() as f64 * (2.0 * std::f64::consts::PI).ln()
    }
}

/// Posterior mean and sd of the utility at `d`.
pub fn gp_posterior(m: &GpModel, d: &[f64]) -> (f64, f64) {
    let ks = DVector::from_iterator(
        m.x.len(),
        m.x.iter().map(|xi| m.amplitude * matern52(distance(xi, d), m.length_scale)),
    );
    let mean = m.offset + ks.dot(&m.alpha);
    let v = m.chol.l().solve_lower_triangular(&ks).expect("Cholesky factor is invertible");
    let var = (m.amplitude - v.norm_squared()).max(0.0);
    (mean, var.sqrt())
}

/// Upper confidence bound `mean + kappa * sd`.
pub fn ucb(m: &GpModel, d: &[f64], kappa: f64) -> f64 {
    let (mean, sd) = gp_posterior(m, d);
    mean + kappa * sd
}

fn project(x: &mut [f64], bounds: &[(f64, f64)]) {
    for (v, (lo, hi)) in x.iter_mut().zip(bounds) {
        *v = v.clamp(*lo, *hi);
    }
}

/// Central-difference gradient, one-sided at the bounds.
fn gradient(f: &impl Fn(&[f64]) -> f64, x: &[f64], bounds: &[(f64, f64)], out: &mut [f64]) {
    let mut probe = x.to_vec();
    for k in 0..x.len() {
        let (lo, hi) = bounds[k];
        let h = 1e-6 * (hi - lo).max(1e-12);
        let a = (x[k] - h).max(lo);
        let b = (x[k] + h).min(hi);
        probe[k] = a;
        let fa = f(&probe);
        probe[k] = b;
        let fb = f(&probe);
        probe[k] = x[k];
        out[k] = if b > a { (fb - fa) / (b - a) } else { 0.0 };
    }
}

/// Projected gradient ascent with a step that grows on success and halves
/// on failure. Never returns a point worse than `x0`.
fn ascend(f: &impl Fn(&[f64]) -> f64, x0: &[f64], bounds: &[(f64, f64)]) -> (Vec<f64>, f64) {
    let width = bounds.iter().map(|(lo, hi)| hi - lo).fold(0.0, f64::max);
    let mut x = x0.to_vec();
    let mut fx = f(&x);
    let mut step = 0.05 * width;
    let mut g = vec![0.0; x.len()];
    let mut trial = vec![0.0; x.len()];
    for _ in 0..200 {
        gradient(f, &x, bounds, &mut g);
        let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if !(norm > 0.0) {
            break;
        }
        let mut moved = false;
        while step > 1e-9 * width {
            for k in 0..x.len() {
                trial[k] = x[k] + step * g[k] / norm;
            }
            project(&mut trial, bounds);
            let ft = f(&trial);
            if ft > fx {
                x.copy_from_slice(&trial);
                fx = ft;
                step *= 1.5;
                moved = true;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    (x, fx)
}

/// Maximizes the UCB over `bounds` from `restarts` uniform starts plus the
/// best training point, returning the best local optimum and its value.
pub fn maximize_acquisition(
    m: &GpModel,
    bounds: &[(f64, f64)],
    kappa: f64,
    restarts: usize,
    rng: &mut Rng,
) -> (Vec<f64>, f64) {
    let mut starts: Vec<Vec<f64>> = (0..restarts.max(1))
        .map(|_| bounds.iter().map(|(lo, hi)| rng.random_range(*lo..=*hi)).collect())
        .collect();
    let best = stats::argmax(&m.u);
    starts.push(m.x[best].clone());
    let f = |d: &[f64]| ucb(m, d, kappa);
    let found: Vec<(Vec<f64>, f64)> = starts.par_iter().map(|s| ascend(&f, s, bounds)).collect();
    found
        .into_iter()
        .reduce(|a, b| if b.1 > a.1 { b } else { a })
        .expect("at least one start")
}

/// Optimizer settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BoConfig {
    pub bounds: Vec<(f64, f64)>,
    pub n_init: usize,
    /// Acquisition iterations after the initial designs.
    pub max_iter: usize,
    pub kappa: f64,
    pub restarts: usize,
    pub length_scale: f64,
    /// GP noise as a fraction of the utility variance.
    pub noise_fraction: f64,
    /// Stop after `patience` iterations without an incumbent gain above
    /// `eps_improvement`.
    pub eps_improvement: f64,
    pub patience: usize,
    /// Re-fit the length scale by marginal likelihood every 10 iterations.
    pub retune: bool,
    pub seed: u64,
}

impl Default for BoConfig {
    fn default() -> Self {
        Self {
            bounds: vec![(0.0, 1.0)],
            n_init: 3,
            max_iter: 60,
            kappa: 2.56,
            restarts: 16,
            length_scale: 1.0,
            noise_fraction: 1e-4,
            eps_improvement: 1e-3,
            patience: 10,
            retune: false,
            seed: 0,
        }
    }
}

impl BoConfig {
    pub fn validate(&self) -> Result<()> {
        if self.bounds.is_empty() || self.bounds.iter().any(|(lo, hi)| !(lo < hi)) {
            return Err(Error::Config("BO bounds must be non-empty intervals lo < hi".into()));
        }
        if self.n_init == 0 || !(self.kappa > 0.0) || self.restarts == 0 {
            return Err(Error::Config("BO needs n_init >= 1, kappa > 0, restarts >= 1".into()));
        }
        if !(self.length_scale > 0.0) || !(self.noise_fraction >= 0.0) || self.patience == 0 {
            return Err(Error::Config("BO needs length_scale > 0, noise_fraction >= 0, patience >= 1".into()));
        }
        Ok(())
    }
}

/// One objective evaluation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoRecord {
    /// 0-based evaluation index; the first `n_init` are the random designs.
    pub iter: usize,
    pub d: Vec<f64>,
    /// `NaN` when the objective failed at `d`.
    pub u: f64,
    pub incumbent_u: f64,
    /// UCB value that selected `d`; `NaN` for the initial designs.
    pub acquisition_value: f64,
}

/// Result of [`bo_optimize`].
#[derive(Debug, Clone, PartialEq)]
pub struct BoResult {
    pub d_star: Vec<f64>,
    pub u_star: f64,
    pub history: Vec<BoRecord>,
}

/// Log-spaced length scales tried when re-tuning.
fn retune_length_scale(x: &[Vec<f64>], u: &[f64], lambda: f64, current: f64) -> f64 {
    let mut best = (current, f64::NEG_INFINITY);
    for k in 0..30 {
        let l = 0.02 * (500f64).powf(k as f64 / 29.0);
        if let Ok(m) = gp_fit(x, u, l, lambda) {
            let lml = m.log_marginal_likelihood();
            if lml > best.1 {
                best = (l, lml);
            }
        }
    }
    best.0
}

/// Maximizes a noisy objective over `cfg.bounds`.
///
/// Failed evaluations are recorded with `u = NaN` and kept out of the GP.
pub fn bo_optimize(mut objective: impl FnMut(&[f64]) -> Result<f64>, cfg: &BoConfig) -> Result<BoResult> {
    cfg.validate()?;
    let mut r = rng::stream(cfg.seed, purpose::BO, 0);
    let mut history: Vec<BoRecord> = Vec::new();
    let (mut xs, mut us): (Vec<Vec<f64>>, Vec<f64>) = (Vec::new(), Vec::new());
    let mut incumbent: Option<(Vec<f64>, f64)> = None;

    let mut evaluate = |d: Vec<f64>, acq: f64, history: &mut Vec<BoRecord>, xs: &mut Vec<Vec<f64>>, us: &mut Vec<f64>| {
        let u = objective(&d).ok().filter(|v| v.is_finite());
        if let Some(u) = u {
            xs.push(d.clone());
            us.push(u);
            if incumbent.as_ref().is_none_or(|(_, best)| u > *best) {
                incumbent = Some((d.clone(), u));
            }
        }
        history.push(BoRecord {
            iter: history.len(),
            d,
            u: u.unwrap_or(f64::NAN),
            incumbent_u: incumbent.as_ref().map_or(f64::NAN, |(_, b)| *b),
            acquisition_value: acq,
        });
    };

    for _ in 0..cfg.n_init {
        let d: Vec<f64> = cfg.bounds.iter().map(|(lo, hi)| r.random_range(*lo..=*hi)).collect();
        evaluate(d, f64::NAN, &mut history, &mut xs, &mut us);
    }

    let mut length_scale = cfg.length_scale;
    let mut stale = 0;
    for it in 0..cfg.max_iter {
        if xs.is_empty() {
            // Nothing usable yet: keep sampling at random.
            let d: Vec<f64> = cfg.bounds.iter().map(|(lo, hi)| r.random_range(*lo..=*hi)).collect();
            evaluate(d, f64::NAN, &mut history, &mut xs, &mut us);
            continue;
        }
        let var = if us.len() > 1 { stats::variance(&us) } else { 0.0 };
        let lambda = cfg.noise_fraction * if var > 0.0 { var } else { 1.0 };
        if cfg.retune && it > 0 && it % 10 == 0 {
            length_scale = retune_length_scale(&xs, &us, lambda, length_scale);
        }
        let gp = gp_fit(&xs, &us, length_scale, lambda)?;
        let (d, acq) = maximize_acquisition(&gp, &cfg.bounds, cfg.kappa, cfg.restarts, &mut r);
        let before = history.last().map_or(f64::NAN, |h| h.incumbent_u);
        evaluate(d, acq, &mut history, &mut xs, &mut us);
        let after = history.last().map_or(f64::NAN, |h| h.incumbent_u);
        if before.is_finite() && after - before <= cfg.eps_improvement {
            stale += 1;
            if stale >= cfg.patience {
                break;
            }
        } else {
            stale = 0;
        }
    }

    let (d_star, u_star) = history
        .iter()
        .filter(|h| h.u.is_finite())
        .fold(None, |best: Option<&BoRecord>, h| match best {
            Some(b) if b.u >= h.u => Some(b),
            _ => Some(h),
        })
        .map(|h| (h.d.clone(), h.u))
        .ok_or_else(|| Error::GpFit("every objective evaluation failed".into()))?;
    Ok(BoResult { d_star, u_star, history })
}

#[cfg(test)]
mod tests;
