//! Isotropic Gaussian kernel density estimation.
//!
//! `p(z) = (1/n) sum_i prod_k N(z_k; z_ik, (b s_k)^2)` where `b` is the
//! bandwidth and `s_k` an optional per-coordinate scale. With all `s_k = 1`
//! this is the plain isotropic kernel; a non-unit scale is equivalent to
//! standardizing coordinate `k` by `s_k`, fitting the isotropic kernel, and
//! applying the Jacobian on the way back.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;
use crate::samples::Samples;

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_7;
/// Kernel terms below `exp(-CUTOFF)` times the largest one are dropped.
const CUTOFF: f64 = 50.0;

/// A fitted density estimate.
#[derive(Debug, Clone)]
pub struct KdeModel {
    samples: Samples,
    bandwidth: f64,
    scale: Vec<f64>,
    // 1D fast path: samples in ascending order.
    sorted: Option<Vec<f64>>,
    log_norm: f64,
}

/// How a model is scored at its own samples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelfEvaluation {
    /// Each sample's own kernel is included.
    #[default]
    Inclusive,
    /// Leave-one-out: the sample's own kernel is removed.
    LeaveOneOut,
}

/// Fits a KDE with bandwidth `b` and unit scales.
pub fn fit(samples: Samples, b: f64) -> Result<KdeModel> {
    let scale = vec![1.0; samples.dim()];
    fit_scaled(samples, b, scale)
}

/// Fits a KDE whose kernel sd in coordinate `k` is `b * scale[k]`.
pub fn fit_scaled(samples: Samples, b: f64, scale: Vec<f64>) -> Result<KdeModel> {
    if samples.is_empty() {
        return Err(Error::KdeFit("empty sample set".into()));
    }
    if !(b > 0.0) || !b.is_finite() {
        return Err(Error::KdeFit(format!("bandwidth must be positive, got {b}")));
    }
    if scale.len() != samples.dim() || scale.iter().any(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::KdeFit("scales must be positive, one per coordinate".into()));
    }
    if samples.as_flat().iter().any(|v| !v.is_finite()) {
        return Err(Error::KdeFit("non-finite sample".into()));
    }
    let n = samples.len() as f64;
    let dim = samples.dim() as f64;
    let log_norm = -n.ln() - dim * (HALF_LN_2PI + b.ln()) - scale.iter().map(|s| s.ln()).sum::<f64>();
    let sorted = (samples.dim() == 1).then(|| {
        let mut s = samples.as_flat().to_vec();
        s.sort_by(f64::total_cmp);
        s
    });
    Ok(KdeModel {
        samples,
        bandwidth: b,
        scale,
        sorted,
        log_norm,
    })
}

impl KdeModel {
    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }

    pub fn samples(&self) -> &Samples {
        &self.samples
    }

    pub fn dim(&self) -> usize {
        self.samples.dim()
    }

    /// Same samples, different bandwidth.
    pub fn with_bandwidth(&self, b: f64) -> Result<KdeModel> {
        if !(b > 0.0) || !b.is_finite() {
            return Err(Error::KdeFit(format!("bandwidth must be positive, got {b}")));
        }
        let mut m = self.clone();
        m.log_norm += self.dim() as f64 * (self.bandwidth.ln() - b.ln());
        m.bandwidth = b;
        Ok(m)
    }

    /// Log of the estimated density at `z`.
    pub fn log_density(&self, z: &[f64]) -> f64 {
        debug_assert_eq!(z.len(), self.dim());
        self.log_norm + self.log_kernel_sum(z, None)
    }

    /// Log density at sample `i`, optionally leaving its own kernel out.
    pub fn log_density_at_sample(&self, i: usize, mode: SelfEvaluation) -> f64 {
        let z = self.samples.row(i);
        match mode {
            SelfEvaluation::Inclusive => self.log_density(z),
            SelfEvaluation::LeaveOneOut => {
                let n = self.samples.len() as f64;
                if n < 2.0 {
                    return f64::NEG_INFINITY;
                }
                self.log_norm + (n / (n - 1.0)).ln() + self.log_kernel_sum(z, Some(i))
            }
        }
    }

    /// Mean log density over the model's own samples.
    pub fn mean_self_log_density(&self, mode: SelfEvaluation) -> f64 {
        let n = self.samples.len();
        (0..n).map(|i| self.log_density_at_sample(i, mode)).sum::<f64>() / n as f64
    }

    /// `ln sum_i exp(-|u_i|^2 / 2)` with `u_i` the scaled offsets, skipping
    /// sample `skip` (leave-one-out). In 1D only the window of samples whose
    /// term is within `exp(-CUTOFF)` of the nearest one is visited.
    fn log_kernel_sum(&self, z: &[f64], skip: Option<usize>) -> f64 {
        let inv_b = 1.0 / self.bandwidth;
        match (&self.sorted, skip) {
            (Some(sorted), None) => {
                let x = z[0];
                let pos = sorted.partition_point(|v| *v < x);
                let mut nearest = f64::INFINITY;
                if pos < sorted.len() {
                    nearest = nearest.min(sorted[pos] - x);
                }
                if pos > 0 {
                    nearest = nearest.min(x - sorted[pos - 1]);
                }
                let q_min = 0.5 * (nearest * inv_b).powi(2);
                if !q_min.is_finite() {
                    return f64::NEG_INFINITY;
                }
                let reach = self.bandwidth * (2.0 * (q_min + CUTOFF)).sqrt();
                let lo = sorted.partition_point(|v| *v < x - reach);
                let hi = sorted.partition_point(|v| *v <= x + reach);
                let mut acc = 0.0;
                for v in &sorted[lo..hi] {
                    let u = (x - v) * inv_b;
                    acc += (q_min - 0.5 * u * u).exp();
                }
                acc.ln() - q_min
            }
            _ => {
                let dim = self.dim();
                let mut q = Vec::with_capacity(self.samples.len());
                let mut q_min = f64::INFINITY;
                for (i, row) in self.samples.rows().enumerate() {
                    if Some(i) == skip {
                        continue;
                    }
                    let mut s = 0.0;
                    for k in 0..dim {
                        let u = (z[k] - row[k]) * inv_b / self.scale[k];
                        s += u * u;
                    }
                    let s = 0.5 * s;
                    q_min = q_min.min(s);
                    q.push(s);
                }
                if q.is_empty() || !q_min.is_finite() {
                    return f64::NEG_INFINITY;
                }
                let acc: f64 = q.iter().map(|s| (q_min - s).exp()).sum();
                acc.ln() - q_min
            }
        }
    }
}

/// Candidate bandwidths for cross-validation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BandwidthGrid {
    /// `count` log-spaced values on `[lo_fraction * R, R]`, where `R` is a
    /// reference sample range.
    Relative { count: usize, lo_fraction: f64 },
    Explicit { values: Vec<f64> },
}

impl Default for BandwidthGrid {
    fn default() -> Self {
        BandwidthGrid::Relative {
            count: 25,
            lo_fraction: 1e-3,
        }
    }
}

impl BandwidthGrid {
    pub fn candidates(&self, reference_range: f64) -> Result<Vec<f64>> {
        let grid = match self {
            BandwidthGrid::Explicit { values } => values.clone(),
            BandwidthGrid::Relative { count, lo_fraction } => {
                if *count == 0 || !(*lo_fraction > 0.0 && *lo_fraction < 1.0) {
                    return Err(Error::Config("relative bandwidth grid malformed".into()));
                }
                if !(reference_range > 0.0) || !reference_range.is_finite() {
                    return Err(Error::Bandwidth(format!(
                        "reference range must be positive, got {reference_range}"
                    )));
                }
                logspace(lo_fraction * reference_range, reference_range, *count)
            }
        };
        validate_grid(&grid)?;
        Ok(grid)
    }
}

fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::Config("bandwidth grid is empty".into()));
    }
    if grid.iter().any(|b| !(*b > 0.0)) || grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(Error::Config("bandwidth grid must be positive and increasing".into()));
    }
    Ok(())
}

/// `count` log-spaced values from `lo` to `hi` inclusive.
pub fn logspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![hi];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp())
        .collect()
}

/// Median over coordinates of `(max - min) / scale`.
pub fn median_range(samples: &Samples, scale: &[f64]) -> f64 {
    let mut ranges: Vec<f64> = (0..samples.dim())
        .map(|k| {
            let col = samples.column(k);
            let lo = col.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = col.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            (hi - lo) / scale[k]
        })
        .collect();
    ranges.sort_by(f64::total_cmp);
    let m = ranges.len();
    if m % 2 == 1 {
        ranges[m / 2]
    } else {
        0.5 * (ranges[m / 2 - 1] + ranges[m / 2])
    }
}

/// Bandwidth policy for one family of density estimates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum BandwidthPolicy {
    Fixed { b: f64 },
    /// Cross-validate on the first `n_warm` sample sets and freeze the mean.
    Adaptive {
        cv_folds: usize,
        #[serde(default)]
        grid: BandwidthGrid,
        n_warm: usize,
    },
}

impl Default for BandwidthPolicy {
    fn default() -> Self {
        BandwidthPolicy::Adaptive {
            cv_folds: 5,
            grid: BandwidthGrid::default(),
            n_warm: 10,
        }
    }
}

impl BandwidthPolicy {
    pub fn validate(&self) -> Result<()> {
        match self {
            BandwidthPolicy::Fixed { b } => {
                if !(*b > 0.0) {
                    return Err(Error::Config("fixed bandwidth must be positive".into()));
                }
            }
            BandwidthPolicy::Adaptive { cv_folds, grid, n_warm } => {
                if *cv_folds < 2 || *n_warm == 0 {
                    return Err(Error::Config("adaptive bandwidth needs cv_folds >= 2 and n_warm >= 1".into()));
                }
                if let BandwidthGrid::Explicit { values } = grid {
                    validate_grid(values)?;
                }
            }
        }
        Ok(())
    }
}

/// Grid bandwidth with the highest mean held-out log likelihood over a
/// random `folds`-way partition. Ties go to the larger bandwidth.
pub fn cv_select_bandwidth(samples: &Samples, grid: &[f64], folds: usize, rng: &mut Rng) -> Result<f64> {
    let scale = vec![1.0; samples.dim()];
    cv_select_bandwidth_scaled(samples, &scale, grid, folds, rng)
}

/// [`cv_select_bandwidth`] for a scaled kernel.
pub fn cv_select_bandwidth_scaled(
    samples: &Samples,
    scale: &[f64],
    grid: &[f64],
    folds: usize,
    rng: &mut Rng,
) -> Result<f64> {
    validate_grid(grid)?;
    let n = samples.len();
    if folds < 2 || n < folds {
        return Err(Error::Bandwidth(format!("need n >= folds >= 2 (n = {n}, folds = {folds})")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(rng);
    let parts: Vec<(Samples, Samples)> = (0..folds)
        .map(|f| {
            let lo = f * n / folds;
            let hi = (f + 1) * n / folds;
            let held: Vec<usize> = order[lo..hi].to_vec();
            let train: Vec<usize> = order[..lo].iter().chain(&order[hi..]).copied().collect();
            (samples.select(&train), samples.select(&held))
        })
        .collect();
    let models: Vec<KdeModel> = parts
        .iter()
        .map(|(train, _)| fit_scaled(train.clone(), grid[0], scale.to_vec()))
        .collect::<Result<_>>()?;

    let mut best: Option<(f64, f64)> = None;
    for &b in grid {
        let mut total = 0.0;
        for (model, (_, held)) in models.iter().zip(&parts) {
            let m = model.with_bandwidth(b)?;
            for z in held.rows() {
                total += m.log_density(z);
            }
        }
        let score = total / n as f64;
        if score.is_nan() || score == f64::NEG_INFINITY {
            continue;
        }
        // `>=` on an ascending grid breaks ties toward the larger bandwidth.
        if best.is_none_or(|(_, s)| score >= s) {
            best = Some((b, score));
        }
    }
    best.map(|(b, _)| b)
        .ok_or_else(|| Error::Bandwidth("every candidate has -inf held-out likelihood".into()))
}

/// Resolves a policy to one bandwidth: the fixed value, or the mean CV pick
/// over the first `n_warm` of `warm_sets`. `reference_range` sizes relative
/// grids.
pub fn resolve_bandwidth(
    policy: &BandwidthPolicy,
    warm_sets: &[Samples],
    scale: &[f64],
    reference_range: f64,
    rng: &mut Rng,
) -> Result<f64> {
    policy.validate()?;
    match policy {
        BandwidthPolicy::Fixed { b } => Ok(*b),
        BandwidthPolicy::Adaptive { cv_folds, grid, n_warm } => {
            if warm_sets.is_empty() {
                return Err(Error::Bandwidth("adaptive policy needs at least one warm set".into()));
            }
            let candidates = grid.candidates(reference_range)?;
            let picks = warm_sets
                .iter()
                .take(*n_warm)
                .map(|s| cv_select_bandwidth_scaled(s, scale, &candidates, *cv_folds, rng))
                .collect::<Result<Vec<f64>>>()?;
            Ok(picks.iter().sum::<f64>() / picks.len() as f64)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;
    use rand::Rng as _;
    use rand_distr::StandardNormal;

    fn normal_samples(n: usize, seed: u64) -> Samples {
        let mut r = rng::from_seed(seed);
        Samples::scalar((0..n).map(|_| r.sample::<f64, _>(StandardNormal)).collect())
    }

    #[test]
    fn single_kernel_peak() {
        let m = fit(Samples::scalar(vec![0.0]), 1.0).unwrap();
        assert!((m.log_density(&[0.0]) + HALF_LN_2PI).abs() < 1e-14);
    }

    #[test]
    fn symmetric_pair() {
        let m = fit(Samples::scalar(vec![-1.0, 1.0]), 1.0).unwrap();
        let expect = ((-0.5f64).exp() / (2.0 * std::f64::consts::PI).sqrt()).ln();
        assert!((m.log_density(&[0.0]) - expect).abs() < 1e-14);
    }

    #[test]
    fn two_dimensional_product_kernel() {
        let m = fit(Samples::new(2, vec![0.0, 0.0]), 0.5).unwrap();
        let expect = -(2.0 * std::f64::consts::PI * 0.25f64).ln();
        assert!((m.log_density(&[0.0, 0.0]) - expect).abs() < 1e-14);
    }

    #[test]
    fn far_query_is_finite() {
        let m = fit(Samples::scalar(vec![0.0, 0.5]), 0.01).unwrap();
        let v = m.log_density(&[0.5 + 40.0 * 0.01]);
        let expect = -2f64.ln() - HALF_LN_2PI - 0.01f64.ln() - 0.5 * 40.0 * 40.0;
        assert!(v.is_finite());
        assert!((v - expect).abs() < 1e-9);
        let v = m.log_density(&[300.0 * 0.01 + 0.5]);
        assert!(v.is_finite());
    }

    #[test]
    fn self_kernel_lower_bound() {
        let s = normal_samples(50, 1);
        let b = 0.3;
        let m = fit(s.clone(), b).unwrap();
        let bound = (1.0 / 50.0f64).ln() - HALF_LN_2PI - b.ln();
        for i in 0..s.len() {
            assert!(m.log_density(s.row(i)) >= bound - 1e-12);
        }
    }

    #[test]
    fn consistent_with_normal_density() {
        let m = fit(normal_samples(10_000, 2), 0.2).unwrap();
        assert!((m.log_density(&[0.0]) + HALF_LN_2PI).abs() < 0.05);
    }

    #[test]
    fn window_matches_brute_force() {
        let s = normal_samples(400, 3);
        let m = fit(s.clone(), 0.05).unwrap();
        for q in [-3.0, -0.4, 0.0, 0.123, 2.5, 9.0] {
            let brute = crate::stats::log_sum_exp(s.rows().map(|r| {
                let u = (q - r[0]) / 0.05;
                -0.5 * u * u
            })) - (400f64).ln()
                - HALF_LN_2PI
                - 0.05f64.ln();
            assert!((m.log_density(&[q]) - brute).abs() < 1e-12, "q = {q}");
        }
    }

    #[test]
    fn integrates_to_one() {
        let s = Samples::scalar(vec![-0.3, 0.1, 0.15, 0.9]);
        let b = 0.07;
        let m = fit(s, b).unwrap();
        let (lo, hi) = (-0.3 - 10.0 * b, 0.9 + 10.0 * b);
        let n = 40_001;
        let h = (hi - lo) / (n - 1) as f64;
        let total: f64 = (0..n)
            .map(|k| {
                let w = if k == 0 || k == n - 1 { 0.5 } else { 1.0 };
                w * m.log_density(&[lo + k as f64 * h]).exp() * h
            })
            .sum();
        assert!((total - 1.0).abs() < 1e-4);
    }

    #[test]
    fn translation_equivariance_exact() {
        let s = Samples::scalar(vec![0.25, 0.5, 1.75, 2.0]);
        let shifted = Samples::scalar(vec![8.25, 8.5, 9.75, 10.0]);
        let a = fit(s, 0.5).unwrap().log_density(&[1.0]);
        let b = fit(shifted, 0.5).unwrap().log_density(&[9.0]);
        assert_eq!(a, b);
    }

    #[test]
    fn scaled_kernel_is_jacobian_corrected() {
        let s = Samples::new(2, vec![0.0, 0.0, 1.0, 10.0, -0.5, 4.0]);
        let scaled = fit_scaled(s.clone(), 0.3, vec![1.0, 10.0]).unwrap();
        let standardized = Samples::new(2, vec![0.0, 0.0, 1.0, 1.0, -0.5, 0.4]);
        let iso = fit(standardized, 0.3).unwrap();
        let v = scaled.log_density(&[0.2, 3.0]);
        let w = iso.log_density(&[0.2, 0.3]) - 10f64.ln();
        assert!((v - w).abs() < 1e-12);
    }

    #[test]
    fn leave_one_out_differs_from_inclusive() {
        let s = normal_samples(100, 4);
        let m = fit(s, 0.2).unwrap();
        let inc = m.mean_self_log_density(SelfEvaluation::Inclusive);
        let loo = m.mean_self_log_density(SelfEvaluation::LeaveOneOut);
        assert!(inc > loo);
    }

    #[test]
    fn empty_or_bad_fit_errors() {
        assert!(fit(Samples::scalar(vec![]), 1.0).is_err());
        assert!(fit(Samples::scalar(vec![1.0]), 0.0).is_err());
        assert!(fit(Samples::scalar(vec![f64::NAN]), 1.0).is_err());
    }

    #[test]
    fn cv_degenerate_samples_pick_smallest() {
        let s = Samples::scalar(vec![0.3; 20]);
        let grid = logspace(1e-3, 1.0, 10);
        let b = cv_select_bandwidth(&s, &grid, 5, &mut rng::from_seed(0)).unwrap();
        assert_eq!(b, grid[0]);
    }

    #[test]
    fn cv_normal_near_silverman() {
        let s = normal_samples(2000, 5);
        let grid = logspace(0.01, 1.0, 25);
        let b = cv_select_bandwidth(&s, &grid, 5, &mut rng::from_seed(1)).unwrap();
        let silverman = 1.06 * 2000f64.powf(-0.2);
        assert!((0.05..=0.5).contains(&b), "b = {b}");
        assert!(b / silverman < 3.0 && silverman / b < 3.0);
    }

    #[test]
    fn cv_leave_one_out_boundary() {
        let s = normal_samples(10, 6);
        let grid = logspace(0.01, 1.0, 7);
        let b = cv_select_bandwidth(&s, &grid, 10, &mut rng::from_seed(2)).unwrap();
        assert!(grid.contains(&b));
        assert!(cv_select_bandwidth(&s, &grid, 11, &mut rng::from_seed(2)).is_err());
    }

    #[test]
    fn cv_all_neg_inf_is_error() {
        // Two far-apart points: every held-out distance overflows for tiny b.
        let s = Samples::scalar(vec![0.0, 1e300]);
        let err = cv_select_bandwidth(&s, &[1e-10, 2e-10], 2, &mut rng::from_seed(0));
        assert!(matches!(err, Err(Error::Bandwidth(_))));
    }

    #[test]
    fn resolve_fixed_and_adaptive_mean() {
        let mut r = rng::from_seed(0);
        let b = resolve_bandwidth(&BandwidthPolicy::Fixed { b: 0.01 }, &[], &[1.0], 1.0, &mut r).unwrap();
        assert_eq!(b, 0.01);

        // Identical sets pick the smallest grid value; two grids give 0.004/0.006 picks.
        let flat = Samples::scalar(vec![0.5; 10]);
        let pol = |v: f64| BandwidthPolicy::Adaptive {
            cv_folds: 5,
            grid: BandwidthGrid::Explicit { values: vec![v, 1.0] },
            n_warm: 10,
        };
        let b1 = resolve_bandwidth(&pol(0.004), &[flat.clone()], &[1.0], 1.0, &mut r).unwrap();
        let b2 = resolve_bandwidth(&pol(0.006), &[flat.clone()], &[1.0], 1.0, &mut r).unwrap();
        assert_eq!((b1, b2), (0.004, 0.006));
        let mixed = BandwidthPolicy::Adaptive {
            cv_folds: 5,
            grid: BandwidthGrid::Explicit { values: vec![0.004, 0.006] },
            n_warm: 2,
        };
        // A spread-out set prefers 0.006, a degenerate one 0.004.
        let spread = Samples::scalar((0..10).map(|i| i as f64 * 0.05).collect());
        let b = resolve_bandwidth(&mixed, &[flat, spread], &[1.0], 1.0, &mut r).unwrap();
        assert!((b - 0.005).abs() < 1e-15);
        assert!(resolve_bandwidth(&mixed, &[], &[1.0], 1.0, &mut r).is_err());
    }

    #[test]
    fn smaller_bandwidth_raises_self_evaluated_density() {
        let s = normal_samples(300, 9);
        let m = fit(s, 0.1).unwrap();
        let bs = [0.02, 0.05, 0.1, 0.2, 0.4];
        let v: Vec<f64> = bs
            .iter()
            .map(|b| m.with_bandwidth(*b).unwrap().mean_self_log_density(SelfEvaluation::Inclusive))
            .collect();
        assert!(v.windows(2).all(|w| w[0] > w[1]), "{v:?}");
    }

    #[test]
    fn logspace_endpoints() {
        let g = logspace(1e-3, 1.0, 25);
        assert_eq!(g.len(), 25);
        assert!((g[0] - 1e-3).abs() < 1e-15 && (g[24] - 1.0).abs() < 1e-15);
        let _ = rng::from_seed(0).random::<f64>();
    }
}
