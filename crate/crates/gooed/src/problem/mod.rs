//! Domain types for design problems: priors, noise, forward models, and the
//! [`Problem`] bundle every estimator consumes.

mod builtin;

pub use builtin::{builtin_problem, linear_gaussian, Prediction1d, BUILTIN_NAMES};

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::rng::Rng;

const LN_2PI: f64 = 1.837_877_066_409_345_5;

macro_rules! vector_newtype {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq)]
        pub struct $name(pub Vec<f64>);

        impl Deref for $name {
            type Target = [f64];
            fn deref(&self) -> &[f64] {
                &self.0
            }
        }

        impl From<Vec<f64>> for $name {
            fn from(v: Vec<f64>) -> Self {
                Self(v)
            }
        }
    };
}

vector_newtype!(
    /// Model parameters theta.
    ParameterVector
);
vector_newtype!(
    /// Noisy observation y.
    Observation
);
vector_newtype!(
    /// Predictive quantities of interest z.
    QoiVector
);

/// A design vector together with the box it must live in.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignPoint {
    coords: Vec<f64>,
    bounds: Vec<(f64, f64)>,
}

impl DesignPoint {
    pub fn new(coords: Vec<f64>, bounds: Vec<(f64, f64)>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::Config("design must have at least one coordinate".into()));
        }
        if coords.len() != bounds.len() {
            return Err(Error::Dimension {
                what: "design bounds",
                expected: coords.len(),
                got: bounds.len(),
            });
        }
        for (x, (lo, hi)) in coords.iter().zip(&bounds) {
            if !(lo <= x && x <= hi) {
                return Err(Error::Domain {
                    what: "design outside its bounds",
                    point: coords,
                });
            }
        }
        Ok(Self { coords, bounds })
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn bounds(&self) -> &[(f64, f64)] {
        &self.bounds
    }
}

impl Deref for DesignPoint {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.coords
    }
}

/// Prior distribution over parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum PriorSpec {
    UniformBox { lo: Vec<f64>, hi: Vec<f64> },
    GaussianDiag { mean: Vec<f64>, sd: Vec<f64> },
}

impl PriorSpec {
    pub fn uniform_unit(dim: usize) -> Self {
        PriorSpec::UniformBox {
            lo: vec![0.0; dim],
            hi: vec![1.0; dim],
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            PriorSpec::UniformBox { lo, hi } => {
                if lo.len() != hi.len() || lo.is_empty() {
                    return Err(Error::Config("uniform prior bounds malformed".into()));
                }
                if lo.iter().zip(hi).any(|(l, h)| !(l < h)) {
                    return Err(Error::Config("uniform prior needs lo < hi".into()));
                }
            }
            PriorSpec::GaussianDiag { mean, sd } => {
                if mean.len() != sd.len() || mean.is_empty() {
                    return Err(Error::Config("gaussian prior malformed".into()));
                }
                if sd.iter().any(|s| !(*s > 0.0)) {
                    return Err(Error::Config("gaussian prior needs sd > 0".into()));
                }
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            PriorSpec::UniformBox { lo, .. } => lo.len(),
            PriorSpec::GaussianDiag { mean, .. } => mean.len(),
        }
    }

    /// Draws one sample into `out`.
    pub fn sample_into(&self, rng: &mut Rng, out: &mut [f64]) {
        match self {
            PriorSpec::UniformBox { lo, hi } => {
                for ((o, l), h) in out.iter_mut().zip(lo).zip(hi) {
                    *o = l + (h - l) * rng.random::<f64>();
                }
            }
            PriorSpec::GaussianDiag { mean, sd } => {
                for ((o, m), s) in out.iter_mut().zip(mean).zip(sd) {
                    let e: f64 = rng.sample(StandardNormal);
                    *o = m + s * e;
                }
            }
        }
    }

    /// Log prior density; `-inf` outside the support.
    pub fn log_density(&self, theta: &[f64]) -> f64 {
        match self {
            PriorSpec::UniformBox { lo, hi } => {
                let mut lp = 0.0;
                for ((t, l), h) in theta.iter().zip(lo).zip(hi) {
                    if !(l <= t && t <= h) {
                        return f64::NEG_INFINITY;
                    }
                    lp -= (h - l).ln();
                }
                lp
            }
            PriorSpec::GaussianDiag { mean, sd } => theta
                .iter()
                .zip(mean)
                .zip(sd)
                .map(|((t, m), s)| -0.5 * LN_2PI - s.ln() - 0.5 * ((t - m) / s).powi(2))
                .sum(),
        }
    }

    pub fn contains(&self, theta: &[f64]) -> bool {
        self.log_density(theta).is_finite()
    }

    /// Per-coordinate scale: box width or standard deviation.
    pub fn scale(&self) -> Vec<f64> {
        match self {
            PriorSpec::UniformBox { lo, hi } => hi.iter().zip(lo).map(|(h, l)| h - l).collect(),
            PriorSpec::GaussianDiag { sd, .. } => sd.clone(),
        }
    }

    /// Folds a point back into the support by reflecting at box faces.
    pub fn reflect_into_support(&self, theta: &mut [f64]) {
        if let PriorSpec::UniformBox { lo, hi } = self {
            for ((t, l), h) in theta.iter_mut().zip(lo).zip(hi) {
                let w = h - l;
                let mut x = (*t - l).rem_euclid(2.0 * w);
                if x > w {
                    x = 2.0 * w - x;
                }
                *t = l + x;
            }
        }
    }

    /// Finite integration range per coordinate (the box, or mean +/- 8 sd).
    pub fn integration_range(&self) -> Vec<(f64, f64)> {
        match self {
            PriorSpec::UniformBox { lo, hi } => lo.iter().copied().zip(hi.iter().copied()).collect(),
            PriorSpec::GaussianDiag { mean, sd } => mean
                .iter()
                .zip(sd)
                .map(|(m, s)| (m - 8.0 * s, m + 8.0 * s))
                .collect(),
        }
    }
}

/// i.i.d. prior draws, reproducible for a fixed rng state.
pub fn sample_prior(prior: &PriorSpec, n: usize, rng: &mut Rng) -> Vec<ParameterVector> {
    (0..n)
        .map(|_| {
            let mut v = vec![0.0; prior.dim()];
            prior.sample_into(rng, &mut v);
            ParameterVector(v)
        })
        .collect()
}

/// Diagonal Gaussian observation noise.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub sd: Vec<f64>,
}

impl NoiseModel {
    pub fn isotropic(sd: f64, dim: usize) -> Self {
        Self { sd: vec![sd; dim] }
    }

    /// Gaussian log-density of a residual vector.
    pub fn log_density(&self, residual: &[f64]) -> f64 {
        residual
            .iter()
            .zip(&self.sd)
            .map(|(r, s)| -0.5 * (2.0 * PI * s * s).ln() - 0.5 * (r / s).powi(2))
            .sum()
    }
}

/// Deterministic observation map G(theta, d) and prediction map H(theta).
pub trait ForwardModel: Send + Sync {
    fn observe(&self, theta: &[f64], design: &[f64], out: &mut [f64]);
    fn predict(&self, theta: &[f64], out: &mut [f64]);
}

/// Dimensions of a problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub theta: usize,
    pub y: usize,
    pub z: usize,
    pub d: usize,
}

/// Everything needed to evaluate an expected utility: prior, observation
/// model with noise, and prediction model.
#[derive(Clone)]
pub struct Problem {
    pub name: String,
    pub dims: Dims,
    pub prior: PriorSpec,
    pub noise: NoiseModel,
    /// Additive Gaussian sd on the prediction; `None` is the pushforward case.
    pub prediction_noise: Option<Vec<f64>>,
    pub design_bounds: Vec<(f64, f64)>,
    /// Set when `predict` is the identity, which enables the grid QoI reference.
    pub predict_is_identity: bool,
    pub model: Arc<dyn ForwardModel>,
}

impl fmt::Debug for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Problem")
            .field("name", &self.name)
            .field("dims", &self.dims)
            .field("prior", &self.prior)
            .field("noise", &self.noise)
            .field("prediction_noise", &self.prediction_noise)
            .field("design_bounds", &self.design_bounds)
            .finish_non_exhaustive()
    }
}

impl Problem {
    pub fn new(
        name: impl Into<String>,
        dims: Dims,
        prior: PriorSpec,
        noise: NoiseModel,
        design_bounds: Vec<(f64, f64)>,
        model: Arc<dyn ForwardModel>,
    ) -> Result<Self> {
        prior.validate()?;
        if prior.dim() != dims.theta {
            return Err(Error::Dimension {
                what: "prior",
                expected: dims.theta,
                got: prior.dim(),
            });
        }
        if noise.sd.len() != dims.y {
            return Err(Error::Dimension {
                what: "noise",
                expected: dims.y,
                got: noise.sd.len(),
            });
        }
        if noise.sd.iter().any(|s| !(*s > 0.0)) {
            return Err(Error::Config("noise sd must be positive".into()));
        }
        if design_bounds.len() != dims.d || dims.d == 0 {
            return Err(Error::Dimension {
                what: "design bounds",
                expected: dims.d,
                got: design_bounds.len(),
            });
        }
        Ok(Self {
            name: name.into(),
            dims,
            prior,
            noise,
            prediction_noise: None,
            design_bounds,
            predict_is_identity: false,
            model,
        })
    }

    pub fn with_prediction_noise(mut self, sd: Vec<f64>) -> Self {
        self.prediction_noise = Some(sd);
        self
    }

    pub fn with_identity_prediction(mut self) -> Self {
        self.predict_is_identity = true;
        self
    }

    pub fn with_noise_sd(mut self, sd: f64) -> Self {
        self.noise = NoiseModel::isotropic(sd, self.dims.y);
        self
    }

    pub fn design(&self, coords: Vec<f64>) -> Result<DesignPoint> {
        DesignPoint::new(coords, self.design_bounds.clone())
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        if theta.len() != self.dims.theta {
            return Err(Error::Dimension {
                what: "theta",
                expected: self.dims.theta,
                got: theta.len(),
            });
        }
        Ok(())
    }

    fn check_design(&self, d: &[f64]) -> Result<()> {
        if d.len() != self.dims.d {
            return Err(Error::Dimension {
                what: "design",
                expected: self.dims.d,
                got: d.len(),
            });
        }
        Ok(())
    }

    /// Noise-free G(theta, d).
    pub fn observe_mean(&self, theta: &[f64], d: &[f64]) -> Result<Vec<f64>> {
        self.check_theta(theta)?;
        self.check_design(d)?;
        let mut g = vec![0.0; self.dims.y];
        self.model.observe(theta, d, &mut g);
        if g.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelEvaluation {
                theta: theta.to_vec(),
                design: d.to_vec(),
            });
        }
        Ok(g)
    }

    /// y = G(theta, d) + eps with eps drawn from the noise model.
    pub fn simulate_observation(&self, theta: &[f64], d: &[f64], rng: &mut Rng) -> Result<Observation> {
        let mut y = self.observe_mean(theta, d)?;
        for (v, s) in y.iter_mut().zip(&self.noise.sd) {
            let e: f64 = rng.sample(StandardNormal);
            *v += s * e;
        }
        Ok(Observation(y))
    }

    /// ln p(y | theta, d).
    pub fn log_likelihood(&self, y: &[f64], theta: &[f64], d: &[f64]) -> Result<f64> {
        if y.len() != self.dims.y {
            return Err(Error::Dimension {
                what: "observation",
                expected: self.dims.y,
                got: y.len(),
            });
        }
        let g = self.observe_mean(theta, d)?;
        let r: Vec<f64> = y.iter().zip(&g).map(|(a, b)| a - b).collect();
        if r.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelEvaluation {
                theta: theta.to_vec(),
                design: d.to_vec(),
            });
        }
        Ok(self.noise.log_density(&r))
    }

    /// Unnormalized log posterior closure for fixed (y, d). Returns `-inf`
    /// outside the prior support or where the model is non-finite.
    pub fn log_posterior<'a>(&'a self, y: &'a [f64], d: &'a [f64]) -> impl FnMut(&[f64]) -> f64 + 'a {
        let mut g = vec![0.0; self.dims.y];
        move |theta: &[f64]| {
            let lp = self.prior.log_density(theta);
            if !lp.is_finite() {
                return f64::NEG_INFINITY;
            }
            self.model.observe(theta, d, &mut g);
            let mut ll = 0.0;
            for ((gi, yi), s) in g.iter().zip(y).zip(&self.noise.sd) {
                let r = (yi - gi) / s;
                ll -= 0.5 * r * r;
            }
            let v = lp + ll;
            if v.is_nan() {
                f64::NEG_INFINITY
            } else {
                v
            }
        }
    }

    /// z = H(theta) (+ eta when prediction noise is configured).
    pub fn predict_qoi(&self, theta: &[f64], rng: &mut Rng) -> Result<QoiVector> {
        self.check_theta(theta)?;
        let mut z = vec![0.0; self.dims.z];
        self.predict_into(theta, rng, &mut z)?;
        Ok(QoiVector(z))
    }

    pub(crate) fn predict_into(&self, theta: &[f64], rng: &mut Rng, out: &mut [f64]) -> Result<()> {
        self.model.predict(theta, out);
        if let Some(sd) = &self.prediction_noise {
            for (v, s) in out.iter_mut().zip(sd) {
                let e: f64 = rng.sample(StandardNormal);
                *v += s * e;
            }
        }
        if out.iter().any(|v| !v.is_finite()) {
            return Err(Error::ModelEvaluation {
                theta: theta.to_vec(),
                design: Vec::new(),
            });
        }
        Ok(())
    }
}
