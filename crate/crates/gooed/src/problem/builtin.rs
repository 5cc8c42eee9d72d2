//! Registry of the built-in benchmark problems.

use std::f64::consts::PI;
use std::sync::Arc;

use super::{Dims, ForwardModel, NoiseModel, PriorSpec, Problem};
use crate::error::{Error, Result};

/// Names accepted by [`builtin_problem`].
pub const BUILTIN_NAMES: &[&str] = &[
    "bm",
    "t1",
    "t2",
    "t3",
    "easom1d",
    "rosenbrock1d",
    "easom2d",
    "rosenbrock2d",
    "ndim",
    "linear-gaussian",
];

/// Noise sd shared by the nonlinear test problems (variance 1e-4).
const DEFAULT_NOISE_SD: f64 = 1e-2;

/// Scalar prediction models paired with the 1D nonlinear observation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Prediction1d {
    Identity,
    T1,
    T2,
    T3,
}

impl Prediction1d {
    pub fn eval(self, theta: f64) -> f64 {
        match self {
            Prediction1d::Identity => theta,
            Prediction1d::T1 => theta.sin() + theta * (theta + (0.5 - theta).abs()).exp(),
            Prediction1d::T2 => {
                if theta < 0.15 {
                    -100.0 * theta + 25.0
                } else if theta <= 0.7 {
                    5.0
                } else {
                    50.0 * theta + 25.0
                }
            }
            Prediction1d::T3 => {
                let (mu, sigma) = (0.3, 0.2);
                (-(theta - mu).powi(2) / (2.0 * sigma * sigma)).exp() / ((2.0 * PI).sqrt() * sigma)
            }
        }
    }
}

/// theta^3 d^2 + theta exp(-|0.2 - d|)
fn scalar_observation(theta: f64, d: f64) -> f64 {
    theta.powi(3) * d * d + theta * (-(0.2 - d).abs()).exp()
}

struct Scalar1d(Prediction1d);

impl ForwardModel for Scalar1d {
    fn observe(&self, theta: &[f64], design: &[f64], out: &mut [f64]) {
        out[0] = scalar_observation(theta[0], design[0]);
    }

    fn predict(&self, theta: &[f64], out: &mut [f64]) {
        out[0] = self.0.eval(theta[0]);
    }
}

#[derive(Debug, Clone, Copy)]
enum Qoi2d {
    Easom,
    Rosenbrock,
}

impl Qoi2d {
    fn eval(self, t: &[f64]) -> f64 {
        match self {
            // Exponent kept exactly as the source formula prints it.
            Qoi2d::Easom => {
                t[0].cos() * t[1].cos() * (-(t[0] - 0.4).powi(2) + (t[1] - 0.6).powi(2)).exp()
            }
            Qoi2d::Rosenbrock => (1.0 - t[0]).powi(2) + 5.0 * (t[1] - t[0] * t[0]).powi(2),
        }
    }
}

/// Two parameters, scalar design and observation.
struct TwoParamScalarObs(Qoi2d);

impl ForwardModel for TwoParamScalarObs {
    fn observe(&self, t: &[f64], d: &[f64], out: &mut [f64]) {
        out[0] = t[0].powi(3) * d[0] * d[0] + t[1] * (-(0.2 - d[0]).abs()).exp();
    }

    fn predict(&self, t: &[f64], out: &mut [f64]) {
        out[0] = self.0.eval(t);
    }
}

/// Two parameters, two-dimensional design and observation.
struct TwoParamVectorObs(Qoi2d);

impl ForwardModel for TwoParamVectorObs {
    fn observe(&self, t: &[f64], d: &[f64], out: &mut [f64]) {
        let decay = (-(0.2 - d[1]).abs()).exp();
        let d1sq = d[0] * d[0];
        out[0] = t[0].powi(3) * d1sq + t[1] * decay;
        out[1] = t[1].powi(3) * d1sq + t[0] * decay;
    }

    fn predict(&self, t: &[f64], out: &mut [f64]) {
        out[0] = self.0.eval(t);
    }
}

/// N-dimensional coupled observation with a Rosenbrock-sum QoI.
struct NDim;

impl ForwardModel for NDim {
    fn observe(&self, t: &[f64], d: &[f64], out: &mut [f64]) {
        let n = t.len();
        let mut coupled = 0.0;
        for j in 0..n {
            coupled += t[j] * (-(0.2 - d[j]).abs()).exp();
        }
        for i in 0..n {
            let own = t[i] * (-(0.2 - d[i]).abs()).exp();
            out[i] = t[i].powi(3) * d[i] * d[i] + (coupled - own);
        }
    }

    fn predict(&self, t: &[f64], out: &mut [f64]) {
        let n = t.len();
        let mut z = 0.0;
        for i in 0..n {
            z += (1.0 - t[i]).powi(2);
            for j in 0..n {
                if j != i {
                    z += 5.0 * (t[j] - t[i] * t[i]).powi(2);
                }
            }
        }
        out[0] = z;
    }
}

struct LinearGaussian;

impl ForwardModel for LinearGaussian {
    fn observe(&self, t: &[f64], d: &[f64], out: &mut [f64]) {
        out[0] = d[0] * t[0];
    }

    fn predict(&self, t: &[f64], out: &mut [f64]) {
        out[0] = t[0];
    }
}

/// Validation oracle: theta ~ N(0,1), y = d theta + eps, z = theta.
/// Its EIG is `0.5 ln(1 + d^2 / noise_sd^2)`.
pub fn linear_gaussian(noise_sd: f64) -> Problem {
    Problem::new(
        "linear-gaussian",
        Dims { theta: 1, y: 1, z: 1, d: 1 },
        PriorSpec::GaussianDiag {
            mean: vec![0.0],
            sd: vec![1.0],
        },
        NoiseModel::isotropic(noise_sd, 1),
        vec![(0.0, 2.0)],
        Arc::new(LinearGaussian),
    )
    .expect("static problem definition")
    .with_identity_prediction()
}

/// Builds a named problem. `n` is the dimension for `ndim` (default 1).
pub fn builtin_problem(name: &str, n: Option<usize>) -> Result<Problem> {
    let scalar = |label: &str, pred: Prediction1d| {
        Problem::new(
            label,
            Dims { theta: 1, y: 1, z: 1, d: 1 },
            PriorSpec::uniform_unit(1),
            NoiseModel::isotropic(DEFAULT_NOISE_SD, 1),
            vec![(0.0, 1.0)],
            Arc::new(Scalar1d(pred)),
        )
    };
    let problem = match name {
        "bm" => scalar("bm", Prediction1d::Identity)?.with_identity_prediction(),
        "t1" => scalar("t1", Prediction1d::T1)?,
        "t2" => scalar("t2", Prediction1d::T2)?,
        "t3" => scalar("t3", Prediction1d::T3)?,
        "easom1d" | "rosenbrock1d" => {
            let q = if name == "easom1d" { Qoi2d::Easom } else { Qoi2d::Rosenbrock };
            Problem::new(
                name,
                Dims { theta: 2, y: 1, z: 1, d: 1 },
                PriorSpec::uniform_unit(2),
                NoiseModel::isotropic(DEFAULT_NOISE_SD, 1),
                vec![(0.0, 1.0)],
                Arc::new(TwoParamScalarObs(q)),
            )?
        }
        "easom2d" | "rosenbrock2d" => {
            let q = if name == "easom2d" { Qoi2d::Easom } else { Qoi2d::Rosenbrock };
            Problem::new(
                name,
                Dims { theta: 2, y: 2, z: 1, d: 2 },
                PriorSpec::uniform_unit(2),
                NoiseModel::isotropic(DEFAULT_NOISE_SD, 2),
                vec![(0.0, 1.0); 2],
                Arc::new(TwoParamVectorObs(q)),
            )?
        }
        "ndim" => {
            let n = n.unwrap_or(1);
            if n == 0 {
                return Err(Error::Config("ndim needs N >= 1".into()));
            }
            Problem::new(
                "ndim",
                Dims { theta: n, y: n, z: 1, d: n },
                PriorSpec::uniform_unit(n),
                NoiseModel::isotropic(DEFAULT_NOISE_SD, n),
                vec![(0.0, 1.0); n],
                Arc::new(NDim),
            )?
        }
        "linear-gaussian" => linear_gaussian(0.1),
        other => return Err(Error::Config(format!("unknown problem '{other}'"))),
    };
    Ok(problem)
}
