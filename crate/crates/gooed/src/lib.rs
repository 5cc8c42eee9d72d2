//! Goal-oriented Bayesian optimal experimental design.
//!
//! The expected information gain on predictive quantities of interest,
//! `U(d) = E_y[ KL( p(z | y, d) || p(z) ) ]`, is estimated with a nested
//! Monte Carlo loop: outer draws of `(theta, y)`, ensemble MCMC for the
//! posterior, and kernel density estimates of the prior- and
//! posterior-predictive densities. Designs are then optimized with a
//! Gaussian-process UCB loop.
//!
//! Modules:
//! * [`problem`]: priors, forward models, and the built-in test problems.
//! * [`mcmc`]: affine-invariant stretch-move ensemble sampler.
//! * [`kde`]: Gaussian KDE with cross-validated bandwidths.
//! * [`eig`]: nested Monte Carlo and grid-quadrature utility estimators.
//! * [`bo`]: Matern-5/2 GP regression and UCB Bayesian optimization.
//! * [`pde`]: finite-volume convection-diffusion solver and sensor problems.
//! * [`study`]: config-driven batch commands behind the `gooed` binary.

pub mod bo;
pub mod eig;
pub mod error;
pub mod kde;
pub mod mcmc;
pub mod pde;
pub mod problem;
pub mod rng;
pub mod samples;
pub mod stats;
pub mod study;

pub use error::{Error, Result};
pub use samples::Samples;
