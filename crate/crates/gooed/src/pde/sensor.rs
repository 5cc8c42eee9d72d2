//! Sensor-placement problems on top of the solver.

use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{bilinear, right_boundary_flux, solve, Grid2D, SolverConfig, SourceParams, T_OBSERVE, T_PREDICT};
use crate::error::{Error, Result};
use crate::problem::{Dims, ForwardModel, NoiseModel, PriorSpec, Problem};

/// Snapshot index of the observation time.
pub const T1: usize = 0;
/// Snapshot index of the prediction time.
pub const T2: usize = 1;

/// Sensor noise sd.
const SENSOR_NOISE_SD: f64 = 0.05;

/// Predicted quantities at the prediction time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum QoiSpec {
    /// Concentration at each listed point.
    Concentration { xi: Vec<[f64; 2]> },
    /// Flux through `x1 = 1`.
    Flux,
    /// Concentration at one point, then the flux.
    ConcentrationPlusFlux { xi: [f64; 2] },
}

impl QoiSpec {
    fn points(&self) -> Vec<[f64; 2]> {
        match self {
            QoiSpec::Concentration { xi } => xi.clone(),
            QoiSpec::Flux => Vec::new(),
            QoiSpec::ConcentrationPlusFlux { xi } => vec![*xi],
        }
    }

    fn has_flux(&self) -> bool {
        !matches!(self, QoiSpec::Concentration { .. })
    }

    pub fn dim(&self) -> usize {
        self.points().len() + usize::from(self.has_flux())
    }
}

/// Solver fields at a tensor grid of source locations, restricted to the
/// region `[0, 1]^2`, plus the flux at the prediction time.
#[derive(Debug, Clone)]
pub struct Tabulated {
    m: usize,
    roi: Grid2D,
    t1: Vec<f64>,
    t2: Vec<f64>,
    flux: Vec<f64>,
}

/// Region-of-interest view: nodes `0..=k-1` covering `[0, 1]`, addressed as
/// if on a full grid so that [`bilinear`] can be reused with a shift.
fn roi_nodes(grid: &Grid2D) -> (usize, usize) {
    let i0 = grid.node_of(0.0).expect("0 is a node");
    let i1 = grid.node_of(1.0).expect("1 is a node");
    (i0, i1 - i0 + 1)
}

impl Tabulated {
    /// Source-grid points per axis.
    pub fn m(&self) -> usize {
        self.m
    }

    fn cell(&self, theta: &[f64]) -> Option<[(usize, f64); 2]> {
        let mut out = [(0, 0.0); 2];
        for k in 0..2 {
            let v = theta[k];
            if !(0.0..=1.0).contains(&v) {
                return None;
            }
            let s = v * (self.m - 1) as f64;
            let a = (s.floor() as usize).min(self.m - 2);
            out[k] = (a, s - a as f64);
        }
        Some(out)
    }

    fn blend(&self, theta: &[f64], f: impl Fn(usize) -> f64) -> f64 {
        let Some([(a, wa), (b, wb)]) = self.cell(theta) else {
            return f64::NAN;
        };
        let m = self.m;
        let at = |a: usize, b: usize| f(b * m + a);
        (1.0 - wb) * ((1.0 - wa) * at(a, b) + wa * at(a + 1, b)) + wb * ((1.0 - wa) * at(a, b + 1) + wa * at(a + 1, b + 1))
    }

    /// Concentration at snapshot `snap` ([`T1`] or [`T2`]), source `theta`
    /// and location `x` in `[0, 1]^2`; `NaN` outside.
    pub fn concentration(&self, snap: usize, theta: &[f64], x: [f64; 2]) -> f64 {
        if x.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return f64::NAN;
        }
        let data = if snap == T1 { &self.t1 } else { &self.t2 };
        let len = self.roi.n() * self.roi.n();
        // The restricted grid starts at 0 instead of -1.
        let shifted = [x[0] - 1.0, x[1] - 1.0];
        self.blend(theta, |k| bilinear(&data[k * len..(k + 1) * len], self.roi, shifted))
    }

    pub fn flux(&self, theta: &[f64]) -> f64 {
        self.blend(theta, |k| self.flux[k])
    }
}

/// Solves at an `m x m` tensor grid of source locations on `[0, 1]^2`.
pub fn tabulate_surrogate(m: usize, grid: &Grid2D, cfg: &SolverConfig) -> Result<Tabulated> {
    if m < 5 {
        return Err(Error::Config("surrogate needs at least 5 x 5 source locations".into()));
    }
    let snaps = snapshot_indices(cfg)?;
    let (i0, k) = roi_nodes(grid);
    let roi = Grid2D::new(grid.dx())?;
    let roi = Grid2D { n: k, ..roi };
    let results: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..m * m)
        .into_par_iter()
        .map(|idx| {
            let theta = [(idx % m) as f64 / (m - 1) as f64, (idx / m) as f64 / (m - 1) as f64];
            let sol = solve(&SourceParams::new(theta), grid, cfg)?;
            let cut = |f: &super::Field| {
                let mut out = Vec::with_capacity(k * k);
                for j in i0..i0 + k {
                    out.extend_from_slice(&f.c[j * grid.n() + i0..j * grid.n() + i0 + k]);
                }
                out
            };
            let (f1, f2) = (&sol.fields[snaps.0], &sol.fields[snaps.1]);
            Ok((cut(f1), cut(f2), right_boundary_flux(f2)))
        })
        .collect::<Result<_>>()?;
    let mut tab = Tabulated {
        m,
        roi,
        t1: Vec::with_capacity(m * m * k * k),
        t2: Vec::with_capacity(m * m * k * k),
        flux: Vec::with_capacity(m * m),
    };
    for (a, b, f) in results {
        tab.t1.extend(a);
        tab.t2.extend(b);
        tab.flux.push(f);
    }
    Ok(tab)
}

fn snapshot_indices(cfg: &SolverConfig) -> Result<(usize, usize)> {
    let find = |t: f64| {
        cfg.snapshot_times
            .iter()
            .position(|s| (s - t).abs() < 1e-12)
            .ok_or_else(|| Error::Config(format!("solver config lacks a snapshot at t = {t}")))
    };
    Ok((find(T_OBSERVE)?, find(T_PREDICT)?))
}

/// How the sensor model evaluates concentrations.
#[derive(Debug, Clone)]
pub enum SurrogateSpec {
    /// A full solve per evaluation.
    Direct { grid: Grid2D, cfg: SolverConfig },
    Tabulated(Arc<Tabulated>),
}

struct SensorModel {
    n_sensors: usize,
    qoi: QoiSpec,
    surrogate: SurrogateSpec,
}

impl SensorModel {
    fn direct(grid: &Grid2D, cfg: &SolverConfig, theta: &[f64]) -> Option<super::Solution> {
        if theta.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return None;
        }
        solve(&SourceParams::new([theta[0], theta[1]]), grid, cfg).ok()
    }
}

impl ForwardModel for SensorModel {
    fn observe(&self, theta: &[f64], d: &[f64], out: &mut [f64]) {
        match &self.surrogate {
            SurrogateSpec::Tabulated(tab) => {
                for k in 0..self.n_sensors {
                    out[k] = tab.concentration(T1, theta, [d[2 * k], d[2 * k + 1]]);
                }
            }
            SurrogateSpec::Direct { grid, cfg } => {
                let sol = Self::direct(grid, cfg, theta);
                let idx = snapshot_indices(cfg).map(|s| s.0);
                for k in 0..self.n_sensors {
                    out[k] = match (&sol, &idx) {
                        (Some(s), Ok(i)) => super::sample_concentration(&s.fields[*i], [d[2 * k], d[2 * k + 1]])
                            .unwrap_or(f64::NAN),
                        _ => f64::NAN,
                    };
                }
            }
        }
    }

    fn predict(&self, theta: &[f64], out: &mut [f64]) {
        let points = self.qoi.points();
        match &self.surrogate {
            SurrogateSpec::Tabulated(tab) => {
                for (o, xi) in out.iter_mut().zip(&points) {
                    *o = tab.concentration(T2, theta, *xi);
                }
                if self.qoi.has_flux() {
                    out[points.len()] = tab.flux(theta);
                }
            }
            SurrogateSpec::Direct { grid, cfg } => {
                let sol = Self::direct(grid, cfg, theta);
                let idx = snapshot_indices(cfg).map(|s| s.1);
                let field = match (&sol, idx) {
                    (Some(s), Ok(i)) => Some(&s.fields[i]),
                    _ => None,
                };
                for (o, xi) in out.iter_mut().zip(&points) {
                    *o = field.map_or(f64::NAN, |f| super::sample_concentration(f, *xi).unwrap_or(f64::NAN));
                }
                if self.qoi.has_flux() {
                    out[points.len()] = field.map_or(f64::NAN, right_boundary_flux);
                }
            }
        }
    }
}

/// Source-inversion problem: uniform prior on the source location, sensors
/// reading the concentration at the observation time with noise sd 0.05,
/// QoIs at the prediction time. Designs are `[x1, x2]` per sensor.
pub fn build_sensor_problem(n_sensors: usize, qoi: QoiSpec, surrogate: SurrogateSpec) -> Result<Problem> {
    if !(1..=3).contains(&n_sensors) {
        return Err(Error::Config(format!("n_sensors must be 1, 2 or 3, got {n_sensors}")));
    }
    for xi in qoi.points() {
        if xi.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Config(format!("QoI location {xi:?} outside [0, 1]^2")));
        }
    }
    if qoi.dim() == 0 {
        return Err(Error::Config("QoI list is empty".into()));
    }
    if let SurrogateSpec::Direct { cfg, .. } = &surrogate {
        snapshot_indices(cfg)?;
    }
    let dims = Dims {
        theta: 2,
        y: n_sensors,
        z: qoi.dim(),
        d: 2 * n_sensors,
    };
    Problem::new(
        format!("pde-{n_sensors}-sensor"),
        dims,
        PriorSpec::uniform_unit(2),
        NoiseModel::isotropic(SENSOR_NOISE_SD, n_sensors),
        vec![(0.0, 1.0); 2 * n_sensors],
        Arc::new(SensorModel {
            n_sensors,
            qoi,
            surrogate,
        }),
    )
}
