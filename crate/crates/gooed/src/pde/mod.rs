//! Convection-diffusion on `[-1, 2]^2`:
//!
//! `dc/dt = lap(c) - u(t) . grad(c) + S(x; theta)`, `u(t) = (50t, 50t)`,
//! Gaussian source `S = s / (2 pi h^2) exp(-|x - theta|^2 / (2 h^2))`,
//! zero initial condition and no-flux boundaries.
//!
//! The grid is vertex-centered: nodes sit on `-1 + k dx`, boundary nodes own
//! half cells. Each step advances convection with second-order
//! Adams-Bashforth on QUICK face fluxes (forward Euler on the first step),
//! adds half the source, applies Crank-Nicolson diffusion as a
//! Peaceman-Rachford ADI pair of tridiagonal sweeps, and adds the other half
//! of the source. Boundary faces carry no flux, so the trapezoid-weighted
//! mass changes only through the source.

mod sensor;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use sensor::{build_sensor_problem, tabulate_surrogate, QoiSpec, SurrogateSpec, Tabulated, T1, T2};

/// Lower edge of the domain in both coordinates.
pub const DOMAIN_LO: f64 = -1.0;
/// Upper edge of the domain in both coordinates.
pub const DOMAIN_HI: f64 = 2.0;

/// Uniform vertex-centered grid on the square domain.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    dx: f64,
    n: usize,
}

impl Grid2D {
    pub fn new(dx: f64) -> Result<Self> {
        let cells = (DOMAIN_HI - DOMAIN_LO) / dx;
        if !(dx > 0.0) || (cells - cells.round()).abs() > 1e-9 || cells.round() < 4.0 {
            return Err(Error::Config(format!("dx = {dx} must divide the domain width 3 into >= 4 cells")));
        }
        Ok(Self {
            dx,
            n: cells.round() as usize + 1,
        })
    }

    /// Grid used by default (`dx = 0.05`).
    pub fn desk() -> Self {
        Self::new(0.05).expect("valid spacing")
    }

    /// Grid of the reference study (`dx = 0.01`).
    pub fn paper() -> Self {
        Self::new(0.01).expect("valid spacing")
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Nodes per axis.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn coord(&self, k: usize) -> f64 {
        DOMAIN_LO + k as f64 * self.dx
    }

    /// Node index of coordinate `x`, if `x` is (within roundoff) a node.
    pub fn node_of(&self, x: f64) -> Option<usize> {
        let k = (x - DOMAIN_LO) / self.dx;
        let r = k.round();
        ((k - r).abs() < 1e-9 && r >= 0.0 && (r as usize) < self.n).then_some(r as usize)
    }

    /// Control-volume width of node `k` along one axis.
    pub fn width(&self, k: usize) -> f64 {
        if k == 0 || k + 1 == self.n {
            0.5 * self.dx
        } else {
            self.dx
        }
    }
}

/// Source location, strength and width.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SourceParams {
    pub theta: [f64; 2],
    pub s: f64,
    pub h: f64,
}

impl SourceParams {
    pub fn new(theta: [f64; 2]) -> Self {
        Self { theta, s: 2.0, h: 0.05 }
    }

    pub fn rate(&self, x1: f64, x2: f64) -> f64 {
        let r2 = (x1 - self.theta[0]).powi(2) + (x2 - self.theta[1]).powi(2);
        self.s / (2.0 * std::f64::consts::PI * self.h * self.h) * (-r2 / (2.0 * self.h * self.h)).exp()
    }
}

/// Convection velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum Velocity {
    /// `u(t) = (rate t, rate t)`.
    Linear { rate: f64 },
    Zero,
}

impl Velocity {
    pub fn at(&self, t: f64) -> f64 {
        match self {
            Velocity::Linear { rate } => rate * t,
            Velocity::Zero => 0.0,
        }
    }
}

/// Initial concentration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum InitialCondition {
    Zero,
    /// `amplitude * exp(-|x - center|^2 / (2 sd^2))`.
    Gaussian { center: [f64; 2], sd: f64, amplitude: f64 },
}

/// Time stepping settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub dt: f64,
    pub t_end: f64,
    pub snapshot_times: Vec<f64>,
    pub velocity: Velocity,
    pub initial: InitialCondition,
}

/// Observation time.
pub const T_OBSERVE: f64 = 0.05;
/// Prediction time.
pub const T_PREDICT: f64 = 0.2;

impl SolverConfig {
    /// `dt = 2.5e-3`, snapshots at the observation and prediction times.
    pub fn desk() -> Self {
        Self::with_dt(2.5e-3)
    }

    /// `dt = 5e-4`, snapshots at the observation and prediction times.
    pub fn paper() -> Self {
        Self::with_dt(5e-4)
    }

    fn with_dt(dt: f64) -> Self {
        Self {
            dt,
            t_end: T_PREDICT,
            snapshot_times: vec![T_OBSERVE, T_PREDICT],
            velocity: Velocity::Linear { rate: 50.0 },
            initial: InitialCondition::Zero,
        }
    }

    fn steps(&self, t: f64) -> Result<usize> {
        let k = t / self.dt;
        if (k - k.round()).abs() > 1e-6 {
            return Err(Error::Config(format!("time {t} is not a multiple of dt = {}", self.dt)));
        }
        Ok(k.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0) || !(self.t_end > 0.0) {
            return Err(Error::Config("dt and t_end must be positive".into()));
        }
        self.steps(self.t_end)?;
        if self.snapshot_times.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::Config("snapshot times must be strictly increasing".into()));
        }
        for &t in &self.snapshot_times {
            if !(t >= 0.0 && t <= self.t_end + 1e-12) {
                return Err(Error::Config(format!("snapshot time {t} outside [0, t_end]")));
            }
            self.steps(t)?;
        }
        Ok(())
    }
}

/// Concentration at every node at time `t`; `c[j * n + i]` is node
/// `(x1_i, x2_j)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    pub grid: Grid2D,
    pub t: f64,
    pub c: Vec<f64>,
}

impl Field {
    pub fn zeros(grid: Grid2D, t: f64) -> Self {
        Self {
            grid,
            t,
            c: vec![0.0; grid.n * grid.n],
        }
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.c[j * self.grid.n + i]
    }

    /// Trapezoid-weighted integral of `c` over the domain.
    pub fn total_mass(&self) -> f64 {
        let g = &self.grid;
        let mut m = 0.0;
        for j in 0..g.n {
            for i in 0..g.n {
                m += self.at(i, j) * g.width(i) * g.width(j);
            }
        }
        m
    }

    /// Mass-weighted mean position.
    pub fn centroid(&self) -> [f64; 2] {
        let g = &self.grid;
        let (mut m, mut a, mut b) = (0.0, 0.0, 0.0);
        for j in 0..g.n {
            for i in 0..g.n {
                let w = self.at(i, j) * g.width(i) * g.width(j);
                m += w;
                a += w * g.coord(i);
                b += w * g.coord(j);
            }
        }
        [a / m, b / m]
    }

    pub fn min(&self) -> f64 {
        self.c.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Writes `<stem>.csv` (columns `x1,x2,c`) and `<stem>.json` with the
    /// grid spacing, domain, time and source location, plus any `extra`
    /// header entries.
    pub fn export(&self, dir: &Path, stem: &str, theta: [f64; 2], extra: &[(&str, serde_json::Value)]) -> Result<()> {
        let mut header = serde_json::json!({
            "dx": self.grid.dx,
            "domain": [DOMAIN_LO, DOMAIN_HI],
            "n": self.grid.n,
            "t": self.t,
            "theta": theta,
        });
        for (k, v) in extra {
            header[*k] = v.clone();
        }
        std::fs::write(dir.join(format!("{stem}.json")), serde_json::to_string_pretty(&header)? + "\n")?;
        let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.csv")))?);
        writeln!(w, "x1,x2,c")?;
        for j in 0..self.grid.n {
            for i in 0..self.grid.n {
                writeln!(w, "{},{},{:e}", self.grid.coord(i), self.grid.coord(j), self.at(i, j))?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// Bilinear interpolation of `f` at `x`.
pub fn sample_concentration(f: &Field, x: [f64; 2]) -> Result<f64> {
    if x.iter().any(|v| !(*v >= DOMAIN_LO && *v <= DOMAIN_HI)) {
        return Err(Error::Domain {
            what: "sample point outside [-1, 2]^2",
            point: x.to_vec(),
        });
    }
    Ok(bilinear(&f.c, f.grid, x))
}

pub(crate) fn bilinear(c: &[f64], g: Grid2D, x: [f64; 2]) -> f64 {
    let locate = |v: f64| {
        let s = (v - DOMAIN_LO) / g.dx;
        let k = (s.floor() as usize).min(g.n - 2);
        (k, s - k as f64)
    };
    let (i, a) = locate(x[0]);
    let (j, b) = locate(x[1]);
    let n = g.n;
    let v = |i: usize, j: usize| c[j * n + i];
    (1.0 - b) * ((1.0 - a) * v(i, j) + a * v(i + 1, j)) + b * ((1.0 - a) * v(i, j + 1) + a * v(i + 1, j + 1))
}

/// `z = -integral_{-1}^{1} dc/dx1 (x1 = 1, x2) dx2`, central difference in
/// `x1` and the trapezoid rule over the `x2` nodes.
pub fn right_boundary_flux(f: &Field) -> f64 {
    let g = &f.grid;
    let i = g.node_of(1.0).expect("x1 = 1 is a node of every valid grid");
    let (j0, j1) = (g.node_of(-1.0).unwrap(), g.node_of(1.0).unwrap());
    let mut z = 0.0;
    for j in j0..=j1 {
        let grad = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * g.dx);
        let w = if j == j0 || j == j1 { 0.5 * g.dx } else { g.dx };
        z -= w * grad;
    }
    z
}

/// Output of [`solve`].
#[derive(Debug, Clone)]
pub struct Solution {
    /// One field per snapshot time, in order.
    pub fields: Vec<Field>,
    /// Largest `max|u_k| dt / dx` met.
    pub max_cfl: f64,
    pub warnings: Vec<String>,
}

/// Thomas solver for the constant matrix `I - a D2` with mirrored
/// (zero-gradient) ends, factored once.
struct Tridiag {
    lower: f64,
    lower_last: f64,
    // Modified upper diagonal and reciprocal pivots.
    cp: Vec<f64>,
    inv: Vec<f64>,
}

impl Tridiag {
    fn new(n: usize, r: f64) -> Self {
        // Rows: [1+2r, -2r], [-r, 1+2r, -r], ..., [-2r, 1+2r].
        let diag = 1.0 + 2.0 * r;
        let (lower, upper) = (-r, -r);
        let (upper_first, lower_last) = (-2.0 * r, -2.0 * r);
        let mut cp = vec![0.0; n];
        let mut inv = vec![0.0; n];
        inv[0] = 1.0 / diag;
        cp[0] = upper_first * inv[0];
        for k in 1..n {
            let lo = if k + 1 == n { lower_last } else { lower };
            let up = if k + 1 == n { 0.0 } else { upper };
            inv[k] = 1.0 / (diag - lo * cp[k - 1]);
            cp[k] = up * inv[k];
        }
        Self {
            lower,
            lower_last,
            cp,
            inv,
        }
    }

    /// Solves in place along a strided line of `n` values.
    fn solve(&self, v: &mut [f64], start: usize, stride: usize) {
        let n = self.cp.len();
        v[start] *= self.inv[0];
        for k in 1..n {
            let lo = if k + 1 == n { self.lower_last } else { self.lower };
            let idx = start + k * stride;
            v[idx] = (v[idx] - lo * v[idx - stride]) * self.inv[k];
        }
        for k in (0..n - 1).rev() {
            let idx = start + k * stride;
            v[idx] -= self.cp[k] * v[idx + stride];
        }
    }
}

/// `out = c + r * D2 c` along one axis, zero-gradient ends.
fn explicit_second_difference(c: &[f64], out: &mut [f64], n: usize, r: f64, along_x: bool) {
    let (si, sj) = if along_x { (1, n) } else { (n, 1) };
    for line in 0..n {
        let base = line * sj;
        for k in 0..n {
            let idx = base + k * si;
            let left = if k == 0 { c[idx + si] } else { c[idx - si] };
            let right = if k + 1 == n { c[idx - si] } else { c[idx + si] };
            out[idx] = c[idx] + r * (left - 2.0 * c[idx] + right);
        }
    }
}

/// Mirrored neighbor access along one axis.
#[inline]
fn mirror(k: isize, n: usize) -> usize {
    if k < 0 {
        (-k) as usize
    } else if k as usize >= n {
        2 * (n - 1) - k as usize
    } else {
        k as usize
    }
}

/// QUICK face value between `k` and `k + 1` for velocity sign `pos`.
#[inline]
fn quick_face(line: &impl Fn(usize) -> f64, k: usize, n: usize, pos: bool) -> f64 {
    let (cu, cc, cd) = if pos {
        (line(mirror(k as isize - 1, n)), line(k), line(k + 1))
    } else {
        (line(mirror(k as isize + 2, n)), line(k + 1), line(k))
    };
    0.75 * cc + 0.375 * cd - 0.125 * cu
}

/// Convective tendency `-div(u c)` with QUICK face fluxes and closed
/// boundary faces.
fn convective_tendency(c: &[f64], out: &mut [f64], g: &Grid2D, u: f64) {
    let n = g.n;
    out.iter_mut().for_each(|v| *v = 0.0);
    if u == 0.0 {
        return;
    }
    let pos = u > 0.0;
    // Along x1 (stride 1) then x2 (stride n); same velocity in both.
    for (si, sj) in [(1usize, n), (n, 1usize)] {
        for line in 0..n {
            let base = line * sj;
            let get = |k: usize| c[base + k * si];
            for k in 0..n - 1 {
                let flux = u * quick_face(&get, k, n, pos);
                out[base + k * si] -= flux / g.width(k);
                out[base + (k + 1) * si] += flux / g.width(k + 1);
            }
        }
    }
}

/// Integrates the equation and returns the requested snapshots.
pub fn solve(src: &SourceParams, grid: &Grid2D, cfg: &SolverConfig) -> Result<Solution> {
    cfg.validate()?;
    if !(src.h > 0.0) {
        return Err(Error::Config("source width h must be positive".into()));
    }
    let n = grid.n;
    let dx = grid.dx;
    let dt = cfg.dt;
    let total_steps = cfg.steps(cfg.t_end)?;
    let snap_steps: Vec<usize> = cfg.snapshot_times.iter().map(|t| cfg.steps(*t)).collect::<Result<_>>()?;

    let mut c = vec![0.0; n * n];
    if let InitialCondition::Gaussian { center, sd, amplitude } = cfg.initial {
        for j in 0..n {
            for i in 0..n {
                let r2 = (grid.coord(i) - center[0]).powi(2) + (grid.coord(j) - center[1]).powi(2);
                c[j * n + i] = amplitude * (-r2 / (2.0 * sd * sd)).exp();
            }
        }
    }
    let mut half_source = vec![0.0; n * n];
    if src.s != 0.0 {
        for j in 0..n {
            for i in 0..n {
                half_source[j * n + i] = 0.5 * dt * src.rate(grid.coord(i), grid.coord(j));
            }
        }
    }

    let r = 0.5 * dt / (dx * dx);
    let implicit = Tridiag::new(n, r);
    let mut conv_now = vec![0.0; n * n];
    let mut conv_prev = vec![0.0; n * n];
    let mut scratch = vec![0.0; n * n];

    let mut fields = Vec::with_capacity(snap_steps.len());
    let mut max_cfl: f64 = 0.0;
    let mut next_snap = 0;
    let push_snapshots = |step: usize, c: &[f64], fields: &mut Vec<Field>, next: &mut usize| {
        while *next < snap_steps.len() && snap_steps[*next] == step {
            fields.push(Field {
                grid: *grid,
                t: step as f64 * dt,
                c: c.to_vec(),
            });
            *next += 1;
        }
    };
    push_snapshots(0, &c, &mut fields, &mut next_snap);

    for step in 0..total_steps {
        let t = step as f64 * dt;
        let u = cfg.velocity.at(t);
        max_cfl = max_cfl.max(u.abs() * dt / dx);
        convective_tendency(&c, &mut conv_now, grid, u);
        if step == 0 {
            for (ci, k) in c.iter_mut().zip(&conv_now) {
                *ci += dt * k;
            }
        } else {
            for ((ci, k), kp) in c.iter_mut().zip(&conv_now).zip(&conv_prev) {
                *ci += dt * (1.5 * k - 0.5 * kp);
            }
        }
        std::mem::swap(&mut conv_now, &mut conv_prev);
        for (ci, s) in c.iter_mut().zip(&half_source) {
            *ci += s;
        }

        // Peaceman-Rachford: implicit in x1, explicit in x2, then swap.
        explicit_second_difference(&c, &mut scratch, n, r, false);
        for j in 0..n {
            implicit.solve(&mut scratch, j * n, 1);
        }
        explicit_second_difference(&scratch, &mut c, n, r, true);
        for i in 0..n {
            implicit.solve(&mut c, i, n);
        }

        for (ci, s) in c.iter_mut().zip(&half_source) {
            *ci += s;
        }
        if c.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver(format!("non-finite concentration at t = {}", t + dt)));
        }
        push_snapshots(step + 1, &c, &mut fields, &mut next_snap);
    }

    let mut warnings = Vec::new();
    if max_cfl > 1.0 {
        warnings.push(format!("CFL number reached {max_cfl:.3} > 1; convection may be unstable"));
    }
    Ok(Solution {
        fields,
        max_cfl,
        warnings,
    })
}

#[cfg(test)]
mod tests;
