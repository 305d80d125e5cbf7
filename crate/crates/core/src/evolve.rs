//! Implicit time stepping of the controlled radial problem
//! `u_t = μΔu + f(u)` on `[0, R)`, `u(R, t) = a(t)`, `u_r(0, t) = 0`.
//!
//! Fields live on `nr + 1` uniform nodes `r_i = i·R/nr`; the last node holds
//! the Dirichlet value. The diffusion matrix is an M-matrix, and with
//! `dt·L < 1` the step is order preserving.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{solve_tridiagonal, solve_tridiagonal_transposed, sup_distance};
use crate::reaction::{Nonlinearity, Variant, MARGIN_HI, MARGIN_LO};
use crate::steady::RadialProfile;

/// Smallest admissible number of radial cells.
pub const MIN_CELLS: usize = 50;
/// Sweep-to-sweep change accepted as a converged fixed point.
pub const FIXED_POINT_TOL: f64 = 1e-12;
/// Sweep cap of the reaction fixed point.
pub const MAX_SWEEPS: usize = 50;
/// Default residual tolerance and horizon of [`omega_classify`].
pub const OMEGA_TOL: f64 = 1e-8;
pub const OMEGA_T_MAX: f64 = 1e3;
/// Sup distance at which a limit is identified with 0, θ or 1.
pub const LIMIT_DISTANCE: f64 = 1e-3;

// Sweeps continue past FIXED_POINT_TOL down to this level so that the step
// is smooth in its data to near machine precision.
const POLISH_TOL: f64 = 1e-15;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub dim: usize,
    pub radius: f64,
    /// Number of radial cells.
    pub nr: usize,
    pub dt: f64,
    pub mu: f64,
}

impl Grid {
    pub fn new(dim: usize, radius: f64, nr: usize, dt: f64, mu: f64) -> Result<Self> {
        let grid = Grid {
            dim,
            radius,
            nr,
            dt,
            mu,
        };
        grid.validate()?;
        Ok(grid)
    }

    /// Grid with `dt = min(0.05, 0.5/L)`, keeping the reaction fixed point a
    /// contraction with factor at most 1/2.
    pub fn with_default_dt(nl: &Nonlinearity, dim: usize, radius: f64, nr: usize, mu: f64) -> Result<Self> {
        Self::new(dim, radius, nr, default_dt(nl), mu)
    }

    fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.dim) {
            return Err(Error::UnsupportedDimension(self.dim));
        }
        if self.nr < MIN_CELLS {
            return Err(Error::InvalidInput(format!(
                "need at least {MIN_CELLS} radial cells, got {}",
                self.nr
            )));
        }
        for (name, x) in [("radius", self.radius), ("dt", self.dt), ("μ", self.mu)] {
            if !(x > 0.0 && x.is_finite()) {
                return Err(Error::InvalidInput(format!("{name} must be positive, got {x}")));
            }
        }
        Ok(())
    }

    pub fn dr(&self) -> f64 {
        self.radius / self.nr as f64
    }

    /// Number of nodes, boundary included.
    pub fn nodes(&self) -> usize {
        self.nr + 1
    }

    pub fn radii(&self) -> Vec<f64> {
        let dr = self.dr();
        (0..=self.nr).map(|i| i as f64 * dr).collect()
    }

    pub fn constant(&self, value: f64) -> Vec<f64> {
        vec![value; self.nodes()]
    }

    /// Samples a steady profile on the grid nodes.
    pub fn sample(&self, profile: &RadialProfile) -> Result<Vec<f64>> {
        if (profile.radius - self.radius).abs() > 1e-12 * self.radius {
            return Err(Error::InvalidInput(format!(
                "profile radius {} differs from grid radius {}",
                profile.radius, self.radius
            )));
        }
        Ok(profile.resample(&self.radii()))
    }

    /// Same domain with `dr` and `dt` halved.
    pub fn refined(&self) -> Grid {
        Grid {
            nr: 2 * self.nr,
            dt: 0.5 * self.dt,
            ..*self
        }
    }

    /// Number of steps covering `[0, horizon]`, rounded to the nearest.
    pub fn steps_for(&self, horizon: f64) -> usize {
        (horizon / self.dt).round().max(0.0) as usize
    }
}

pub fn default_dt(nl: &Nonlinearity) -> f64 {
    0.05f64.min(0.5 / nl.lipschitz().max(1e-12))
}

/// Clips a field into `[0, 1]`.
pub fn clip_unit(u: &mut [f64]) {
    for x in u {
        *x = x.clamp(0.0, 1.0);
    }
}

/// Boundary values `a_k` at times `t_k = k·dt`, `k = 1..=nt`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ControlSchedule {
    pub dt: f64,
    pub values: Vec<f64>,
}

impl ControlSchedule {
    pub fn new(dt: f64, values: Vec<f64>) -> Result<Self> {
        let s = ControlSchedule { dt, values };
        s.validate()?;
        Ok(s)
    }

    pub fn constant(value: f64, dt: f64, steps: usize) -> Result<Self> {
        Self::new(dt, vec![value; steps])
    }

    fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidInput(format!("schedule dt must be positive, got {}", self.dt)));
        }
        if let Some(&bad) = self.values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
            return Err(Error::Range {
                value: bad,
                lo: 0.0,
                hi: 1.0,
            });
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.values.len() as f64
    }

    /// Times at which the values apply.
    pub fn times(&self) -> Vec<f64> {
        (1..=self.values.len()).map(|k| k as f64 * self.dt).collect()
    }

    /// Schedule on `steps` uniform steps by piecewise-linear resampling in time.
    pub fn resampled(&self, steps: usize, dt: f64) -> ControlSchedule {
        let values = (1..=steps)
            .map(|k| {
                let t = k as f64 * dt;
                self.value_at(t)
            })
            .collect();
        ControlSchedule { dt, values }
    }

    /// Piecewise-linear value at time `t`, held constant outside the grid.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.values.len();
        if n == 0 {
            return 0.0;
        }
        let x = t / self.dt - 1.0;
        if x <= 0.0 {
            return self.values[0];
        }
        let i = x.floor() as usize;
        if i + 1 >= n {
            return self.values[n - 1];
        }
        let w = x - i as f64;
        (1.0 - w) * self.values[i] + w * self.values[i + 1]
    }

    pub fn concat(&mut self, other: &ControlSchedule) {
        self.values.extend_from_slice(&other.values);
    }
}

/// States of a run with per-step extrema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    /// Minimum and maximum over nodes at every step, including unstored ones.
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

impl Trajectory {
    pub fn terminal(&self) -> &[f64] {
        self.states.last().expect("trajectory holds the initial state")
    }

    pub fn terminal_distance(&self, target: &[f64]) -> f64 {
        sup_distance(self.terminal(), target)
    }

    /// Largest excursion outside `[0, 1]`.
    pub fn bound_violation(&self) -> f64 {
        let lo = self.min.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = self.max.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (-lo).max(hi - 1.0).max(0.0)
    }

    fn push(&mut self, t: f64, u: &[f64], store: bool) {
        self.min.push(u.iter().copied().fold(f64::INFINITY, f64::min));
        self.max.push(u.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        if store {
            self.times.push(t);
            self.states.push(u.to_vec());
        }
    }
}

/// Implicit step operator `I - dt·μ·Δ_r` on the interior unknowns, cached for
/// a grid.
#[derive(Debug, Clone)]
pub struct Stepper<'a> {
    grid: Grid,
    nl: &'a Nonlinearity,
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
    /// Coefficient of the Dirichlet value in the last interior row.
    boundary: f64,
}

impl<'a> Stepper<'a> {
    pub fn new(grid: Grid, nl: &'a Nonlinearity) -> Result<Self> {
        grid.validate()?;
        let m = grid.nr;
        let n = grid.dim as f64;
        let k = grid.dt * grid.mu / (grid.dr() * grid.dr());
        let mut lower = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut upper = vec![0.0; m];
        // r = 0: Δu ≈ N·2(u₁ - u₀)/dr²
        diag[0] = 1.0 + 2.0 * n * k;
        upper[0] = -2.0 * n * k;
        for i in 1..m {
            let drift = (n - 1.0) / (2.0 * i as f64);
            lower[i] = -k * (1.0 - drift);
            diag[i] = 1.0 + 2.0 * k;
            upper[i] = -k * (1.0 + drift);
        }
        let boundary = -upper[m - 1];
        upper[m - 1] = 0.0;
        Ok(Stepper {
            grid,
            nl,
            lower,
            diag,
            upper,
            boundary,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Derivative of the last interior equation's right-hand side with
    /// respect to the new boundary value.
    pub fn boundary_coefficient(&self) -> f64 {
        self.boundary
    }

    /// One implicit step to boundary value `a_next`.
    pub fn step(&self, u: &[f64], a_next: f64) -> Result<Vec<f64>> {
        let m = self.grid.nr;
        if u.len() != m + 1 {
            return Err(Error::InvalidInput(format!(
                "field has {} nodes, grid has {}",
                u.len(),
                m + 1
            )));
        }
        if let Some(&bad) = u.iter().find(|x| !(MARGIN_LO..=MARGIN_HI).contains(*x)) {
            return Err(Error::Range {
                value: bad,
                lo: MARGIN_LO,
                hi: MARGIN_HI,
            });
        }
        let dt = self.grid.dt;
        let mut w = u.to_vec();
        w[m] = a_next;
        let mut rhs = vec![0.0; m];
        let mut last = f64::INFINITY;
        for _ in 0..MAX_SWEEPS {
            for i in 0..m {
                rhs[i] = u[i] + dt * self.nl.f_ext(w[i]);
            }
            rhs[m - 1] += self.boundary * a_next;
            solve_tridiagonal(&self.lower, &self.diag, &self.upper, &mut rhs);
            let diff = sup_distance(&rhs, &w[..m]);
            w[..m].copy_from_slice(&rhs);
            if diff <= POLISH_TOL || (diff <= FIXED_POINT_TOL && diff >= last) {
                return Ok(w);
            }
            last = diff;
        }
        if last <= FIXED_POINT_TOL {
            Ok(w)
        } else {
            Err(Error::Step { residual: last })
        }
    }

    /// Solves `(A - dt·diag f'(u_next))ᵀ p = rhs` on the interior unknowns,
    /// the transposed Jacobian of the converged step.
    pub fn solve_adjoint(&self, u_next: &[f64], rhs: &mut [f64]) {
        let dt = self.grid.dt;
        let diag: Vec<f64> = self
            .diag
            .iter()
            .zip(u_next)
            .map(|(d, &x)| d - dt * self.nl.df_ext(x))
            .collect();
        solve_tridiagonal_transposed(&self.lower, &diag, &self.upper, rhs);
    }
}

/// One implicit step, see [`Stepper::step`].
pub fn step(grid: &Grid, nl: &Nonlinearity, u: &[f64], a_next: f64) -> Result<Vec<f64>> {
    Stepper::new(*grid, nl)?.step(u, a_next)
}

/// Checks that a field has one value per grid node.
pub fn check_field_nodes(grid: &Grid, u: &[f64]) -> Result<()> {
    if u.len() != grid.nodes() {
        return Err(Error::InvalidInput(format!(
            "field has {} nodes, grid has {}",
            u.len(),
            grid.nodes()
        )));
    }
    Ok(())
}

fn check_initial(grid: &Grid, u0: &[f64]) -> Result<()> {
    check_field_nodes(grid, u0)?;
    if let Some(&bad) = u0.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::Range {
            value: bad,
            lo: 0.0,
            hi: 1.0,
        });
    }
    Ok(())
}

fn check_schedule(grid: &Grid, schedule: &ControlSchedule) -> Result<()> {
    schedule.validate()?;
    if (schedule.dt - grid.dt).abs() > 1e-12 * grid.dt {
        return Err(Error::InvalidInput(format!(
            "schedule dt {} differs from grid dt {}",
            schedule.dt, grid.dt
        )));
    }
    Ok(())
}

/// Runs the schedule from `u0`, storing every state.
pub fn simulate(grid: &Grid, nl: &Nonlinearity, u0: &[f64], schedule: &ControlSchedule) -> Result<Trajectory> {
    simulate_sampled(grid, nl, u0, schedule, 1)
}

/// Like [`simulate`] but stores only every `stride`-th state (and the last).
pub fn simulate_sampled(
    grid: &Grid,
    nl: &Nonlinearity,
    u0: &[f64],
    schedule: &ControlSchedule,
    stride: usize,
) -> Result<Trajectory> {
    check_initial(grid, u0)?;
    check_schedule(grid, schedule)?;
    let stride = stride.max(1);
    let stepper = Stepper::new(*grid, nl)?;
    let mut traj = Trajectory {
        times: Vec::new(),
        states: Vec::new(),
        min: Vec::new(),
        max: Vec::new(),
    };
    let mut u = u0.to_vec();
    traj.push(0.0, &u, true);
    let nt = schedule.len();
    for (k, &a) in schedule.values.iter().enumerate() {
        u = stepper.step(&u, a)?;
        let store = (k + 1) % stride == 0 || k + 1 == nt;
        traj.push((k + 1) as f64 * grid.dt, &u, store);
    }
    Ok(traj)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "limit", content = "field", rename_all = "snake_case")]
pub enum OmegaLimit {
    Zero,
    Theta,
    One,
    NontrivialSteady(Vec<f64>),
    Undecided,
}

/// Runs with constant boundary value `a_const` until
/// `‖u^{k+1} - u^k‖∞ / dt <= tol` or `t_max`, then identifies the limit.
pub fn omega_classify(
    grid: &Grid,
    nl: &Nonlinearity,
    u0: &[f64],
    a_const: f64,
    t_max: f64,
    tol: f64,
) -> Result<OmegaLimit> {
    check_initial(grid, u0)?;
    if !(0.0..=1.0).contains(&a_const) {
        return Err(Error::Range {
            value: a_const,
            lo: 0.0,
            hi: 1.0,
        });
    }
    let stepper = Stepper::new(*grid, nl)?;
    let steps = grid.steps_for(t_max);
    let mut u = u0.to_vec();
    for _ in 0..steps {
        let next = match stepper.step(&u, a_const) {
            Ok(next) => next,
            Err(e) => {
                log::warn!("ω-limit run stopped: {e}");
                return Ok(OmegaLimit::Undecided);
            }
        };
        let rate = sup_distance(&next, &u) / grid.dt;
        u = next;
        if rate <= tol {
            return Ok(identify(nl, u));
        }
    }
    Ok(OmegaLimit::Undecided)
}

fn identify(nl: &Nonlinearity, u: Vec<f64>) -> OmegaLimit {
    let near = |c: f64| u.iter().all(|x| (x - c).abs() <= LIMIT_DISTANCE);
    let bistable = nl.classify().map(|c| c.variant != Variant::Monostable).unwrap_or(false);
    if near(0.0) {
        OmegaLimit::Zero
    } else if near(1.0) {
        OmegaLimit::One
    } else if bistable && nl.theta().is_some_and(near) {
        OmegaLimit::Theta
    } else {
        OmegaLimit::NontrivialSteady(u)
    }
}
