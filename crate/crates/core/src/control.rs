//! Admissible boundary controls: discrete adjoint gradients, projected
//! gradient feasibility, minimal-time bisection, staircase path following
//! and the penalised quasistatic program.
//!
//! Controls are boundary values in `[0, 1]`; projecting onto that box is the
//! only constraint handling needed, since the comparison principle keeps the
//! state in `[0, 1]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evolve::{check_field_nodes, simulate, simulate_sampled, ControlSchedule, Grid, Stepper, Trajectory};
use crate::numerics::sup_distance;
use crate::reaction::Nonlinearity;
use crate::steady::SteadyPath;

/// Default iteration cap of the projected-gradient loops.
pub const MAX_ITERATIONS: usize = 300;
/// Maximal number of penalty doublings in [`quasistatic_optimize`].
pub const MAX_DOUBLINGS: usize = 20;
/// Relative bracket width at which [`min_time_search`] stops.
pub const TIME_BRACKET: f64 = 1e-2;

const ARMIJO: f64 = 1e-4;
const MAX_HALVINGS: usize = 40;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Objective {
    TerminalMismatch,
    ControlSmoothness,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationProblem {
    /// Spatial grid; `grid.dt` is the time step.
    pub grid: Grid,
    pub horizon: f64,
    pub u0: Vec<f64>,
    pub target: Vec<f64>,
    /// Terminal tolerance in the sup norm.
    pub eps: f64,
    /// Optional bound on `|a_t|`.
    pub rate_cap: Option<f64>,
    pub objective: Objective,
}

impl OptimizationProblem {
    /// Problem on `grid` over `[0, horizon]`. The time step is shrunk so
    /// that a whole number of steps covers the horizon.
    pub fn new(
        grid: Grid,
        horizon: f64,
        u0: Vec<f64>,
        target: Vec<f64>,
        eps: f64,
        objective: Objective,
    ) -> Result<Self> {
        let p = OptimizationProblem {
            grid,
            horizon: 0.0,
            u0,
            target,
            eps,
            rate_cap: None,
            objective,
        };
        check_field_nodes(&p.grid, &p.u0)?;
        check_field_nodes(&p.grid, &p.target)?;
        if !(eps > 0.0) {
            return Err(Error::InvalidInput(format!("eps must be positive, got {eps}")));
        }
        if p.target.iter().chain(&p.u0).any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::InvalidInput("u0 and target must lie in [0, 1]".into()));
        }
        p.with_horizon(horizon)
    }

    pub fn with_rate_cap(mut self, cap: f64) -> Result<Self> {
        if !(cap > 0.0) {
            return Err(Error::InvalidInput(format!("rate cap must be positive, got {cap}")));
        }
        self.rate_cap = Some(cap);
        Ok(self)
    }

    /// Same problem over `[0, horizon]` with time step at most the current one.
    pub fn with_horizon(&self, horizon: f64) -> Result<Self> {
        if !(horizon >= 0.0 && horizon.is_finite()) {
            return Err(Error::InvalidInput(format!("horizon must be non-negative, got {horizon}")));
        }
        let mut p = self.clone();
        p.horizon = horizon;
        if horizon > 0.0 {
            let steps = (horizon / self.grid.dt - 1e-9).ceil().max(1.0);
            p.grid.dt = horizon / steps;
        }
        Ok(p)
    }

    pub fn steps(&self) -> usize {
        if self.horizon == 0.0 {
            0
        } else {
            self.grid.steps_for(self.horizon)
        }
    }

    /// Constant schedule at the target's boundary value.
    pub fn default_schedule(&self) -> ControlSchedule {
        let a = *self.target.last().expect("target is non-empty");
        ControlSchedule {
            dt: self.grid.dt,
            values: vec![a; self.steps()],
        }
    }
}

pub(crate) fn terminal_state(p: &OptimizationProblem, nl: &Nonlinearity, s: &ControlSchedule) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Ok(p.u0.clone());
    }
    Ok(simulate_sampled(&p.grid, nl, &p.u0, s, usize::MAX)?.terminal().to_vec())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationResult {
    pub schedule: ControlSchedule,
    /// Sup distance of the re-simulated terminal state to the target.
    pub terminal_error: f64,
    pub objective_value: f64,
    /// Discrete `∫ a_t² dt`.
    pub smoothness: f64,
    /// Penalty term (terminal tube and rate cap) at the final weight.
    pub penalty: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Gradient of `½‖u(T) - target‖²` (all nodes) with respect to each
/// boundary value, by the discrete adjoint of the implicit scheme.
pub fn adjoint_gradient(
    problem: &OptimizationProblem,
    nl: &Nonlinearity,
    schedule: &ControlSchedule,
) -> Result<Vec<f64>> {
    if schedule.is_empty() {
        return Ok(Vec::new());
    }
    let traj = simulate(&problem.grid, nl, &problem.u0, schedule)?;
    let cotangent: Vec<f64> = traj
        .terminal()
        .iter()
        .zip(&problem.target)
        .map(|(u, t)| u - t)
        .collect();
    adjoint_pullback(&problem.grid, nl, &traj, &cotangent)
}

/// Pulls a terminal cotangent back to the boundary values.
fn adjoint_pullback(grid: &Grid, nl: &Nonlinearity, traj: &Trajectory, cotangent: &[f64]) -> Result<Vec<f64>> {
    let stepper = Stepper::new(*grid, nl)?;
    let m = grid.nr;
    let nt = traj.states.len() - 1;
    let mut grad = vec![0.0; nt];
    // the boundary node of u(T) is a_nt itself
    grad[nt - 1] += cotangent[m];
    let mut p = cotangent[..m].to_vec();
    for k in (1..=nt).rev() {
        stepper.solve_adjoint(&traj.states[k][..m], &mut p);
        grad[k - 1] += stepper.boundary_coefficient() * p[m - 1];
    }
    Ok(grad)
}

fn project(values: &mut [f64]) {
    for a in values {
        *a = a.clamp(0.0, 1.0);
    }
}

/// Projected-gradient descent with Barzilai-Borwein trial steps and Armijo
/// backtracking. `eval` returns the objective, `grad` its gradient, `done`
/// decides early termination. Returns the final point and iteration count.
fn projected_descent(
    mut x: Vec<f64>,
    max_iter: usize,
    mut eval: impl FnMut(&[f64]) -> Result<f64>,
    mut grad: impl FnMut(&[f64]) -> Result<Vec<f64>>,
    mut done: impl FnMut(&[f64]) -> Result<bool>,
) -> Result<(Vec<f64>, usize)> {
    project(&mut x);
    let mut fx = eval(&x)?;
    let mut g = grad(&x)?;
    let mut step = f64::NAN;
    for iter in 0..max_iter {
        if done(&x)? {
            return Ok((x, iter));
        }
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax == 0.0 {
            return Ok((x, iter));
        }
        if !step.is_finite() {
            step = 0.5 / gmax;
        }
        let mut accepted = None;
        for _ in 0..MAX_HALVINGS {
            let mut trial: Vec<f64> = x.iter().zip(&g).map(|(a, d)| a - step * d).collect();
            project(&mut trial);
            let moved: f64 = trial.iter().zip(&x).map(|(a, b)| (a - b) * (a - b)).sum();
            if moved == 0.0 {
                // every coordinate is pinned at an active bound
                return Ok((x, iter));
            }
            let ft = eval(&trial)?;
            if ft <= fx - ARMIJO / step * moved {
                accepted = Some((trial, ft));
                break;
            }
            step *= 0.5;
        }
        let Some((next, fnext)) = accepted else {
            return Ok((x, iter));
        };
        let gnext = grad(&next)?;
        let (mut ss, mut sy) = (0.0, 0.0);
        for i in 0..x.len() {
            let (s, y) = (next[i] - x[i], gnext[i] - g[i]);
            ss += s * s;
            sy += s * y;
        }
        step = if sy > 0.0 { (ss / sy).min(1e12) } else { 2.0 * step };
        x = next;
        fx = fnext;
        g = gnext;
    }
    Ok((x, max_iter))
}

fn finish(
    problem: &OptimizationProblem,
    nl: &Nonlinearity,
    schedule: ControlSchedule,
    iterations: usize,
    penalty: f64,
) -> Result<OptimizationResult> {
    let terminal = terminal_state(problem, nl, &schedule)?;
    let terminal_error = sup_distance(&terminal, &problem.target);
    let smoothness = smoothness(&schedule.values, schedule.dt);
    let objective_value = match problem.objective {
        Objective::TerminalMismatch => half_squared(&terminal, &problem.target),
        Objective::ControlSmoothness => smoothness + penalty,
    };
    Ok(OptimizationResult {
        converged: terminal_error <= problem.eps,
        schedule,
        terminal_error,
        objective_value,
        smoothness,
        penalty,
        iterations,
    })
}

fn half_squared(u: &[f64], target: &[f64]) -> f64 {
    0.5 * u.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
}

/// Discrete `∫ a_t² dt = Σ (a_{k+1} - a_k)² / dt`.
pub fn smoothness(values: &[f64], dt: f64) -> f64 {
    values.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>() / dt
}

/// Projected-gradient search for a schedule on the fixed horizon that
/// brings the state within `eps` of the target. Starts from `initial`
/// (resampled to the problem's time grid) or the default schedule.
pub fn feasibility_solve(
    problem: &OptimizationProblem,
    nl: &Nonlinearity,
    initial: Option<&ControlSchedule>,
    max_iter: usize,
) -> Result<OptimizationResult> {
    minimize_mismatch(problem, nl, initial, max_iter, true)
}

fn minimize_mismatch(
    problem: &OptimizationProblem,
    nl: &Nonlinearity,
    initial: Option<&ControlSchedule>,
    max_iter: usize,
    stop_inside: bool,
) -> Result<OptimizationResult> {
    if problem.rate_cap.is_some() {
        log::warn!("feasibility_solve ignores the rate cap; use quasistatic_optimize");
    }
    let dt = problem.grid.dt;
    let nt = problem.steps();
    let start = match initial {
        Some(s) if !s.is_empty() => s.resampled(nt, dt),
        _ => problem.default_schedule(),
    };
    let schedule_of = |v: &[f64]| ControlSchedule {
        dt,
        values: v.to_vec(),
    };
    let error_of = |v: &[f64]| -> Result<f64> {
        Ok(sup_distance(&terminal_state(problem, nl, &schedule_of(v))?, &problem.target))
    };
    let (values, iterations) = projected_descent(
        start.values,
        max_iter,
        |v| Ok(half_squared(&terminal_state(problem, nl, &schedule_of(v))?, &problem.target)),
        |v| adjoint_gradient(problem, nl, &schedule_of(v)),
        |v| Ok(stop_inside && error_of(v)? <= problem.eps),
    )?;
    finish(problem, nl, schedule_of(&values), iterations, 0.0)
}

/// One bisection probe of [`min_time_search`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Probe {
    pub horizon: f64,
    pub feasible: bool,
    pub terminal_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MinTimeResult {
    pub t_min: f64,
    pub result: OptimizationResult,
    /// Probes in the order they were evaluated.
    pub probes: Vec<Probe>,
}

impl MinTimeResult {
    /// True when no infeasible probe lies above a feasible one.
    pub fn probes_monotone(&self) -> bool {
        let lowest_feasible = self
            .probes
            .iter()
            .filter(|p| p.feasible)
            .map(|p| p.horizon)
            .fold(f64::INFINITY, f64::min);
        self.probes.iter().all(|p| p.feasible || p.horizon < lowest_feasible)
    }
}

/// Fraction of schedule values within `tol` of 0 or 1.
pub fn bang_bang_fraction(schedule: &ControlSchedule, tol: f64) -> f64 {
    if schedule.is_empty() {
        return 1.0;
    }
    let hits = schedule
        .values
        .iter()
        .filter(|&&a| a <= tol || a >= 1.0 - tol)
        .count();
    hits as f64 / schedule.len() as f64
}

/// Minimal horizon by bisection on `[0, t_hi]`, each probe a warm-started
/// [`feasibility_solve`]; stops when the bracket is below `10⁻² · t_hi`.
pub fn min_time_search(
    problem: &OptimizationProblem,
    nl: &Nonlinearity,
    t_hi: f64,
    max_iter: usize,
) -> Result<MinTimeResult> {
    if !(t_hi > 0.0) {
        return Err(Error::InvalidInput(format!("T_hi must be positive, got {t_hi}")));
    }
    let mut probes = Vec::new();
    if sup_distance(&problem.u0, &problem.target) <= problem.eps {
        let p0 = problem.with_horizon(0.0)?;
        let result = finish(&p0, nl, p0.default_schedule(), 0, 0.0)?;
        probes.push(Probe {
            horizon: 0.0,
            feasible: true,
            terminal_error: result.terminal_error,
        });
        return Ok(MinTimeResult {
            t_min: 0.0,
            result,
            probes,
        });
    }
    let mut run = |t: f64, warm: Option<&ControlSchedule>| -> Result<OptimizationResult> {
        let r = feasibility_solve(&problem.with_horizon(t)?, nl, warm, max_iter)?;
        log::info!("min-time probe T = {t:.4}: error {:.3e}", r.terminal_error);
        probes.push(Probe {
            horizon: t,
            feasible: r.converged,
            terminal_error: r.terminal_error,
        });
        Ok(r)
    };
    let mut best = run(t_hi, None)?;
    if !best.converged {
        return Err(Error::Horizon(t_hi));
    }
    let (mut lo, mut hi) = (0.0, t_hi);
    while hi - lo > TIME_BRACKET * t_hi {
        let mid = 0.5 * (lo + hi);
        let r = run(mid, Some(&best.schedule))?;
        if r.converged {
            hi = mid;
            best = r;
        } else {
            lo = mid;
        }
    }
    // at the minimal horizon the mismatch minimiser sits on the edge of the
    // reachable set; descending further sharpens the switching structure
    let polished = minimize_mismatch(&problem.with_horizon(hi)?, nl, Some(&best.schedule), max_iter, false)?;
    if polished.converged {
        best = polished;
    }
    Ok(MinTimeResult {
        t_min: hi,
        result: best,
        probes,
    })
}

/// Staircase path following: boundary 0 until `‖u‖∞` drops to the first
/// waypoint's maximum plus `eps`, then one segment of length `dwell` per
/// later waypoint. A segment holds the waypoint's trace; if that leaves the
/// state farther than `eps` from the waypoint (unstable part of the path),
/// the segment is replaced by a local [`feasibility_solve`] towards it.
/// Fails with [`Error::Staircase`] when the terminal state is not within
/// `eps` of the last waypoint.
pub fn staircase_schedule(
    path: &SteadyPath,
    grid: &Grid,
    nl: &Nonlinearity,
    u0: &[f64],
    dwell: f64,
    eps: f64,
) -> Result<(ControlSchedule, Trajectory)> {
    if path.is_empty() {
        return Err(Error::InvalidInput("empty path".into()));
    }
    if !(dwell >= 0.0) || !(eps > 0.0) {
        return Err(Error::InvalidInput("dwell must be non-negative and eps positive".into()));
    }
    check_field_nodes(grid, u0)?;
    let first_max = path.profiles[0].max();
    let target = grid.sample(path.profiles.last().expect("non-empty"))?;
    let stepper = Stepper::new(*grid, nl)?;

    let mut values = Vec::new();
    let mut u = u0.to_vec();
    let max_decay_steps = grid.steps_for(crate::evolve::OMEGA_T_MAX);
    while u.iter().copied().fold(f64::NEG_INFINITY, f64::max) > first_max + eps {
        if values.len() >= max_decay_steps {
            return Err(Error::Precondition(
                "initial state does not decay under zero boundary data".into(),
            ));
        }
        u = stepper.step(&u, 0.0)?;
        values.push(0.0);
    }
    let hold = grid.steps_for(dwell).max(1);
    let mut corrected = 0;
    for w in path.profiles.windows(2) {
        if sup_distance(&w[0].u, &w[1].u) == 0.0 {
            continue;
        }
        let waypoint = grid.sample(&w[1])?;
        let trace = w[1].trace().clamp(0.0, 1.0);
        let mut segment = vec![trace; hold];
        let mut end = u.clone();
        for &a in &segment {
            end = stepper.step(&end, a)?;
        }
        if sup_distance(&end, &waypoint) > eps {
            let mut start = u.clone();
            crate::evolve::clip_unit(&mut start);
            let local = OptimizationProblem::new(
                *grid,
                hold as f64 * grid.dt,
                start,
                waypoint,
                eps,
                Objective::TerminalMismatch,
            )?;
            let r = feasibility_solve(&local, nl, None, MAX_ITERATIONS)?;
            if r.converged || r.terminal_error < sup_distance(&end, &local.target) {
                end = terminal_state(&local, nl, &r.schedule)?;
                segment = r.schedule.values;
                corrected += 1;
            }
        }
        values.extend_from_slice(&segment);
        u = end;
    }
    log::info!("staircase: {corrected} segments needed local correction");
    let schedule = ControlSchedule::new(grid.dt, values)?;
    let traj = simulate(grid, nl, u0, &schedule)?;
    let distance = traj.terminal_distance(&target);
    if distance > eps {
        return Err(Error::Staircase { distance });
    }
    Ok((schedule, traj))
}

/// [`staircase_schedule`] with the dwell doubled after each miss, at most
/// `max_doublings` times. Returns the dwell that met the tolerance.
pub fn staircase_doubling(
    path: &SteadyPath,
    grid: &Grid,
    nl: &Nonlinearity,
    u0: &[f64],
    dwell: f64,
    eps: f64,
    max_doublings: usize,
) -> Result<(f64, ControlSchedule, Trajectory)> {
    let mut dwell = dwell;
    for attempt in 0..=max_doublings {
        match staircase_schedule(path, grid, nl, u0, dwell, eps) {
            Ok((s, t)) => return Ok((dwell, s, t)),
            Err(Error::Staircase { distance }) if attempt < max_doublings => {
                log::info!("staircase dwell {dwell}: missed by {distance:.3e}, doubling");
                dwell *= 2.0;
            }
            Err(e) => return Err(e),
        }
    }
    unreachable!("loop returns on the last attempt")
}

/// Boundary values following the path trace at uniform speed in the path
/// index over `steps` steps; a starting guess for [`quasistatic_optimize`].
pub fn trace_following_schedule(path: &SteadyPath, dt: f64, steps: usize) -> ControlSchedule {
    let n = path.trace.len();
    let values = (1..=steps)
        .map(|k| {
            let s = k as f64 / steps as f64 * (n - 1) as f64;
            let i = (s.floor() as usize).min(n.saturating_sub(2));
            let w = s - i as f64;
            let v = if n == 1 {
                path.trace[0]
            } else {
                (1.0 - w) * path.trace[i] + w * path.trace[i + 1]
            };
            v.clamp(0.0, 1.0)
        })
        .collect();
    ControlSchedule { dt, values }
}

/// Minimises `Σ (Δa)²/dt` plus `β` times the squared excess of
/// `|u(T) - target|` over the tube and of `|Δa|/dt` over the rate cap,
/// doubling `β` until the terminal tube holds.
pub fn quasistatic_optimize(
    problem: &OptimizationProblem,
    nl: &Nonlinearity,
    initial: Option<&ControlSchedule>,
    max_iter: usize,
) -> Result<OptimizationResult> {
    let dt = problem.grid.dt;
    let nt = problem.steps();
    let mut values = match initial {
        Some(s) if !s.is_empty() => s.resampled(nt, dt).values,
        _ => problem.default_schedule().values,
    };
    // the tube used inside the penalty is slightly tighter than eps
    let tube = 0.9 * problem.eps;
    let cap = problem.rate_cap;
    let schedule_of = |v: &[f64]| ControlSchedule {
        dt,
        values: v.to_vec(),
    };

    let tube_excess = |u: &[f64]| -> Vec<f64> {
        u.iter()
            .zip(&problem.target)
            .map(|(x, t)| {
                let e = x - t;
                (e.abs() - tube).max(0.0) * e.signum()
            })
            .collect()
    };
    let rate_excess = |v: &[f64]| -> Vec<f64> {
        let Some(cap) = cap else {
            return vec![0.0; v.len().saturating_sub(1)];
        };
        v.windows(2)
            .map(|w| {
                let r = (w[1] - w[0]) / dt;
                (r.abs() - cap).max(0.0) * r.signum()
            })
            .collect()
    };
    let penalty_of = |v: &[f64], u: &[f64]| -> f64 {
        let t: f64 = tube_excess(u).iter().map(|e| e * e).sum();
        let r: f64 = rate_excess(v).iter().map(|e| e * e).sum();
        t + r
    };
    let rate_ok = |v: &[f64]| cap.is_none_or(|c| v.windows(2).all(|w| (w[1] - w[0]).abs() / dt <= c * (1.0 + 1e-6)));

    let mut beta = 1.0;
    let mut total_iter = 0;
    for doubling in 0..=MAX_DOUBLINGS {
        let (next, iters) = projected_descent(
            values,
            max_iter,
            |v| {
                let u = terminal_state(problem, nl, &schedule_of(v))?;
                Ok(smoothness(v, dt) + beta * penalty_of(v, &u))
            },
            |v| {
                let traj = simulate(&problem.grid, nl, &problem.u0, &schedule_of(v))?;
                let excess = tube_excess(traj.terminal());
                let cot: Vec<f64> = excess.iter().map(|e| 2.0 * beta * e).collect();
                let mut g = adjoint_pullback(&problem.grid, nl, &traj, &cot)?;
                for (k, w) in v.windows(2).enumerate() {
                    let d = 2.0 * (w[1] - w[0]) / dt;
                    g[k] -= d;
                    g[k + 1] += d;
                }
                for (k, e) in rate_excess(v).iter().enumerate() {
                    let d = 2.0 * beta * e / dt;
                    g[k] -= d;
                    g[k + 1] += d;
                }
                Ok(g)
            },
            |_| Ok(false),
        )?;
        values = next;
        total_iter += iters;
        let u = terminal_state(problem, nl, &schedule_of(&values))?;
        let err = sup_distance(&u, &problem.target);
        log::info!("penalty weight {beta:e}: terminal error {err:.3e}");
        if err <= problem.eps && rate_ok(&values) {
            let penalty = beta * penalty_of(&values, &u);
            return finish(problem, nl, schedule_of(&values), total_iter, penalty);
        }
        if doubling == MAX_DOUBLINGS {
            let violation = (err - problem.eps).max(0.0);
            return Err(Error::Penalty {
                doublings: MAX_DOUBLINGS,
                violation,
            });
        }
        beta *= 2.0;
    }
    unreachable!("loop returns on the last doubling")
}
