//! Dispatch from a resolved config to the core routines.

use rdc_core::control::{
    bang_bang_fraction, min_time_search, quasistatic_optimize, staircase_doubling, Objective, OptimizationProblem,
};
use rdc_core::evolve::{omega_classify, simulate_sampled, ControlSchedule, Grid, OmegaLimit, OMEGA_TOL};
use rdc_core::steady::{
    build_path, find_barriers, lambda1, mu_star_lower_bound, mu_star_numeric, mu_star_upper_bound,
    oscillation_amplitudes, path_to_minimal_barrier, Domain, RadialProfile, SteadyPath,
};
use rdc_core::wave::{stationary_profile, traveling_wave};
use rdc_core::{Nonlinearity, Variant};
use serde_json::{json, Value};

use crate::config::{Experiment, RunConfig};
use crate::export::{Plot, Series, Table};

/// Everything a run produces before it is written to disk.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    /// `(file suffix, table)`; the primary table has an empty suffix.
    pub tables: Vec<(&'static str, Table)>,
    pub plots: Vec<(&'static str, Plot)>,
    pub results: Value,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    /// The request cannot be served as configured.
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Numerical(rdc_core::Error),
}

impl From<rdc_core::Error> for RunError {
    fn from(e: rdc_core::Error) -> Self {
        use rdc_core::Error as E;
        match e {
            E::InvalidInput(_) | E::Range { .. } | E::UnsupportedDimension(_) | E::Classification(_) => {
                RunError::Invalid(e.to_string())
            }
            other => RunError::Numerical(other),
        }
    }
}

type Run = Result<Output, RunError>;

pub fn run(experiment: Experiment, c: &RunConfig) -> Run {
    let nl = Nonlinearity::new(c.nonlinearity.clone())?;
    match experiment {
        Experiment::Path => path(c, &nl),
        Experiment::PathToBarrier => path_to_barrier(c, &nl),
        Experiment::Barrier => barrier(c, &nl),
        Experiment::MuStar => mu_star(c, &nl),
        Experiment::Simulate => simulate(c, &nl),
        Experiment::Omega => omega(c, &nl),
        Experiment::Wave => wave(c, &nl),
        Experiment::Staircase => staircase(c, &nl),
        Experiment::Quasistatic => quasistatic(c, &nl),
        Experiment::MinTime => min_time(c, &nl),
    }
}

fn domain(c: &RunConfig) -> Result<Domain, RunError> {
    Ok(match c.measure {
        Some(m) => Domain::ball_of_measure(c.dim, m)?,
        None if c.dim == 1 => Domain::Interval { length: 2.0 * c.radius },
        None => Domain::Ball { dim: c.dim, radius: c.radius },
    })
}

fn radius(c: &RunConfig) -> Result<f64, RunError> {
    Ok(domain(c)?.radial().1)
}

fn grid(c: &RunConfig, nl: &Nonlinearity) -> Result<Grid, RunError> {
    let r = radius(c)?;
    Ok(match c.dt {
        Some(dt) => Grid::new(c.dim, r, c.nr, dt, c.mu)?,
        None => Grid::with_default_dt(nl, c.dim, r, c.nr, c.mu)?,
    })
}

fn target_value(c: &RunConfig, nl: &Nonlinearity) -> Result<f64, RunError> {
    c.target
        .or_else(|| nl.theta())
        .ok_or_else(|| RunError::Invalid("target is required for reactions without an interior zero".into()))
}

fn profile_rows(table: &mut Table, p: &RadialProfile) {
    for i in 0..p.len() {
        table.push(&[p.center_value, p.r[i], p.u[i], p.v[i]]);
    }
}

/// Every `k`-th element so that at most `limit` remain, always keeping the last.
fn thinned<T>(items: &[T], limit: usize) -> Vec<&T> {
    let k = items.len().div_ceil(limit.max(1)).max(1);
    let mut out: Vec<&T> = items.iter().step_by(k).collect();
    if let Some(last) = items.last() {
        if !(items.len() - 1).is_multiple_of(k) {
            out.push(last);
        }
    }
    out
}

fn path_summary(path: &SteadyPath, nl: &Nonlinearity) -> Value {
    let amps = nl.theta().map(|t| oscillation_amplitudes(&path.trace, t)).unwrap_or_default();
    json!({
        "profiles": path.len(),
        "continuity_bound": path.continuity_bound,
        "trace_min": path.trace.iter().copied().fold(f64::INFINITY, f64::min),
        "trace_max": path.trace.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "oscillation_amplitudes": amps,
    })
}

fn path(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let p = build_path(nl, c.mu, c.dim, radius(c)?, c.path_tol)?;
    let mut table = Table::new("a,trace");
    for (q, t) in p.profiles.iter().zip(&p.trace) {
        table.push(&[q.center_value, *t]);
    }
    let trace = Plot {
        title: format!("boundary trace along the path, μ = {}, N = {}", c.mu, c.dim),
        x_label: "a = u(0)",
        y_label: "u(R)",
        series: vec![Series {
            label: "trace".into(),
            points: p.profiles.iter().map(|q| q.center_value).zip(p.trace.iter().copied()).collect(),
        }],
    };
    let profiles = profile_plot("path profiles", &p.profiles);
    Ok(Output {
        tables: vec![("", table)],
        plots: vec![("", trace), ("-profiles", profiles)],
        results: path_summary(&p, nl),
    })
}

fn profile_plot(title: &str, profiles: &[RadialProfile]) -> Plot {
    Plot {
        title: title.into(),
        x_label: "r",
        y_label: "u",
        series: thinned(profiles, 24)
            .into_iter()
            .map(|q| Series {
                label: format!("a = {}", q.center_value),
                points: q.r.iter().copied().zip(q.u.iter().copied()).collect(),
            })
            .collect(),
    }
}

fn phase_plot(title: &str, profiles: &[RadialProfile]) -> Plot {
    Plot {
        title: title.into(),
        x_label: "u",
        y_label: "u_r",
        series: thinned(profiles, 24)
            .into_iter()
            .map(|q| Series {
                label: format!("a = {}", q.center_value),
                points: q.u.iter().copied().zip(q.v.iter().copied()).collect(),
            })
            .collect(),
    }
}

fn path_to_barrier(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let p = path_to_minimal_barrier(nl, c.mu, c.dim, radius(c)?, c.path_tol)?;
    let mut table = Table::new("a,r,u,v");
    for q in &p.profiles {
        profile_rows(&mut table, q);
    }
    let mut results = path_summary(&p, nl);
    results["barrier_center"] = json!(p.profiles.last().map(|q| q.center_value));
    Ok(Output {
        tables: vec![("", table)],
        plots: vec![
            ("", phase_plot("phase plane along the path to the barrier", &p.profiles)),
            ("-profiles", profile_plot("profiles along the path to the barrier", &p.profiles)),
        ],
        results,
    })
}

fn barrier(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let barriers = find_barriers(nl, c.mu, c.dim, radius(c)?)?;
    let mut table = Table::new("a,r,u,v");
    for b in &barriers {
        profile_rows(&mut table, &b.profile);
    }
    let profiles: Vec<RadialProfile> = barriers.iter().map(|b| b.profile.clone()).collect();
    let results = json!({
        "count": barriers.len(),
        "centers": barriers.iter().map(|b| b.center_value).collect::<Vec<_>>(),
        "maxima": barriers.iter().map(|b| b.profile.max()).collect::<Vec<_>>(),
        "minimal_center": barriers.iter().find(|b| b.is_minimal).map(|b| b.center_value),
    });
    Ok(Output {
        tables: vec![("", table)],
        plots: vec![
            ("", profile_plot("barriers", &profiles)),
            ("-phase", phase_plot("barriers in the phase plane", &profiles)),
        ],
        results,
    })
}

fn mu_star(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let d = domain(c)?;
    let lower = mu_star_lower_bound(nl, c.dim, d.measure())?;
    let upper = mu_star_upper_bound(nl, lambda1(d)?)?;
    let numeric = mu_star_numeric(nl, d)?;
    let mut table = Table::new("quantity,value");
    for (name, v) in [("lower", lower.value), ("numeric", numeric), ("upper", upper)] {
        table.rows.push(vec![name.into(), crate::export::number(v)]);
    }
    let results = json!({
        "domain": d,
        "lower": lower.value,
        "lower_applicable": lower.applicable,
        "lower_delta": lower.delta,
        "upper": upper,
        "numeric": numeric,
    });
    Ok(Output {
        tables: vec![("", table)],
        plots: vec![],
        results,
    })
}

fn simulate(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let g = grid(c, nl)?;
    let schedule = ControlSchedule::constant(c.boundary, g.dt, g.steps_for(c.horizon))?;
    let traj = simulate_sampled(&g, nl, &g.constant(c.initial), &schedule, c.stride)?;
    let radii = g.radii();
    let mut table = Table::new("t,r,u");
    for (t, u) in traj.times.iter().zip(&traj.states) {
        for (r, x) in radii.iter().zip(u) {
            table.push(&[*t, *r, *x]);
        }
    }
    let snapshots: Vec<(f64, &Vec<f64>)> = traj.times.iter().copied().zip(&traj.states).collect();
    let plot = Plot {
        title: format!("u(t, r), a = {}, μ = {}", c.boundary, c.mu),
        x_label: "r",
        y_label: "u",
        series: thinned(&snapshots, 12)
            .into_iter()
            .map(|(t, u)| Series {
                label: format!("t = {t}"),
                points: radii.iter().copied().zip(u.iter().copied()).collect(),
            })
            .collect(),
    };
    let terminal = traj.terminal();
    let results = json!({
        "dt": g.dt,
        "steps": schedule.len(),
        "terminal_max": terminal.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        "terminal_min": terminal.iter().copied().fold(f64::INFINITY, f64::min),
        "bound_violation": traj.bound_violation(),
    });
    Ok(Output {
        tables: vec![("", table)],
        plots: vec![("", plot)],
        results,
    })
}

fn omega(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let g = grid(c, nl)?;
    let limit = omega_classify(&g, nl, &g.constant(c.initial), c.boundary, c.omega_t_max, OMEGA_TOL)?;
    let mut tables = Vec::new();
    let mut plots = Vec::new();
    if let OmegaLimit::NontrivialSteady(u) = &limit {
        let mut table = Table::new("r,u");
        for (r, x) in g.radii().iter().zip(u) {
            table.push(&[*r, *x]);
        }
        tables.push(("", table));
        plots.push((
            "",
            Plot {
                title: "ω-limit profile".into(),
                x_label: "r",
                y_label: "u",
                series: vec![Series {
                    label: "limit".into(),
                    points: g.radii().into_iter().zip(u.iter().copied()).collect(),
                }],
            },
        ));
    }
    let results = json!({ "dt": g.dt, "omega_limit": limit });
    Ok(Output { tables, plots, results })
}

fn wave(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let balanced = nl.classify()?.variant == Variant::BistableF1Zero;
    let w = if balanced {
        stationary_profile(nl, c.mu, c.wave_samples)?
    } else {
        traveling_wave(nl, c.mu)?
    };
    let mut table = Table::new("xi,U");
    for (x, u) in w.xi.iter().zip(&w.u) {
        table.push(&[*x, *u]);
    }
    let plot = Plot {
        title: format!("front profile, c = {}", w.speed),
        x_label: "ξ",
        y_label: "U",
        series: vec![Series {
            label: "U".into(),
            points: w.xi.iter().copied().zip(w.u.iter().copied()).collect(),
        }],
    };
    let results = json!({
        "speed": w.speed,
        "stationary": balanced,
        "residual": w.residual(nl),
        "monotone": w.is_monotone(),
        "samples": w.u.len(),
    });
    Ok(Output {
        tables: vec![("", table)],
        plots: vec![("", plot)],
        results,
    })
}

fn schedule_output(schedule: &ControlSchedule, title: String) -> (Table, Plot) {
    let mut table = Table::new("t,a");
    let times = schedule.times();
    for (t, a) in times.iter().zip(&schedule.values) {
        table.push(&[*t, *a]);
    }
    let plot = Plot {
        title,
        x_label: "t",
        y_label: "a(t)",
        series: vec![Series {
            label: "a".into(),
            points: times.into_iter().zip(schedule.values.iter().copied()).collect(),
        }],
    };
    (table, plot)
}

/// Staircase along the path from 0 to θ; shared by the staircase and
/// quasistatic runs.
fn run_staircase(c: &RunConfig, nl: &Nonlinearity) -> Result<(Grid, f64, ControlSchedule, f64), RunError> {
    let g = grid(c, nl)?;
    let path = build_path(nl, c.mu, c.dim, g.radius, c.path_tol)?;
    let u0 = g.constant(c.initial);
    let (dwell, schedule, traj) = staircase_doubling(&path, &g, nl, &u0, c.dwell, c.eps, c.dwell_doublings)?;
    let last = g.sample(path.profiles.last().expect("paths are never empty"))?;
    Ok((g, dwell, schedule, traj.terminal_distance(&last)))
}

fn staircase(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let (g, dwell, schedule, distance) = run_staircase(c, nl)?;
    let (table, plot) = schedule_output(&schedule, format!("staircase control, dwell {dwell}"));
    let results = json!({
        "dt": g.dt,
        "dwell": dwell,
        "horizon": schedule.horizon(),
        "terminal_distance": distance,
    });
    Ok(Output {
        tables: vec![("", table)],
        plots: vec![("", plot)],
        results,
    })
}

fn quasistatic(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let (g, dwell, initial, _) = run_staircase(c, nl)?;
    let theta = g.constant(target_value(c, nl)?);
    let mut problem = OptimizationProblem::new(
        g,
        initial.horizon(),
        g.constant(c.initial),
        theta,
        c.eps,
        Objective::ControlSmoothness,
    )?;
    if let Some(cap) = c.rate_cap {
        problem = problem.with_rate_cap(cap)?;
    }
    let r = quasistatic_optimize(&problem, nl, Some(&initial), c.max_iter)?;
    let (table, plot) = schedule_output(&r.schedule, "quasistatic control".into());
    let results = json!({
        "dt": problem.grid.dt,
        "horizon": problem.horizon,
        "initial_dwell": dwell,
        "terminal_error": r.terminal_error,
        "smoothness": r.smoothness,
        "penalty": r.penalty,
        "objective": r.objective_value,
        "iterations": r.iterations,
        "converged": r.converged,
    });
    Ok(Output {
        tables: vec![("", table)],
        plots: vec![("", plot)],
        results,
    })
}

fn min_time(c: &RunConfig, nl: &Nonlinearity) -> Run {
    let g = grid(c, nl)?;
    let target = g.constant(target_value(c, nl)?);
    let problem = OptimizationProblem::new(g, c.t_hi, g.constant(c.initial), target, c.eps, Objective::TerminalMismatch)?;
    let m = min_time_search(&problem, nl, c.t_hi, c.max_iter)?;
    let (table, plot) = schedule_output(&m.result.schedule, format!("minimal-time control, T = {}", m.t_min));
    let mut probes = Table::new("T,feasible,terminal_error");
    for p in &m.probes {
        probes.rows.push(vec![
            crate::export::number(p.horizon),
            p.feasible.to_string(),
            crate::export::number(p.terminal_error),
        ]);
    }
    let results = json!({
        "t_min": m.t_min,
        "terminal_error": m.result.terminal_error,
        "probes": m.probes.len(),
        "probes_monotone": m.probes_monotone(),
        "bang_bang_fraction": bang_bang_fraction(&m.result.schedule, 0.05),
    });
    Ok(Output {
        tables: vec![("", table), ("-probes", probes)],
        plots: vec![("", plot)],
        results,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thinning_keeps_ends() {
        let v: Vec<usize> = (0..10).collect();
        assert_eq!(thinned(&v, 4).into_iter().copied().collect::<Vec<_>>(), vec![0, 3, 6, 9]);
        assert_eq!(thinned(&v, 3).into_iter().copied().collect::<Vec<_>>(), vec![0, 4, 8, 9]);
        assert_eq!(thinned(&v, 20).len(), 10);
        assert!(thinned::<usize>(&[], 5).is_empty());
    }

    #[test]
    fn core_input_errors_are_validation_errors() {
        let e: RunError = rdc_core::Error::InvalidInput("x".into()).into();
        assert!(matches!(e, RunError::Invalid(_)));
        let e: RunError = rdc_core::Error::Horizon(1.0).into();
        assert!(matches!(e, RunError::Numerical(_)));
    }
}
