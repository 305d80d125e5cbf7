//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit on any
//! failure.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rdc_core::control::*;
use rdc_core::evolve::*;
use rdc_core::numerics::sup_distance;
use rdc_core::steady::*;
use rdc_core::wave::*;
use rdc_core::Nonlinearity;

const THETA: f64 = 1.0 / 3.0;

type Outcome = Result<String, String>;

fn cubic() -> Nonlinearity {
    Nonlinearity::cubic(THETA).unwrap()
}

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn big_f(s: f64) -> f64 {
    -THETA * s * s / 2.0 + (1.0 + THETA) * s.powi(3) / 3.0 - s.powi(4) / 4.0
}

fn lower_closed_form() -> f64 {
    big_f(1.0).powi(2) / (8.0 * (big_f(1.0) - big_f(THETA)))
}

fn criterion_1() -> Outcome {
    let nl = cubic();
    let start = Instant::now();
    let unit = Domain::Interval { length: 1.0 };
    let numeric = mu_star_numeric(&nl, unit).map_err(|e| e.to_string())?;
    let lower = mu_star_lower_bound(&nl, 1, 1.0).map_err(|e| e.to_string())?.value;
    let upper = mu_star_upper_bound(&nl, lambda1(unit).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let elapsed = start.elapsed().as_secs_f64();
    // max over s of (1 - s)(s - θ), attained at s = (1 + θ)/2
    let upper_closed = ((1.0 - THETA) / 2.0).powi(2) / (PI * PI);
    let ok = (0.0029297..=0.0112579).contains(&numeric)
        && (lower - lower_closed_form()).abs() <= 1e-6
        && (upper - upper_closed).abs() <= 1e-6
        && elapsed <= 10.0;
    check(
        ok,
        format!("μ* = {numeric:.7} in [{lower:.7}, {upper:.7}], {elapsed:.2} s"),
    )
}

fn criterion_2() -> Outcome {
    let lb = mu_star_lower_bound(&cubic(), 1, 1.0).map_err(|e| e.to_string())?;
    let gap = (lb.value - lower_closed_form()).abs();
    check(lb.applicable && gap <= 1e-10, format!("|lower − closed form| = {gap:.2e}"))
}

fn criterion_3() -> Outcome {
    let nl = cubic();
    let t1 = nl.classify().map_err(|e| e.to_string())?.theta1.ok_or("no θ₁")?;
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut worst_v, mut worst_u, mut energy_violation) = (f64::MIN, 0.0f64, 0.0f64);
    for _ in 0..200 {
        let a = rng.gen_range(0.0..=t1);
        let dim = rng.gen_range(1..=3);
        let mu: f64 = rng.gen_range(0.05..2.0);
        let p = integrate_radial(&nl, a, mu, dim, 15.0 * mu.sqrt(), 0.01 * mu.sqrt()).map_err(|e| e.to_string())?;
        for i in 0..p.len() {
            worst_u = worst_u.max((-p.u[i]).max(p.u[i] - t1));
            let h = p.region_halfwidth(&nl, i).map_err(|e| e.to_string())?;
            worst_v = worst_v.max(p.v[i].abs() - h);
            if dim >= 2 && i > 0 {
                let rise = p.energy(&nl, i).map_err(|e| e.to_string())? - p.energy(&nl, i - 1).map_err(|e| e.to_string())?;
                energy_violation += rise.max(0.0);
            }
        }
    }
    check(
        worst_u <= 0.0 && worst_v <= 1e-6 && energy_violation <= 1e-6,
        format!("u excess {worst_u:.1e}, |v| excess {worst_v:.1e}, energy rise {energy_violation:.1e}"),
    )
}

fn criterion_4() -> Outcome {
    let nl = cubic();
    let start = Instant::now();
    let mut details = Vec::new();
    let mut ok = true;
    for radius in [10.0, 30.0] {
        let path = build_path(&nl, 1.0, 2, radius, 0.02).map_err(|e| e.to_string())?;
        let first = path.profiles[0].u.iter().all(|&x| x == 0.0);
        let last = path.profiles.last().unwrap().u.iter().all(|&x| (x - THETA).abs() <= 1e-12);
        let bounded = path.profiles.iter().all(|p| p.min() >= 0.0 && p.max() <= 1.0);
        let steps = path
            .profiles
            .windows(2)
            .map(|w| sup_distance(&w[0].u, &w[1].u))
            .fold(0.0, f64::max);
        let amps = oscillation_amplitudes(&path.trace, THETA);
        let damped = amps.len() >= 2 && amps.last().unwrap() < &amps[0];
        ok &= first && last && bounded && steps <= 0.02 && damped;
        details.push(format!("R={radius}: {} profiles, max step {steps:.4}, {} lobes", path.len(), amps.len()));
    }
    let elapsed = start.elapsed().as_secs_f64();
    ok &= elapsed <= 60.0;
    check(ok, format!("{}, {elapsed:.1} s", details.join("; ")))
}

fn criterion_5() -> Outcome {
    let nl = cubic();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (mut order_violation, mut bound_violation) = (0.0f64, 0.0f64);
    for _ in 0..50 {
        let grid = Grid::with_default_dt(&nl, rng.gen_range(1..=3), rng.gen_range(1.0..10.0), 60, rng.gen_range(0.05..2.0))
            .map_err(|e| e.to_string())?;
        let shift: f64 = rng.gen_range(0.0..0.3);
        let (c0, c1): (f64, f64) = (rng.gen(), rng.gen_range(-0.5..0.5));
        let lo: Vec<f64> = grid.radii().iter().map(|r| (c0 + c1 * r.cos()).clamp(0.0, 1.0)).collect();
        let hi: Vec<f64> = lo.iter().map(|x| (x + shift).min(1.0)).collect();
        let a_lo: Vec<f64> = (0..60).map(|_| rng.gen_range(0.0..1.0)).collect();
        let a_hi: Vec<f64> = a_lo.iter().map(|a| (a + rng.gen_range(0.0..0.2)).min(1.0)).collect();
        let run = |u0: &[f64], a: Vec<f64>| {
            simulate(&grid, &nl, u0, &ControlSchedule::new(grid.dt, a).unwrap()).map_err(|e| e.to_string())
        };
        let (t_lo, t_hi) = (run(&lo, a_lo)?, run(&hi, a_hi)?);
        for (u, v) in t_lo.states.iter().zip(&t_hi.states) {
            for (x, y) in u.iter().zip(v) {
                order_violation = order_violation.max(x - y);
            }
        }
        bound_violation = bound_violation.max(t_lo.bound_violation()).max(t_hi.bound_violation());
    }
    check(
        order_violation <= 1e-8 && bound_violation <= 1e-8,
        format!("ordering violation {order_violation:.1e}, bound violation {bound_violation:.1e}"),
    )
}

fn criterion_6() -> Outcome {
    let nl = cubic();
    let mut worst = 0.0f64;
    for mu in [0.25, 1.0] {
        let c = wave_speed(&nl, mu).map_err(|e| e.to_string())?;
        worst = worst.max((c - (2.0 * mu).sqrt() * (0.5 - THETA)).abs());
    }
    let balanced = Nonlinearity::cubic(0.5).unwrap();
    let c_half = wave_speed(&balanced, 1.0).map_err(|e| e.to_string())?;
    let w = stationary_profile(&balanced, 1.0, 8001).map_err(|e| e.to_string())?;
    let profile_err = w
        .xi
        .iter()
        .zip(&w.u)
        .map(|(x, u)| (u - 1.0 / (1.0 + (x / 2f64.sqrt()).exp())).abs())
        .fold(0.0, f64::max);
    check(
        worst <= 1e-3 && c_half.abs() <= 1e-6 && profile_err <= 1e-6,
        format!("speed error {worst:.1e}, |c(θ=1/2)| = {:.1e}, profile error {profile_err:.1e}", c_half.abs()),
    )
}

fn criterion_7() -> Outcome {
    let nl = cubic();
    let mut details = Vec::new();
    let mut ok = true;
    for mu in [0.05, 1.0] {
        let grid = Grid::with_default_dt(&nl, 2, 10.0, 200, mu).map_err(|e| e.to_string())?;
        let s = ControlSchedule::constant(1.0, grid.dt, grid.steps_for(500.0)).map_err(|e| e.to_string())?;
        let t = simulate_sampled(&grid, &nl, &grid.constant(0.0), &s, 20).map_err(|e| e.to_string())?;
        let one = grid.constant(1.0);
        let hit = t.states.iter().position(|u| sup_distance(u, &one) <= 0.01).map(|k| t.times[k]);
        ok &= hit.is_some();
        details.push(match hit {
            Some(time) => format!("μ={mu}: within 0.01 at T={time:.1}"),
            None => format!("μ={mu}: not within 0.01 by T=500"),
        });
    }
    check(ok, details.join("; "))
}

fn criterion_8() -> Outcome {
    let nl = cubic();
    let ball = Domain::Ball { dim: 2, radius: 10.0 };
    let mu = 0.5 * mu_star_numeric(&nl, ball).map_err(|e| e.to_string())?;
    let grid = Grid::with_default_dt(&nl, 2, 10.0, 200, mu).map_err(|e| e.to_string())?;
    let low = omega_classify(&grid, &nl, &grid.constant(1.0), 0.0, OMEGA_T_MAX, OMEGA_TOL).map_err(|e| e.to_string())?;
    let (barrier_ok, distance) = match &low {
        OmegaLimit::NontrivialSteady(u) => {
            let d = find_barriers(&nl, mu, 2, 10.0)
                .map_err(|e| e.to_string())?
                .iter()
                .map(|b| sup_distance(&grid.sample(&b.profile).unwrap(), u))
                .fold(f64::INFINITY, f64::min);
            let max = u.iter().copied().fold(f64::MIN, f64::max);
            (max > THETA && d <= 1e-2, d)
        }
        _ => (false, f64::NAN),
    };
    let above = 1.1 * mu_star_upper_bound(&nl, lambda1(ball).map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
    let grid = Grid::with_default_dt(&nl, 2, 10.0, 200, above).map_err(|e| e.to_string())?;
    let high = omega_classify(&grid, &nl, &grid.constant(1.0), 0.0, OMEGA_T_MAX, OMEGA_TOL).map_err(|e| e.to_string())?;
    check(
        barrier_ok && high == OmegaLimit::Zero,
        format!(
            "0.5μ*: {} (barrier distance {distance:.1e}); 1.1·upper bound: {}",
            limit_name(&low),
            limit_name(&high)
        ),
    )
}

fn limit_name(l: &OmegaLimit) -> &'static str {
    match l {
        OmegaLimit::Zero => "zero",
        OmegaLimit::Theta => "theta",
        OmegaLimit::One => "one",
        OmegaLimit::NontrivialSteady(_) => "nontrivial steady state",
        OmegaLimit::Undecided => "undecided",
    }
}

fn criterion_9() -> Outcome {
    let nl = cubic();
    let path = build_path(&nl, 1.0, 2, 10.0, 0.02).map_err(|e| e.to_string())?;
    let grid = Grid::with_default_dt(&nl, 2, 10.0, 200, 1.0).map_err(|e| e.to_string())?;
    let u0 = grid.constant(0.0);
    let theta = grid.constant(THETA);
    let (dwell, schedule, traj) = staircase_doubling(&path, &grid, &nl, &u0, 8.0, 0.01, 3).map_err(|e| e.to_string())?;
    let stair_err = traj.terminal_distance(&theta);
    let admissible = |s: &ControlSchedule| s.values.iter().all(|a| (0.0..=1.0).contains(a));
    let stair_ok = stair_err <= 0.01 && admissible(&schedule) && traj.bound_violation() <= 1e-8;

    let problem = OptimizationProblem::new(grid, schedule.horizon(), u0.clone(), theta.clone(), 0.01, Objective::ControlSmoothness)
        .map_err(|e| e.to_string())?;
    let r = quasistatic_optimize(&problem, &nl, Some(&schedule), 100).map_err(|e| e.to_string())?;
    let t = simulate_sampled(&problem.grid, &nl, &u0, &r.schedule, usize::MAX).map_err(|e| e.to_string())?;
    let quasi_err = t.terminal_distance(&theta);
    let quasi_ok = r.converged && quasi_err <= 0.01 && admissible(&r.schedule) && t.bound_violation() <= 1e-8;
    check(
        stair_ok && quasi_ok,
        format!(
            "staircase (dwell {dwell}, T={:.0}) error {stair_err:.2e}; quasistatic error {quasi_err:.2e}, ∫a_t² = {:.3}",
            schedule.horizon(),
            r.smoothness
        ),
    )
}

fn criterion_10() -> Outcome {
    let nl = cubic();
    let (dim, radius) = Domain::ball_of_measure(2, 1.0).map_err(|e| e.to_string())?.radial();
    let grid = Grid::new(dim, radius, 50, 0.01, 0.0611).map_err(|e| e.to_string())?;
    let t_hi = 1.0;
    let problem = OptimizationProblem::new(
        grid,
        t_hi,
        grid.constant(0.0),
        grid.constant(THETA),
        0.01,
        Objective::TerminalMismatch,
    )
    .map_err(|e| e.to_string())?;
    let m = min_time_search(&problem, &nl, t_hi, 2000).map_err(|e| e.to_string())?;
    let fraction = bang_bang_fraction(&m.result.schedule, 0.05);
    check(
        m.t_min.is_finite() && m.probes_monotone() && fraction >= 0.9,
        format!(
            "T_min = {:.4} after {} probes, bang-bang fraction {fraction:.3}",
            m.t_min,
            m.probes.len()
        ),
    )
}

fn criterion_11() -> Outcome {
    let nl = cubic();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    for _ in 0..5 {
        let grid = Grid::new(rng.gen_range(1..=3), rng.gen_range(2.0..8.0), 60, 0.05, 1.0).map_err(|e| e.to_string())?;
        let u0: Vec<f64> = grid.radii().iter().map(|r| 0.5 * (-r * r / 4.0).exp()).collect();
        let target = grid.constant(rng.gen_range(0.1..0.9));
        let p = OptimizationProblem::new(grid, 80.0 * grid.dt, u0, target, 0.01, Objective::TerminalMismatch)
            .map_err(|e| e.to_string())?;
        let values: Vec<f64> = (0..p.steps()).map(|_| rng.gen_range(0.05..0.95)).collect();
        let g = adjoint_gradient(&p, &nl, &ControlSchedule::new(grid.dt, values.clone()).unwrap()).map_err(|e| e.to_string())?;
        let mismatch = |v: &[f64]| {
            let s = ControlSchedule::new(grid.dt, v.to_vec()).unwrap();
            let t = simulate_sampled(&grid, &nl, &p.u0, &s, usize::MAX).unwrap();
            0.5 * t.terminal().iter().zip(&p.target).map(|(u, w)| (u - w).powi(2)).sum::<f64>()
        };
        let fd: Vec<f64> = (0..values.len())
            .map(|k| {
                let (mut up, mut down) = (values.clone(), values.clone());
                up[k] += 1e-6;
                down[k] -= 1e-6;
                (mismatch(&up) - mismatch(&down)) / 2e-6
            })
            .collect();
        let scale = fd.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        worst = worst.max(sup_distance(&g, &fd) / scale);
    }
    check(worst <= 1e-5, format!("worst relative error {worst:.2e} over 5 instances"))
}

fn criterion_12() -> Outcome {
    let nl = cubic();
    let small = mu_star_numeric(&nl, Domain::Ball { dim: 2, radius: 1.0 }).map_err(|e| e.to_string())?;
    let large = mu_star_numeric(&nl, Domain::Ball { dim: 2, radius: 2.0 }).map_err(|e| e.to_string())?;
    let mu_rel = (large / (4.0 * small) - 1.0).abs();
    let c = wave_speed(&nl, 0.5).map_err(|e| e.to_string())?;
    let c4 = wave_speed(&nl, 2.0).map_err(|e| e.to_string())?;
    let c_rel = (c4 / (2.0 * c) - 1.0).abs();
    check(
        mu_rel <= 1e-5 && c_rel <= 1e-5,
        format!("μ* ratio error {mu_rel:.1e}, speed ratio error {c_rel:.1e}"),
    )
}

type Criterion = (&'static str, fn() -> Outcome);

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        ("critical diffusivity bracket", criterion_1),
        ("lower bound closed form", criterion_2),
        ("invariant region and energy", criterion_3),
        ("path reproduction", criterion_4),
        ("comparison principle", criterion_5),
        ("traveling waves", criterion_6),
        ("convergence to one", criterion_7),
        ("barrier obstruction", criterion_8),
        ("controllability to theta", criterion_9),
        ("minimal time", criterion_10),
        ("adjoint correctness", criterion_11),
        ("scaling laws", criterion_12),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let outcome = run();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail} [{secs:.1} s]", i + 1),
            Err(detail) => {
                failures += 1;
                println!("criterion {:>2} FAIL  {name}: {detail} [{secs:.1} s]", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failures, criteria.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
