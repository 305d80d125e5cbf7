//! Continuous paths of admissible steady states parameterised by the centre
//! value, from `w ≡ 0` to `w ≡ θ` and optionally on to the minimal barrier.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::barrier::find_barriers;
use super::radial::{integrate_radial, RadialProfile};
use crate::error::{Error, Result};
use crate::numerics::sup_distance;
use crate::reaction::{Nonlinearity, Variant};

/// Upper limit on the number of profiles produced by refinement.
pub const MAX_PROFILES: usize = 100_000;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteadyPath {
    pub profiles: Vec<RadialProfile>,
    /// Dirichlet value `u(R)` of every profile.
    pub trace: Vec<f64>,
    /// Largest sup-norm distance between consecutive profiles.
    pub continuity_bound: f64,
}

impl SteadyPath {
    pub fn centers(&self) -> Vec<f64> {
        self.profiles.iter().map(|p| p.center_value).collect()
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

/// Radial step used for path profiles: at most 0.01 and at most `R/200`.
pub fn profile_step(radius: f64) -> f64 {
    radius / ((radius / 0.01).ceil().max(200.0))
}

fn require_bistable(nl: &Nonlinearity) -> Result<f64> {
    let class = nl.classify()?;
    match (class.variant, nl.theta()) {
        (Variant::Monostable, _) | (_, None) => Err(Error::Precondition(
            "steady-state paths need a bistable nonlinearity".into(),
        )),
        (_, Some(theta)) => Ok(theta),
    }
}

fn check_tol(tol: f64) -> Result<()> {
    if tol > 1e-4 && tol.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("path tolerance must exceed 1e-4, got {tol}")))
    }
}

/// Bisects the centre-value grid until consecutive profiles are within `tol`.
fn refine(
    nl: &Nonlinearity,
    mu: f64,
    dim: usize,
    radius: f64,
    tol: f64,
    seeds: Vec<RadialProfile>,
) -> Result<Vec<RadialProfile>> {
    let h = profile_step(radius);
    let mut profiles = seeds;
    loop {
        let gaps: Vec<usize> = profiles
            .windows(2)
            .enumerate()
            .filter(|(_, w)| sup_distance(&w[0].u, &w[1].u) > tol)
            .map(|(i, _)| i)
            .collect();
        if gaps.is_empty() {
            return Ok(profiles);
        }
        if profiles.len() + gaps.len() > MAX_PROFILES {
            return Err(Error::RefinementFailure(MAX_PROFILES));
        }
        let fresh = gaps
            .par_iter()
            .map(|&i| {
                let a = 0.5 * (profiles[i].center_value + profiles[i + 1].center_value);
                integrate_radial(nl, a, mu, dim, radius, h)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut merged = Vec::with_capacity(profiles.len() + fresh.len());
        let mut fresh = fresh.into_iter();
        let mut next_gap = gaps.iter().peekable();
        for (i, p) in profiles.into_iter().enumerate() {
            merged.push(p);
            if next_gap.peek() == Some(&&i) {
                next_gap.next();
                merged.push(fresh.next().expect("one profile per gap"));
            }
        }
        profiles = merged;
    }
}

fn assemble(profiles: Vec<RadialProfile>) -> SteadyPath {
    let trace = profiles.iter().map(RadialProfile::trace).collect();
    let continuity_bound = profiles
        .windows(2)
        .map(|w| sup_distance(&w[0].u, &w[1].u))
        .fold(0.0, f64::max);
    SteadyPath {
        profiles,
        trace,
        continuity_bound,
    }
}

/// Path of radial steady states with centre values in `[0, θ]`.
pub fn build_path(nl: &Nonlinearity, mu: f64, dim: usize, radius: f64, tol: f64) -> Result<SteadyPath> {
    let theta = require_bistable(nl)?;
    check_tol(tol)?;
    let h = profile_step(radius);
    let seeds = vec![
        integrate_radial(nl, 0.0, mu, dim, radius, h)?,
        integrate_radial(nl, theta, mu, dim, radius, h)?,
    ];
    let profiles = refine(nl, mu, dim, radius, tol, seeds)?;
    Ok(assemble(profiles))
}

/// Path from `w ≡ 0` through `w ≡ θ` up to the minimal barrier.
pub fn path_to_minimal_barrier(
    nl: &Nonlinearity,
    mu: f64,
    dim: usize,
    radius: f64,
    tol: f64,
) -> Result<SteadyPath> {
    let theta = require_bistable(nl)?;
    check_tol(tol)?;
    let barriers = find_barriers(nl, mu, dim, radius)?;
    let minimal = barriers.into_iter().next().ok_or_else(|| {
        Error::Precondition(format!("no barrier exists at μ = {mu} (μ above μ*)"))
    })?;
    let h = profile_step(radius);
    let seeds = vec![
        integrate_radial(nl, 0.0, mu, dim, radius, h)?,
        integrate_radial(nl, theta, mu, dim, radius, h)?,
        integrate_radial(nl, minimal.center_value, mu, dim, radius, h)?,
    ];
    let profiles = refine(nl, mu, dim, radius, tol, seeds)?;
    let path = assemble(profiles);
    let last = path.trace.last().copied().unwrap_or(f64::NAN);
    if last.abs() > 1e-6 {
        return Err(Error::Internal(format!("terminal trace {last} is not zero")));
    }
    let n = path.profiles.len();
    if path.profiles[..n - 1]
        .iter()
        .any(|p| p.min() < -1e-9 || p.max() > 1.0)
    {
        return Err(Error::Internal("path profile left [0, 1]".into()));
    }
    Ok(path)
}

/// Amplitudes `max |trace - center|` of successive lobes between crossings
/// of `center`, in path order.
pub fn oscillation_amplitudes(trace: &[f64], center: f64) -> Vec<f64> {
    let mut lobes = Vec::new();
    let mut current: f64 = 0.0;
    let mut sign = 0.0;
    for &t in trace {
        let d = t - center;
        let s = if d > 0.0 {
            1.0
        } else if d < 0.0 {
            -1.0
        } else {
            0.0
        };
        if s != 0.0 && sign != 0.0 && s != sign {
            lobes.push(current);
            current = 0.0;
        }
        if s != 0.0 {
            sign = s;
        }
        current = current.max(d.abs());
    }
    if current > 0.0 {
        lobes.push(current);
    }
    lobes
}
