//! Barriers (positive steady states with zero Dirichlet data) by shooting on
//! the centre value, and the numeric critical diffusivity μ*.
//!
//! Shots are computed at μ = 1 and rescaled: the first-zero radius obeys
//! `ρ_μ(a) = √μ · ρ₁(a)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::bounds::Domain;
use super::radial::{first_zero_radius, integrate_radial, RadialProfile};
use crate::error::{Error, Result};
use crate::numerics::{bisect, golden_min};
use crate::reaction::{Nonlinearity, Variant};

/// Spacing of the centre-value scan.
pub const SCAN_STEP: f64 = 1e-3;
/// RK4 step of the unit-diffusivity shots.
pub const SHOOT_STEP: f64 = 2e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Barrier {
    pub profile: RadialProfile,
    pub center_value: f64,
    /// Smallest centre value realising a zero exactly at `R`.
    pub is_minimal: bool,
}

/// Sample of the unit-diffusivity shooting map `a ↦ ρ₁(a)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShotSample {
    pub center_value: f64,
    pub zero_radius: Option<f64>,
}

/// Centre values that can produce a barrier: `(θ₁, 1)` for bistable `f`,
/// `(0, 1)` for monostable; `None` when no barrier can exist (`F(1) = 0`).
fn barrier_window(nl: &Nonlinearity) -> Result<Option<(f64, f64)>> {
    let class = nl.classify()?;
    Ok(match class.variant {
        Variant::BistableF1Zero => None,
        Variant::BistableF1Positive => Some((class.theta1.expect("bistable has θ₁"), 1.0)),
        Variant::Monostable => Some((0.0, 1.0)),
    })
}

fn rho1(nl: &Nonlinearity, a: f64, dim: usize) -> Option<f64> {
    first_zero_radius(nl, a, 1.0, dim, SHOOT_STEP).ok().flatten()
}

/// Scans `ρ₁` on the centre-value window at [`SCAN_STEP`] spacing, plus
/// geometric points `lo + 10⁻ᵏ`, `hi - 10⁻ᵏ` (k = 4..13) where `ρ₁` grows
/// without bound.
pub fn shooting_scan(nl: &Nonlinearity, dim: usize) -> Result<Vec<ShotSample>> {
    let Some((lo, hi)) = barrier_window(nl)? else {
        return Ok(Vec::new());
    };
    let first = (lo / SCAN_STEP).floor() as usize + 1;
    let last = (hi / SCAN_STEP).ceil() as usize - 1;
    let mut centers: Vec<f64> = (first..=last).map(|j| j as f64 * SCAN_STEP).collect();
    for k in 4..=13 {
        let eps = 10f64.powi(-k);
        centers.push(lo + eps);
        centers.push(hi - eps);
    }
    centers.retain(|&a| a > lo && a < hi);
    centers.sort_by(f64::total_cmp);
    centers.dedup();
    Ok(centers
        .into_par_iter()
        .map(|a| ShotSample {
            center_value: a,
            zero_radius: rho1(nl, a, dim),
        })
        .collect())
}

/// All barriers of `-μΔu = f(u)` on the ball of radius `R` in dimension `N`,
/// ascending by centre value. The first one is marked minimal.
pub fn find_barriers(nl: &Nonlinearity, mu: f64, dim: usize, radius: f64) -> Result<Vec<Barrier>> {
    if !(mu > 0.0) || !(radius > 0.0) {
        return Err(Error::InvalidInput("μ and R must be positive".into()));
    }
    let scan = shooting_scan(nl, dim)?;
    let sqrt_mu = mu.sqrt();
    let mismatch = |a: f64| rho1(nl, a, dim).map(|r| sqrt_mu * r - radius);

    // A shot without a zero before the cut-off counts as ρ = +∞; the
    // cut-off exceeds R/√μ whenever R < 100√μ.
    let gap = |s: &ShotSample| s.zero_radius.map_or(f64::INFINITY, |r| sqrt_mu * r - radius);
    let mut centers = Vec::new();
    for w in scan.windows(2) {
        let (g0, g1) = (gap(&w[0]), gap(&w[1]));
        if g0 == 0.0 {
            centers.push(w[0].center_value);
        } else if g0.signum() != g1.signum() && g1 != 0.0 {
            let root = bisect(w[0].center_value, w[1].center_value, 1e-13, |a| {
                mismatch(a).unwrap_or(1.0)
            })
            .ok_or_else(|| Error::Internal("barrier bracket lost".into()))?;
            centers.push(root);
        }
    }

    let theta = nl.theta();
    // the shooting step rescaled, so the profile retraces the shot
    let h = (SHOOT_STEP * sqrt_mu).min(radius / 4000.0);
    let candidates = centers
        .par_iter()
        .map(|&a| Ok((a, integrate_radial(nl, a, mu, dim, radius, h)?)))
        .collect::<Result<Vec<_>>>()?;
    let mut barriers = Vec::with_capacity(candidates.len());
    for (a, profile) in candidates {
        // centres next to a saddle of the shooting ODE are exponentially
        // sensitive; drop those whose re-integration fails the checks
        match check_barrier(&profile, theta) {
            Ok(()) => barriers.push(Barrier {
                profile,
                center_value: a,
                is_minimal: false,
            }),
            Err(e) => log::warn!("dropping barrier candidate a = {a}: {e}"),
        }
    }
    if let Some(first) = barriers.first_mut() {
        first.is_minimal = true;
    }
    Ok(barriers)
}

fn check_barrier(profile: &RadialProfile, theta: Option<f64>) -> Result<()> {
    let n = profile.u.len();
    if profile.trace().abs() > 1e-6 {
        return Err(Error::Internal(format!(
            "barrier trace {} is not zero",
            profile.trace()
        )));
    }
    if profile.u[..n - 1].iter().any(|&x| x <= 0.0) {
        return Err(Error::Internal("barrier is not positive inside the ball".into()));
    }
    if let Some(theta) = theta {
        if profile.max() <= theta {
            return Err(Error::Internal(format!(
                "barrier maximum {} does not exceed θ = {theta}",
                profile.max()
            )));
        }
    }
    Ok(())
}

/// Minimiser `(a, ρ₁(a))` of the unit-diffusivity first-zero radius.
pub fn min_zero_radius(nl: &Nonlinearity, dim: usize) -> Result<(f64, f64)> {
    let scan = shooting_scan(nl, dim)?;
    let (j, best) = scan
        .iter()
        .enumerate()
        .filter_map(|(j, s)| s.zero_radius.map(|r| (j, r)))
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .ok_or_else(|| Error::ThresholdUndefined("no centre value reaches zero".into()))?;
    let lo = scan[j.saturating_sub(1)].center_value;
    let hi = scan[(j + 1).min(scan.len() - 1)].center_value;
    let (a, r) = golden_min(lo, hi, 1e-10, |a| rho1(nl, a, dim).unwrap_or(f64::INFINITY));
    Ok(if r < best { (a, r) } else { (scan[j].center_value, best) })
}

/// Numeric critical diffusivity `μ* = R² / min_a ρ₁(a)²`.
pub fn mu_star_numeric(nl: &Nonlinearity, domain: Domain) -> Result<f64> {
    let (dim, radius) = domain.radial();
    super::bounds::lambda1(domain)?;
    let (_, rho) = min_zero_radius(nl, dim)?;
    Ok(radius * radius / (rho * rho))
}
