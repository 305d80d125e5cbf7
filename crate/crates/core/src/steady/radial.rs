//! RK4 integration of the radial steady-state equation
//! `μ(u'' + (N-1)/r u') = -f(u)`, `u(0) = a`, `u'(0) = 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reaction::{Nonlinearity, MARGIN_HI, MARGIN_LO};

/// Tolerance on the located zero radius.
const ZERO_TOL: f64 = 1e-12;

/// A steady state sampled on a uniform radius grid.
///
/// `v` holds `u_r`. With diffusivity `μ` the conserved/dissipated quantity
/// along the profile is `v²/2 + F(u)/μ`, see [`RadialProfile::energy`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RadialProfile {
    pub center_value: f64,
    pub dimension: usize,
    pub diffusivity: f64,
    pub radius: f64,
    pub r: Vec<f64>,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl RadialProfile {
    /// Dirichlet value `u(R)`.
    pub fn trace(&self) -> f64 {
        *self.u.last().expect("profile is never empty")
    }

    pub fn max(&self) -> f64 {
        self.u.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.u.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    /// Energy `v²/2 + F(u)/μ` at sample `i` (equals `energy(u, v)` for μ = 1).
    pub fn energy(&self, nl: &Nonlinearity, i: usize) -> Result<f64> {
        Ok(0.5 * self.v[i] * self.v[i] + nl.eval_big_f(self.u[i])? / self.diffusivity)
    }

    /// Invariant-region half-width at sample `i`, scaled for `μ`.
    pub fn region_halfwidth(&self, nl: &Nonlinearity, i: usize) -> Result<f64> {
        Ok(nl.region_halfwidth(self.u[i])? / self.diffusivity.sqrt())
    }

    /// Cubic Hermite interpolation of `u` at radius `r` using `(u, u_r)`.
    pub fn value_at(&self, r: f64) -> f64 {
        let n = self.r.len();
        if n == 1 || r <= self.r[0] {
            return self.u[0];
        }
        if r >= self.r[n - 1] {
            return self.u[n - 1];
        }
        let h = self.r[1] - self.r[0];
        let i = ((r / h).floor() as usize).min(n - 2);
        let t = (r - self.r[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        (2.0 * t3 - 3.0 * t2 + 1.0) * self.u[i]
            + (t3 - 2.0 * t2 + t) * h * self.v[i]
            + (-2.0 * t3 + 3.0 * t2) * self.u[i + 1]
            + (t3 - t2) * h * self.v[i + 1]
    }

    /// Samples `u` at the given radii.
    pub fn resample(&self, radii: &[f64]) -> Vec<f64> {
        radii.iter().map(|&r| self.value_at(r)).collect()
    }
}

/// Right-hand side of the first-order radial system.
#[derive(Clone, Copy)]
pub(crate) struct RadialOde<'a> {
    nl: &'a Nonlinearity,
    dim: f64,
    mu: f64,
}

impl<'a> RadialOde<'a> {
    pub(crate) fn new(nl: &'a Nonlinearity, dim: usize, mu: f64) -> Self {
        RadialOde {
            nl,
            dim: dim as f64,
            mu,
        }
    }

    fn rhs(&self, r: f64, u: f64, v: f64) -> (f64, f64) {
        (v, -(self.dim - 1.0) / r * v - self.nl.f_ext(u) / self.mu)
    }

    /// One classical RK4 step from `r > 0`.
    pub(crate) fn rk4(&self, r: f64, u: f64, v: f64, h: f64) -> (f64, f64) {
        let (k1u, k1v) = self.rhs(r, u, v);
        let (k2u, k2v) = self.rhs(r + 0.5 * h, u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        let (k3u, k3v) = self.rhs(r + 0.5 * h, u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        let (k4u, k4v) = self.rhs(r + h, u + h * k3u, v + h * k3v);
        (
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )
    }

    /// Series step off the axis: `u = a + c₂r² + c₄r⁴` with
    /// `c₂ = -f(a)/(2Nμ)` and `c₄ = f(a)f'(a)/(8N(N+2)μ²)`.
    pub(crate) fn series_start(&self, a: f64, h: f64) -> (f64, f64) {
        let n = self.dim;
        let fa = self.nl.f_ext(a);
        let dfa = self.nl.df_ext(a);
        let c2 = -fa / (2.0 * n * self.mu);
        let c4 = fa * dfa / (8.0 * n * (n + 2.0) * self.mu * self.mu);
        let h2 = h * h;
        (a + c2 * h2 + c4 * h2 * h2, 2.0 * c2 * h + 4.0 * c4 * h2 * h)
    }
}

fn validate(a: f64, mu: f64, dim: usize) -> Result<()> {
    if !(0.0..=1.0).contains(&a) {
        return Err(Error::Range {
            value: a,
            lo: 0.0,
            hi: 1.0,
        });
    }
    if !(mu > 0.0) || !mu.is_finite() {
        return Err(Error::InvalidInput(format!("diffusivity must be positive, got {mu}")));
    }
    if dim == 0 {
        return Err(Error::UnsupportedDimension(dim));
    }
    Ok(())
}

fn outside_margin(u: f64) -> bool {
    !(MARGIN_LO..=MARGIN_HI).contains(&u)
}

/// Integrates the radial profile with centre value `a` on `[0, R]`.
///
/// The grid has `ceil(R/h)` uniform steps ending exactly at `R`. Leaving
/// `[-0.1, 1.1]` is reported as [`Error::BlowUp`].
pub fn integrate_radial(
    nl: &Nonlinearity,
    a: f64,
    mu: f64,
    dim: usize,
    radius: f64,
    h: f64,
) -> Result<RadialProfile> {
    let (profile, exit) = integrate_radial_until_exit(nl, a, mu, dim, radius, h)?;
    match exit {
        Some(r) => Err(Error::BlowUp { radius: r }),
        None => Ok(profile),
    }
}

/// Like [`integrate_radial`] but returns the samples computed before the
/// solution left the margin, together with the exit radius if it did.
pub fn integrate_radial_until_exit(
    nl: &Nonlinearity,
    a: f64,
    mu: f64,
    dim: usize,
    radius: f64,
    h: f64,
) -> Result<(RadialProfile, Option<f64>)> {
    validate(a, mu, dim)?;
    if !(radius > 0.0) || !(h > 0.0) || h > radius / 200.0 * (1.0 + 1e-12) {
        return Err(Error::InvalidInput(format!(
            "need R > 0 and 0 < h <= R/200 (R = {radius}, h = {h})"
        )));
    }
    let steps = (radius / h - 1e-9).ceil() as usize;
    let h = radius / steps as f64;
    let ode = RadialOde::new(nl, dim, mu);

    let mut r = Vec::with_capacity(steps + 1);
    let mut u = Vec::with_capacity(steps + 1);
    let mut v = Vec::with_capacity(steps + 1);
    r.push(0.0);
    u.push(a);
    v.push(0.0);
    let mut exit = None;
    let (mut uc, mut vc) = ode.series_start(a, h);
    for i in 1..=steps {
        if i > 1 {
            let (un, vn) = ode.rk4((i - 1) as f64 * h, uc, vc, h);
            uc = un;
            vc = vn;
        }
        let ri = if i == steps { radius } else { i as f64 * h };
        if outside_margin(uc) || !uc.is_finite() {
            exit = Some(ri);
            break;
        }
        r.push(ri);
        u.push(uc);
        v.push(vc);
    }
    Ok((
        RadialProfile {
            center_value: a,
            dimension: dim,
            diffusivity: mu,
            radius,
            r,
            u,
            v,
        },
        exit,
    ))
}

/// Cut-off radius beyond which a shot is declared to have no zero.
pub fn shooting_cutoff(mu: f64) -> f64 {
    100.0 * mu.sqrt()
}

/// First radius where the profile with centre value `a` vanishes, if any
/// before `100·√μ`.
pub fn first_zero_radius(
    nl: &Nonlinearity,
    a: f64,
    mu: f64,
    dim: usize,
    h: f64,
) -> Result<Option<f64>> {
    validate(a, mu, dim)?;
    if !(h > 0.0) {
        return Err(Error::InvalidInput(format!("step must be positive, got {h}")));
    }
    if a == 0.0 {
        return Ok(Some(0.0));
    }
    let ode = RadialOde::new(nl, dim, mu);
    let r_max = shooting_cutoff(mu);
    let energy = |u: f64, v: f64| 0.5 * v * v + nl.eval_big_f(u).unwrap_or(f64::NAN) / mu;

    let (mut u, mut v) = ode.series_start(a, h);
    let mut r = h;
    if u <= 0.0 {
        // zero inside the very first step; resolve it on the series
        return Ok(crate::numerics::bisect(0.0, h, ZERO_TOL, |s| ode.series_start(a, s).0));
    }
    while r < r_max {
        // Energy is non-increasing and E(0, v) >= 0: once negative, u = 0 is
        // out of reach.
        if energy(u, v) < -1e-13 {
            return Ok(None);
        }
        let (un, vn) = ode.rk4(r, u, v, h);
        if un <= 0.0 {
            let (r0, u0, v0) = (r, u, v);
            let s = crate::numerics::bisect(0.0, h, ZERO_TOL, |s| ode.rk4(r0, u0, v0, s).0)
                .ok_or_else(|| Error::Internal("zero crossing not bracketed".into()))?;
            return Ok(Some(r0 + s));
        }
        if outside_margin(un) {
            return Ok(None);
        }
        u = un;
        v = vn;
        r += h;
    }
    Ok(None)
}
