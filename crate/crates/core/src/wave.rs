//! One-dimensional traveling waves `u(t, x) = U(x - ct)` solving
//! `μU'' + cU' + f(U) = 0` with `U(-∞) = 1`, `U(+∞) = 0`.
//!
//! The speed is found by shooting in the phase plane `(U, V = U')` from the
//! unstable manifold of `(1, 0)`. Steps scale with `√μ`, so the discrete
//! speed obeys `c(μ) = √μ · c(1)` up to rounding.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, bisect};
use crate::reaction::{Nonlinearity, Variant};

/// Departure offset from `(1, 0)` along the unstable eigendirection.
pub const DEPARTURE_OFFSET: f64 = 1e-8;
/// Speed search interval.
pub const SPEED_BRACKET: (f64, f64) = (-5.0, 5.0);
/// Radius of the ball around the origin that counts as a connection.
pub const CONNECTION_RADIUS: f64 = 1e-5;

const SPEED_TOL: f64 = 1e-12;
const STEP: f64 = 1e-3;
const SAMPLE_STRIDE: usize = 2;
const HORIZON: f64 = 1000.0;
const CUT: f64 = 1e-6;
/// A shot with `|V|` and `|f(U)|` below this has come to rest.
const REST_TOL: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveSolution {
    pub speed: f64,
    pub mu: f64,
    /// Uniform, increasing; `U(0) = 1/2` exactly.
    pub xi: Vec<f64>,
    pub u: Vec<f64>,
}

impl WaveSolution {
    /// Sup norm of `μU'' + cU' + f(U)` from centred differences at interior samples.
    pub fn residual(&self, nl: &Nonlinearity) -> f64 {
        let n = self.u.len();
        if n < 3 {
            return 0.0;
        }
        let h = self.xi[1] - self.xi[0];
        (1..n - 1)
            .map(|i| {
                let d2 = (self.u[i + 1] - 2.0 * self.u[i] + self.u[i - 1]) / (h * h);
                let d1 = (self.u[i + 1] - self.u[i - 1]) / (2.0 * h);
                (self.mu * d2 + self.speed * d1 + nl.f_ext(self.u[i])).abs()
            })
            .fold(0.0, f64::max)
    }

    /// Linear interpolation of `U`, constant beyond the sampled range.
    pub fn value_at(&self, xi: f64) -> f64 {
        let n = self.xi.len();
        if xi <= self.xi[0] {
            return self.u[0];
        }
        if xi >= self.xi[n - 1] {
            return self.u[n - 1];
        }
        let h = self.xi[1] - self.xi[0];
        let i = (((xi - self.xi[0]) / h).floor() as usize).min(n - 2);
        let t = (xi - self.xi[i]) / h;
        (1.0 - t) * self.u[i] + t * self.u[i + 1]
    }

    pub fn is_monotone(&self) -> bool {
        self.u.windows(2).all(|w| w[1] <= w[0])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Outcome {
    /// Crossed `U = 0` while still descending: speed too small.
    Overshoot,
    /// `V` returned to zero with `U > 0`: speed too large.
    TurnBack,
    /// Neither before the horizon: settles into a stable rest point.
    Approach,
}

struct PhasePlane<'a> {
    nl: &'a Nonlinearity,
    mu: f64,
    c: f64,
}

impl PhasePlane<'_> {
    fn rhs(&self, u: f64, v: f64) -> (f64, f64) {
        (v, -(self.c * v + self.nl.f_ext(u)) / self.mu)
    }

    fn rk4(&self, u: f64, v: f64, h: f64) -> (f64, f64) {
        let (k1u, k1v) = self.rhs(u, v);
        let (k2u, k2v) = self.rhs(u + 0.5 * h * k1u, v + 0.5 * h * k1v);
        let (k3u, k3v) = self.rhs(u + 0.5 * h * k2u, v + 0.5 * h * k2v);
        let (k4u, k4v) = self.rhs(u + h * k3u, v + h * k3v);
        (
            u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
            v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
        )
    }

    /// Point on the unstable manifold of `(1, 0)` with `U = 1 - offset`.
    fn departure(&self) -> (f64, f64) {
        let b = self.c / self.mu;
        let k = self.nl.df_ext(1.0) / self.mu;
        let lambda = 0.5 * (-b + (b * b - 4.0 * k).sqrt());
        (1.0 - DEPARTURE_OFFSET, -DEPARTURE_OFFSET * lambda)
    }

    fn step(&self) -> f64 {
        STEP * self.mu.sqrt()
    }

    /// Shoots forward until overshoot or turn-back. Also returns the
    /// smallest distance to the origin seen on the way.
    fn shoot(&self) -> (Outcome, f64) {
        let h = self.step();
        let (mut u, mut v) = self.departure();
        let mut closest = f64::INFINITY;
        let steps = (HORIZON / STEP) as usize;
        for _ in 0..steps {
            let (un, vn) = self.rk4(u, v, h);
            closest = closest.min(un * un + vn * vn);
            if un < 0.0 {
                return (Outcome::Overshoot, closest.sqrt());
            }
            if vn >= 0.0 {
                return (Outcome::TurnBack, closest.sqrt());
            }
            if vn.abs() < REST_TOL && self.nl.f_ext(un).abs() < REST_TOL {
                break;
            }
            u = un;
            v = vn;
        }
        (Outcome::Approach, closest.sqrt())
    }
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("diffusivity must be positive, got {mu}")))
    }
}

/// Bracket `[lo, hi]` of the speed: shots at `lo` overshoot, shots at `hi` do not.
fn speed_bracket(nl: &Nonlinearity, mu: f64) -> Result<(f64, f64)> {
    check_mu(mu)?;
    nl.classify()?;
    if nl.df_ext(1.0) >= 0.0 {
        return Err(Error::Precondition("u = 1 must be a stable zero of f".into()));
    }
    let overshoots = |c: f64| PhasePlane { nl, mu, c }.shoot().0 == Outcome::Overshoot;
    let (lo, hi) = SPEED_BRACKET;
    if !overshoots(lo) || overshoots(hi) {
        return Err(Error::Search(format!("no speed bracket in c ∈ [{lo}, {hi}]")));
    }
    let mut lo = lo;
    let mut hi = hi;
    while hi - lo > SPEED_TOL * (1.0 + hi.abs()) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if overshoots(mid) {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo, hi))
}

/// Speed of the front connecting 1 to 0.
///
/// For bistable `f` this is the unique speed; for monostable `f` it is the
/// smallest speed without overshoot, i.e. an estimate of the minimal speed.
pub fn wave_speed(nl: &Nonlinearity, mu: f64) -> Result<f64> {
    let (lo, hi) = speed_bracket(nl, mu)?;
    Ok(0.5 * (lo + hi))
}

/// Speed and front profile, centred so that `U(0) = 1/2`.
pub fn traveling_wave(nl: &Nonlinearity, mu: f64) -> Result<WaveSolution> {
    let (lo, hi) = speed_bracket(nl, mu)?;
    let c = 0.5 * (lo + hi);
    // the non-overshooting side keeps U > 0 all the way
    let plane = PhasePlane { nl, mu, c: hi };
    let (_, closest) = plane.shoot();
    if closest > CONNECTION_RADIUS {
        return Err(Error::Search(format!(
            "front at c = {c} misses the origin by {closest:e}"
        )));
    }
    let (um, vm) = half_crossing(&plane)?;
    let h = plane.step();
    let mut back = trace_branch(&plane, um, vm, -h);
    let ahead = trace_branch(&plane, um, vm, h);
    back.reverse();
    let offset = back.len() - 1;
    let mut u = back;
    u.extend_from_slice(&ahead[1..]);
    let dx = h * SAMPLE_STRIDE as f64;
    let xi = (0..u.len()).map(|i| (i as f64 - offset as f64) * dx).collect();
    Ok(WaveSolution { speed: c, mu, xi, u })
}

/// Phase-plane point where the trajectory crosses `U = 1/2`.
fn half_crossing(plane: &PhasePlane) -> Result<(f64, f64)> {
    let h = plane.step();
    let (mut u, mut v) = plane.departure();
    let steps = (HORIZON / STEP) as usize;
    for _ in 0..steps {
        let (un, vn) = plane.rk4(u, v, h);
        if un <= 0.5 {
            let s = bisect(0.0, h, 1e-15, |s| plane.rk4(u, v, s).0 - 0.5)
                .ok_or_else(|| Error::Internal("half crossing not bracketed".into()))?;
            return Ok((0.5, plane.rk4(u, v, s).1));
        }
        u = un;
        v = vn;
    }
    Err(Error::Search("front never reaches U = 1/2".into()))
}

/// Samples `U` every `SAMPLE_STRIDE` steps of size `h` (negative runs
/// backward) until it leaves `(CUT, 1 - CUT)` or stops descending.
fn trace_branch(plane: &PhasePlane, u0: f64, v0: f64, h: f64) -> Vec<f64> {
    let mut out = vec![u0];
    let (mut u, mut v) = (u0, v0);
    let steps = (HORIZON / STEP) as usize;
    for k in 1..=steps {
        let (un, vn) = plane.rk4(u, v, h);
        if !(CUT..=1.0 - CUT).contains(&un) || vn >= 0.0 {
            break;
        }
        u = un;
        v = vn;
        if k % SAMPLE_STRIDE == 0 {
            out.push(u);
        }
    }
    out
}

/// `-2F(s)` for `F(1) = 0`. Above 1/2 it is evaluated as `2∫ₛ¹ f` to avoid
/// cancellation against `F(1)`.
fn minus_two_big_f(nl: &Nonlinearity, s: f64) -> f64 {
    const NODES: [(f64, f64); 5] = [
        (-0.906_179_845_938_664, 0.236_926_885_056_189),
        (-0.538_469_310_105_683, 0.478_628_670_499_366),
        (0.0, 0.568_888_888_888_889),
        (0.538_469_310_105_683, 0.478_628_670_499_366),
        (0.906_179_845_938_664, 0.236_926_885_056_189),
    ];
    if s <= 0.5 {
        return -2.0 * nl.eval_big_f(s).unwrap_or(0.0);
    }
    let panels = 8;
    let w = (1.0 - s) / panels as f64;
    let tail: f64 = (0..panels)
        .map(|k| {
            let mid = s + (k as f64 + 0.5) * w;
            NODES.iter().map(|(x, g)| g * nl.f_ext(mid + 0.5 * w * x)).sum::<f64>() * 0.5 * w
        })
        .sum();
    2.0 * tail
}

/// Stationary front for `F(1) = 0`, from `U' = -√(-2F(U)/μ)` between
/// `U = 1 - 10⁻⁶` and `U = 10⁻⁶`, on `n` uniform samples with `U(0) = 1/2`.
pub fn stationary_profile(nl: &Nonlinearity, mu: f64, n: usize) -> Result<WaveSolution> {
    check_mu(mu)?;
    if nl.classify()?.variant != Variant::BistableF1Zero {
        return Err(Error::Precondition("stationary fronts need F(1) = 0".into()));
    }
    if n < 3 {
        return Err(Error::InvalidInput(format!("need at least 3 samples, got {n}")));
    }
    let slope = |s: f64| -(minus_two_big_f(nl, s.clamp(0.0, 1.0)) / mu).max(0.0).sqrt();
    let inv = |s: f64| -1.0 / slope(s);
    // ξ(U) = ∫_U^{1/2} ds / |U'(s)|
    let xi_hi = adaptive_simpson(&inv, CUT, 0.5, 1e-12);
    let xi_lo = -adaptive_simpson(&inv, 0.5, 1.0 - CUT, 1e-12);
    let h = (xi_hi - xi_lo) / (n - 1) as f64;
    let zero = ((-xi_lo / h).round() as usize).min(n - 1);
    let xi: Vec<f64> = (0..n).map(|i| (i as f64 - zero as f64) * h).collect();

    let rk4 = |u: f64, h: f64| {
        let k1 = slope(u);
        let k2 = slope(u + 0.5 * h * k1);
        let k3 = slope(u + 0.5 * h * k2);
        let k4 = slope(u + h * k3);
        u + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    };
    let sub = 8;
    let advance = |u: f64, h: f64| (0..sub).fold(u, |u, _| rk4(u, h / sub as f64));
    let mut u = vec![0.5; n];
    for i in zero + 1..n {
        u[i] = advance(u[i - 1], h);
    }
    for i in (0..zero).rev() {
        u[i] = advance(u[i + 1], -h);
    }
    for x in &mut u {
        *x = x.clamp(0.0, 1.0);
    }
    Ok(WaveSolution {
        speed: 0.0,
        mu,
        xi,
        u,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn departure_lies_on_the_unstable_direction() {
        let nl = Nonlinearity::cubic(1.0 / 3.0).unwrap();
        let plane = PhasePlane { nl: &nl, mu: 1.0, c: 0.2 };
        let (u, v) = plane.departure();
        // eigen-relation λ² + cλ + f'(1) = 0 with λ = V / (U - 1)
        let lambda = v / (u - 1.0);
        assert!(lambda > 0.0);
        assert!((lambda * lambda + 0.2 * lambda + nl.df_ext(1.0)).abs() < 1e-7);
    }

    #[test]
    fn shooting_outcomes_bracket_the_speed() {
        let nl = Nonlinearity::cubic(1.0 / 3.0).unwrap();
        let shoot = |c| PhasePlane { nl: &nl, mu: 1.0, c }.shoot().0;
        assert_eq!(shoot(0.0), Outcome::Overshoot);
        assert_eq!(shoot(0.3), Outcome::TurnBack);
        // strong damping settles into the stable node at θ
        assert_eq!(shoot(1.0), Outcome::Approach);
    }

    #[test]
    fn rejects_bad_inputs() {
        let nl = Nonlinearity::cubic(1.0 / 3.0).unwrap();
        assert!(wave_speed(&nl, -1.0).is_err());
        assert!(matches!(
            stationary_profile(&nl, 1.0, 100),
            Err(Error::Precondition(_))
        ));
    }
}
