//! Domains, first Dirichlet eigenvalues and closed-form bounds on the
//! critical diffusivity μ*.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{golden_max, golden_min};
use crate::reaction::{Nonlinearity, Variant};

/// First positive zero of the Bessel function J₀.
pub const BESSEL_J0_FIRST_ZERO: f64 = 2.404_825_557_695_773;

/// Radially symmetric domains supported by the toolkit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case")]
pub enum Domain {
    /// Interval of the given length (the 1-D ball of radius `length / 2`).
    Interval { length: f64 },
    Ball { dim: usize, radius: f64 },
}

impl Domain {
    /// Ball in dimension `dim` with the given Lebesgue measure.
    pub fn ball_of_measure(dim: usize, measure: f64) -> Result<Self> {
        check_dim(dim)?;
        let radius = (measure * gamma_half_plus_one(dim) / PI.powf(dim as f64 / 2.0))
            .powf(1.0 / dim as f64);
        Ok(Domain::Ball { dim, radius })
    }

    /// `(N, R)` of the equivalent ball.
    pub fn radial(&self) -> (usize, f64) {
        match *self {
            Domain::Interval { length } => (1, 0.5 * length),
            Domain::Ball { dim, radius } => (dim, radius),
        }
    }

    pub fn measure(&self) -> f64 {
        let (n, r) = self.radial();
        PI.powf(n as f64 / 2.0) / gamma_half_plus_one(n) * r.powi(n as i32)
    }

    fn validate(&self) -> Result<()> {
        let (n, r) = self.radial();
        check_dim(n)?;
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::InvalidInput(format!("domain size must be positive, got {r}")));
        }
        Ok(())
    }
}

fn check_dim(n: usize) -> Result<()> {
    if (1..=3).contains(&n) {
        Ok(())
    } else {
        Err(Error::UnsupportedDimension(n))
    }
}

/// `Γ(N/2 + 1)` for integer `N ≥ 1`.
pub fn gamma_half_plus_one(n: usize) -> f64 {
    if n.is_multiple_of(2) {
        (1..=n / 2).map(|k| k as f64).product()
    } else {
        // Γ(k + 1/2) = √π · ∏_{j<k} (j + 1/2)
        let k = n.div_ceil(2);
        PI.sqrt() * (0..k).map(|j| j as f64 + 0.5).product::<f64>()
    }
}

/// First eigenvalue of the Dirichlet Laplacian.
pub fn lambda1(domain: Domain) -> Result<f64> {
    domain.validate()?;
    Ok(match domain {
        Domain::Interval { length } => (PI / length).powi(2),
        Domain::Ball { dim: 1, radius } => (PI / (2.0 * radius)).powi(2),
        Domain::Ball { dim: 2, radius } => (BESSEL_J0_FIRST_ZERO / radius).powi(2),
        Domain::Ball { dim: 3, radius } => (PI / radius).powi(2),
        Domain::Ball { dim, .. } => return Err(Error::UnsupportedDimension(dim)),
    })
}

/// Upper bound `max_{s∈(0,1]} f(s)/s / λ₁`.
pub fn mu_star_upper_bound(nl: &Nonlinearity, lambda1: f64) -> Result<f64> {
    if !(lambda1 > 0.0) {
        return Err(Error::InvalidInput(format!("λ₁ must be positive, got {lambda1}")));
    }
    let ratio = |s: f64| nl.eval_f(s).map(|f| f / s).unwrap_or(f64::NEG_INFINITY);
    let n = 1000;
    let (mut best_s, mut best) = (1.0, ratio(1.0));
    // s → 0⁺ endpoint carries f'(0)
    let near_zero = ratio(1e-9);
    for i in 1..=n {
        let s = i as f64 / n as f64;
        let val = ratio(s);
        if val > best {
            best = val;
            best_s = s;
        }
    }
    let lo = (best_s - 1.0 / n as f64).max(1e-9);
    let hi = (best_s + 1.0 / n as f64).min(1.0);
    let (_, refined) = golden_max(lo, hi, 1e-12, ratio);
    Ok(best.max(refined).max(near_zero) / lambda1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LowerBound {
    pub value: f64,
    /// Maximising width of the linear ramp in the test function.
    pub delta: f64,
    /// False when `F(1) <= 0` and the estimate does not apply.
    pub applicable: bool,
}

/// Variational lower bound on μ* from the ramp test function `v_δ` on a
/// ball of measure `measure`, maximised over the admissible ramp width δ.
///
/// For monostable `f` the primitive is monotone and `F(θ)` is replaced by 0.
pub fn mu_star_lower_bound(nl: &Nonlinearity, dim: usize, measure: f64) -> Result<LowerBound> {
    check_dim(dim)?;
    if !(measure > 0.0) {
        return Err(Error::InvalidInput(format!("measure must be positive, got {measure}")));
    }
    let class = nl.classify()?;
    let inapplicable = LowerBound {
        value: 0.0,
        delta: 0.0,
        applicable: false,
    };
    if class.variant == Variant::BistableF1Zero || class.f1 <= 0.0 {
        return Ok(inapplicable);
    }
    let f1 = class.f1;
    let f_theta = class.f_theta.unwrap_or(0.0);
    let n = dim as f64;
    let jump = f1 - f_theta;
    let delta_max = 1.0 - (-f_theta / jump).powf(1.0 / n);
    if !(delta_max > 0.0) {
        return Ok(inapplicable);
    }
    let scale = 2.0 * gamma_half_plus_one(dim).powf(2.0 / n) * measure.powf(2.0 / n) / PI;
    let objective = |delta: f64| lower_bound_objective(delta, n, f_theta, jump, scale);
    let (delta, _) = golden_min(0.0, delta_max, 1e-10, |d| -objective(d));
    Ok(LowerBound {
        value: objective(delta).max(0.0),
        delta,
        applicable: true,
    })
}

fn lower_bound_objective(delta: f64, n: f64, f_theta: f64, jump: f64, scale: f64) -> f64 {
    if delta <= 0.0 {
        return 0.0;
    }
    let inner = (1.0 - delta).powf(n);
    scale * delta * delta * (f_theta + inner * jump) / (1.0 - inner)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn third() -> Nonlinearity {
        Nonlinearity::cubic(1.0 / 3.0).unwrap()
    }

    #[test]
    fn eigenvalues() {
        assert!((lambda1(Domain::Interval { length: 1.0 }).unwrap() - 9.869_604_4).abs() < 1e-7);
        assert!((lambda1(Domain::Ball { dim: 2, radius: 1.0 }).unwrap() - 5.783_186_0).abs() < 1e-7);
        assert!((lambda1(Domain::Ball { dim: 3, radius: 1.0 }).unwrap() - PI * PI).abs() < 1e-12);
        assert_eq!(
            lambda1(Domain::Ball { dim: 1, radius: 0.5 }).unwrap(),
            lambda1(Domain::Interval { length: 1.0 }).unwrap()
        );
        assert!(matches!(
            lambda1(Domain::Ball { dim: 4, radius: 1.0 }),
            Err(Error::UnsupportedDimension(4))
        ));
    }

    #[test]
    fn gamma_values() {
        assert!((gamma_half_plus_one(1) - PI.sqrt() / 2.0).abs() < 1e-15);
        assert_eq!(gamma_half_plus_one(2), 1.0);
        assert!((gamma_half_plus_one(3) - 0.75 * PI.sqrt()).abs() < 1e-15);
        let disk = Domain::ball_of_measure(2, 1.0).unwrap();
        assert!((disk.radial().1 - 1.0 / PI.sqrt()).abs() < 1e-15);
        assert!((disk.measure() - 1.0).abs() < 1e-14);
        let b3 = Domain::ball_of_measure(3, 2.5).unwrap();
        assert!((b3.measure() - 2.5).abs() < 1e-13);
    }

    #[test]
    fn upper_bound_examples() {
        let nl = third();
        let ub = mu_star_upper_bound(&nl, PI * PI).unwrap();
        assert!((ub - 1.0 / 9.0 / (PI * PI)).abs() < 1e-12);
        assert!((ub - 0.011_257_9).abs() < 1e-7);
        let lg = mu_star_upper_bound(&Nonlinearity::logistic(), 3.0).unwrap();
        assert!((lg - 1.0 / 3.0).abs() < 1e-8);
        // (1/9)/5.78319 = 0.0192128 (j₀,₁² for the unit disk)
        let disk = mu_star_upper_bound(&nl, 5.78319).unwrap();
        assert!((disk - 0.019_212_8).abs() < 1e-7);
    }

    #[test]
    fn lower_bound_one_dimensional_closed_form() {
        let nl = third();
        let lb = mu_star_lower_bound(&nl, 1, 1.0).unwrap();
        let (f1, ft): (f64, f64) = (1.0 / 36.0, -5.0 / 972.0);
        let closed = f1 * f1 / (8.0 * (f1 - ft));
        assert!(lb.applicable);
        assert!((lb.value - closed).abs() < 1e-10);
        assert!((lb.value - 0.002_929_7).abs() < 1e-7);
        assert!((lb.delta - f1 / (2.0 * (f1 - ft))).abs() < 1e-6);
    }

    #[test]
    fn lower_bound_inapplicable_when_f1_vanishes() {
        let nl = Nonlinearity::cubic(0.5).unwrap();
        for n in 1..=3 {
            let lb = mu_star_lower_bound(&nl, n, 0.7).unwrap();
            assert_eq!(lb.value, 0.0);
            assert!(!lb.applicable);
        }
    }

    #[test]
    fn lower_bound_matches_dense_delta_scan_in_2d() {
        // oracle: brute-force scan of the same right-hand side at 1e-6 spacing
        let nl = third();
        let (f1, ft): (f64, f64) = (1.0 / 36.0, -5.0 / 972.0);
        let dmax: f64 = 1.0 - (-ft / (f1 - ft)).sqrt();
        let mut best: f64 = 0.0;
        let mut d = 1e-6;
        while d < dmax {
            let inner = (1.0 - d) * (1.0 - d);
            let v = 2.0 * d * d * (ft + inner * (f1 - ft)) / (PI * (1.0 - inner));
            best = best.max(v);
            d += 1e-6;
        }
        let lb = mu_star_lower_bound(&nl, 2, 1.0).unwrap();
        assert!((lb.value - best).abs() < 1e-12, "{} vs {}", lb.value, best);
    }
}
