//! Reaction nonlinearities `f`, their primitives `F(s) = ∫₀ˢ f`, and the
//! phase-plane energy `E(u, v) = v²/2 + F(u)` of the steady-state ODE.
//!
//! Three kinds are supported: the cubic bistable `s(1-s)(s-θ)`, the logistic
//! `s(1-s)` and a user-sampled `Custom` reaction interpolated by a monotone
//! (Fritsch–Carlson) cubic. Evaluation is checked on the working range
//! `[-0.1, 1.1]`; the solvers use [`Nonlinearity::f_ext`], which continues
//! `f` linearly (C¹) beyond that range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numerics::{adaptive_simpson, bisect};

/// Lower end of the evaluation margin around `[0, 1]`.
pub const MARGIN_LO: f64 = -0.1;
/// Upper end of the evaluation margin around `[0, 1]`.
pub const MARGIN_HI: f64 = 1.1;

/// Sign tolerance separating `F(1) = 0` from `F(1) > 0`.
pub const F1_ZERO_TOL: f64 = 1e-12;

const SCAN_STEP: f64 = 1e-3;

/// Serializable description of a reaction term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Kind {
    CubicBistable { theta: f64 },
    Logistic,
    /// Values of `f` on a uniform grid over `[0, 1]` (first sample at 0,
    /// last at 1) together with a Lipschitz bound for `f` on the margin.
    Custom { samples: Vec<f64>, lipschitz: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Monostable,
    BistableF1Positive,
    BistableF1Zero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub variant: Variant,
    /// `F(1)`.
    pub f1: f64,
    /// `F(θ)`, bistable only.
    pub f_theta: Option<f64>,
    /// Smallest positive zero of `F`, bistable only.
    pub theta1: Option<f64>,
}

impl Classification {
    pub fn is_bistable(&self) -> bool {
        !matches!(self.variant, Variant::Monostable)
    }
}

/// A validated reaction term with cached interior zero and classification.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "Kind", into = "Kind")]
pub struct Nonlinearity {
    kind: Kind,
    theta: Option<f64>,
    lipschitz: f64,
    /// Hermite slopes of the custom interpolant.
    slopes: Vec<f64>,
    /// Cumulative primitive at the custom sample nodes.
    primitive_nodes: Vec<f64>,
    classification: std::result::Result<Classification, Error>,
}

impl PartialEq for Nonlinearity {
    fn eq(&self, other: &Self) -> bool {
        self.kind == other.kind
    }
}

impl TryFrom<Kind> for Nonlinearity {
    type Error = Error;

    fn try_from(kind: Kind) -> Result<Self> {
        Nonlinearity::new(kind)
    }
}

impl From<Nonlinearity> for Kind {
    fn from(nl: Nonlinearity) -> Kind {
        nl.kind
    }
}

impl Nonlinearity {
    pub fn cubic(theta: f64) -> Result<Self> {
        Self::new(Kind::CubicBistable { theta })
    }

    pub fn logistic() -> Self {
        Self::new(Kind::Logistic).expect("logistic is always valid")
    }

    pub fn custom(samples: Vec<f64>, lipschitz: f64) -> Result<Self> {
        Self::new(Kind::Custom { samples, lipschitz })
    }

    pub fn new(kind: Kind) -> Result<Self> {
        let mut nl = Nonlinearity {
            kind,
            theta: None,
            lipschitz: 0.0,
            slopes: Vec::new(),
            primitive_nodes: Vec::new(),
            classification: Err(Error::Classification("not yet classified".into())),
        };
        match &nl.kind {
            Kind::CubicBistable { theta } => {
                if !(*theta > 0.0 && *theta < 1.0) {
                    return Err(Error::InvalidInput(format!(
                        "cubic threshold must lie in (0, 1), got {theta}"
                    )));
                }
                nl.theta = Some(*theta);
            }
            Kind::Logistic => {}
            Kind::Custom { samples, lipschitz } => {
                if samples.len() < 3 {
                    return Err(Error::InvalidInput(
                        "custom nonlinearity needs at least 3 samples".into(),
                    ));
                }
                if samples.iter().any(|s| !s.is_finite()) || !lipschitz.is_finite() {
                    return Err(Error::InvalidInput("non-finite custom data".into()));
                }
                let first = samples[0];
                let last = *samples.last().unwrap();
                if first.abs() > 1e-12 || last.abs() > 1e-12 {
                    return Err(Error::InvalidInput(
                        "custom nonlinearity must vanish at 0 and 1".into(),
                    ));
                }
                let h = 1.0 / (samples.len() - 1) as f64;
                nl.slopes = monotone_slopes(samples, h);
                nl.primitive_nodes = hermite_primitive_nodes(samples, &nl.slopes, h);
            }
        }
        let measured = nl.measure_lipschitz();
        nl.lipschitz = match &nl.kind {
            Kind::Custom { lipschitz, .. } => {
                if *lipschitz < measured {
                    return Err(Error::InvalidInput(format!(
                        "declared Lipschitz constant {lipschitz} below measured slope {measured}"
                    )));
                }
                *lipschitz
            }
            _ => measured,
        };
        nl.classification = match nl.kind {
            Kind::Custom { .. } => nl.custom_interior_zero().and_then(|theta| {
                nl.theta = theta;
                nl.compute_classification()
            }),
            _ => nl.compute_classification(),
        };
        Ok(nl)
    }

    pub fn kind(&self) -> &Kind {
        &self.kind
    }

    /// Interior zero θ (bistable only).
    pub fn theta(&self) -> Option<f64> {
        self.theta
    }

    /// Lipschitz bound of `f` on the working margin.
    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    /// Checked evaluation of `f` on `[-0.1, 1.1]`.
    pub fn eval_f(&self, s: f64) -> Result<f64> {
        check_margin(s)?;
        Ok(self.f_raw(s))
    }

    /// Checked evaluation of the primitive `F(s) = ∫₀ˢ f`.
    pub fn eval_big_f(&self, s: f64) -> Result<f64> {
        check_margin(s)?;
        Ok(self.big_f_raw(s))
    }

    /// `f` continued linearly (C¹) outside the margin. Total function used by
    /// time steppers that may overshoot transiently.
    pub fn f_ext(&self, s: f64) -> f64 {
        if s < MARGIN_LO {
            self.f_raw(MARGIN_LO) + self.df_raw(MARGIN_LO) * (s - MARGIN_LO)
        } else if s > MARGIN_HI {
            self.f_raw(MARGIN_HI) + self.df_raw(MARGIN_HI) * (s - MARGIN_HI)
        } else {
            self.f_raw(s)
        }
    }

    /// Derivative of [`Nonlinearity::f_ext`].
    pub fn df_ext(&self, s: f64) -> f64 {
        self.df_raw(s.clamp(MARGIN_LO, MARGIN_HI))
    }

    pub fn classify(&self) -> Result<Classification> {
        self.classification.clone()
    }

    /// Phase-plane energy `v²/2 + F(u)`.
    pub fn energy(&self, u: f64, v: f64) -> Result<f64> {
        Ok(0.5 * v * v + self.eval_big_f(u)?)
    }

    /// Half-width `√(-2F(u))` of the invariant region at height `u`.
    pub fn region_halfwidth(&self, u: f64) -> Result<f64> {
        let c = self.classify()?;
        let theta1 = match (c.variant, c.theta1) {
            (Variant::Monostable, _) | (_, None) => {
                return Err(Error::Precondition(
                    "invariant region requires a bistable f with F(1) >= 0".into(),
                ))
            }
            (_, Some(t1)) => t1,
        };
        if u > theta1 + 1e-10 {
            return Err(Error::Domain(u));
        }
        let w = -2.0 * self.eval_big_f(u)?;
        if w < -1e-14 {
            return Err(Error::Domain(u));
        }
        Ok(w.max(0.0).sqrt())
    }

    fn f_raw(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::CubicBistable { theta } => s * (1.0 - s) * (s - theta),
            Kind::Logistic => s * (1.0 - s),
            Kind::Custom { samples, .. } => self.hermite_eval(samples, s),
        }
    }

    fn df_raw(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::CubicBistable { theta } => -3.0 * s * s + 2.0 * (1.0 + theta) * s - theta,
            Kind::Logistic => 1.0 - 2.0 * s,
            Kind::Custom { samples, .. } => self.hermite_derivative(samples, s),
        }
    }

    fn big_f_raw(&self, s: f64) -> f64 {
        match &self.kind {
            Kind::CubicBistable { theta } => {
                let s2 = s * s;
                -theta * s2 / 2.0 + (1.0 + theta) * s2 * s / 3.0 - s2 * s2 / 4.0
            }
            Kind::Logistic => s * s / 2.0 - s * s * s / 3.0,
            Kind::Custom { samples, .. } => self.custom_primitive(samples, s),
        }
    }

    fn measure_lipschitz(&self) -> f64 {
        let n = ((MARGIN_HI - MARGIN_LO) / SCAN_STEP).round() as usize;
        let mut prev = self.f_raw(MARGIN_LO);
        let mut best: f64 = 0.0;
        for i in 1..=n {
            let s = MARGIN_LO + i as f64 * SCAN_STEP;
            let cur = self.f_raw(s);
            best = best.max(((cur - prev) / SCAN_STEP).abs());
            prev = cur;
        }
        best
    }

    // Custom interpolant: piecewise cubic Hermite on [0, 1], linear outside.

    fn locate(&self, samples: &[f64], s: f64) -> (usize, f64, f64) {
        let n = samples.len() - 1;
        let h = 1.0 / n as f64;
        let i = ((s / h).floor() as usize).min(n - 1);
        let t = (s - i as f64 * h) / h;
        (i, t, h)
    }

    fn hermite_eval(&self, samples: &[f64], s: f64) -> f64 {
        let n = samples.len() - 1;
        if s < 0.0 {
            return samples[0] + self.slopes[0] * s;
        }
        if s > 1.0 {
            return samples[n] + self.slopes[n] * (s - 1.0);
        }
        let (i, t, h) = self.locate(samples, s);
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * samples[i] + h10 * h * self.slopes[i] + h01 * samples[i + 1] + h11 * h * self.slopes[i + 1]
    }

    fn hermite_derivative(&self, samples: &[f64], s: f64) -> f64 {
        let n = samples.len() - 1;
        if s < 0.0 {
            return self.slopes[0];
        }
        if s > 1.0 {
            return self.slopes[n];
        }
        let (i, t, h) = self.locate(samples, s);
        let t2 = t * t;
        let d00 = (6.0 * t2 - 6.0 * t) / h;
        let d10 = 3.0 * t2 - 4.0 * t + 1.0;
        let d01 = (-6.0 * t2 + 6.0 * t) / h;
        let d11 = 3.0 * t2 - 2.0 * t;
        d00 * samples[i] + d10 * self.slopes[i] + d01 * samples[i + 1] + d11 * self.slopes[i + 1]
    }

    fn custom_primitive(&self, samples: &[f64], s: f64) -> f64 {
        let n = samples.len() - 1;
        if s <= 0.0 {
            return samples[0] * s + 0.5 * self.slopes[0] * s * s;
        }
        if s >= 1.0 {
            let d = s - 1.0;
            return self.primitive_nodes[n] + samples[n] * d + 0.5 * self.slopes[n] * d * d;
        }
        let (i, _, h) = self.locate(samples, s);
        let x0 = i as f64 * h;
        let f = |x: f64| self.hermite_eval(samples, x);
        self.primitive_nodes[i] + adaptive_simpson(&f, x0, s, 1e-13)
    }

    fn custom_interior_zero(&self) -> Result<Option<f64>> {
        let signs = self.sign_pattern();
        match signs.as_slice() {
            [1] => Ok(None),
            [-1, 1] => {
                let n = (1.0 / SCAN_STEP).round() as usize;
                let mut prev = SCAN_STEP;
                for i in 2..n {
                    let s = i as f64 * SCAN_STEP;
                    if self.f_raw(prev) < 0.0 && self.f_raw(s) >= 0.0 {
                        return Ok(bisect(prev, s, 1e-14, |x| self.f_raw(x)));
                    }
                    prev = s;
                }
                Err(Error::Classification("sign change of f not bracketed".into()))
            }
            other => Err(Error::Classification(format!(
                "sign pattern {other:?} of f on (0, 1) is neither monostable nor bistable"
            ))),
        }
    }

    /// Run-length compressed signs of `f` on the interior scan grid.
    fn sign_pattern(&self) -> Vec<i8> {
        let n = (1.0 / SCAN_STEP).round() as usize;
        let mut out: Vec<i8> = Vec::new();
        for i in 1..n {
            let v = self.f_raw(i as f64 * SCAN_STEP);
            let sgn = if v > 0.0 {
                1
            } else if v < 0.0 {
                -1
            } else {
                continue;
            };
            if out.last() != Some(&sgn) {
                out.push(sgn);
            }
        }
        out
    }

    fn compute_classification(&self) -> std::result::Result<Classification, Error> {
        let f1 = self.big_f_raw(1.0);
        let Some(theta) = self.theta else {
            if let Kind::CubicBistable { .. } = self.kind {
                unreachable!("cubic always carries theta");
            }
            // Monostable requires f > 0 on (0, 1).
            if self.sign_pattern() != [1] {
                return Err(Error::Classification("f is not positive on (0, 1)".into()));
            }
            return Ok(Classification {
                variant: Variant::Monostable,
                f1,
                f_theta: None,
                theta1: None,
            });
        };
        let f_theta = self.big_f_raw(theta);
        if f1.abs() <= F1_ZERO_TOL {
            return Ok(Classification {
                variant: Variant::BistableF1Zero,
                f1,
                f_theta: Some(f_theta),
                theta1: Some(1.0),
            });
        }
        if f1 < 0.0 {
            return Err(Error::Classification(format!(
                "bistable with F(1) = {f1:e} < 0 is not supported; mirror with u -> 1 - u"
            )));
        }
        // F decreases on (0, θ) and increases on (θ, 1): bracket its first
        // positive zero on a fine grid, then bisect.
        let mut lo = theta;
        let mut s = theta;
        let theta1 = loop {
            s = (s + SCAN_STEP).min(1.0);
            if self.big_f_raw(s) >= 0.0 {
                break bisect(lo, s, 1e-12, |x| self.big_f_raw(x))
                    .ok_or_else(|| Error::Classification("F zero not bracketed".into()))?;
            }
            if s >= 1.0 {
                return Err(Error::Classification("F has no zero on (θ, 1]".into()));
            }
            lo = s;
        };
        Ok(Classification {
            variant: Variant::BistableF1Positive,
            f1,
            f_theta: Some(f_theta),
            theta1: Some(theta1),
        })
    }
}

fn check_margin(s: f64) -> Result<()> {
    if (MARGIN_LO..=MARGIN_HI).contains(&s) {
        Ok(())
    } else {
        Err(Error::Range {
            value: s,
            lo: MARGIN_LO,
            hi: MARGIN_HI,
        })
    }
}

/// Fritsch–Carlson slopes for a shape-preserving cubic Hermite interpolant.
fn monotone_slopes(y: &[f64], h: f64) -> Vec<f64> {
    let n = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut m = vec![0.0; n];
    m[0] = delta[0];
    m[n - 1] = delta[n - 2];
    for i in 1..n - 1 {
        if delta[i - 1] * delta[i] <= 0.0 {
            m[i] = 0.0;
        } else {
            m[i] = 0.5 * (delta[i - 1] + delta[i]);
        }
    }
    for i in 0..n - 1 {
        if delta[i] == 0.0 {
            m[i] = 0.0;
            m[i + 1] = 0.0;
            continue;
        }
        let a = m[i] / delta[i];
        let b = m[i + 1] / delta[i];
        let r = a * a + b * b;
        if r > 9.0 {
            let t = 3.0 / r.sqrt();
            m[i] = t * a * delta[i];
            m[i + 1] = t * b * delta[i];
        }
    }
    m
}

/// Exact primitive of a cubic Hermite interpolant at its nodes.
fn hermite_primitive_nodes(y: &[f64], m: &[f64], h: f64) -> Vec<f64> {
    let mut acc = vec![0.0; y.len()];
    for i in 0..y.len() - 1 {
        acc[i + 1] = acc[i] + h * (y[i] + y[i + 1]) / 2.0 + h * h * (m[i] - m[i + 1]) / 12.0;
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn third() -> Nonlinearity {
        Nonlinearity::cubic(1.0 / 3.0).unwrap()
    }

    #[test]
    fn eval_f_examples() {
        let nl = third();
        assert_eq!(nl.eval_f(1.0 / 3.0).unwrap(), 0.0);
        assert!((nl.eval_f(0.5).unwrap() - 1.0 / 24.0).abs() < 1e-15);
        assert_eq!(Nonlinearity::logistic().eval_f(1.0).unwrap(), 0.0);
        assert!(matches!(nl.eval_f(1.2), Err(Error::Range { .. })));
        assert!(nl.eval_f(-0.1).is_ok());
    }

    #[test]
    fn primitive_examples() {
        let nl = third();
        assert_eq!(nl.eval_big_f(0.0).unwrap(), 0.0);
        assert!((nl.eval_big_f(1.0).unwrap() - 1.0 / 36.0).abs() < 1e-15);
        assert!((nl.eval_big_f(1.0 / 3.0).unwrap() + 5.0 / 972.0).abs() < 1e-15);
        assert!(nl.eval_big_f(-0.5).is_err());
    }

    #[test]
    fn classify_examples() {
        let c = third().classify().unwrap();
        assert_eq!(c.variant, Variant::BistableF1Positive);
        let root = (16.0 - 40f64.sqrt()) / 18.0;
        assert!((c.theta1.unwrap() - root).abs() < 1e-10);
        assert!((c.theta1.unwrap() - 0.537524).abs() < 1e-6);

        let half = Nonlinearity::cubic(0.5).unwrap().classify().unwrap();
        assert_eq!(half.variant, Variant::BistableF1Zero);
        assert_eq!(half.theta1, Some(1.0));

        let mono = Nonlinearity::logistic().classify().unwrap();
        assert_eq!(mono.variant, Variant::Monostable);

        assert!(matches!(
            Nonlinearity::cubic(0.7).unwrap().classify(),
            Err(Error::Classification(_))
        ));
    }

    #[test]
    fn energy_examples() {
        let nl = third();
        assert_eq!(nl.energy(0.0, 0.0).unwrap(), 0.0);
        assert!((nl.energy(1.0 / 3.0, 0.0).unwrap() + 5.0 / 972.0).abs() < 1e-15);
        // F(0.2) = -0.0035111 by the closed form
        let f02: f64 = -(1.0 / 3.0) * 0.04 / 2.0 + (4.0 / 3.0) * 0.008 / 3.0 - 0.0016 / 4.0;
        assert!((f02 + 0.0035111).abs() < 1e-7);
        assert!((nl.energy(0.2, 0.1).unwrap() - 0.0014889).abs() < 1e-7);
    }

    #[test]
    fn region_halfwidth_examples() {
        let nl = third();
        let t1 = nl.classify().unwrap().theta1.unwrap();
        assert_eq!(nl.region_halfwidth(0.0).unwrap(), 0.0);
        assert!(nl.region_halfwidth(t1).unwrap() < 1e-6);
        assert!((nl.region_halfwidth(1.0 / 3.0).unwrap() - (10.0f64 / 972.0).sqrt()).abs() < 1e-12);
        assert!((nl.region_halfwidth(1.0 / 3.0).unwrap() - 0.101431).abs() < 1e-6);
        assert!(matches!(nl.region_halfwidth(0.8), Err(Error::Domain(_))));
        assert!(Nonlinearity::logistic().region_halfwidth(0.1).is_err());
    }

    #[test]
    fn lipschitz_bounds_grid_slopes() {
        let nl = third();
        // |f'| on [-0.1, 1.1] peaks at s = 1.1: |-3.63 + 2.9333 - 0.3333| = 1.03
        assert!((nl.lipschitz() - 1.03).abs() < 5e-3);
        assert!(Nonlinearity::custom(vec![0.0, 0.1, 0.0], 0.01).is_err());
    }

    #[test]
    fn linear_extension_is_c1() {
        let nl = third();
        let e = 1e-7;
        for s in [MARGIN_LO, MARGIN_HI] {
            assert!((nl.f_ext(s + e) - nl.f_ext(s - e)).abs() < 1e-6);
            let slope_in = (nl.f_ext(s + e) - nl.f_ext(s)) / e;
            let slope_out = (nl.f_ext(s) - nl.f_ext(s - e)) / e;
            assert!((slope_in - slope_out).abs() < 1e-5);
        }
        assert!(nl.f_ext(3.0).is_finite());
    }

    #[test]
    fn custom_from_cubic_samples_classifies_like_cubic() {
        let n = 401;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                s * (1.0 - s) * (s - 0.3)
            })
            .collect();
        let nl = Nonlinearity::custom(samples, 1.2).unwrap();
        assert!((nl.theta().unwrap() - 0.3).abs() < 1e-6);
        let c = nl.classify().unwrap();
        assert_eq!(c.variant, Variant::BistableF1Positive);
        let exact = Nonlinearity::cubic(0.3).unwrap();
        assert!((c.f1 - exact.eval_big_f(1.0).unwrap()).abs() < 1e-6);
        assert!((nl.eval_f(0.55).unwrap() - exact.eval_f(0.55).unwrap()).abs() < 1e-6);
    }

    #[test]
    fn custom_with_three_sign_changes_is_unclassified() {
        let n = 101;
        let samples: Vec<f64> = (0..n)
            .map(|i| {
                let s = i as f64 / (n - 1) as f64;
                s * (1.0 - s) * (s - 0.2) * (s - 0.5) * (s - 0.8)
            })
            .collect();
        // constructible as a raw reaction term, but not classifiable
        let nl = Nonlinearity::custom(samples, 2.0).unwrap();
        assert!(matches!(nl.classify(), Err(Error::Classification(_))));
    }

    #[test]
    fn json_schema() {
        let nl: Nonlinearity =
            serde_json::from_str(r#"{"kind":"cubic_bistable","theta":0.3333333333}"#).unwrap();
        assert!((nl.theta().unwrap() - 0.3333333333).abs() < 1e-15);
        let back = serde_json::to_string(&nl).unwrap();
        assert_eq!(back, r#"{"kind":"cubic_bistable","theta":0.3333333333}"#);
        let lg: Nonlinearity = serde_json::from_str(r#"{"kind":"logistic"}"#).unwrap();
        assert_eq!(lg, Nonlinearity::logistic());
        assert!(serde_json::from_str::<Nonlinearity>(r#"{"kind":"cubic_bistable","theta":1.5}"#).is_err());
    }
}
