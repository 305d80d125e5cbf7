use std::fmt;
use std::path::Path;

use clap::ValueEnum;
use rdc_core::Kind;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Path,
    PathToBarrier,
    Barrier,
    MuStar,
    Simulate,
    Omega,
    Wave,
    Staircase,
    Quasistatic,
    MinTime,
}

impl Experiment {
    pub fn name(self) -> &'static str {
        match self {
            Experiment::Path => "path",
            Experiment::PathToBarrier => "path-to-barrier",
            Experiment::Barrier => "barrier",
            Experiment::MuStar => "mu-star",
            Experiment::Simulate => "simulate",
            Experiment::Omega => "omega",
            Experiment::Wave => "wave",
            Experiment::Staircase => "staircase",
            Experiment::Quasistatic => "quasistatic",
            Experiment::MinTime => "min-time",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Parameters of one run. Every field has a default, and the resolved
/// config (defaults included) is echoed into the run summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub nonlinearity: Kind,
    /// Diffusivity μ.
    pub mu: f64,
    /// Space dimension N of the ball.
    pub dim: usize,
    pub radius: f64,
    /// Lebesgue measure of the ball; overrides `radius` when set.
    pub measure: Option<f64>,
    /// Radial cells of the evolution grid.
    pub nr: usize,
    /// Time step; the stability-based default is used when unset.
    pub dt: Option<f64>,
    /// Sup-norm continuity tolerance between consecutive path profiles.
    pub path_tol: f64,
    /// Constant initial value.
    pub initial: f64,
    /// Constant boundary value for `simulate` and `omega`.
    pub boundary: f64,
    pub horizon: f64,
    /// Time limit of the ω-limit classification.
    pub omega_t_max: f64,
    /// Terminal tolerance of the control problems.
    pub eps: f64,
    /// Constant target value; θ when unset.
    pub target: Option<f64>,
    /// Upper end of the minimal-time bracket.
    pub t_hi: f64,
    /// Initial staircase dwell per waypoint.
    pub dwell: f64,
    pub dwell_doublings: usize,
    pub max_iter: usize,
    pub rate_cap: Option<f64>,
    /// Time-sample stride of the `simulate` field output.
    pub stride: usize,
    /// Samples of a stationary wave profile.
    pub wave_samples: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            nonlinearity: Kind::CubicBistable { theta: 1.0 / 3.0 },
            mu: 1.0,
            dim: 2,
            radius: 10.0,
            measure: None,
            nr: 200,
            dt: None,
            path_tol: 0.02,
            initial: 0.0,
            boundary: 0.0,
            horizon: 100.0,
            omega_t_max: 1000.0,
            eps: 0.01,
            target: None,
            t_hi: 100.0,
            dwell: 8.0,
            dwell_doublings: 3,
            max_iter: 300,
            rate_cap: None,
            stride: 20,
            wave_samples: 2001,
        }
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read { path: String, source: std::io::Error },
    #[error("malformed config: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid config: {0}")]
    Invalid(String),
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self, ConfigError> {
        let config: RunConfig = match path {
            None => RunConfig::default(),
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|source| ConfigError::Read {
                    path: p.display().to_string(),
                    source,
                })?;
                serde_json::from_str(&text)?
            }
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let positive = [
            ("mu", Some(self.mu)),
            ("radius", Some(self.radius)),
            ("measure", self.measure),
            ("dt", self.dt),
            ("path_tol", Some(self.path_tol)),
            ("eps", Some(self.eps)),
            ("t_hi", Some(self.t_hi)),
            ("omega_t_max", Some(self.omega_t_max)),
            ("dwell", Some(self.dwell)),
            ("rate_cap", self.rate_cap),
        ];
        for (name, value) in positive {
            if let Some(v) = value {
                if !(v > 0.0 && v.is_finite()) {
                    return Err(ConfigError::Invalid(format!("{name} must be positive, got {v}")));
                }
            }
        }
        if !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(ConfigError::Invalid(format!("horizon must be non-negative, got {}", self.horizon)));
        }
        let unit = [
            ("initial", Some(self.initial)),
            ("boundary", Some(self.boundary)),
            ("target", self.target),
        ];
        for (name, value) in unit {
            if let Some(v) = value {
                if !(0.0..=1.0).contains(&v) {
                    return Err(ConfigError::Invalid(format!("{name} must lie in [0, 1], got {v}")));
                }
            }
        }
        if !(1..=3).contains(&self.dim) {
            return Err(ConfigError::Invalid(format!("dim must be 1, 2 or 3, got {}", self.dim)));
        }
        for (name, value) in [("max_iter", self.max_iter), ("stride", self.stride), ("nr", self.nr)] {
            if value == 0 {
                return Err(ConfigError::Invalid(format!("{name} must be positive")));
            }
        }
        if self.wave_samples < 3 {
            return Err(ConfigError::Invalid("wave_samples must be at least 3".into()));
        }
        Ok(())
    }
}
