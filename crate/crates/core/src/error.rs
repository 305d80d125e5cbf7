use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("argument {value} outside the admissible range [{lo}, {hi}]")]
    Range { value: f64, lo: f64, hi: f64 },

    #[error("nonlinearity cannot be classified: {0}")]
    Classification(String),

    #[error("value {0} outside the invariant region domain (F(u) > 0)")]
    Domain(f64),

    #[error("radial integration left the extension margin at r = {radius}")]
    BlowUp { radius: f64 },

    #[error("critical diffusivity undefined: {0}")]
    ThresholdUndefined(String),

    #[error("unsupported dimension N = {0}")]
    UnsupportedDimension(usize),

    #[error("path refinement exceeded {0} profiles")]
    RefinementFailure(usize),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("search failed: {0}")]
    Search(String),

    #[error("implicit step did not converge (residual {residual:e})")]
    Step { residual: f64 },

    #[error("staircase missed the target: terminal distance {distance:e}")]
    Staircase { distance: f64 },

    #[error("penalty continuation gave up after {doublings} doublings (violation {violation:e})")]
    Penalty { doublings: usize, violation: f64 },

    #[error("target not reachable within horizon T = {0}")]
    Horizon(f64),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("internal invariant violated: {0}")]
    Internal(String),
}
