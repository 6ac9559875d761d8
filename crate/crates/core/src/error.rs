use alloc::boxed::Box;
use alloc::string::String;

use crate::integrator::Trajectory;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("point outside the objective's domain")]
    Domain,

    #[error("objective does not provide {0}")]
    Unsupported(&'static str),

    #[error("proximal oracle inconsistency: {0}")]
    OracleInconsistency(String),

    #[error("time {t} outside trajectory span [{lo}, {hi}]")]
    OutOfRange { t: f64, lo: f64, hi: f64 },

    #[error("integration stopped after {steps} steps at t = {}", .partial.end_time())]
    Truncated { steps: usize, partial: Box<Trajectory> },

    #[error("{rejections} consecutive step rejections at t = {t}")]
    StepFailure { t: f64, rejections: usize },

    #[error("insufficient data: {usable} usable points, need {needed}")]
    InsufficientData { usable: usize, needed: usize },

    #[error("invariant violated: {0}")]
    Invariant(String),
}
