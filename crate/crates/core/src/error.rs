//! Error types shared across the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("eigensolver failed to converge: best residuals {residuals:?} after {iterations} iterations (tol {tol})")]
    NonConvergence {
        residuals: Vec<f64>,
        iterations: usize,
        tol: f64,
    },

    #[error("derivative stencil failed to converge: {0}")]
    DerivativeNonConvergence(String),

    #[error("index out of range: {0}")]
    IndexOutOfRange(String),

    #[error("grid spacing {delta} for {dof} is not commensurate with pi")]
    IncommensurateGrid { dof: String, delta: f64 },

    #[error("missing quasiparticle spectral density model")]
    MissingQpModel,

    #[error("spectrum holds {have} states but {need} are required: {context}")]
    NotEnoughStates {
        have: usize,
        need: usize,
        context: String,
    },

    #[error("step size underflow during propagation at t = {t_ns} ns")]
    StepUnderflow { t_ns: f64 },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
