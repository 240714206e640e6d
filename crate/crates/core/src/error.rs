use std::io;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid model parameters: {0}")]
    InvalidParams(String),

    #[error("grid mismatch: {left} vs {right}")]
    GridMismatch { left: String, right: String },

    #[error("field is not certified divergence-free (max |k.u(k)| = {max_divergence:e})")]
    NotDivergenceFree { max_divergence: f64 },

    #[error("blow-up guard tripped at t = {t}: |u|_H = {norm:e} exceeds limit {limit:e}")]
    BlowUp { t: f64, norm: f64, limit: f64 },

    #[error("non-finite coefficients at t = {t}")]
    NonFinite { t: f64 },

    #[error(
        "fixed-point iteration did not converge after {iterations} iterations \
         (last increment {last_increment:e}, eps = {epsilon})"
    )]
    NonConvergence {
        iterations: usize,
        last_increment: f64,
        epsilon: f64,
        /// H^{beta/2} norms of the iterates, for diagnosing divergence.
        iterate_norms: Vec<f64>,
        /// (eps, residual) pairs completed before the failure.
        path: Vec<(f64, f64)>,
    },

    #[error("family is rank deficient (normalized Gram determinant {determinant:e})")]
    RankDeficient { determinant: f64 },

    #[error("family is not orthonormal (max Gram deviation {deviation:e})")]
    NotOrthonormal { deviation: f64 },

    #[error("trajectory mismatch: {0}")]
    TrajectoryMismatch(String),

    #[error("window T = {window} longer than record span {span}")]
    WindowTooLong { window: f64, span: f64 },

    #[error("trajectory never entered the absorbing set (min |u|^2 = {min_norm_sq:e}, radius^2 = {radius_sq:e})")]
    NoEntry { min_norm_sq: f64, radius_sq: f64 },

    #[error("missing reference field: {0}")]
    MissingReference(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("checkpoint format error: {0}")]
    Format(String),

    #[error(transparent)]
    Io(#[from] io::Error),
}
