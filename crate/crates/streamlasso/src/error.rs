//! Crate-wide error type.

use std::fmt;

use crate::lasso::LassoFit;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug)]
pub enum Error {
    /// An input contained NaN or infinite values.
    NonFinite(String),
    /// Shapes of related inputs do not agree.
    Dimension(String),
    /// A parameter lies outside its legal range.
    InvalidInput(String),
    /// Coordinate descent exhausted its sweep budget. The best iterate is
    /// carried along so callers can inspect how far the solve got.
    NotConverged {
        fit: Box<LassoFit>,
        kkt: f64,
        sweeps: usize,
    },
    /// Statistics-form coordinate descent exhausted its sweep budget.
    StatsNotConverged {
        coefficients: Vec<f64>,
        kkt: f64,
        sweeps: usize,
    },
    /// A ratio whose denominator is identically zero (e.g. the implied
    /// lambda of an all-zero fit).
    UndefinedRatio(String),
    /// Data that admits no meaningful answer (zero-variance burn-in,
    /// constant trace, ...).
    Degenerate(String),
    /// A streaming run failed at observation `t`.
    Stream { t: usize, source: Box<Error> },
    /// A lambda path failed at one grid value.
    Path { lambda: f64, source: Box<Error> },
    /// A node-wise run failed for one node.
    Node { label: String, source: Box<Error> },
    /// CSV ingestion problem, with row/column diagnostics in the message.
    Csv(String),
    /// I/O failure naming the offending path.
    Io {
        path: String,
        source: std::io::Error,
    },
    /// Malformed configuration file or command-line overrides.
    Config(String),
}

impl Error {
    /// Short machine-readable tag used in the CLI error record.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::NonFinite(_) => "non_finite",
            Error::Dimension(_) => "dimension",
            Error::InvalidInput(_) => "invalid_input",
            Error::NotConverged { .. } => "not_converged",
            Error::StatsNotConverged { .. } => "not_converged",
            Error::UndefinedRatio(_) => "undefined_ratio",
            Error::Degenerate(_) => "degenerate",
            Error::Stream { .. } => "stream",
            Error::Path { .. } => "path",
            Error::Node { .. } => "node",
            Error::Csv(_) => "csv",
            Error::Io { .. } => "io",
            Error::Config(_) => "config",
        }
    }
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::NonFinite(what) => write!(f, "non-finite values in {what}"),
            Error::Dimension(msg) => write!(f, "dimension mismatch: {msg}"),
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NotConverged { kkt, sweeps, .. } => write!(
                f,
                "coordinate descent did not converge after {sweeps} sweeps (KKT residual {kkt:.3e})"
            ),
            Error::StatsNotConverged { kkt, sweeps, .. } => write!(
                f,
                "statistics-form solve did not converge after {sweeps} sweeps (KKT residual {kkt:.3e})"
            ),
            Error::UndefinedRatio(msg) => write!(f, "undefined ratio: {msg}"),
            Error::Degenerate(msg) => write!(f, "degenerate input: {msg}"),
            Error::Stream { t, source } => write!(f, "streaming failed at t = {t}: {source}"),
            Error::Path { lambda, source } => {
                write!(f, "lambda path failed at lambda = {lambda}: {source}")
            }
            Error::Node { label, source } => write!(f, "node '{label}' failed: {source}"),
            Error::Csv(msg) => write!(f, "csv: {msg}"),
            Error::Io { path, source } => write!(f, "io error on '{path}': {source}"),
            Error::Config(msg) => write!(f, "config: {msg}"),
        }
    }
}

impl std::error::Error for Error {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            Error::Stream { source, .. }
            | Error::Path { source, .. }
            | Error::Node { source, .. } => Some(source.as_ref()),
            Error::Io { source, .. } => Some(source),
            _ => None,
        }
    }
}
