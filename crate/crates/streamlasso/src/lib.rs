//! Streaming ℓ1-penalized linear regression with online tuning of the
//! regularization parameter.
//!
//! The regularization parameter λ of a Lasso model is often read as a
//! proxy for the sparsity of the underlying model, but several unrelated
//! statistical properties of the data stream move it as well: the residual
//! variance, the ℓ1/ℓ0 norm of the true coefficients, and the correlation
//! structure of the predictors. This crate provides the pieces needed to
//! estimate and study λ over (possibly non-stationary) streams:
//!
//! - [`lasso`] — weighted coordinate-descent Lasso solver with a KKT
//!   convergence certificate, `lambda_max`, and the dual-formula implied λ;
//! - [`selector`] — sliding-window λ selection by BIC or GCV over a
//!   warm-started λ path;
//! - [`rap`] — recursive tracking of λ by projected stochastic gradient on
//!   the one-step-ahead prediction error, with forgetting-factor
//!   statistics;
//! - [`scenario`] — piecewise-stationary synthetic stream generators with
//!   AR(1)-structured Toeplitz predictor covariance;
//! - [`stream`] — the experiment harness: λ traces, replicate averaging,
//!   unit-interval normalization, relative-change ratios and parameter
//!   sweeps;
//! - [`panel`] — CSV ingestion and the node-wise pipeline that regresses
//!   each component of a multivariate series on the rest;
//! - [`runner`] — config-driven, reproducible runs behind the
//!   `streamlasso` binary (`simulate`, `sweep`, `stream`).
//!
//! Every run is a pure function of its configuration and one base seed;
//! replicate `k` always draws from `base_seed + k`.

pub mod error;
pub mod lasso;
mod linalg;
pub mod rap;
pub mod scenario;
pub mod selector;
pub mod stream;

pub use error::{Error, Result};
pub use lasso::{
    degrees_of_freedom, implied_lambda, kkt_residual, lambda_max, solve_lasso_from_stats,
    solve_weighted_lasso, LassoFit, ObservationWindow, DEFAULT_MAX_ITER, DEFAULT_TOL,
};
pub use selector::{
    bic_score, gcv_score, lasso_path, select_lambda, GridAnchor, LambdaGrid, SelectionCriterion,
};
