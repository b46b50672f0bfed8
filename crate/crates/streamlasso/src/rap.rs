//! Recursive tracking of the regularization parameter by projected
//! stochastic gradient descent on the one-step-ahead prediction error.
//!
//! The state keeps forgetting-weighted sufficient statistics
//!
//! ```text
//! stat_xx_t = Σ_k r^{t−k} x_k x_kᵀ,    stat_xy_t = Σ_k r^{t−k} x_k y_k,
//! ```
//!
//! under which the coefficients solve the statistics-form Lasso at the
//! current λ. For a new pair (x, y) the one-step error
//! `e(λ) = (y − xᵀβ̂(λ))²` is differentiated through the active set A of
//! the solution:
//!
//! ```text
//! ∂β̂_A/∂λ = −(stat_xx[A,A])⁻¹ sign(β̂_A) / 2
//! ∂e/∂λ    = −2 (y − xᵀβ̂) · x_Aᵀ ∂β̂_A/∂λ
//! ```
//!
//! and λ moves one projected step `λ ← max(floor, λ − α ∂e/∂λ)` before the
//! statistics absorb the new observation and the coefficients are
//! re-solved. The gradient is taken against the statistics the current
//! coefficients actually solve, so it matches a central finite difference
//! of `e(λ)` on frozen statistics whenever the active set is stable.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};
use crate::lasso::{solve_lasso_from_stats, ObservationWindow, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::linalg;
use crate::selector::{select_lambda, LambdaGrid, SelectionCriterion};

/// Tuning knobs for the recursive tracker. `step_size` and `lambda_floor`
/// are absolute when given; left at `None` they default to `0.05 λ₀` and
/// `1e-6 λ₀` where λ₀ is the burn-in estimate.
#[derive(Clone, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct RapConfig {
    pub forgetting: f64,
    pub step_size: Option<f64>,
    pub lambda_floor: Option<f64>,
}

impl Default for RapConfig {
    fn default() -> Self {
        RapConfig {
            forgetting: 0.95,
            step_size: None,
            lambda_floor: None,
        }
    }
}

impl RapConfig {
    fn validate(&self) -> Result<()> {
        if !(self.forgetting > 0.0 && self.forgetting < 1.0) {
            return Err(Error::InvalidInput(format!(
                "forgetting factor must lie strictly inside (0, 1), got {}",
                self.forgetting
            )));
        }
        if let Some(a) = self.step_size {
            if !a.is_finite() || a < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "step size must be finite and nonnegative, got {a}"
                )));
            }
        }
        if let Some(f) = self.lambda_floor {
            if !f.is_finite() || f <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "lambda floor must be finite and positive, got {f}"
                )));
            }
        }
        Ok(())
    }
}

/// Value-style tracker state; [`RapState::step`] returns a fresh state
/// rather than mutating in place, so a single stream is updated
/// sequentially while distinct streams can live on distinct threads.
#[derive(Clone, Debug)]
pub struct RapState {
    lambda: f64,
    coefficients: Array1<f64>,
    stat_xx: Array2<f64>,
    stat_xy: Array1<f64>,
    forgetting: f64,
    step_size: f64,
    lambda_floor: f64,
    t: usize,
    gradient_skipped: bool,
}

/// Outcome of absorbing one observation.
#[derive(Clone, Debug)]
pub struct RapStep {
    pub state: RapState,
    /// Prediction made with the coefficients from *before* the update.
    pub predicted: f64,
    /// Squared one-step-ahead prediction error.
    pub one_step_error: f64,
}

impl RapState {
    /// Initializes the tracker from a burn-in block: λ₀ comes from a BIC
    /// selection on the burn-in window, the statistics accumulate the
    /// burn-in with forgetting weights (most recent observation weighted
    /// 1), and the coefficients solve those statistics at λ₀.
    pub fn init(burn_in: &ObservationWindow, config: &RapConfig) -> Result<RapState> {
        config.validate()?;
        let m = burn_in.len();
        if m < 2 {
            return Err(Error::InvalidInput(format!(
                "burn-in needs at least 2 observations, got {m}"
            )));
        }
        let y = burn_in.responses();
        let mean = y.sum() / m as f64;
        if y.iter().all(|v| (*v - mean).abs() < 1e-300) {
            return Err(Error::Degenerate(
                "burn-in responses have zero variance".into(),
            ));
        }

        let (lambda0, _) = select_lambda(burn_in, &LambdaGrid::default(), SelectionCriterion::Bic)?;
        let lambda_floor = config.lambda_floor.unwrap_or(1e-6 * lambda0);
        let step_size = config.step_size.unwrap_or(0.05 * lambda0);
        let lambda = lambda0.max(lambda_floor);

        // recursive accumulation gives exponents r^{m−1−k} for row k
        let p = burn_in.dim();
        let r = config.forgetting;
        let mut stat_xx = Array2::zeros((p, p));
        let mut stat_xy = Array1::zeros(p);
        for i in 0..m {
            let w = burn_in.weights()[i];
            let row = burn_in.predictors().row(i);
            stat_xx *= r;
            stat_xy *= r;
            for j in 0..p {
                let wx = w * row[j];
                stat_xy[j] += wx * y[i];
                for k in 0..p {
                    stat_xx[[j, k]] += wx * row[k];
                }
            }
        }

        let coefficients =
            solve_lasso_from_stats(&stat_xx, &stat_xy, lambda, None, DEFAULT_TOL, DEFAULT_MAX_ITER)?;

        Ok(RapState {
            lambda,
            coefficients,
            stat_xx,
            stat_xy,
            forgetting: r,
            step_size,
            lambda_floor,
            t: m,
            gradient_skipped: false,
        })
    }

    /// Absorbs one observation: predict with the pre-update coefficients,
    /// move λ one projected gradient step, decay-update the statistics and
    /// re-solve the coefficients (warm-started) at the new λ.
    ///
    /// A singular active-set system skips the gradient for this step (λ
    /// unchanged) and flags the returned state.
    pub fn step(&self, x: ArrayView1<'_, f64>, y: f64) -> Result<RapStep> {
        let p = self.coefficients.len();
        if x.len() != p {
            return Err(Error::Dimension(format!(
                "predictor vector has length {} but the state tracks {p} coefficients",
                x.len()
            )));
        }
        if !x.iter().all(|v| v.is_finite()) || !y.is_finite() {
            return Err(Error::NonFinite("streamed observation".into()));
        }

        let xv = x.to_vec();
        let beta = self.coefficients.as_slice().expect("owned coefficients");
        let predicted = linalg::dot(&xv, beta);
        let residual = y - predicted;
        let one_step_error = residual * residual;

        // gradient against the statistics the current coefficients solve
        let stat_slice = self.stat_xx.as_slice().expect("owned stats");
        let mut gradient_skipped = false;
        let gradient = match error_gradient_slices(stat_slice, p, beta, &xv, y) {
            Some(g) => g,
            None => {
                gradient_skipped = true;
                0.0
            }
        };
        let lambda = (self.lambda - self.step_size * gradient).max(self.lambda_floor);

        // decay update of the sufficient statistics
        let r = self.forgetting;
        let mut stat_xx = &self.stat_xx * r;
        let mut stat_xy = &self.stat_xy * r;
        for j in 0..p {
            stat_xy[j] += xv[j] * y;
            for k in 0..p {
                stat_xx[[j, k]] += xv[j] * xv[k];
            }
        }

        let coefficients = solve_lasso_from_stats(
            &stat_xx,
            &stat_xy,
            lambda,
            Some(self.coefficients.view()),
            DEFAULT_TOL,
            DEFAULT_MAX_ITER,
        )?;

        Ok(RapStep {
            state: RapState {
                lambda,
                coefficients,
                stat_xx,
                stat_xy,
                forgetting: r,
                step_size: self.step_size,
                lambda_floor: self.lambda_floor,
                t: self.t + 1,
                gradient_skipped,
            },
            predicted,
            one_step_error,
        })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn coefficients(&self) -> &Array1<f64> {
        &self.coefficients
    }

    pub fn stat_xx(&self) -> &Array2<f64> {
        &self.stat_xx
    }

    pub fn stat_xy(&self) -> &Array1<f64> {
        &self.stat_xy
    }

    pub fn forgetting(&self) -> f64 {
        self.forgetting
    }

    pub fn step_size(&self) -> f64 {
        self.step_size
    }

    pub fn lambda_floor(&self) -> f64 {
        self.lambda_floor
    }

    /// Observations absorbed so far (burn-in included).
    pub fn t(&self) -> usize {
        self.t
    }

    /// Whether the most recent step skipped its gradient because the
    /// active-set system was singular.
    pub fn gradient_skipped(&self) -> bool {
        self.gradient_skipped
    }
}

/// Gradient of the one-step squared prediction error with respect to λ,
/// evaluated at coefficients that solve the statistics-form Lasso on
/// `stat_xx`. Returns `None` when the active-set system is singular; an
/// empty active set has gradient zero.
pub fn one_step_error_gradient(
    stat_xx: &Array2<f64>,
    coefficients: &Array1<f64>,
    x: ArrayView1<'_, f64>,
    y: f64,
) -> Option<f64> {
    let p = coefficients.len();
    assert_eq!(stat_xx.dim(), (p, p), "stat_xx must be p x p");
    assert_eq!(x.len(), p, "x must have length p");
    let stats = stat_xx.as_standard_layout();
    let xv = x.to_vec();
    error_gradient_slices(
        stats.as_slice().expect("standard layout"),
        p,
        coefficients.as_slice().expect("owned coefficients"),
        &xv,
        y,
    )
}

fn error_gradient_slices(stat_xx: &[f64], p: usize, beta: &[f64], x: &[f64], y: f64) -> Option<f64> {
    let active: Vec<usize> = (0..p).filter(|&j| beta[j] != 0.0).collect();
    if active.is_empty() {
        return Some(0.0);
    }
    let a = active.len();
    let mut sub = vec![0.0f64; a * a];
    for (ri, &i) in active.iter().enumerate() {
        for (ci, &j) in active.iter().enumerate() {
            sub[ri * a + ci] = stat_xx[i * p + j];
        }
    }
    let signs: Vec<f64> = active.iter().map(|&j| beta[j].signum()).collect();
    let chol = linalg::cholesky(&sub, a)?;
    let z = linalg::cholesky_solve(&chol, a, &signs);
    // ∂β_A/∂λ = −z/2, so ∂e/∂λ = −2 res · x_A·(−z/2) = res · x_A·z
    let residual = y - linalg::dot(x, beta);
    let dir: f64 = active.iter().zip(&z).map(|(&j, zj)| x[j] * zj).sum();
    Some(residual * dir)
}
