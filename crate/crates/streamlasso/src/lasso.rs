//! Weighted ℓ1-penalized least squares.
//!
//! The solver minimizes the convex objective
//!
//! ```text
//! L(β, λ) = Σ_i w_i (y_i − x_iᵀ β)² + λ ‖β‖₁
//! ```
//!
//! over a block of observations, using cyclic coordinate descent with
//! soft-thresholding updates in fixed ascending coordinate order. Note the
//! squared loss is not halved; the first-order optimality conditions are
//!
//! ```text
//! 2 g_j = λ sign(β_j)    for active j,
//! 2 |g_j| ≤ λ            for inactive j,
//! ```
//!
//! with `g_j = Σ_i w_i x_ij (y_i − x_iᵀ β)`. Every fit returned as
//! converged carries a KKT residual of at most `tol`, checked against the
//! raw observations rather than any internal representation, so the
//! certificate is exactly what [`kkt_residual`] reports.

use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

/// Default convergence tolerance on the KKT residual and the per-sweep
/// coefficient change.
pub const DEFAULT_TOL: f64 = 1e-8;

/// Default cap on coordinate-descent sweeps.
pub const DEFAULT_MAX_ITER: usize = 10_000;

/// A contiguous block of weighted observations: the unit the solver
/// consumes. All weights are strictly positive and every entry is finite.
#[derive(Clone, Debug)]
pub struct ObservationWindow {
    predictors: Array2<f64>,
    responses: Array1<f64>,
    weights: Array1<f64>,
}

impl ObservationWindow {
    pub fn new(
        predictors: Array2<f64>,
        responses: Array1<f64>,
        weights: Array1<f64>,
    ) -> Result<Self> {
        let (m, p) = predictors.dim();
        if m == 0 || p == 0 {
            return Err(Error::InvalidInput(format!(
                "window must have at least one row and one column, got {m} x {p}"
            )));
        }
        if responses.len() != m || weights.len() != m {
            return Err(Error::Dimension(format!(
                "predictors have {m} rows but responses/weights have lengths {}/{}",
                responses.len(),
                weights.len()
            )));
        }
        if !predictors.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("predictors".into()));
        }
        if !responses.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("responses".into()));
        }
        if !weights.iter().all(|w| w.is_finite() && *w > 0.0) {
            return Err(Error::InvalidInput(
                "weights must be finite and strictly positive".into(),
            ));
        }
        // Hot loops index flat slices, so force standard layout up front.
        let predictors = if predictors.is_standard_layout() {
            predictors
        } else {
            predictors.as_standard_layout().to_owned()
        };
        Ok(Self {
            predictors,
            responses,
            weights,
        })
    }

    /// Window with unit weights.
    pub fn unweighted(predictors: Array2<f64>, responses: Array1<f64>) -> Result<Self> {
        let m = predictors.nrows();
        Self::new(predictors, responses, Array1::ones(m))
    }

    /// Number of observations.
    pub fn len(&self) -> usize {
        self.predictors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Number of predictor columns.
    pub fn dim(&self) -> usize {
        self.predictors.ncols()
    }

    pub fn predictors(&self) -> &Array2<f64> {
        &self.predictors
    }

    pub fn responses(&self) -> &Array1<f64> {
        &self.responses
    }

    pub fn weights(&self) -> &Array1<f64> {
        &self.weights
    }

    /// Sum of observation weights (the effective sample size).
    pub fn effective_size(&self) -> f64 {
        self.weights.sum()
    }

    fn flat_predictors(&self) -> &[f64] {
        self.predictors
            .as_slice()
            .expect("window predictors are standard layout")
    }
}

/// Result of one solve: coefficients together with the residuals, active
/// set and objective value they imply.
#[derive(Clone, Debug)]
pub struct LassoFit {
    pub coefficients: Array1<f64>,
    pub lambda: f64,
    /// Indices of exactly the nonzero coefficients, ascending.
    pub active_set: Vec<usize>,
    pub residuals: Array1<f64>,
    pub objective_value: f64,
    /// Coordinate-descent sweeps performed.
    pub iterations: usize,
}

impl LassoFit {
    pub(crate) fn from_window(
        window: &ObservationWindow,
        lambda: f64,
        coefficients: Array1<f64>,
        iterations: usize,
    ) -> Self {
        let x = window.flat_predictors();
        let p = window.dim();
        let beta = coefficients.as_slice().expect("owned coefficients");
        let mut residuals = Array1::zeros(window.len());
        let mut rss_w = 0.0;
        for i in 0..window.len() {
            let row = &x[i * p..(i + 1) * p];
            let r = window.responses[i] - crate::linalg::dot(row, beta);
            residuals[i] = r;
            rss_w += window.weights[i] * r * r;
        }
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        let active_set = beta
            .iter()
            .enumerate()
            .filter(|(_, b)| **b != 0.0)
            .map(|(j, _)| j)
            .collect();
        LassoFit {
            coefficients,
            lambda,
            active_set,
            residuals,
            objective_value: rss_w + lambda * l1,
            iterations,
        }
    }

    /// Weighted residual sum of squares under `weights`.
    pub fn weighted_rss(&self, window: &ObservationWindow) -> f64 {
        self.residuals
            .iter()
            .zip(window.weights.iter())
            .map(|(r, w)| w * r * r)
            .sum()
    }
}

/// Number of nonzero coefficients: the conventional degrees of freedom of
/// a Lasso fit, used by the BIC and GCV scores.
pub fn degrees_of_freedom(fit: &LassoFit) -> usize {
    fit.active_set.len()
}

/// Smallest λ at which the solution is identically zero:
/// `2 max_j |Σ_i w_i x_ij y_i|`.
pub fn lambda_max(window: &ObservationWindow) -> f64 {
    let x = window.flat_predictors();
    let p = window.dim();
    let mut best = 0.0f64;
    let mut col = vec![0.0f64; p];
    for i in 0..window.len() {
        let wy = window.weights[i] * window.responses[i];
        let row = &x[i * p..(i + 1) * p];
        for j in 0..p {
            col[j] += row[j] * wy;
        }
    }
    for c in col {
        best = best.max(c.abs());
    }
    2.0 * best
}

/// Maximum violation of the first-order optimality conditions of the
/// weighted objective at `fit.coefficients`; the convergence certificate
/// of the solver. The gradient is recomputed from the raw window.
pub fn kkt_residual(fit: &LassoFit, window: &ObservationWindow) -> f64 {
    let p = window.dim();
    debug_assert_eq!(fit.coefficients.len(), p);
    let x = window.flat_predictors();
    let beta = fit.coefficients.as_slice().expect("owned coefficients");
    let mut grad = vec![0.0f64; p];
    for i in 0..window.len() {
        let row = &x[i * p..(i + 1) * p];
        let wr = window.weights[i] * (window.responses[i] - crate::linalg::dot(row, beta));
        for j in 0..p {
            grad[j] += row[j] * wr;
        }
    }
    let lambda = fit.lambda;
    let mut worst = 0.0f64;
    for j in 0..p {
        let two_g = 2.0 * grad[j];
        let v = if beta[j] > 0.0 {
            (two_g - lambda).abs()
        } else if beta[j] < 0.0 {
            (two_g + lambda).abs()
        } else {
            (two_g.abs() - lambda).max(0.0)
        };
        worst = worst.max(v);
    }
    worst
}

/// The regularization parameter implied by a fit through the dual identity
///
/// ```text
/// λ = 2 (y − Xβ̂)ᵀ W X β̂ / ‖β̂‖₁
/// ```
///
/// At any converged fit with a nonempty active set this reproduces the λ
/// that produced the fit. The factor 2 and the weight matrix keep the
/// identity exact under the unhalved weighted squared loss.
pub fn implied_lambda(fit: &LassoFit, window: &ObservationWindow) -> Result<f64> {
    let beta = fit.coefficients.as_slice().expect("owned coefficients");
    let l1: f64 = beta.iter().map(|b| b.abs()).sum();
    if l1 == 0.0 {
        return Err(Error::UndefinedRatio(
            "implied lambda of an all-zero coefficient vector".into(),
        ));
    }
    let x = window.flat_predictors();
    let p = window.dim();
    let mut num = 0.0f64;
    for i in 0..window.len() {
        let row = &x[i * p..(i + 1) * p];
        let fitted = crate::linalg::dot(row, beta);
        num += window.weights[i] * (window.responses[i] - fitted) * fitted;
    }
    Ok(2.0 * num / l1)
}

fn soft_threshold(z: f64, threshold: f64) -> f64 {
    if z > threshold {
        z - threshold
    } else if z < -threshold {
        z + threshold
    } else {
        0.0
    }
}

/// Weighted Gram system of a window: `s = XᵀWX` (row-major p×p) and
/// `c = XᵀWy`. The solver iterates on this form, so a whole λ path reuses
/// one pass over the observations.
pub(crate) struct GramSystem {
    pub(crate) s: Vec<f64>,
    pub(crate) c: Vec<f64>,
    pub(crate) p: usize,
}

impl GramSystem {
    pub(crate) fn from_window(window: &ObservationWindow) -> Self {
        let p = window.dim();
        let x = window.flat_predictors();
        let mut s = vec![0.0f64; p * p];
        let mut c = vec![0.0f64; p];
        for i in 0..window.len() {
            let w = window.weights[i];
            let wy = w * window.responses[i];
            let row = &x[i * p..(i + 1) * p];
            for j in 0..p {
                let wxj = w * row[j];
                c[j] += row[j] * wy;
                let srow = &mut s[j * p..(j + 1) * p];
                for k in j..p {
                    srow[k] += wxj * row[k];
                }
            }
        }
        // mirror the upper triangle
        for j in 0..p {
            for k in (j + 1)..p {
                s[k * p + j] = s[j * p + k];
            }
        }
        GramSystem { s, c, p }
    }

    pub(crate) fn from_parts(s: Vec<f64>, c: Vec<f64>, p: usize) -> Self {
        debug_assert_eq!(s.len(), p * p);
        debug_assert_eq!(c.len(), p);
        GramSystem { s, c, p }
    }

    /// One cyclic sweep over coordinates 0..p−1. Returns the largest
    /// coefficient change and the sup-norm of the updated coefficients.
    fn sweep(&self, beta: &mut [f64], lambda: f64) -> (f64, f64) {
        let p = self.p;
        let half = 0.5 * lambda;
        let mut max_change = 0.0f64;
        let mut beta_inf = 0.0f64;
        for j in 0..p {
            let a = self.s[j * p + j];
            let old = beta[j];
            if a <= 0.0 {
                // identically zero column; its coefficient stays pinned
                if old != 0.0 {
                    beta[j] = 0.0;
                    max_change = max_change.max(old.abs());
                }
                continue;
            }
            let row = &self.s[j * p..(j + 1) * p];
            let partial = self.c[j] - crate::linalg::dot(row, beta) + a * old;
            let new = soft_threshold(partial, half) / a;
            if new != old {
                beta[j] = new;
                max_change = max_change.max((new - old).abs());
            }
            beta_inf = beta_inf.max(new.abs());
        }
        (max_change, beta_inf)
    }

    /// KKT residual in statistics form: `g = c − S β`.
    pub(crate) fn kkt(&self, beta: &[f64], lambda: f64) -> f64 {
        let p = self.p;
        let mut worst = 0.0f64;
        for j in 0..p {
            let row = &self.s[j * p..(j + 1) * p];
            let two_g = 2.0 * (self.c[j] - crate::linalg::dot(row, beta));
            let v = if beta[j] > 0.0 {
                (two_g - lambda).abs()
            } else if beta[j] < 0.0 {
                (two_g + lambda).abs()
            } else {
                (two_g.abs() - lambda).max(0.0)
            };
            worst = worst.max(v);
        }
        worst
    }

    /// Objective in statistics form, up to the constant `yᵀWy`:
    /// `βᵀSβ − 2cᵀβ + λ‖β‖₁`. Recorded per sweep when a log is supplied.
    fn partial_objective(&self, beta: &[f64], lambda: f64) -> f64 {
        let p = self.p;
        let mut quad = 0.0;
        for j in 0..p {
            quad += beta[j] * crate::linalg::dot(&self.s[j * p..(j + 1) * p], beta);
        }
        let lin: f64 = self.c.iter().zip(beta).map(|(c, b)| c * b).sum();
        let l1: f64 = beta.iter().map(|b| b.abs()).sum();
        quad - 2.0 * lin + lambda * l1
    }
}

pub(crate) struct GramSolve {
    pub(crate) beta: Vec<f64>,
    pub(crate) sweeps: usize,
    pub(crate) converged: bool,
    pub(crate) kkt: f64,
}

/// Cyclic coordinate descent on a Gram system. Declares convergence when
/// the largest per-sweep coefficient change falls below
/// `tol · max(1, ‖β‖∞)` and the statistics-form KKT residual is within
/// half the tolerance; the margin absorbs the rounding gap between the
/// statistics form and the observation-form certificate checked by
/// callers.
pub(crate) fn gram_coordinate_descent(
    gram: &GramSystem,
    lambda: f64,
    warm_start: Option<&[f64]>,
    tol: f64,
    max_iter: usize,
    mut sweep_log: Option<&mut Vec<f64>>,
) -> GramSolve {
    let p = gram.p;
    let mut beta = match warm_start {
        Some(w) => w.to_vec(),
        None => vec![0.0; p],
    };
    let mut last_kkt = f64::INFINITY;
    for sweep in 1..=max_iter {
        let (max_change, beta_inf) = gram.sweep(&mut beta, lambda);
        if let Some(log) = sweep_log.as_deref_mut() {
            log.push(gram.partial_objective(&beta, lambda));
        }
        if max_change <= tol * beta_inf.max(1.0) {
            last_kkt = gram.kkt(&beta, lambda);
            if last_kkt <= 0.5 * tol {
                return GramSolve {
                    beta,
                    sweeps: sweep,
                    converged: true,
                    kkt: last_kkt,
                };
            }
        }
    }
    if last_kkt.is_infinite() {
        last_kkt = gram.kkt(&beta, lambda);
    }
    GramSolve {
        beta,
        sweeps: max_iter,
        converged: false,
        kkt: last_kkt,
    }
}

fn validate_solver_inputs(
    p: usize,
    lambda: f64,
    warm_start: Option<ArrayView1<'_, f64>>,
    tol: f64,
) -> Result<()> {
    if !lambda.is_finite() || lambda < 0.0 {
        return Err(Error::InvalidInput(format!(
            "lambda must be finite and nonnegative, got {lambda}"
        )));
    }
    if !tol.is_finite() || tol <= 0.0 {
        return Err(Error::InvalidInput(format!(
            "tol must be finite and positive, got {tol}"
        )));
    }
    if let Some(w) = warm_start {
        if w.len() != p {
            return Err(Error::Dimension(format!(
                "warm start has length {} but the problem has {p} coefficients",
                w.len()
            )));
        }
        if !w.iter().all(|v| v.is_finite()) {
            return Err(Error::NonFinite("warm start".into()));
        }
    }
    Ok(())
}

pub(crate) fn solve_on_gram(
    gram: &GramSystem,
    window: &ObservationWindow,
    lambda: f64,
    warm_start: Option<ArrayView1<'_, f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit> {
    validate_solver_inputs(gram.p, lambda, warm_start, tol)?;
    let warm = warm_start.map(|w| w.to_vec());
    let sol = gram_coordinate_descent(gram, lambda, warm.as_deref(), tol, max_iter, None);
    let fit = LassoFit::from_window(window, lambda, Array1::from_vec(sol.beta), sol.sweeps);
    let cert = kkt_residual(&fit, window);
    if sol.converged && cert <= tol {
        Ok(fit)
    } else {
        Err(Error::NotConverged {
            fit: Box::new(fit),
            kkt: cert,
            sweeps: sol.sweeps,
        })
    }
}

/// Solves the weighted Lasso on a window at one λ.
///
/// Deterministic given identical inputs: coordinates are visited in fixed
/// ascending order and the warm start (zeros when absent) pins the whole
/// iterate path. Non-convergence is an explicit error carrying the best
/// iterate, never a silent success.
pub fn solve_weighted_lasso(
    window: &ObservationWindow,
    lambda: f64,
    warm_start: Option<ArrayView1<'_, f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<LassoFit> {
    let gram = GramSystem::from_window(window);
    solve_on_gram(&gram, window, lambda, warm_start, tol, max_iter)
}

/// Solves the Lasso directly from forgetting-weighted sufficient
/// statistics `stat_xx = Σ r^{t−k} x_k x_kᵀ` and `stat_xy = Σ r^{t−k} x_k y_k`,
/// the form used by streaming updates where the raw observations are gone.
pub fn solve_lasso_from_stats(
    stat_xx: &Array2<f64>,
    stat_xy: &Array1<f64>,
    lambda: f64,
    warm_start: Option<ArrayView1<'_, f64>>,
    tol: f64,
    max_iter: usize,
) -> Result<Array1<f64>> {
    let p = stat_xy.len();
    if stat_xx.dim() != (p, p) {
        return Err(Error::Dimension(format!(
            "stat_xx is {:?} but stat_xy has length {p}",
            stat_xx.dim()
        )));
    }
    if !stat_xx.iter().all(|v| v.is_finite()) || !stat_xy.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("sufficient statistics".into()));
    }
    validate_solver_inputs(p, lambda, warm_start, tol)?;
    let s = stat_xx
        .as_standard_layout()
        .as_slice()
        .expect("standard layout")
        .to_vec();
    let gram = GramSystem::from_parts(s, stat_xy.to_vec(), p);
    let warm = warm_start.map(|w| w.to_vec());
    let sol = gram_coordinate_descent(&gram, lambda, warm.as_deref(), tol, max_iter, None);
    if sol.converged {
        Ok(Array1::from_vec(sol.beta))
    } else {
        Err(Error::StatsNotConverged {
            coefficients: sol.beta,
            kkt: sol.kkt,
            sweeps: sol.sweeps,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{arr1, arr2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn univariate_window() -> ObservationWindow {
        ObservationWindow::unweighted(arr2(&[[1.0], [1.0]]), arr1(&[1.0, 3.0])).unwrap()
    }

    pub(crate) fn random_window(rng: &mut ChaCha8Rng, m: usize, p: usize) -> ObservationWindow {
        let mut x = Array2::zeros((m, p));
        let mut y = Array1::zeros(m);
        for i in 0..m {
            for j in 0..p {
                x[[i, j]] = rng.sample::<f64, _>(StandardNormal);
            }
            y[i] = rng.sample::<f64, _>(StandardNormal) * 2.0;
        }
        ObservationWindow::unweighted(x, y).unwrap()
    }

    #[test]
    fn univariate_closed_form() {
        // soft_threshold(Σ w x y, λ/2) / Σ w x² = (4 − 1) / 2 = 1.5
        let w = univariate_window();
        let fit = solve_weighted_lasso(&w, 2.0, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((fit.coefficients[0] - 1.5).abs() < 1e-10);
        assert_eq!(fit.active_set, vec![0]);
        assert!(kkt_residual(&fit, &w) < 1e-12);
    }

    #[test]
    fn lambda_max_examples() {
        let w = univariate_window();
        assert_eq!(lambda_max(&w), 8.0);

        let zero_y =
            ObservationWindow::unweighted(arr2(&[[1.0], [2.0]]), arr1(&[0.0, 0.0])).unwrap();
        assert_eq!(lambda_max(&zero_y), 0.0);

        // predictors orthogonal to responses: Σ w x y = 1 − 1 = 0
        let orth =
            ObservationWindow::unweighted(arr2(&[[1.0], [1.0]]), arr1(&[1.0, -1.0])).unwrap();
        assert_eq!(lambda_max(&orth), 0.0);
    }

    #[test]
    fn zero_fit_at_and_above_lambda_max() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let w = random_window(&mut rng, 15, 4);
            let lmax = lambda_max(&w);
            for lam in [lmax, 1.5 * lmax + 1.0] {
                let fit = solve_weighted_lasso(&w, lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER)
                    .unwrap();
                assert!(fit.coefficients.iter().all(|b| *b == 0.0));
                assert!(kkt_residual(&fit, &w) < 1e-12);
            }
        }
    }

    #[test]
    fn below_threshold_is_nonzero_and_kkt_detects_the_zero_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let w = random_window(&mut rng, 30, 5);
        let lmax = lambda_max(&w);
        assert!(lmax > 0.0);
        let lam = 0.5 * lmax;
        let fit = solve_weighted_lasso(&w, lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(!fit.active_set.is_empty());

        // hand-built zero fit violates the KKT conditions below the threshold
        let zero = LassoFit::from_window(&w, lam, Array1::zeros(5), 0);
        assert!(kkt_residual(&zero, &w) > 0.0);
        // and is exactly optimal at the threshold itself
        let zero_at_max = LassoFit::from_window(&w, lmax, Array1::zeros(5), 0);
        assert!(kkt_residual(&zero_at_max, &w) < 1e-12);
    }

    #[test]
    fn zero_lambda_matches_weighted_least_squares() {
        // 2x1 full-rank normal equations solved by hand:
        // X = [[1, 0], [1, 1], [0, 2]], y = [1, 2, 3], unit weights
        let x = arr2(&[[1.0, 0.0], [1.0, 1.0], [0.0, 2.0]]);
        let y = arr1(&[1.0, 2.0, 3.0]);
        let w = ObservationWindow::unweighted(x, y).unwrap();
        // normal equations: [[2,1],[1,5]] β = [3, 8] → β = (7/9, 13/9)
        let fit = solve_weighted_lasso(&w, 0.0, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!((fit.coefficients[0] - 7.0 / 9.0).abs() < 1e-8);
        assert!((fit.coefficients[1] - 13.0 / 9.0).abs() < 1e-8);
    }

    #[test]
    fn implied_lambda_matches_at_the_optimum() {
        let w = univariate_window();
        let fit = solve_weighted_lasso(&w, 2.0, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let implied = implied_lambda(&fit, &w).unwrap();
        assert!((implied - 2.0).abs() < 1e-8);

        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let w = random_window(&mut rng, 50, 5);
        let lam = 0.3 * lambda_max(&w);
        let fit = solve_weighted_lasso(&w, lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        let implied = implied_lambda(&fit, &w).unwrap();
        assert!((implied - lam).abs() <= 1e-6 * lam.max(1.0));
    }

    #[test]
    fn implied_lambda_rejects_zero_fit() {
        let w = univariate_window();
        let fit = solve_weighted_lasso(&w, 8.0, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert!(matches!(
            implied_lambda(&fit, &w),
            Err(Error::UndefinedRatio(_))
        ));
    }

    #[test]
    fn degrees_of_freedom_counts_nonzeros() {
        let w = ObservationWindow::unweighted(
            Array2::ones((6, 5)),
            Array1::zeros(6),
        )
        .unwrap();
        let fit = LassoFit::from_window(&w, 1.0, arr1(&[1.0, 0.0, -0.2, 0.0, 0.7]), 0);
        assert_eq!(degrees_of_freedom(&fit), 3);
        assert_eq!(fit.active_set, vec![0, 2, 4]);

        let zero = LassoFit::from_window(&w, 1.0, Array1::zeros(5), 0);
        assert_eq!(degrees_of_freedom(&zero), 0);
    }

    #[test]
    fn scaling_covariance() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let w = random_window(&mut rng, 25, 4);
        let lam = 0.4 * lambda_max(&w);
        let fit = solve_weighted_lasso(&w, lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();

        let c = 3.5;
        let scaled = ObservationWindow::new(
            w.predictors().clone(),
            w.responses() * c,
            w.weights().clone(),
        )
        .unwrap();
        let fit_c =
            solve_weighted_lasso(&scaled, c * lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        for j in 0..4 {
            assert!((fit_c.coefficients[j] - c * fit.coefficients[j]).abs() < 1e-6);
        }
    }

    #[test]
    fn objective_is_monotone_across_sweeps() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..10 {
            let w = random_window(&mut rng, 40, 8);
            let gram = GramSystem::from_window(&w);
            let lam = 0.1 * lambda_max(&w);
            let mut log = Vec::new();
            let _ = gram_coordinate_descent(
                &gram,
                lam,
                None,
                DEFAULT_TOL,
                DEFAULT_MAX_ITER,
                Some(&mut log),
            );
            for pair in log.windows(2) {
                // tiny slack for floating-point rounding
                assert!(pair[1] <= pair[0] + 1e-10 * pair[0].abs().max(1.0));
            }
        }
    }

    #[test]
    fn rejects_non_finite_and_bad_inputs() {
        assert!(ObservationWindow::unweighted(arr2(&[[f64::NAN]]), arr1(&[1.0])).is_err());
        assert!(ObservationWindow::unweighted(arr2(&[[1.0]]), arr1(&[f64::INFINITY])).is_err());
        assert!(ObservationWindow::new(
            arr2(&[[1.0]]),
            arr1(&[1.0]),
            arr1(&[0.0]),
        )
        .is_err());
        assert!(ObservationWindow::new(
            arr2(&[[1.0]]),
            arr1(&[1.0]),
            arr1(&[1.0, 1.0]),
        )
        .is_err());

        let w = univariate_window();
        assert!(solve_weighted_lasso(&w, f64::NAN, None, DEFAULT_TOL, 10).is_err());
        assert!(solve_weighted_lasso(&w, -1.0, None, DEFAULT_TOL, 10).is_err());
        assert!(solve_weighted_lasso(&w, 1.0, None, 0.0, 10).is_err());
    }

    #[test]
    fn non_convergence_carries_best_iterate() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let w = random_window(&mut rng, 40, 10);
        let lam = 0.01 * lambda_max(&w);
        match solve_weighted_lasso(&w, lam, None, DEFAULT_TOL, 1) {
            Err(Error::NotConverged { fit, kkt, sweeps }) => {
                assert_eq!(sweeps, 1);
                assert!(kkt > DEFAULT_TOL);
                assert!(fit.coefficients.iter().any(|b| *b != 0.0));
            }
            other => panic!("expected NotConverged, got {other:?}"),
        }
    }

    #[test]
    fn zero_column_is_pinned_at_zero() {
        let x = arr2(&[[1.0, 0.0], [2.0, 0.0], [3.0, 0.0]]);
        let y = arr1(&[1.0, 2.0, 3.0]);
        let w = ObservationWindow::unweighted(x, y).unwrap();
        let fit = solve_weighted_lasso(&w, 0.5, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
        assert_eq!(fit.coefficients[1], 0.0);
        assert!(fit.coefficients[0] > 0.0);
    }

    #[test]
    fn stats_solve_agrees_with_window_solve() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..10 {
            let w = random_window(&mut rng, 30, 6);
            let lam = 0.2 * lambda_max(&w);
            let fit = solve_weighted_lasso(&w, lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();

            let gram = GramSystem::from_window(&w);
            let s = Array2::from_shape_vec((6, 6), gram.s.clone()).unwrap();
            let c = Array1::from_vec(gram.c.clone());
            let beta =
                solve_lasso_from_stats(&s, &c, lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            for j in 0..6 {
                assert!((beta[j] - fit.coefficients[j]).abs() < 1e-8);
            }
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            // KKT certificate plus dual identity across randomized problems.
            #[test]
            fn converged_fits_satisfy_kkt_and_dual_identity(
                seed in 0u64..1_000_000,
                m in 5usize..60,
                p in 1usize..12,
                frac in 0.05f64..1.0,
            ) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let w = random_window(&mut rng, m, p);
                let lmax = lambda_max(&w);
                prop_assume!(lmax > 1e-10);
                let lam = frac * lmax;
                let fit = solve_weighted_lasso(&w, lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER)
                    .unwrap();
                prop_assert!(kkt_residual(&fit, &w) <= DEFAULT_TOL);
                if !fit.active_set.is_empty() {
                    let implied = implied_lambda(&fit, &w).unwrap();
                    prop_assert!((implied - lam).abs() <= (10.0 * DEFAULT_TOL).max(1e-8 * lam));
                }
                // threshold property
                let zero = fit.coefficients.iter().all(|b| *b == 0.0);
                if lam < lmax * (1.0 - 1e-6) {
                    prop_assert!(!zero);
                }
            }

            // objective_value invariant: recomputed objective matches
            #[test]
            fn objective_value_is_consistent(seed in 0u64..100_000) {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let w = random_window(&mut rng, 20, 4);
                let lam = 0.3 * lambda_max(&w).max(1e-6);
                let fit = solve_weighted_lasso(&w, lam, None, DEFAULT_TOL, DEFAULT_MAX_ITER)
                    .unwrap();
                let rss = fit.weighted_rss(&w);
                let l1: f64 = fit.coefficients.iter().map(|b| b.abs()).sum();
                let obj = rss + lam * l1;
                prop_assert!((obj - fit.objective_value).abs() <= 1e-10 * obj.abs().max(1.0));
            }
        }
    }
}
