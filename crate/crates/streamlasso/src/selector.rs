//! Sliding-window λ selection: minimize an information criterion over a
//! warm-started λ path.
//!
//! Scores use the weighted residual sum of squares `RSS_w = Σ w_i r_i²`,
//! the effective sample size `m_eff = Σ w_i` and the active-set size as
//! degrees of freedom:
//!
//! ```text
//! BIC = m_eff log(RSS_w / m_eff) + df log(m_eff)
//! GCV = (RSS_w / m_eff) / (1 − df / m_eff)²
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::{
    degrees_of_freedom, lambda_max, solve_on_gram, GramSystem, LassoFit, ObservationWindow,
    DEFAULT_MAX_ITER, DEFAULT_TOL,
};

/// How grid values are interpreted when a window arrives.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridAnchor {
    /// Values are λ themselves.
    Absolute,
    /// Values are fractions of the window's `lambda_max`, so the grid
    /// keeps its meaning as window statistics drift.
    RelativeToLambdaMax,
}

/// Strictly decreasing positive search grid for λ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLambdaGrid", into = "RawLambdaGrid")]
pub struct LambdaGrid {
    values: Vec<f64>,
    anchor: GridAnchor,
}

#[derive(Clone, Serialize, Deserialize)]
struct RawLambdaGrid {
    values: Vec<f64>,
    anchor: GridAnchor,
}

impl TryFrom<RawLambdaGrid> for LambdaGrid {
    type Error = Error;
    fn try_from(raw: RawLambdaGrid) -> Result<Self> {
        LambdaGrid::new(raw.values, raw.anchor)
    }
}

impl From<LambdaGrid> for RawLambdaGrid {
    fn from(grid: LambdaGrid) -> Self {
        RawLambdaGrid {
            values: grid.values,
            anchor: grid.anchor,
        }
    }
}

impl LambdaGrid {
    pub fn new(values: Vec<f64>, anchor: GridAnchor) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("lambda grid must be nonempty".into()));
        }
        for v in &values {
            if !v.is_finite() || *v <= 0.0 {
                return Err(Error::InvalidInput(format!(
                    "lambda grid values must be finite and positive, got {v}"
                )));
            }
            if anchor == GridAnchor::RelativeToLambdaMax && *v > 1.0 {
                return Err(Error::InvalidInput(format!(
                    "relative grid values must lie in (0, 1], got {v}"
                )));
            }
        }
        if !values.windows(2).all(|w| w[0] > w[1]) {
            return Err(Error::InvalidInput(
                "lambda grid must be strictly decreasing".into(),
            ));
        }
        Ok(LambdaGrid { values, anchor })
    }

    /// `len` log-spaced fractions of `lambda_max` from 1 down to
    /// `min_fraction`.
    pub fn log_spaced(len: usize, min_fraction: f64) -> Result<Self> {
        if len < 1 {
            return Err(Error::InvalidInput("grid length must be at least 1".into()));
        }
        if !(min_fraction > 0.0 && min_fraction < 1.0) {
            return Err(Error::InvalidInput(format!(
                "min_fraction must lie in (0, 1), got {min_fraction}"
            )));
        }
        let values = if len == 1 {
            vec![1.0]
        } else {
            (0..len)
                .map(|i| min_fraction.powf(i as f64 / (len - 1) as f64))
                .collect()
        };
        LambdaGrid::new(values, GridAnchor::RelativeToLambdaMax)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn anchor(&self) -> GridAnchor {
        self.anchor
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Absolute λ values for a concrete window.
    pub fn realize(&self, window: &ObservationWindow) -> Result<Vec<f64>> {
        match self.anchor {
            GridAnchor::Absolute => Ok(self.values.clone()),
            GridAnchor::RelativeToLambdaMax => {
                let lmax = lambda_max(window);
                if lmax <= 0.0 {
                    return Err(Error::Degenerate(
                        "window has lambda_max = 0; a relative grid cannot be realized".into(),
                    ));
                }
                Ok(self.values.iter().map(|f| f * lmax).collect())
            }
        }
    }
}

impl Default for LambdaGrid {
    /// 100 log-spaced fractions of `lambda_max` spanning three decades.
    fn default() -> Self {
        LambdaGrid::log_spaced(100, 1e-3).expect("default grid parameters are valid")
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionCriterion {
    Bic,
    Gcv,
}

/// Fits the whole grid on one window, warm-starting each solve from the
/// previous fit (the first from zero). Fits come back in grid order and
/// every one satisfies the solver's KKT certificate.
pub fn lasso_path(window: &ObservationWindow, grid: &LambdaGrid) -> Result<Vec<LassoFit>> {
    let lambdas = grid.realize(window)?;
    let gram = GramSystem::from_window(window);
    let mut fits = Vec::with_capacity(lambdas.len());
    for &lam in &lambdas {
        let warm = fits.last().map(|f: &LassoFit| f.coefficients.view());
        let fit = solve_on_gram(&gram, window, lam, warm, DEFAULT_TOL, DEFAULT_MAX_ITER)
            .map_err(|e| Error::Path {
                lambda: lam,
                source: Box::new(e),
            })?;
        fits.push(fit);
    }
    Ok(fits)
}

/// Gaussian-profile BIC with active-set degrees of freedom. A perfect fit
/// (`RSS_w = 0`) returns the +infinity sentinel.
pub fn bic_score(fit: &LassoFit, window: &ObservationWindow) -> f64 {
    let rss = fit.weighted_rss(window);
    let m_eff = window.effective_size();
    if rss <= 0.0 {
        return f64::INFINITY;
    }
    let df = degrees_of_freedom(fit) as f64;
    m_eff * (rss / m_eff).ln() + df * m_eff.ln()
}

/// Generalized cross-validation with active-set degrees of freedom.
/// Saturated models (`df ≥ m_eff`) return the +infinity sentinel.
pub fn gcv_score(fit: &LassoFit, window: &ObservationWindow) -> f64 {
    let m_eff = window.effective_size();
    let df = degrees_of_freedom(fit) as f64;
    if df >= m_eff {
        return f64::INFINITY;
    }
    let rss = fit.weighted_rss(window);
    (rss / m_eff) / (1.0 - df / m_eff).powi(2)
}

/// Minimizes the criterion over the realized grid. Ties break toward the
/// larger λ, i.e. the sparser model.
pub fn select_lambda(
    window: &ObservationWindow,
    grid: &LambdaGrid,
    criterion: SelectionCriterion,
) -> Result<(f64, LassoFit)> {
    let mut fits = lasso_path(window, grid)?;
    let mut best_idx = 0;
    let mut best_score = f64::INFINITY;
    for (i, fit) in fits.iter().enumerate() {
        let score = match criterion {
            SelectionCriterion::Bic => bic_score(fit, window),
            SelectionCriterion::Gcv => gcv_score(fit, window),
        };
        // strict comparison: the first (largest) λ wins ties
        if score < best_score {
            best_score = score;
            best_idx = i;
        }
    }
    let fit = fits.swap_remove(best_idx);
    Ok((fit.lambda, fit))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lasso::{kkt_residual, solve_weighted_lasso};
    use ndarray::{arr1, arr2, Array1, Array2};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random_window(rng: &mut ChaCha8Rng, m: usize, p: usize) -> ObservationWindow {
        let mut x = Array2::zeros((m, p));
        let mut y = Array1::zeros(m);
        for i in 0..m {
            for j in 0..p {
                x[[i, j]] = rng.sample::<f64, _>(StandardNormal);
            }
            y[i] = rng.sample::<f64, _>(StandardNormal);
        }
        ObservationWindow::unweighted(x, y).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(LambdaGrid::new(vec![], GridAnchor::Absolute).is_err());
        assert!(LambdaGrid::new(vec![1.0, 1.0], GridAnchor::Absolute).is_err());
        assert!(LambdaGrid::new(vec![1.0, 2.0], GridAnchor::Absolute).is_err());
        assert!(LambdaGrid::new(vec![1.0, -0.5], GridAnchor::Absolute).is_err());
        assert!(LambdaGrid::new(vec![1.5, 0.5], GridAnchor::RelativeToLambdaMax).is_err());
        assert!(LambdaGrid::new(vec![8.0, 2.0], GridAnchor::Absolute).is_ok());
    }

    #[test]
    fn log_spaced_grid_spans_the_requested_range() {
        let grid = LambdaGrid::log_spaced(100, 1e-3).unwrap();
        assert_eq!(grid.len(), 100);
        assert_eq!(grid.values()[0], 1.0);
        assert!((grid.values()[99] - 1e-3).abs() < 1e-15);
        assert!(grid.values().windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn realize_rejects_degenerate_windows() {
        let w = ObservationWindow::unweighted(arr2(&[[1.0], [2.0]]), arr1(&[0.0, 0.0])).unwrap();
        let grid = LambdaGrid::default();
        assert!(matches!(grid.realize(&w), Err(Error::Degenerate(_))));
    }

    #[test]
    fn path_on_univariate_window() {
        let w = ObservationWindow::unweighted(arr2(&[[1.0], [1.0]]), arr1(&[1.0, 3.0])).unwrap();
        let grid = LambdaGrid::new(vec![8.0, 2.0], GridAnchor::Absolute).unwrap();
        let fits = lasso_path(&w, &grid).unwrap();
        assert_eq!(fits.len(), 2);
        assert_eq!(fits[0].coefficients[0], 0.0);
        assert!((fits[1].coefficients[0] - 1.5).abs() < 1e-10);
    }

    #[test]
    fn single_point_relative_grid_gives_the_zero_fit() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let w = random_window(&mut rng, 20, 5);
        let grid = LambdaGrid::new(vec![1.0], GridAnchor::RelativeToLambdaMax).unwrap();
        let fits = lasso_path(&w, &grid).unwrap();
        assert_eq!(fits.len(), 1);
        assert!(fits[0].coefficients.iter().all(|b| *b == 0.0));
    }

    #[test]
    fn full_path_is_kkt_valid() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let w = random_window(&mut rng, 50, 8);
        let grid = LambdaGrid::default();
        let fits = lasso_path(&w, &grid).unwrap();
        assert_eq!(fits.len(), 100);
        for fit in &fits {
            assert!(kkt_residual(fit, &w) <= DEFAULT_TOL);
        }
    }

    #[test]
    fn bic_examples() {
        // zero fit, unit weights, m = 50, RSS_w = 50 -> 50 log 1 + 0 = 0
        let x = Array2::zeros((50, 3));
        let y = Array1::ones(50);
        let w = ObservationWindow::unweighted(x, y).unwrap();
        let zero = LassoFit::from_window(&w, 1.0, Array1::zeros(3), 0);
        assert!(bic_score(&zero, &w).abs() < 1e-12);

        // df = 5, m_eff = 50, RSS_w = 50 -> 5 log 50
        let manual = 5.0 * 50f64.ln();
        assert!((manual - 19.56).abs() < 0.01);

        // perfect fit -> +inf sentinel
        let perfect = ObservationWindow::unweighted(arr2(&[[1.0], [2.0]]), arr1(&[2.0, 4.0]))
            .unwrap();
        let fit = LassoFit::from_window(&perfect, 0.0, arr1(&[2.0]), 0);
        assert!(bic_score(&fit, &perfect).is_infinite());
    }

    #[test]
    fn gcv_examples() {
        let x = Array2::zeros((50, 3));
        let y = Array1::ones(50);
        let w = ObservationWindow::unweighted(x, y).unwrap();
        let zero = LassoFit::from_window(&w, 1.0, Array1::zeros(3), 0);
        assert!((gcv_score(&zero, &w) - 1.0).abs() < 1e-12);

        // df = 5, m_eff = 50, RSS_w = 25 -> 0.5 / 0.9² = 0.61728...
        let direct = (25.0 / 50.0) / (1.0 - 5.0 / 50.0f64).powi(2);
        assert!((direct - 0.6173).abs() < 1e-4);

        // saturated model -> +inf sentinel
        let sat_w =
            ObservationWindow::unweighted(arr2(&[[1.0, 0.0], [0.0, 1.0]]), arr1(&[1.0, 1.0]))
                .unwrap();
        let sat = LassoFit::from_window(&sat_w, 0.0, arr1(&[1.0, 1.0]), 0);
        assert!(gcv_score(&sat, &sat_w).is_infinite());
    }

    #[test]
    fn selection_matches_exhaustive_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for &criterion in &[SelectionCriterion::Bic, SelectionCriterion::Gcv] {
            let w = random_window(&mut rng, 40, 6);
            let grid = LambdaGrid::log_spaced(30, 1e-2).unwrap();
            let (lam, fit) = select_lambda(&w, &grid, criterion).unwrap();

            let fits = lasso_path(&w, &grid).unwrap();
            let score = |f: &LassoFit| match criterion {
                SelectionCriterion::Bic => bic_score(f, &w),
                SelectionCriterion::Gcv => gcv_score(f, &w),
            };
            let selected = score(&fit);
            for f in &fits {
                assert!(selected <= score(f));
            }
            assert!(fits.iter().any(|f| f.lambda == lam));
        }
    }

    #[test]
    fn warm_start_independence() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let w = random_window(&mut rng, 40, 6);
        let grid = LambdaGrid::log_spaced(25, 1e-2).unwrap();
        let fits = lasso_path(&w, &grid).unwrap();
        for fit in &fits {
            let cold =
                solve_weighted_lasso(&w, fit.lambda, None, DEFAULT_TOL, DEFAULT_MAX_ITER).unwrap();
            for j in 0..w.dim() {
                assert!((cold.coefficients[j] - fit.coefficients[j]).abs() <= 10.0 * DEFAULT_TOL);
            }
        }
    }

    #[test]
    fn ties_break_toward_larger_lambda() {
        // pure-noise responses keep the zero fit optimal for every large λ,
        // so the top of the grid scores identically and the largest must win
        let mut rng = ChaCha8Rng::seed_from_u64(10);
        let w = random_window(&mut rng, 30, 5);
        let lmax = lambda_max(&w);
        let grid = LambdaGrid::new(
            vec![2.0 * lmax, 1.5 * lmax, 1.01 * lmax],
            GridAnchor::Absolute,
        )
        .unwrap();
        let (lam, fit) = select_lambda(&w, &grid, SelectionCriterion::Bic).unwrap();
        assert_eq!(lam, 2.0 * lmax);
        assert!(fit.active_set.is_empty());
    }

    #[test]
    fn pure_noise_selects_the_largest_grid_value() {
        // y independent of X with few predictors and many observations:
        // noise dominates and the empty model wins on this fixed seed
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let w = random_window(&mut rng, 100, 3);
        let grid = LambdaGrid::default();
        let (lam, _fit) = select_lambda(&w, &grid, SelectionCriterion::Bic).unwrap();
        let realized = grid.realize(&w).unwrap();
        assert_eq!(lam, realized[0]);
    }

    #[test]
    fn single_element_grid_is_returned() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let w = random_window(&mut rng, 20, 4);
        let grid = LambdaGrid::new(vec![0.5], GridAnchor::RelativeToLambdaMax).unwrap();
        let (lam, _) = select_lambda(&w, &grid, SelectionCriterion::Gcv).unwrap();
        assert!((lam - 0.5 * lambda_max(&w)).abs() < 1e-12);
    }

    #[test]
    fn grid_serde_round_trip_rejects_corrupt_values() {
        let grid = LambdaGrid::default();
        let json = serde_json::to_string(&grid).unwrap();
        let back: LambdaGrid = serde_json::from_str(&json).unwrap();
        assert_eq!(grid, back);

        let bad = r#"{"values":[0.5,1.0],"anchor":"absolute"}"#;
        assert!(serde_json::from_str::<LambdaGrid>(bad).is_err());
    }
}
