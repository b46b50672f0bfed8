//! Piecewise-stationary synthetic regression streams.
//!
//! Observations follow `y_t = x_tᵀ β_t + ε_t` with `ε_t ~ N(0, σ_t²)` and
//! predictor rows drawn from `N_p(0, Σ_t)`, where Σ has the AR(1)-style
//! Toeplitz structure `σ_ij = ρ^{|i−j|}`. Each of σ, ρ and β can switch
//! value once, at the change point `t*`. Generation is a pure function of
//! the spec: the RNG is a seeded ChaCha stream that draws, per time step,
//! the `p` predictor normals followed by the noise normal.

use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg;

/// AR(1)-structured predictor covariance: entry (i, j) is `ρ^{|i−j|}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CovarianceSpec {
    pub rho: f64,
    pub p: usize,
}

impl CovarianceSpec {
    pub fn new(rho: f64, p: usize) -> Result<Self> {
        if !(rho.is_finite() && rho.abs() < 1.0) {
            return Err(Error::InvalidInput(format!(
                "correlation parameter must satisfy |rho| < 1, got {rho}"
            )));
        }
        if p == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        Ok(CovarianceSpec { rho, p })
    }

    /// Lower Cholesky factor of the implied Toeplitz matrix.
    pub fn cholesky_factor(&self) -> Result<Array2<f64>> {
        let cov = toeplitz_covariance(self)?;
        let flat = cov.as_slice().expect("owned matrix");
        let l = linalg::cholesky(flat, self.p).ok_or_else(|| {
            Error::Degenerate(format!(
                "Toeplitz covariance with rho = {} is not positive definite",
                self.rho
            ))
        })?;
        Ok(Array2::from_shape_vec((self.p, self.p), l).expect("square factor"))
    }
}

/// The full Toeplitz covariance matrix implied by a [`CovarianceSpec`].
pub fn toeplitz_covariance(spec: &CovarianceSpec) -> Result<Array2<f64>> {
    CovarianceSpec::new(spec.rho, spec.p)?;
    let p = spec.p;
    Ok(Array2::from_shape_fn((p, p), |(i, j)| {
        spec.rho.powi((i as i32 - j as i32).abs())
    }))
}

/// One mean-zero Gaussian predictor row with the Toeplitz covariance,
/// drawn by Cholesky transform of i.i.d. standard normals.
pub fn sample_predictor_row<R: Rng>(rng: &mut R, cov: &CovarianceSpec) -> Result<Array1<f64>> {
    let factor = cov.cholesky_factor()?;
    Ok(row_from_factor(rng, &factor))
}

fn row_from_factor<R: Rng>(rng: &mut R, factor: &Array2<f64>) -> Array1<f64> {
    let p = factor.nrows();
    let z: Vec<f64> = (0..p).map(|_| rng.sample(StandardNormal)).collect();
    let flat = factor.as_slice().expect("owned factor");
    Array1::from_shape_fn(p, |i| linalg::dot(&flat[i * p..i * p + i + 1], &z[..i + 1]))
}

/// Pre/post values for everything that can switch at the change point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PiecewiseSchedule {
    /// Time index at which the post values take over (`t ≥ change_point`).
    pub change_point: usize,
    /// Residual standard deviation (pre, post); zero means noiseless.
    pub sigma: (f64, f64),
    /// Predictor correlation parameter (pre, post).
    pub rho: (f64, f64),
    /// True coefficient vectors (pre, post), each of length p.
    pub beta: (Vec<f64>, Vec<f64>),
}

/// Coefficient vector whose first `q` entries are 1 and the rest 0: the
/// pattern used by active-set-size schedules.
pub fn ones_beta(p: usize, q: usize) -> Vec<f64> {
    assert!(q <= p, "active size q = {q} exceeds dimension p = {p}");
    let mut beta = vec![0.0; p];
    for b in beta.iter_mut().take(q) {
        *b = 1.0;
    }
    beta
}

/// Complete parameterization of one synthetic stream.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub n: usize,
    pub p: usize,
    pub schedule: PiecewiseSchedule,
    pub seed: u64,
}

impl ScenarioSpec {
    pub fn new(n: usize, p: usize, schedule: PiecewiseSchedule, seed: u64) -> Result<Self> {
        let spec = ScenarioSpec {
            n,
            p,
            schedule,
            seed,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// A stationary stream: no change at `t*` (the schedule still carries
    /// a nominal change point at n/2 so sweeps can override post values).
    pub fn stationary(n: usize, p: usize, sigma: f64, rho: f64, q: usize, seed: u64) -> Result<Self> {
        let beta = ones_beta(p, q);
        ScenarioSpec::new(
            n,
            p,
            PiecewiseSchedule {
                change_point: n / 2,
                sigma: (sigma, sigma),
                rho: (rho, rho),
                beta: (beta.clone(), beta),
            },
            seed,
        )
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidInput(format!(
                "need at least 2 observations, got {}",
                self.n
            )));
        }
        if self.p == 0 {
            return Err(Error::InvalidInput("dimension must be at least 1".into()));
        }
        let s = &self.schedule;
        if s.change_point == 0 || s.change_point >= self.n {
            return Err(Error::InvalidInput(format!(
                "change point must satisfy 0 < t* < n, got t* = {} with n = {}",
                s.change_point, self.n
            )));
        }
        for (name, v) in [("sigma1", s.sigma.0), ("sigma2", s.sigma.1)] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        for (name, v) in [("rho1", s.rho.0), ("rho2", s.rho.1)] {
            if !v.is_finite() || v.abs() >= 1.0 {
                return Err(Error::InvalidInput(format!(
                    "{name} must satisfy |rho| < 1, got {v}"
                )));
            }
        }
        for (name, b) in [("beta1", &s.beta.0), ("beta2", &s.beta.1)] {
            if b.len() != self.p {
                return Err(Error::Dimension(format!(
                    "{name} has length {} but p = {}",
                    b.len(),
                    self.p
                )));
            }
            if !b.iter().all(|v| v.is_finite()) {
                return Err(Error::NonFinite(name.into()));
            }
        }
        Ok(())
    }

    /// Coefficients in force at time `t`.
    pub fn beta_at(&self, t: usize) -> &[f64] {
        if t < self.schedule.change_point {
            &self.schedule.beta.0
        } else {
            &self.schedule.beta.1
        }
    }

    /// Residual standard deviation in force at time `t`.
    pub fn sigma_at(&self, t: usize) -> f64 {
        if t < self.schedule.change_point {
            self.schedule.sigma.0
        } else {
            self.schedule.sigma.1
        }
    }

    /// Correlation parameter in force at time `t`.
    pub fn rho_at(&self, t: usize) -> f64 {
        if t < self.schedule.change_point {
            self.schedule.rho.0
        } else {
            self.schedule.rho.1
        }
    }

    /// Draws the full stream. Identical specs give bit-identical data.
    pub fn generate(&self) -> Result<SyntheticDataset> {
        self.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let pre_factor = CovarianceSpec::new(self.schedule.rho.0, self.p)?.cholesky_factor()?;
        let post_factor = if self.schedule.rho.1 == self.schedule.rho.0 {
            pre_factor.clone()
        } else {
            CovarianceSpec::new(self.schedule.rho.1, self.p)?.cholesky_factor()?
        };

        let mut predictors = Array2::zeros((self.n, self.p));
        let mut responses = Array1::zeros(self.n);
        for t in 0..self.n {
            let factor = if t < self.schedule.change_point {
                &pre_factor
            } else {
                &post_factor
            };
            let row = row_from_factor(&mut rng, factor);
            let noise: f64 = rng.sample::<f64, _>(StandardNormal) * self.sigma_at(t);
            let beta = self.beta_at(t);
            let mut fitted = 0.0;
            for j in 0..self.p {
                predictors[[t, j]] = row[j];
                fitted += row[j] * beta[j];
            }
            responses[t] = fitted + noise;
        }
        Ok(SyntheticDataset {
            predictors,
            responses,
            truth: self.clone(),
        })
    }
}

/// A generated stream together with the spec that produced it.
#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub predictors: Array2<f64>,
    pub responses: Array1<f64>,
    pub truth: ScenarioSpec,
}

impl SyntheticDataset {
    pub fn len(&self) -> usize {
        self.predictors.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Noise realizations `y_t − x_tᵀ β_t` under the generating truth.
    pub fn true_residuals(&self) -> Array1<f64> {
        Array1::from_shape_fn(self.len(), |t| {
            let beta = self.truth.beta_at(t);
            let fitted: f64 = (0..self.truth.p).map(|j| self.predictors[[t, j]] * beta[j]).sum();
            self.responses[t] - fitted
        })
    }
}
