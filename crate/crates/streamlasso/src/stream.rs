//! Streaming experiment harness: λ traces over data streams, replicate
//! averaging, unit-interval normalization, relative-change ratios and
//! single/joint parameter sweeps.

use ndarray::{s, ArrayView1, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lasso::ObservationWindow;
use crate::rap::{RapConfig, RapState};
use crate::scenario::{ones_beta, ScenarioSpec, SyntheticDataset};
use crate::selector::{select_lambda, LambdaGrid, SelectionCriterion};

/// How λ is selected along the stream.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Sliding window, BIC-minimizing λ.
    BicWindow,
    /// Sliding window, GCV-minimizing λ.
    GcvWindow,
    /// Recursive gradient tracking of λ.
    Rap,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::BicWindow => "bic",
            Method::GcvWindow => "gcv",
            Method::Rap => "rap",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "bic" | "bic_window" => Ok(Method::BicWindow),
            "gcv" | "gcv_window" => Ok(Method::GcvWindow),
            "rap" => Ok(Method::Rap),
            other => Err(Error::Config(format!(
                "unknown method '{other}' (expected bic, gcv or rap)"
            ))),
        }
    }
}

/// Everything a streaming run needs besides the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StreamConfig {
    pub method: Method,
    /// Length of the sliding window for the windowed methods; also the
    /// settle length used when measuring relative changes.
    pub window_length: usize,
    /// Observations consumed before the trace starts.
    pub burn_in: usize,
    pub grid: LambdaGrid,
    pub rap: RapConfig,
}

impl Default for StreamConfig {
    fn default() -> Self {
        StreamConfig {
            method: Method::BicWindow,
            window_length: 50,
            burn_in: 50,
            grid: LambdaGrid::default(),
            rap: RapConfig::default(),
        }
    }
}

impl StreamConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_length < 2 {
            return Err(Error::InvalidInput(format!(
                "window length must be at least 2, got {}",
                self.window_length
            )));
        }
        match self.method {
            Method::BicWindow | Method::GcvWindow => {
                if self.burn_in < self.window_length {
                    return Err(Error::InvalidInput(format!(
                        "burn-in ({}) must be at least the window length ({}) for windowed methods",
                        self.burn_in, self.window_length
                    )));
                }
            }
            Method::Rap => {
                if self.burn_in < 2 {
                    return Err(Error::InvalidInput(format!(
                        "burn-in must be at least 2 for the recursive tracker, got {}",
                        self.burn_in
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Identifies whose λ values a trace carries.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReplicateTag {
    Replicate(usize),
    Averaged,
}

impl std::fmt::Display for ReplicateTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ReplicateTag::Replicate(k) => write!(f, "{k}"),
            ReplicateTag::Averaged => write!(f, "averaged"),
        }
    }
}

/// A time-indexed sequence of selected λ values.
#[derive(Clone, Debug, PartialEq)]
pub struct LambdaTrace {
    times: Vec<usize>,
    values: Vec<f64>,
    method: Method,
    replicate: ReplicateTag,
    normalized: bool,
}

impl LambdaTrace {
    pub fn new(
        times: Vec<usize>,
        values: Vec<f64>,
        method: Method,
        replicate: ReplicateTag,
        normalized: bool,
    ) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::Dimension(format!(
                "trace has {} times but {} values",
                times.len(),
                values.len()
            )));
        }
        if times.is_empty() {
            return Err(Error::InvalidInput("trace must be nonempty".into()));
        }
        if !times.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::InvalidInput(
                "trace times must be strictly increasing".into(),
            ));
        }
        let ok = if normalized {
            values.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v))
        } else {
            values.iter().all(|v| v.is_finite() && *v > 0.0)
        };
        if !ok {
            return Err(Error::InvalidInput(
                "trace values must be positive (or within [0, 1] once normalized)".into(),
            ));
        }
        Ok(LambdaTrace {
            times,
            values,
            method,
            replicate,
            normalized,
        })
    }

    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn replicate(&self) -> &ReplicateTag {
        &self.replicate
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Same trace under a different replicate tag.
    pub fn tagged(mut self, replicate: ReplicateTag) -> Self {
        self.replicate = replicate;
        self
    }

    /// Mean value over times in `[lo, hi)`. Returns `None` when the range
    /// covers no trace point.
    pub fn mean_over(&self, lo: usize, hi: usize) -> Option<f64> {
        let mut sum = 0.0;
        let mut count = 0usize;
        for (t, v) in self.times.iter().zip(&self.values) {
            if *t >= lo && *t < hi {
                sum += v;
                count += 1;
            }
        }
        (count > 0).then(|| sum / count as f64)
    }
}

/// Streams a λ trace over raw data. For windowed methods each time step
/// `t ≥ burn_in` selects λ on the most recent `window_length` observations
/// with unit weights; for the recursive tracker the burn-in initializes
/// the state and each later observation advances it one step. The trace
/// covers `t = burn_in .. n−1` for every method.
pub fn run_stream(
    predictors: ArrayView2<'_, f64>,
    responses: ArrayView1<'_, f64>,
    config: &StreamConfig,
) -> Result<LambdaTrace> {
    config.validate()?;
    let n = predictors.nrows();
    if responses.len() != n {
        return Err(Error::Dimension(format!(
            "predictors have {n} rows but responses have length {}",
            responses.len()
        )));
    }
    if n <= config.burn_in {
        return Err(Error::InvalidInput(format!(
            "stream length ({n}) must exceed the burn-in ({})",
            config.burn_in
        )));
    }

    let mut times = Vec::with_capacity(n - config.burn_in);
    let mut values = Vec::with_capacity(n - config.burn_in);
    match config.method {
        Method::BicWindow | Method::GcvWindow => {
            let criterion = if config.method == Method::BicWindow {
                SelectionCriterion::Bic
            } else {
                SelectionCriterion::Gcv
            };
            let w = config.window_length;
            for t in config.burn_in..n {
                let lo = t + 1 - w;
                let window = ObservationWindow::unweighted(
                    predictors.slice(s![lo..=t, ..]).to_owned(),
                    responses.slice(s![lo..=t]).to_owned(),
                )
                .and_then(|win| select_lambda(&win, &config.grid, criterion))
                .map_err(|e| Error::Stream {
                    t,
                    source: Box::new(e),
                })?;
                times.push(t);
                values.push(window.0);
            }
        }
        Method::Rap => {
            let burn = ObservationWindow::unweighted(
                predictors.slice(s![..config.burn_in, ..]).to_owned(),
                responses.slice(s![..config.burn_in]).to_owned(),
            )
            .and_then(|win| RapState::init(&win, &config.rap))
            .map_err(|e| Error::Stream {
                t: config.burn_in,
                source: Box::new(e),
            })?;
            let mut state = burn;
            for t in config.burn_in..n {
                let out = state
                    .step(predictors.row(t), responses[t])
                    .map_err(|e| Error::Stream {
                        t,
                        source: Box::new(e),
                    })?;
                state = out.state;
                times.push(t);
                values.push(state.lambda());
            }
        }
    }
    LambdaTrace::new(times, values, config.method, ReplicateTag::Replicate(0), false)
}

/// [`run_stream`] over a generated dataset.
pub fn run_stream_dataset(data: &SyntheticDataset, config: &StreamConfig) -> Result<LambdaTrace> {
    run_stream(data.predictors.view(), data.responses.view(), config)
}

/// Pointwise arithmetic mean of replicate traces. Summation happens in a
/// canonical (sorted) order, so the result does not depend on how the
/// replicates are listed.
pub fn average_traces(traces: &[LambdaTrace]) -> Result<LambdaTrace> {
    let first = traces
        .first()
        .ok_or_else(|| Error::InvalidInput("cannot average zero traces".into()))?;
    for tr in &traces[1..] {
        if tr.times != first.times {
            return Err(Error::Dimension("traces have mismatched time axes".into()));
        }
        if tr.method != first.method || tr.normalized != first.normalized {
            return Err(Error::InvalidInput(
                "traces must share method tag and normalization state".into(),
            ));
        }
    }
    let k = traces.len();
    let mut buf = vec![0.0f64; k];
    let values: Vec<f64> = (0..first.len())
        .map(|i| {
            for (slot, tr) in buf.iter_mut().zip(traces) {
                *slot = tr.values[i];
            }
            buf.sort_unstable_by(f64::total_cmp);
            buf.iter().sum::<f64>() / k as f64
        })
        .collect();
    LambdaTrace::new(
        first.times.clone(),
        values,
        first.method,
        ReplicateTag::Averaged,
        first.normalized,
    )
}

/// Affine map of a trace onto [0, 1]: `(v − min) / (max − min)`. The
/// result attains both endpoints. Constant traces are rejected.
pub fn normalize_unit_interval(trace: &LambdaTrace) -> Result<LambdaTrace> {
    let min = trace.values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = trace.values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(max > min) {
        return Err(Error::Degenerate(
            "cannot normalize a constant trace".into(),
        ));
    }
    let span = max - min;
    let values = trace.values.iter().map(|v| (v - min) / span).collect();
    LambdaTrace::new(
        trace.times.clone(),
        values,
        trace.method,
        trace.replicate.clone(),
        true,
    )
}

/// Ratio of post-change to pre-change steady-state λ levels.
///
/// The pre level averages the `settle` points just before the change; the
/// post level averages everything from `change_point + settle` (skipping
/// the adjustment transient) to the end of the trace.
pub fn relative_change(trace: &LambdaTrace, change_point: usize, settle: usize) -> Result<f64> {
    let start = *trace.times.first().expect("traces are nonempty");
    let end = *trace.times.last().expect("traces are nonempty");
    if change_point < settle || change_point - settle < start {
        return Err(Error::InvalidInput(format!(
            "need {settle} settle points before the change at {change_point}, trace starts at {start}"
        )));
    }
    if change_point + 2 * settle > end {
        return Err(Error::InvalidInput(format!(
            "need 2 x {settle} points after the change at {change_point}, trace ends at {end}"
        )));
    }
    let pre = trace
        .mean_over(change_point - settle, change_point)
        .expect("pre-change range is nonempty");
    let post = trace
        .mean_over(change_point + settle, end + 1)
        .expect("post-change range is nonempty");
    if pre == 0.0 {
        return Err(Error::UndefinedRatio(
            "pre-change mean level is zero".into(),
        ));
    }
    Ok(post / pre)
}

/// A parameter whose post-change value a sweep varies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    /// Post-change residual standard deviation σ₂.
    Sigma2,
    /// Post-change active-set size q₂ (coefficients are the ones pattern).
    Q2,
    /// Post-change predictor correlation ρ₂.
    Rho2,
}

impl SweepAxis {
    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::Sigma2 => "sigma2",
            SweepAxis::Q2 => "q2",
            SweepAxis::Rho2 => "rho2",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "sigma2" => Ok(SweepAxis::Sigma2),
            "q2" => Ok(SweepAxis::Q2),
            "rho2" => Ok(SweepAxis::Rho2),
            other => Err(Error::Config(format!(
                "unknown sweep axis '{other}' (expected sigma2, q2 or rho2)"
            ))),
        }
    }

    /// Base spec with this axis's post-change value replaced.
    fn apply(self, base: &ScenarioSpec, value: f64) -> Result<ScenarioSpec> {
        let mut spec = base.clone();
        match self {
            SweepAxis::Sigma2 => spec.schedule.sigma.1 = value,
            SweepAxis::Rho2 => spec.schedule.rho.1 = value,
            SweepAxis::Q2 => {
                let q = value.round();
                if (value - q).abs() > 1e-9 || q < 1.0 || q > spec.p as f64 {
                    return Err(Error::InvalidInput(format!(
                        "q2 must be an integer in 1..={}, got {value}",
                        spec.p
                    )));
                }
                spec.schedule.beta.1 = ones_beta(spec.p, q as usize);
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

/// One sweep cell: the headline ratio (relative change of the averaged
/// trace) plus the standard error of the per-replicate ratios.
#[derive(Clone, Copy, Debug, Serialize, Deserialize)]
pub struct GridCell {
    pub mean_ratio: f64,
    pub std_error: f64,
}

/// Mean λ₂/λ₁ ratios over a 1-D or 2-D sweep of post-change parameters.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RelativeChangeGrid {
    axis1_name: String,
    axis1_values: Vec<f64>,
    axis2_name: Option<String>,
    axis2_values: Option<Vec<f64>>,
    /// Row-major over (axis1, axis2); length axis1 × axis2 (or axis1).
    cells: Vec<GridCell>,
    replicates: usize,
}

impl RelativeChangeGrid {
    pub fn axis1_name(&self) -> &str {
        &self.axis1_name
    }

    pub fn axis1_values(&self) -> &[f64] {
        &self.axis1_values
    }

    pub fn axis2_name(&self) -> Option<&str> {
        self.axis2_name.as_deref()
    }

    pub fn axis2_values(&self) -> Option<&[f64]> {
        self.axis2_values.as_deref()
    }

    pub fn cells(&self) -> &[GridCell] {
        &self.cells
    }

    pub fn replicates(&self) -> usize {
        self.replicates
    }

    /// Cell at (axis1 index, axis2 index); the second index must be 0 for
    /// 1-D sweeps.
    pub fn cell(&self, i: usize, j: usize) -> GridCell {
        let cols = self.axis2_values.as_ref().map_or(1, |v| v.len());
        self.cells[i * cols + j]
    }
}

fn sweep_cell(
    base: &ScenarioSpec,
    config: &StreamConfig,
    replicates: usize,
) -> Result<GridCell> {
    let traces: Vec<LambdaTrace> = (0..replicates)
        .into_par_iter()
        .map(|k| {
            let mut spec = base.clone();
            spec.seed = base.seed + k as u64;
            let data = spec.generate()?;
            run_stream_dataset(&data, config).map(|tr| tr.tagged(ReplicateTag::Replicate(k)))
        })
        .collect::<Result<_>>()?;
    let settle = config.window_length;
    let cp = base.schedule.change_point;
    let averaged = average_traces(&traces)?;
    let mean_ratio = relative_change(&averaged, cp, settle)?;
    let per_replicate: Vec<f64> = traces
        .iter()
        .map(|tr| relative_change(tr, cp, settle))
        .collect::<Result<_>>()?;
    let std_error = if replicates > 1 {
        let mean = per_replicate.iter().sum::<f64>() / replicates as f64;
        let var = per_replicate
            .iter()
            .map(|r| (r - mean) * (r - mean))
            .sum::<f64>()
            / (replicates - 1) as f64;
        (var / replicates as f64).sqrt()
    } else {
        0.0
    };
    Ok(GridCell {
        mean_ratio,
        std_error,
    })
}

fn validate_sweep_inputs(replicates: usize, values: &[f64]) -> Result<()> {
    if replicates == 0 {
        return Err(Error::InvalidInput("need at least one replicate".into()));
    }
    if values.is_empty() {
        return Err(Error::InvalidInput("sweep needs at least one value".into()));
    }
    Ok(())
}

/// Sweeps one post-change parameter. Replicate `k` of every cell draws
/// from seed `base.seed + k`, so cells share their pre-change randomness.
pub fn sweep_single(
    base: &ScenarioSpec,
    axis: SweepAxis,
    values: &[f64],
    config: &StreamConfig,
    replicates: usize,
) -> Result<RelativeChangeGrid> {
    validate_sweep_inputs(replicates, values)?;
    config.validate()?;
    base.validate()?;
    let mut cells = Vec::with_capacity(values.len());
    for &v in values {
        let spec = axis.apply(base, v)?;
        cells.push(sweep_cell(&spec, config, replicates)?);
    }
    Ok(RelativeChangeGrid {
        axis1_name: axis.name().to_string(),
        axis1_values: values.to_vec(),
        axis2_name: None,
        axis2_values: None,
        cells,
        replicates,
    })
}

/// Sweeps two post-change parameters over their full Cartesian grid,
/// row-major in (axis1, axis2).
pub fn sweep_joint(
    base: &ScenarioSpec,
    axis1: SweepAxis,
    values1: &[f64],
    axis2: SweepAxis,
    values2: &[f64],
    config: &StreamConfig,
    replicates: usize,
) -> Result<RelativeChangeGrid> {
    if axis1 == axis2 {
        return Err(Error::InvalidInput(
            "joint sweep axes must be distinct".into(),
        ));
    }
    validate_sweep_inputs(replicates, values1)?;
    validate_sweep_inputs(replicates, values2)?;
    config.validate()?;
    base.validate()?;
    let mut cells = Vec::with_capacity(values1.len() * values2.len());
    for &v1 in values1 {
        let row_base = axis1.apply(base, v1)?;
        for &v2 in values2 {
            let spec = axis2.apply(&row_base, v2)?;
            cells.push(sweep_cell(&spec, config, replicates)?);
        }
    }
    Ok(RelativeChangeGrid {
        axis1_name: axis1.name().to_string(),
        axis1_values: values1.to_vec(),
        axis2_name: Some(axis2.name().to_string()),
        axis2_values: Some(values2.to_vec()),
        cells,
        replicates,
    })
}
