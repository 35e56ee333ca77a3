//! Time-budget-optimal experiment design.
//!
//! Linearizes a model around a reference point, then finds the estimator
//! coefficients C_n and trial weights w_n that minimize the variance of
//! the linear estimator of one target parameter subject to a constraint
//! on total experiment time. The coefficient optimization is a linear
//! program (split positive/negative parts to handle |C_n|); the weight
//! optimization has a closed form from its Lagrange conditions:
//!
//!     w_n = |C_n| sqrt(u_n) / (sqrt(lambda) sqrt(t_n)),
//!     V_opt = (sum_n |C_n| sqrt(u_n t_n))^2 / T.
//!
//! Also provides the optimal linear estimator for a *fixed* design
//! (c = Q^{-1} E^T (E Q^{-1} E^T)^{-1} d with Q_nn = u_n / w_n) and the
//! Fisher information, whose inverse equals the estimator covariance.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::linalg::{invert_small, DenseMatrix, LinalgError};
use crate::model::{Model, ModelError};
use crate::simplex::{simplex_solve, LpStandardForm, LpStatus, SimplexError};

#[derive(Debug, Error)]
pub enum DesignError {
    #[error("design is infeasible: {0}")]
    DesignInfeasible(String),
    #[error("no candidate length has usable variance at the reference point")]
    NoUsableLengths,
    #[error("all estimator coefficients are zero")]
    ZeroEstimator,
    #[error("length {0} is not part of the linearized model")]
    LengthNotLinearized(u64),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Simplex(#[from] SimplexError),
}

/// Map from sequence length to a (real-valued) trial weight.
pub type WeightMap = BTreeMap<u64, f64>;

/// Wall-clock cost of running one trial at each sequence length.
#[derive(Debug, Clone)]
pub struct TimeModel {
    spam_time: f64,
    step_time: f64,
    explicit: Option<BTreeMap<u64, f64>>,
}

impl TimeModel {
    /// t_n = spam_time + n * step_time.
    pub fn affine(spam_time: f64, step_time: f64) -> Result<Self, DesignError> {
        if !(spam_time > 0.0) || !(step_time > 0.0) {
            return Err(DesignError::Invalid("trial times must be positive".into()));
        }
        Ok(Self { spam_time, step_time, explicit: None })
    }

    /// Explicit per-length times overriding the affine form.
    pub fn explicit(times: BTreeMap<u64, f64>) -> Result<Self, DesignError> {
        if times.is_empty() || times.values().any(|&t| !(t > 0.0)) {
            return Err(DesignError::Invalid("explicit times must be positive".into()));
        }
        Ok(Self { spam_time: 0.0, step_time: 0.0, explicit: Some(times) })
    }

    pub fn spam_time(&self) -> f64 {
        self.spam_time
    }

    pub fn step_time(&self) -> f64 {
        self.step_time
    }

    pub fn trial_time(&self, n: u64) -> Result<f64, DesignError> {
        match &self.explicit {
            Some(map) => map
                .get(&n)
                .copied()
                .ok_or_else(|| DesignError::Invalid(format!("no explicit time for length {n}"))),
            None => Ok(self.spam_time + n as f64 * self.step_time),
        }
    }
}

/// Model linearized around a reference point on a set of candidate
/// lengths: gradient rows E, reference probabilities p0, and per-trial
/// binomial variances u = p0 (1 - p0). Lengths where p0 hits 0 or 1 carry
/// no information about small parameter changes and are dropped.
#[derive(Debug, Clone)]
pub struct LinearizedModel {
    model: Model,
    reference: Vec<f64>,
    lengths: Vec<u64>,
    gradients: DenseMatrix,
    p0: Vec<f64>,
    u: Vec<f64>,
    dropped: Vec<u64>,
}

impl LinearizedModel {
    pub fn model(&self) -> &Model {
        &self.model
    }

    pub fn reference(&self) -> &[f64] {
        &self.reference
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    /// Gradient row L_{n,.} for the i-th kept length.
    pub fn gradient_row(&self, i: usize) -> &[f64] {
        self.gradients.row(i)
    }

    pub fn p0(&self) -> &[f64] {
        &self.p0
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn dropped(&self) -> &[u64] {
        &self.dropped
    }

    /// Number of parameters in the linearization (the gradient width;
    /// equals the model's parameter count unless assembled from custom
    /// reduced rows).
    pub fn param_count(&self) -> usize {
        self.gradients.cols()
    }

    fn index_of(&self, n: u64) -> Result<usize, DesignError> {
        self.lengths
            .binary_search(&n)
            .map_err(|_| DesignError::LengthNotLinearized(n))
    }

    /// Assemble a linearization directly from rows; intended for custom
    /// (e.g. reduced-parameter) linear models.
    pub fn from_parts(
        model: Model,
        reference: Vec<f64>,
        lengths: Vec<u64>,
        gradients: DenseMatrix,
        p0: Vec<f64>,
    ) -> Result<Self, DesignError> {
        if lengths.len() != gradients.rows() || lengths.len() != p0.len() {
            return Err(DesignError::Invalid("mismatched linearization parts".into()));
        }
        if lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(DesignError::Invalid("lengths must be strictly increasing".into()));
        }
        let u = p0.iter().map(|&p| p * (1.0 - p)).collect();
        Ok(Self { model, reference, lengths, gradients, p0, u, dropped: Vec::new() })
    }
}

/// Linearize `model` around `reference` at the given candidate lengths.
pub fn linearize(
    model: &Model,
    reference: &[f64],
    lengths: &[u64],
) -> Result<LinearizedModel, DesignError> {
    if lengths.is_empty() {
        return Err(DesignError::Invalid("no candidate lengths".into()));
    }
    model.validate_params(reference)?;
    let mut sorted = lengths.to_vec();
    sorted.sort_unstable();
    sorted.dedup();

    let p = model.param_count();
    let mut kept = Vec::new();
    let mut rows: Vec<f64> = Vec::new();
    let mut p0 = Vec::new();
    let mut u = Vec::new();
    let mut dropped = Vec::new();
    for &n in &sorted {
        let prob = model.success_probability(reference, n)?;
        if prob <= 0.0 || prob >= 1.0 {
            dropped.push(n);
            continue;
        }
        let grad = model.gradient(reference, n)?;
        kept.push(n);
        rows.extend_from_slice(&grad);
        p0.push(prob);
        u.push(prob * (1.0 - prob));
    }
    if kept.is_empty() {
        return Err(DesignError::NoUsableLengths);
    }
    let gradients = DenseMatrix::new(kept.len(), p, rows)?;
    Ok(LinearizedModel {
        model: model.clone(),
        reference: reference.to_vec(),
        lengths: kept,
        gradients,
        p0,
        u,
        dropped,
    })
}

/// A complete optimized design: estimator coefficients on their support,
/// real and integer trial weights, and the anticipated variance.
#[derive(Debug, Clone)]
pub struct OptimizedDesign {
    pub target_index: usize,
    pub coefficients: BTreeMap<u64, f64>,
    pub weights_real: WeightMap,
    pub weights_int: BTreeMap<u64, u64>,
    pub v_opt: f64,
    pub anticipated_sigma: f64,
    /// Total time of the real-valued design (equals the requested budget).
    pub total_time: f64,
    /// Total time after rounding trial counts to integers.
    pub rounded_total_time: f64,
    pub warnings: Vec<String>,
}

/// Options for [`optimize_design`].
#[derive(Debug, Clone)]
pub struct OptimizeOptions {
    /// Trial counts are rounded to a multiple of this.
    pub round_multiple: u64,
}

impl Default for OptimizeOptions {
    fn default() -> Self {
        Self { round_multiple: 1 }
    }
}

/// Objective-relative threshold below which an LP coefficient is treated
/// as off the design support.
const SUPPORT_TOL: f64 = 1e-12;

/// Solve the C-optimal design problem on the candidate lengths of `lin`.
pub fn optimize_design(
    lin: &LinearizedModel,
    time: &TimeModel,
    t_total: f64,
    target_index: usize,
    opts: &OptimizeOptions,
) -> Result<OptimizedDesign, DesignError> {
    if !(t_total > 0.0) {
        return Err(DesignError::Invalid("total time must be positive".into()));
    }
    let p = lin.param_count();
    if target_index >= p {
        return Err(DesignError::Invalid(format!(
            "target index {target_index} out of range for {p} parameters"
        )));
    }
    let n_cand = lin.lengths.len();
    let mut omega = Vec::with_capacity(n_cand);
    for (i, &n) in lin.lengths.iter().enumerate() {
        let t = time.trial_time(n)?;
        omega.push((lin.u[i] * t).sqrt());
    }

    // Columns are scaled by omega so the LP sees unit costs, and
    // constraint rows are equilibrated to unit max magnitude; both
    // rescalings are undone on output.
    let mut row_scale = vec![0.0_f64; p];
    for i in 0..n_cand {
        let row = lin.gradients.row(i);
        for (k, &g) in row.iter().enumerate() {
            row_scale[k] = row_scale[k].max((g / omega[i]).abs());
        }
    }
    for s in row_scale.iter_mut() {
        if *s <= 0.0 {
            *s = 1.0;
        }
    }

    let ncols = 2 * n_cand;
    let mut a = DenseMatrix::zeros(p, ncols);
    for i in 0..n_cand {
        let row = lin.gradients.row(i);
        for k in 0..p {
            let v = row[k] / omega[i] / row_scale[k];
            a[(k, i)] = v;
            a[(k, n_cand + i)] = -v;
        }
    }
    let mut rhs = vec![0.0; p];
    rhs[target_index] = 1.0 / row_scale[target_index];
    let lp = LpStandardForm::new(vec![1.0; ncols], a, rhs)?;
    let sol = simplex_solve(&lp)?;
    match sol.status {
        LpStatus::Optimal => {}
        LpStatus::Infeasible => {
            return Err(DesignError::DesignInfeasible(
                "estimator constraints cannot be satisfied on the candidate lengths".into(),
            ));
        }
        LpStatus::Unbounded => {
            return Err(DesignError::DesignInfeasible("LP unbounded".into()));
        }
    }

    let mut coefficients = BTreeMap::new();
    let objective: f64 = sol.objective_value;
    for i in 0..n_cand {
        let c = (sol.x[i] - sol.x[n_cand + i]) / omega[i];
        if c.abs() * omega[i] > SUPPORT_TOL * objective.max(1e-300) {
            coefficients.insert(lin.lengths[i], c);
        }
    }
    if coefficients.is_empty() {
        return Err(DesignError::ZeroEstimator);
    }

    let weights_real = optimal_weights(&coefficients, lin, time, t_total)?;
    let f_sum: f64 = coefficients
        .iter()
        .map(|(&n, &c)| {
            let i = lin.index_of(n).expect("support came from lin");
            c.abs() * omega[i]
        })
        .sum();
    let v_opt = f_sum * f_sum / t_total;

    let mut rounded = round_trials(&weights_real, opts.round_multiple);
    // Restore the time budget by adjusting the count at the cheapest
    // support length, where the granularity is finest.
    let mut rounded_total_time = 0.0;
    for (&n, &w) in &rounded.counts {
        rounded_total_time += w as f64 * time.trial_time(n)?;
    }
    if let Some((&n_adj, _)) = rounded
        .counts
        .iter()
        .min_by(|a, b| {
            let ta = time.trial_time(*a.0).unwrap_or(f64::INFINITY);
            let tb = time.trial_time(*b.0).unwrap_or(f64::INFINITY);
            ta.partial_cmp(&tb).unwrap()
        })
    {
        let t_adj = time.trial_time(n_adj)?;
        let gap = t_total - rounded_total_time;
        let step = opts.round_multiple.max(1) as f64 * t_adj;
        let units = (gap / step).round() as i64;
        if units != 0 {
            let w = rounded.counts.get_mut(&n_adj).unwrap();
            let delta = units * opts.round_multiple.max(1) as i64;
            let new_w = (*w as i64 + delta).max(0) as u64;
            rounded_total_time += (new_w as f64 - *w as f64) * t_adj;
            *w = new_w;
        }
    }

    Ok(OptimizedDesign {
        target_index,
        coefficients,
        weights_real,
        weights_int: rounded.counts,
        v_opt,
        anticipated_sigma: v_opt.sqrt(),
        total_time: t_total,
        rounded_total_time,
        warnings: rounded.warnings,
    })
}

/// Closed-form optimal weights for fixed estimator coefficients:
/// w_n proportional to |C_n| sqrt(u_n / t_n), normalized to the budget.
pub fn optimal_weights(
    coefficients: &BTreeMap<u64, f64>,
    lin: &LinearizedModel,
    time: &TimeModel,
    t_total: f64,
) -> Result<WeightMap, DesignError> {
    let mut f_sum = 0.0;
    let mut raw = Vec::new();
    for (&n, &c) in coefficients {
        let i = lin.index_of(n)?;
        let t = time.trial_time(n)?;
        f_sum += c.abs() * (lin.u[i] * t).sqrt();
        raw.push((n, c.abs() * (lin.u[i] / t).sqrt()));
    }
    if f_sum <= 0.0 {
        return Err(DesignError::ZeroEstimator);
    }
    // sqrt(lambda) = f_sum / T, so w_n = |C_n| sqrt(u_n/t_n) * T / f_sum,
    // which satisfies sum w_n t_n = T identically.
    let scale = t_total / f_sum;
    Ok(raw.into_iter().map(|(n, v)| (n, v * scale)).collect())
}

#[derive(Debug, Clone)]
pub struct RoundedTrials {
    pub counts: BTreeMap<u64, u64>,
    pub warnings: Vec<String>,
}

/// Round real trial weights to the nearest multiple of `multiple`. A
/// strictly positive weight of at least half a multiple never rounds to
/// zero; anything smaller does, with a warning.
pub fn round_trials(weights: &WeightMap, multiple: u64) -> RoundedTrials {
    let m = multiple.max(1);
    let mf = m as f64;
    let mut counts = BTreeMap::new();
    let mut warnings = Vec::new();
    for (&n, &w) in weights {
        debug_assert!(w >= 0.0);
        let units = (w / mf).round() as u64;
        if units == 0 && w > 0.0 {
            warnings.push(format!(
                "length {n}: weight {w:.3} is below half a multiple of {m}; rounded to zero"
            ));
        }
        let rounded = units * m;
        if rounded > 0 {
            counts.insert(n, rounded);
        } else {
            counts.insert(n, 0);
        }
    }
    RoundedTrials { counts, warnings }
}

/// Optimal linear estimators for every parameter on a fixed design.
#[derive(Debug, Clone)]
pub struct OptimalLinearEstimator {
    /// Lengths with positive weight, in increasing order.
    pub lengths: Vec<u64>,
    /// Coefficient matrix M; column i holds the estimator for parameter i.
    pub coefficients: DenseMatrix,
    /// Covariance of the estimators, computed as M^T Q M.
    pub covariance: DenseMatrix,
}

/// Compute M = Q^{-1} E (E^T Q^{-1} E)^{-1} with Q_nn = u_n / w_n, where
/// E rows are the gradient rows of the linearization restricted to the
/// design support.
pub fn optimal_linear_estimator(
    weights: &WeightMap,
    lin: &LinearizedModel,
) -> Result<OptimalLinearEstimator, DesignError> {
    let p = lin.param_count();
    let mut lengths = Vec::new();
    let mut idx = Vec::new();
    let mut q_diag = Vec::new();
    for (&n, &w) in weights {
        if w <= 0.0 {
            continue;
        }
        let i = lin.index_of(n)?;
        lengths.push(n);
        idx.push(i);
        q_diag.push(lin.u[i] / w);
    }
    if lengths.len() < p {
        return Err(DesignError::DesignInfeasible(format!(
            "design supports {} lengths but the model has {p} parameters",
            lengths.len()
        )));
    }
    // W = E^T Q^{-1} E, inverted after diagonal equilibration since
    // gradient columns can differ by many orders of magnitude.
    let mut w_mat = DenseMatrix::zeros(p, p);
    for (row, &i) in idx.iter().enumerate() {
        let g = lin.gradients.row(i);
        let qinv = 1.0 / q_diag[row];
        for a in 0..p {
            for b in 0..p {
                w_mat[(a, b)] += qinv * g[a] * g[b];
            }
        }
    }
    let scale: Vec<f64> = (0..p)
        .map(|a| {
            let d = w_mat[(a, a)];
            if d > 0.0 {
                d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let mut w_scaled = DenseMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            w_scaled[(a, b)] = w_mat[(a, b)] / (scale[a] * scale[b]);
        }
    }
    let w_inv_scaled = invert_small(&w_scaled).map_err(|e| match e {
        LinalgError::SingularMatrix { .. } => DesignError::DesignInfeasible(
            "design does not identify all parameters (rank-deficient gradient matrix)".into(),
        ),
        other => DesignError::Linalg(other),
    })?;
    let mut w_inv = DenseMatrix::zeros(p, p);
    for a in 0..p {
        for b in 0..p {
            w_inv[(a, b)] = w_inv_scaled[(a, b)] / (scale[a] * scale[b]);
        }
    }
    // M = Q^{-1} E W^{-1}
    let mut m = DenseMatrix::zeros(lengths.len(), p);
    for (row, &i) in idx.iter().enumerate() {
        let g = lin.gradients.row(i);
        let qinv = 1.0 / q_diag[row];
        for a in 0..p {
            let mut acc = 0.0;
            for b in 0..p {
                acc += g[b] * w_inv[(b, a)];
            }
            m[(row, a)] = qinv * acc;
        }
    }
    // V = M^T Q M
    let mut cov = DenseMatrix::zeros(p, p);
    for row in 0..lengths.len() {
        let q = q_diag[row];
        for a in 0..p {
            for b in 0..p {
                cov[(a, b)] += m[(row, a)] * q * m[(row, b)];
            }
        }
    }
    Ok(OptimalLinearEstimator { lengths, coefficients: m, covariance: cov })
}

/// Fisher information of a design: F = sum_n w_n g_n g_n^T / u_n.
pub fn fisher_information(
    weights: &WeightMap,
    lin: &LinearizedModel,
) -> Result<DenseMatrix, DesignError> {
    let p = lin.param_count();
    let mut f = DenseMatrix::zeros(p, p);
    for (&n, &w) in weights {
        if w <= 0.0 {
            continue;
        }
        let i = lin.index_of(n)?;
        let g = lin.gradients.row(i);
        let scale = w / lin.u[i];
        for a in 0..p {
            for b in 0..p {
                f[(a, b)] += scale * g[a] * g[b];
            }
        }
    }
    Ok(f)
}

/// Anticipated standard deviation of one parameter's optimal linear
/// estimator on a fixed design.
pub fn anticipated_sigma_for_weights(
    weights: &WeightMap,
    lin: &LinearizedModel,
    target_index: usize,
) -> Result<f64, DesignError> {
    let est = optimal_linear_estimator(weights, lin)?;
    Ok(est.covariance[(target_index, target_index)].sqrt())
}

/// Candidate grids switch from exhaustive to log-spaced above this size.
pub const FULL_GRID_LIMIT: u64 = 10_000;
const LOG_GRID_POINTS: usize = 5_000;
/// Relative half-width of the local refinement pass around LP support.
const REFINE_FRACTION: f64 = 0.02;

/// Integer candidate lengths for the design LP: all of 1..=n_max when
/// small enough, otherwise a log-spaced subset.
pub fn candidate_grid(n_max: u64) -> Vec<u64> {
    if n_max <= FULL_GRID_LIMIT {
        return (1..=n_max).collect();
    }
    let ln_max = (n_max as f64).ln();
    let mut grid: Vec<u64> = (0..LOG_GRID_POINTS)
        .map(|i| {
            let x = ln_max * i as f64 / (LOG_GRID_POINTS - 1) as f64;
            (x.exp().round() as u64).clamp(1, n_max)
        })
        .collect();
    grid.sort_unstable();
    grid.dedup();
    grid
}

/// Default maximum sequence length: twice the decay scale 1/(alpha *
/// theta1) at the reference point.
pub fn default_n_max(model: &Model, reference: &[f64]) -> Result<u64, DesignError> {
    use crate::model::ModelKind;
    match model.kind() {
        ModelKind::General { n_set } => Ok(*n_set.last().expect("nonempty by construction")),
        _ => {
            let theta1 = reference
                .get(1)
                .copied()
                .ok_or_else(|| DesignError::Invalid("reference too short".into()))?;
            if theta1 <= 0.0 {
                return Err(DesignError::Invalid(
                    "cannot derive a maximum length from a zero step error; pass n_max explicitly"
                        .into(),
                ));
            }
            Ok((2.0 / (model.dim().alpha() * theta1)).ceil() as u64)
        }
    }
}

/// High-level design entry point: build the candidate grid, linearize,
/// solve the LP, and (for coarse grids) refine locally around the support
/// and re-solve.
pub fn design_experiment(
    model: &Model,
    reference: &[f64],
    time: &TimeModel,
    t_total: f64,
    target_index: usize,
    n_max: Option<u64>,
    opts: &OptimizeOptions,
) -> Result<OptimizedDesign, DesignError> {
    let n_max = match n_max {
        Some(n) => n,
        None => default_n_max(model, reference)?,
    };
    design_on_grid(model, reference, time, t_total, target_index, n_max, &[], opts)
}

#[allow(clippy::too_many_arguments)]
fn design_on_grid(
    model: &Model,
    reference: &[f64],
    time: &TimeModel,
    t_total: f64,
    target_index: usize,
    n_max: u64,
    extra_candidates: &[u64],
    opts: &OptimizeOptions,
) -> Result<OptimizedDesign, DesignError> {
    let mut grid = candidate_grid(n_max);
    grid.extend(extra_candidates.iter().copied().filter(|&n| n >= 1));
    grid.sort_unstable();
    grid.dedup();
    let lin = linearize(model, reference, &grid)?;
    let design = optimize_design(&lin, time, t_total, target_index, opts)?;
    if n_max <= FULL_GRID_LIMIT {
        return Ok(design);
    }
    // Refinement: add every integer within +-2% of each support length.
    let mut refined = grid;
    for &n in design.coefficients.keys() {
        let lo = ((n as f64 * (1.0 - REFINE_FRACTION)).floor() as u64).max(1);
        let hi = ((n as f64 * (1.0 + REFINE_FRACTION)).ceil() as u64).min(n_max);
        refined.extend(lo..=hi);
    }
    refined.sort_unstable();
    refined.dedup();
    let lin2 = linearize(model, reference, &refined)?;
    optimize_design(&lin2, time, t_total, target_index, opts)
}

/// Specification of a uniform comparison design: `count` evenly spaced
/// lengths covering [min_length, max_length], equal trials per length.
#[derive(Debug, Clone)]
pub struct UniformSpec {
    pub count: usize,
    pub min_length: u64,
    pub max_length: u64,
}

impl UniformSpec {
    pub fn lengths(&self) -> Vec<u64> {
        let count = self.count.max(1);
        let (lo, hi) = (self.min_length as f64, self.max_length as f64);
        let mut v: Vec<u64> = (0..count)
            .map(|j| {
                let frac = if count == 1 { 0.0 } else { j as f64 / (count - 1) as f64 };
                (lo + frac * (hi - lo)).round() as u64
            })
            .collect();
        v.sort_unstable();
        v.dedup();
        v
    }
}

#[derive(Debug, Clone)]
pub struct DesignComparison {
    /// sigma(uniform) / sigma(optimized); at least 1 up to LP tolerance.
    pub ratio: f64,
    pub uniform_sigma: f64,
    pub optimized_sigma: f64,
    pub uniform_lengths: Vec<u64>,
    pub uniform_trials_per_length: f64,
    pub optimized: OptimizedDesign,
}

/// Compare a uniform design against the optimized design of equal total
/// time, by the ratio of anticipated standard deviations of the target
/// parameter.
pub fn compare_designs(
    model: &Model,
    reference: &[f64],
    time: &TimeModel,
    t_total: f64,
    target_index: usize,
    uniform: &UniformSpec,
    n_max: Option<u64>,
) -> Result<DesignComparison, DesignError> {
    let uniform_lengths = uniform.lengths();
    let lin_u = linearize(model, reference, &uniform_lengths)?;
    let mut time_sum = 0.0;
    for &n in lin_u.lengths() {
        time_sum += time.trial_time(n)?;
    }
    let trials = t_total / time_sum;
    let weights: WeightMap = lin_u.lengths().iter().map(|&n| (n, trials)).collect();
    let uniform_sigma = anticipated_sigma_for_weights(&weights, &lin_u, target_index)?;

    // The uniform lengths join the candidate grid so the optimum can
    // never lose to the design it is compared against.
    let n_max = n_max
        .map(Ok)
        .unwrap_or_else(|| default_n_max(model, reference))?
        .max(uniform.max_length);
    let optimized = design_on_grid(
        model,
        reference,
        time,
        t_total,
        target_index,
        n_max,
        &uniform_lengths,
        &OptimizeOptions::default(),
    )?;
    Ok(DesignComparison {
        ratio: uniform_sigma / optimized.anticipated_sigma,
        uniform_sigma,
        optimized_sigma: optimized.anticipated_sigma,
        uniform_lengths,
        uniform_trials_per_length: trials,
        optimized,
    })
}
