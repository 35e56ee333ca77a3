//! Statistical models of the success probability P(n) for randomized
//! benchmarking, their parameter domains and analytic gradients, and the
//! depolarizing-channel arithmetic they rest on.
//!
//! Four model families are supported:
//!
//! * `Basic` — single exponential decay with a SPAM offset:
//!   P(n) = 1/D + (1/a)(1 - a*theta0)(1 - a*theta1)^n with a = D/(D-1).
//! * `Moments` — the step error fluctuates trial-to-trial; the decay picks
//!   up correction terms weighted by the central moments theta_k of the
//!   step-error distribution, truncated at `k_max`.
//! * `Drift` — the per-step error grows linearly/quadratically with the
//!   position inside a sequence: per-step error A + B*k + C*k^2.
//! * `General` — one free success probability per sequence length.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("Hilbert-space dimension must be at least 2, got {0}")]
    InvalidDimension(u32),
    #[error("invalid parameters: {0}")]
    InvalidParams(String),
    #[error("sequence length {0} is not in the model's length set")]
    LengthNotInModel(u64),
    #[error("computed probability {p} at length {n} is outside [0,1]")]
    ProbabilityOutOfRange { n: u64, p: f64 },
    #[error("completely depolarized initial state: P(0) = 1/D leaves the moment parameters undetermined")]
    CompletelyDepolarizedInitialState,
    #[error("{0}")]
    Invalid(String),
}

/// Dimension of the Hilbert space the benchmarked system lives in.
///
/// `alpha = D/(D-1)` is always recomputed from `D`, never stored.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HilbertDim {
    d: u32,
}

impl HilbertDim {
    pub fn new(d: u32) -> Result<Self, ModelError> {
        if d < 2 {
            return Err(ModelError::InvalidDimension(d));
        }
        Ok(Self { d })
    }

    /// Single qubit, D = 2.
    pub fn qubit() -> Self {
        Self { d: 2 }
    }

    pub fn d(&self) -> f64 {
        f64::from(self.d)
    }

    pub fn d_int(&self) -> u32 {
        self.d
    }

    pub fn alpha(&self) -> f64 {
        let d = f64::from(self.d);
        d / (d - 1.0)
    }
}

/// Tolerance inside which an evaluated probability is clamped onto [0,1];
/// larger excursions are reported as errors.
pub const PROB_CLAMP_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModelKind {
    Basic,
    Moments { k_max: usize },
    Drift,
    General { n_set: Vec<u64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    kind: ModelKind,
    dim: HilbertDim,
}

/// Result of a detailed evaluation; `unphysical_step` flags a drift model
/// whose per-step error exceeded 1/alpha somewhere in the sequence.
#[derive(Debug, Clone, Copy)]
pub struct ProbEval {
    pub p: f64,
    pub unphysical_step: bool,
}

impl Model {
    pub fn basic(dim: HilbertDim) -> Self {
        Self { kind: ModelKind::Basic, dim }
    }

    pub fn moments(dim: HilbertDim, k_max: usize) -> Result<Self, ModelError> {
        if k_max < 2 {
            return Err(ModelError::Invalid(format!(
                "moments model needs k_max >= 2, got {k_max}"
            )));
        }
        Ok(Self { kind: ModelKind::Moments { k_max }, dim })
    }

    /// Three total parameters (theta0, theta1, theta2).
    pub fn moments_three_param(dim: HilbertDim) -> Self {
        Self { kind: ModelKind::Moments { k_max: 2 }, dim }
    }

    /// Four total parameters (theta0, theta1, theta2, theta3).
    pub fn moments_four_param(dim: HilbertDim) -> Self {
        Self { kind: ModelKind::Moments { k_max: 3 }, dim }
    }

    pub fn drift(dim: HilbertDim) -> Self {
        Self { kind: ModelKind::Drift, dim }
    }

    pub fn general(dim: HilbertDim, n_set: Vec<u64>) -> Result<Self, ModelError> {
        if n_set.is_empty() {
            return Err(ModelError::Invalid("general model needs a nonempty length set".into()));
        }
        if n_set.windows(2).any(|w| w[0] >= w[1]) {
            return Err(ModelError::Invalid(
                "general model length set must be strictly increasing".into(),
            ));
        }
        Ok(Self { kind: ModelKind::General { n_set }, dim })
    }

    pub fn kind(&self) -> &ModelKind {
        &self.kind
    }

    pub fn dim(&self) -> HilbertDim {
        self.dim
    }

    pub fn param_count(&self) -> usize {
        match &self.kind {
            ModelKind::Basic => 2,
            ModelKind::Moments { k_max } => k_max + 1,
            ModelKind::Drift => 4,
            ModelKind::General { n_set } => n_set.len(),
        }
    }

    pub fn param_names(&self) -> Vec<String> {
        match &self.kind {
            ModelKind::Basic => vec!["theta0".into(), "theta1".into()],
            ModelKind::Moments { k_max } => {
                (0..=*k_max).map(|k| format!("theta{k}")).collect()
            }
            ModelKind::Drift => vec!["theta0".into(), "A".into(), "B".into(), "C".into()],
            ModelKind::General { n_set } => n_set.iter().map(|n| format!("P({n})")).collect(),
        }
    }

    /// Which parameters live on the unit interval (the optimizer keeps
    /// those inside bounds via a logit transform; the rest are free).
    pub(crate) fn param_bounded(&self) -> Vec<bool> {
        match &self.kind {
            ModelKind::Basic => vec![true, true],
            ModelKind::Moments { k_max } => {
                let mut v = vec![true, true];
                v.extend(std::iter::repeat(false).take(k_max - 1));
                v
            }
            ModelKind::Drift => vec![true, true, false, false],
            ModelKind::General { n_set } => vec![true; n_set.len()],
        }
    }

    /// Validate a parameter vector for this model. Returns non-fatal
    /// warnings (for now only the non-probabilistic second moment).
    pub fn validate_params(&self, params: &[f64]) -> Result<Vec<String>, ModelError> {
        if params.len() != self.param_count() {
            return Err(ModelError::InvalidParams(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        if params.iter().any(|p| !p.is_finite()) {
            return Err(ModelError::InvalidParams("non-finite parameter".into()));
        }
        let unit = |name: &str, v: f64| -> Result<(), ModelError> {
            if !(0.0..=1.0).contains(&v) {
                return Err(ModelError::InvalidParams(format!("{name} = {v} is outside [0,1]")));
            }
            Ok(())
        };
        let mut warnings = Vec::new();
        match &self.kind {
            ModelKind::Basic => {
                unit("theta0", params[0])?;
                unit("theta1", params[1])?;
            }
            ModelKind::Moments { .. } => {
                unit("theta0", params[0])?;
                unit("theta1", params[1])?;
                if params.len() > 2 && params[2] < 0.0 {
                    warnings.push(format!(
                        "non-probabilistic second moment: theta2 = {} < 0",
                        params[2]
                    ));
                }
            }
            ModelKind::Drift => {
                unit("theta0", params[0])?;
                unit("A", params[1])?;
            }
            ModelKind::General { n_set } => {
                for (p, n) in params.iter().zip(n_set) {
                    unit(&format!("P({n})"), *p)?;
                }
            }
        }
        Ok(warnings)
    }

    /// Success probability P(n), with validation and the [0,1] range check.
    pub fn success_probability(&self, params: &[f64], n: u64) -> Result<f64, ModelError> {
        Ok(self.success_probability_detailed(params, n)?.p)
    }

    pub fn success_probability_detailed(
        &self,
        params: &[f64],
        n: u64,
    ) -> Result<ProbEval, ModelError> {
        self.validate_params(params)?;
        let eval = self.eval_unchecked(params, n)?;
        let p = eval.p;
        if p < 0.0 || p > 1.0 {
            if p >= -PROB_CLAMP_TOL && p <= 1.0 + PROB_CLAMP_TOL {
                return Ok(ProbEval { p: p.clamp(0.0, 1.0), ..eval });
            }
            return Err(ModelError::ProbabilityOutOfRange { n, p });
        }
        Ok(eval)
    }

    /// Raw model evaluation without parameter validation or range checks.
    /// Used by the fit hot loops, which guarantee valid layouts.
    pub(crate) fn eval_unchecked(&self, params: &[f64], n: u64) -> Result<ProbEval, ModelError> {
        let d = self.dim.d();
        let alpha = self.dim.alpha();
        let p = match &self.kind {
            ModelKind::Basic => {
                let (theta0, theta1) = (params[0], params[1]);
                1.0 / d + (1.0 / alpha) * (1.0 - alpha * theta0) * pow_u64(1.0 - alpha * theta1, n)
            }
            ModelKind::Moments { k_max } => {
                let (theta0, theta1) = (params[0], params[1]);
                let base = 1.0 - alpha * theta1;
                let mut s = pow_u64(base, n);
                for k in 2..=*k_max {
                    let kn = k as u64;
                    if kn > n {
                        break;
                    }
                    let theta_k = params[k];
                    if theta_k == 0.0 {
                        continue;
                    }
                    s += binomial(n, kn) * pow_u64(base, n - kn) * neg_alpha_pow(alpha, k) * theta_k;
                }
                1.0 / d + (1.0 / alpha) * (1.0 - alpha * theta0) * s
            }
            ModelKind::Drift => {
                let (theta0, a, b, c) = (params[0], params[1], params[2], params[3]);
                let mut prod = 1.0;
                let mut unphysical = false;
                for k in 1..=n {
                    let kf = k as f64;
                    let factor = 1.0 - alpha * (a + b * kf + c * kf * kf);
                    if factor < 0.0 {
                        unphysical = true;
                    }
                    prod *= factor;
                }
                let p = 1.0 / d + (1.0 / alpha) * (1.0 - alpha * theta0) * prod;
                return Ok(ProbEval { p, unphysical_step: unphysical });
            }
            ModelKind::General { n_set } => {
                let idx = n_set
                    .binary_search(&n)
                    .map_err(|_| ModelError::LengthNotInModel(n))?;
                params[idx]
            }
        };
        Ok(ProbEval { p, unphysical_step: false })
    }

    /// Analytic gradient dP(n)/dtheta_i, one entry per parameter.
    pub fn gradient(&self, params: &[f64], n: u64) -> Result<Vec<f64>, ModelError> {
        self.validate_params(params)?;
        self.gradient_unchecked(params, n)
    }

    pub(crate) fn gradient_unchecked(
        &self,
        params: &[f64],
        n: u64,
    ) -> Result<Vec<f64>, ModelError> {
        let alpha = self.dim.alpha();
        match &self.kind {
            ModelKind::Basic => {
                let (theta0, theta1) = (params[0], params[1]);
                let base = 1.0 - alpha * theta1;
                let d_theta0 = -pow_u64(base, n);
                let d_theta1 = if n == 0 {
                    0.0
                } else {
                    -(n as f64) * (1.0 - alpha * theta0) * pow_u64(base, n - 1)
                };
                Ok(vec![d_theta0, d_theta1])
            }
            ModelKind::Moments { k_max } => {
                let (theta0, theta1) = (params[0], params[1]);
                let base = 1.0 - alpha * theta1;
                let amp = (1.0 / alpha) * (1.0 - alpha * theta0);
                let mut s = pow_u64(base, n);
                let mut ds_dtheta1 = if n == 0 {
                    0.0
                } else {
                    -alpha * (n as f64) * pow_u64(base, n - 1)
                };
                let mut grad = vec![0.0; self.param_count()];
                for k in 2..=*k_max {
                    let kn = k as u64;
                    if kn > n {
                        break;
                    }
                    let coeff = binomial(n, kn) * neg_alpha_pow(alpha, k);
                    let theta_k = params[k];
                    s += coeff * pow_u64(base, n - kn) * theta_k;
                    if n > kn {
                        ds_dtheta1 +=
                            coeff * ((n - kn) as f64) * pow_u64(base, n - kn - 1) * (-alpha) * theta_k;
                    }
                    grad[k] = amp * coeff * pow_u64(base, n - kn);
                }
                grad[0] = -s;
                grad[1] = amp * ds_dtheta1;
                Ok(grad)
            }
            ModelKind::Drift => {
                let (theta0, a, b, c) = (params[0], params[1], params[2], params[3]);
                let nn = n as usize;
                // prefix[j] = product of factors 1..j, suffix [j] = product j..n
                let mut factors = Vec::with_capacity(nn);
                for k in 1..=n {
                    let kf = k as f64;
                    factors.push(1.0 - alpha * (a + b * kf + c * kf * kf));
                }
                let prod: f64 = factors.iter().product();
                let mut suffix = vec![1.0; nn + 1];
                for j in (0..nn).rev() {
                    suffix[j] = factors[j] * suffix[j + 1];
                }
                let amp = 1.0 - alpha * theta0;
                let (mut da, mut db, mut dc) = (0.0, 0.0, 0.0);
                let mut prefix = 1.0;
                for (j, f) in factors.iter().enumerate() {
                    let others = prefix * suffix[j + 1];
                    let kf = (j + 1) as f64;
                    da += others;
                    db += kf * others;
                    dc += kf * kf * others;
                    prefix *= f;
                }
                Ok(vec![-prod, -amp * da, -amp * db, -amp * dc])
            }
            ModelKind::General { n_set } => {
                let idx = n_set
                    .binary_search(&n)
                    .map_err(|_| ModelError::LengthNotInModel(n))?;
                let mut g = vec![0.0; n_set.len()];
                g[idx] = 1.0;
                Ok(g)
            }
        }
    }
}

/// Exponentiation by squaring on a real base; the base stays in
/// [1 - alpha, 1] so no log-space handling is needed.
pub(crate) fn pow_u64(base: f64, mut n: u64) -> f64 {
    let mut acc = 1.0;
    let mut b = base;
    while n > 0 {
        if n & 1 == 1 {
            acc *= b;
        }
        b *= b;
        n >>= 1;
    }
    acc
}

/// Binomial coefficient as f64, exact for the small k used here.
pub(crate) fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 1..=k {
        acc = acc * ((n - k + i) as f64) / (i as f64);
    }
    acc
}

fn neg_alpha_pow(alpha: f64, k: usize) -> f64 {
    let mut acc = 1.0;
    for _ in 0..k {
        acc *= -alpha;
    }
    acc
}

/// Fidelity of a composition of depolarizing channels with the given
/// per-channel errors: f = 1/D + (1/alpha) * prod_i (1 - alpha*eps_i).
/// An empty list is the identity channel (fidelity 1).
pub fn compose_depolarizing(errors: &[f64], dim: HilbertDim) -> Result<f64, ModelError> {
    for &e in errors {
        if !(0.0..=1.0).contains(&e) {
            return Err(ModelError::InvalidParams(format!(
                "depolarizing error {e} is outside [0,1]"
            )));
        }
    }
    let alpha = dim.alpha();
    let prod: f64 = errors.iter().map(|&e| 1.0 - alpha * e).product();
    Ok(1.0 / dim.d() + prod / alpha)
}

/// Result of inverting a list of success probabilities into moment
/// parameters: the SPAM error, the raw (unshifted) moments of the
/// step-error distribution, and the mean-shifted central moments.
#[derive(Debug, Clone)]
pub struct MomentsFromGeneral {
    pub theta0: f64,
    /// Raw moments theta~_1 .. theta~_N of the unshifted distribution.
    pub theta_tilde: Vec<f64>,
    /// Mean-shifted parameters: theta[0] = theta1 (the mean), theta[k-1]
    /// = k-th central moment for k >= 2.
    pub theta: Vec<f64>,
}

/// Invert success probabilities P(0..=N) into moment parameters by
/// forward substitution on the lower-triangular relation between
/// P(n) - P(0) and the raw moments.
pub fn moments_from_general(p: &[f64], dim: HilbertDim) -> Result<MomentsFromGeneral, ModelError> {
    if p.len() < 2 {
        return Err(ModelError::Invalid(
            "need P(0) and at least one more probability".into(),
        ));
    }
    for &v in p {
        if !(0.0..=1.0).contains(&v) {
            return Err(ModelError::InvalidParams(format!("probability {v} outside [0,1]")));
        }
    }
    let d = dim.d();
    let alpha = dim.alpha();
    let amp = p[0] - 1.0 / d; // = (1/alpha)(1 - alpha*theta0)
    if amp.abs() <= 1e-12 {
        return Err(ModelError::CompletelyDepolarizedInitialState);
    }
    let theta0 = (1.0 - alpha * amp) / alpha;
    let n_moments = p.len() - 1;

    // M[n][k] = amp * binom(n,k) * (-alpha)^k, lower triangular.
    let mut theta_tilde = vec![0.0; n_moments];
    for n in 1..=n_moments {
        let rhs = p[n] - p[0];
        let mut acc = rhs;
        for k in 1..n {
            acc -= amp * binomial(n as u64, k as u64) * neg_alpha_pow(alpha, k) * theta_tilde[k - 1];
        }
        theta_tilde[n - 1] = acc / (amp * neg_alpha_pow(alpha, n));
    }

    // Central moments from raw moments: mu_k = sum_j C(k,j) (-mu)^(k-j) m_j.
    let mean = theta_tilde[0];
    let mut theta = vec![mean];
    for k in 2..=n_moments {
        let mut mu_k = 0.0;
        for j in 0..=k {
            let m_j = if j == 0 { 1.0 } else { theta_tilde[j - 1] };
            let mut neg_mean_pow = 1.0;
            for _ in 0..(k - j) {
                neg_mean_pow *= -mean;
            }
            mu_k += binomial(k as u64, j as u64) * neg_mean_pow * m_j;
        }
        theta.push(mu_k);
    }
    Ok(MomentsFromGeneral { theta0, theta_tilde, theta })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn qubit() -> HilbertDim {
        HilbertDim::qubit()
    }

    #[test]
    fn basic_examples() {
        let m = Model::basic(qubit());
        assert_eq!(m.success_probability(&[0.0, 0.0], 10).unwrap(), 1.0);
        assert_abs_diff_eq!(
            m.success_probability(&[0.03, 2e-5], 0).unwrap(),
            0.97,
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(m.success_probability(&[0.0, 0.5], 5).unwrap(), 0.5, epsilon = 1e-15);
    }

    #[test]
    fn moments_example() {
        let m = Model::moments_three_param(qubit());
        // two-point mixture eps in {0.05, 0.15} with equal mass
        assert_abs_diff_eq!(
            m.success_probability(&[0.0, 0.1, 0.0025], 2).unwrap(),
            0.825,
            epsilon = 1e-15
        );
    }

    #[test]
    fn basic_gradient_example() {
        let m = Model::basic(qubit());
        let g = m.gradient(&[0.0, 0.0], 3).unwrap();
        assert_eq!(g, vec![-1.0, -3.0]);
    }

    #[test]
    fn general_gradient_is_indicator() {
        let m = Model::general(qubit(), vec![1, 2]).unwrap();
        assert_eq!(m.gradient(&[0.9, 0.8], 2).unwrap(), vec![0.0, 1.0]);
    }

    #[test]
    fn moments_theta2_gradient_example() {
        let m = Model::moments_three_param(qubit());
        let g = m.gradient(&[0.0, 0.1, 0.0], 2).unwrap();
        assert_abs_diff_eq!(g[2], 2.0, epsilon = 1e-12);
    }

    #[test]
    fn compose_depolarizing_examples() {
        assert_eq!(compose_depolarizing(&[0.0], qubit()).unwrap(), 1.0);
        assert_abs_diff_eq!(
            compose_depolarizing(&[0.25, 0.25], qubit()).unwrap(),
            0.625,
            epsilon = 1e-15
        );
        assert_eq!(compose_depolarizing(&[], HilbertDim::new(4).unwrap()).unwrap(), 1.0);
        assert_abs_diff_eq!(compose_depolarizing(&[0.3], qubit()).unwrap(), 0.7, epsilon = 1e-15);
    }

    #[test]
    fn moments_reduces_to_basic() {
        let basic = Model::basic(qubit());
        let mom = Model::moments(qubit(), 4).unwrap();
        let theta = [0.02, 3e-4];
        let theta_m = [0.02, 3e-4, 0.0, 0.0, 0.0];
        for n in [0u64, 1, 2, 7, 100, 2500, 10_000] {
            let pb = basic.success_probability(&theta, n).unwrap();
            let pm = mom.success_probability(&theta_m, n).unwrap();
            assert!((pb - pm).abs() <= 1e-14, "n={n}: {pb} vs {pm}");
        }
    }

    #[test]
    fn drift_reduces_to_basic_when_b_c_zero() {
        let basic = Model::basic(qubit());
        let drift = Model::drift(qubit());
        for n in [0u64, 1, 5, 40, 300] {
            let pb = basic.success_probability(&[0.01, 2e-3], n).unwrap();
            let pd = drift.success_probability(&[0.01, 2e-3, 0.0, 0.0], n).unwrap();
            assert_abs_diff_eq!(pb, pd, epsilon = 1e-13);
        }
    }

    #[test]
    fn drift_unphysical_step_flagged() {
        let drift = Model::drift(qubit());
        // per-step error exceeds 1/alpha = 0.5 partway through
        let eval = drift.success_probability_detailed(&[0.0, 0.1, 0.05, 0.0], 10).unwrap();
        assert!(eval.unphysical_step);
    }

    // Moments model equals the brute-force mixture average for discrete
    // step-error distributions, exactly for n <= k_max.
    #[test]
    fn moments_matches_discrete_mixture() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let basic = Model::basic(qubit());
        for _ in 0..50 {
            let n_points = rng.random_range(2..=3usize);
            let eps: Vec<f64> = (0..n_points).map(|_| rng.random_range(0.01..0.4)).collect();
            let mut q: Vec<f64> = (0..n_points).map(|_| rng.random_range(0.1..1.0)).collect();
            let total: f64 = q.iter().sum();
            q.iter_mut().for_each(|v| *v /= total);

            let theta1: f64 = eps.iter().zip(&q).map(|(e, w)| e * w).sum();
            let k_max = 3usize;
            let mut params = vec![0.05, theta1];
            for k in 2..=k_max {
                let mk: f64 = eps
                    .iter()
                    .zip(&q)
                    .map(|(e, w)| w * (e - theta1).powi(k as i32))
                    .sum();
                params.push(mk);
            }
            let mom = Model::moments(qubit(), k_max).unwrap();
            for n in 0..=k_max as u64 {
                let mixture: f64 = eps
                    .iter()
                    .zip(&q)
                    .map(|(&e, &w)| w * basic.success_probability(&[0.05, e], n).unwrap())
                    .sum();
                let pm = mom.success_probability(&params, n).unwrap();
                assert!(
                    (mixture - pm).abs() <= 1e-12,
                    "n={n}: mixture {mixture} vs moments {pm}"
                );
            }
        }
    }

    fn finite_difference(m: &Model, params: &[f64], n: u64) -> Vec<f64> {
        let h = 1e-6;
        (0..params.len())
            .map(|i| {
                let mut hi = params.to_vec();
                let mut lo = params.to_vec();
                hi[i] += h;
                lo[i] -= h;
                let ph = m.eval_unchecked(&hi, n).unwrap().p;
                let pl = m.eval_unchecked(&lo, n).unwrap().p;
                (ph - pl) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let dims = [HilbertDim::qubit(), HilbertDim::new(4).unwrap()];
        for dim in dims {
            for trial in 0..100 {
                let theta0: f64 = rng.random_range(0.01..0.3);
                let theta1: f64 = rng.random_range(0.001..0.2);
                let n = rng.random_range(0..40u64);
                // The drift model's quadratic term has log-curvature of
                // order n^3, which exhausts the h = 1e-6 truncation
                // budget beyond n around 20.
                let n_drift = rng.random_range(0..=18u64);
                let models: Vec<(Model, Vec<f64>, u64)> = vec![
                    (Model::basic(dim), vec![theta0, theta1], n),
                    (
                        Model::moments(dim, 3).unwrap(),
                        vec![
                            theta0,
                            theta1,
                            rng.random_range(-0.001..0.002),
                            rng.random_range(-0.0005..0.0005),
                        ],
                        n,
                    ),
                    (
                        Model::drift(dim),
                        vec![
                            theta0,
                            theta1,
                            rng.random_range(-1e-4..5e-4),
                            rng.random_range(-1e-6..1e-6),
                        ],
                        n_drift,
                    ),
                ];
                for (m, params, n) in models {
                    let analytic = m.gradient(&params, n).unwrap();
                    let fd = finite_difference(&m, &params, n);
                    for (i, (a, f)) in analytic.iter().zip(&fd).enumerate() {
                        assert!(
                            (a - f).abs() <= 1e-5 * (1.0 + a.abs()),
                            "trial {trial} {:?} param {i} at n={n}: analytic {a}, fd {f}",
                            m.kind()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn moments_from_general_basic_has_zero_higher_moments() {
        let basic = Model::basic(qubit());
        let p: Vec<f64> = (0..=3u64)
            .map(|n| basic.success_probability(&[0.01, 0.1], n).unwrap())
            .collect();
        let rec = moments_from_general(&p, qubit()).unwrap();
        assert_abs_diff_eq!(rec.theta0, 0.01, epsilon = 1e-12);
        assert_abs_diff_eq!(rec.theta[0], 0.1, epsilon = 1e-12);
        assert!(rec.theta[1].abs() < 1e-10, "theta2 = {}", rec.theta[1]);
        assert!(rec.theta[2].abs() < 1e-10, "theta3 = {}", rec.theta[2]);
    }

    #[test]
    fn moments_from_general_drift_sign() {
        // Drift with A = theta1 - B, C = 0 maps to theta2 = -B(1-alpha*theta1)/alpha.
        let dim = qubit();
        let alpha = dim.alpha();
        let theta1 = 1e-3;
        let b = 1e-4;
        let drift = Model::drift(dim);
        let params = [0.0, theta1 - b, b, 0.0];
        let p: Vec<f64> = (0..=2u64)
            .map(|n| drift.success_probability(&params, n).unwrap())
            .collect();
        let rec = moments_from_general(&p, dim).unwrap();
        let expected = -b * (1.0 - alpha * theta1) / alpha;
        assert!(rec.theta[1] < 0.0);
        assert!(
            (rec.theta[1] - expected).abs() <= 1e-9 * expected.abs(),
            "theta2 {} vs {}",
            rec.theta[1],
            expected
        );
    }

    #[test]
    fn moments_from_general_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        let dim = qubit();
        for _ in 0..100 {
            let n_max = 4usize;
            let mut p = vec![rng.random_range(0.6..1.0f64)];
            for _ in 1..=n_max {
                p.push(rng.random_range(0.51..1.0));
            }
            let rec = moments_from_general(&p, dim).unwrap();
            let mut params = vec![rec.theta0];
            params.extend(&rec.theta);
            let mom = Model::moments(dim, n_max).unwrap();
            for (n, &pn) in p.iter().enumerate() {
                let eval = mom.eval_unchecked(&params, n as u64).unwrap().p;
                assert!(
                    (eval - pn).abs() <= 1e-10,
                    "round trip mismatch at n={n}: {eval} vs {pn}"
                );
            }
        }
    }

    #[test]
    fn completely_depolarized_rejected() {
        let p = vec![0.5, 0.5, 0.5];
        assert!(matches!(
            moments_from_general(&p, qubit()),
            Err(ModelError::CompletelyDepolarizedInitialState)
        ));
    }

    #[test]
    fn out_of_range_probability_is_error() {
        let m = Model::moments_three_param(qubit());
        // a huge positive theta2 pushes P(2) above 1
        let err = m.success_probability(&[0.0, 0.0, 1.0], 2).unwrap_err();
        assert!(matches!(err, ModelError::ProbabilityOutOfRange { .. }));
    }

    #[test]
    fn general_rejects_unknown_length() {
        let m = Model::general(qubit(), vec![1, 5, 9]).unwrap();
        assert!(matches!(
            m.success_probability(&[0.9, 0.8, 0.7], 3),
            Err(ModelError::LengthNotInModel(3))
        ));
    }

    #[test]
    fn moments_theta2_negative_warns() {
        let m = Model::moments_three_param(qubit());
        let warnings = m.validate_params(&[0.01, 0.001, -1e-6]).unwrap();
        assert_eq!(warnings.len(), 1);
        assert!(warnings[0].contains("non-probabilistic"));
    }
}
