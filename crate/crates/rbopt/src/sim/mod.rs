//! Synthetic benchmarking data under several generative error models,
//! including a gate-level single-qubit Clifford simulator, plus the
//! variance analysis for experiments that repeat sequences.
//!
//! All Monte Carlo draws run on split streams derived from the master
//! seed and the trial/sequence index, so datasets are bit-identical
//! regardless of thread scheduling.

pub mod clifford;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Binomial, Distribution, StandardNormal};
use rayon::prelude::*;
use thiserror::Error;

use crate::design::TimeModel;
use crate::model::{HilbertDim, Model, ModelError};
use crate::streams::{derive_stream, StreamDomain};
use clifford::{conjugate, mat_vec, CliffordGroup, Mat2, GROUP_SIZE};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("unsupported generative model for this design: {0}")]
    UnsupportedGenerative(String),
    #[error("invalid experiment design: {0}")]
    InvalidDesign(String),
    #[error("invalid channel: {0}")]
    InvalidChannel(String),
    #[error("need at least 2 sequences per length, got {0}")]
    InsufficientSequences(usize),
    #[error("mean success probability {s_bar} is below 1/D = {inv_d}; the mixture model is undefined")]
    MixtureUndefined { s_bar: f64, inv_d: f64 },
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// Error channel applied after every (ideal) gate in the gate-level
/// simulator.
#[derive(Debug, Clone, PartialEq)]
pub enum Channel {
    None,
    Depolarizing { lambda: f64 },
    UnitaryX { phi: f64 },
}

impl Channel {
    pub fn validate(&self, dim: HilbertDim) -> Result<(), SimError> {
        match *self {
            Channel::None => Ok(()),
            Channel::Depolarizing { lambda } => {
                let d = dim.d();
                let max = 1.0 + 1.0 / (d * d - 1.0);
                if lambda < 0.0 || lambda > max {
                    return Err(SimError::InvalidChannel(format!(
                        "depolarizing parameter {lambda} outside [0, {max}]"
                    )));
                }
                Ok(())
            }
            Channel::UnitaryX { phi } => {
                if !(-std::f64::consts::PI < phi && phi <= std::f64::consts::PI) {
                    return Err(SimError::InvalidChannel(format!(
                        "rotation angle {phi} outside (-pi, pi]"
                    )));
                }
                Ok(())
            }
        }
    }

    /// Average error of the channel: the effective depolarizing step
    /// error after twirling by a two-design.
    pub fn average_error(&self, dim: HilbertDim) -> f64 {
        let d = dim.d();
        match *self {
            Channel::None => 0.0,
            Channel::Depolarizing { lambda } => lambda * (1.0 - 1.0 / d),
            Channel::UnitaryX { phi } => {
                // average fidelity of exp(-i phi X) is (|tr|^2 + D)/(D^2 + D)
                let tr2 = (2.0 * phi.cos()).powi(2);
                1.0 - (tr2 + d) / (d * d + d)
            }
        }
    }

    fn descriptor(&self) -> String {
        match self {
            Channel::None => "gate:none".into(),
            Channel::Depolarizing { lambda } => format!("gate:depolarizing:{lambda}"),
            Channel::UnitaryX { phi } => format!("gate:unitary:{phi}"),
        }
    }
}

/// What generates the data.
#[derive(Debug, Clone)]
pub enum GenerativeModel {
    /// Binomial counts straight from a model's success probabilities.
    FromModel { model: Model, params: Vec<f64> },
    /// The step error is drawn per trial from a Gaussian truncated to
    /// [0,1]; the SPAM error stays fixed.
    GaussianStep { theta0: f64, mean: f64, sd: f64, dim: HilbertDim },
    /// Gate-level single-qubit Clifford simulation with an error channel.
    GateLevel { channel: Channel },
}

impl GenerativeModel {
    pub fn descriptor(&self) -> String {
        match self {
            GenerativeModel::FromModel { model, params } => {
                let vals: Vec<String> = params.iter().map(|v| format!("{v}")).collect();
                let kind = match model.kind() {
                    crate::model::ModelKind::Basic => "basic".to_string(),
                    crate::model::ModelKind::Moments { k_max } => format!("moments{k_max}"),
                    crate::model::ModelKind::Drift => "drift".to_string(),
                    crate::model::ModelKind::General { .. } => "general".to_string(),
                };
                format!("{kind}:{}", vals.join(","))
            }
            GenerativeModel::GaussianStep { theta0, mean, sd, .. } => {
                format!("gaussian:{theta0},{mean},{sd}")
            }
            GenerativeModel::GateLevel { channel } => channel.descriptor(),
        }
    }
}

/// An experiment design: which lengths to run, how many trials at each,
/// and whether sequences are intentionally repeated (`repeats` = 1 means
/// fully randomized).
#[derive(Debug, Clone)]
pub struct ExperimentDesign {
    lengths: Vec<u64>,
    trials: Vec<u64>,
    repeats: u64,
    time: TimeModel,
}

impl ExperimentDesign {
    pub fn new(
        lengths: Vec<u64>,
        trials: Vec<u64>,
        repeats: u64,
        time: TimeModel,
    ) -> Result<Self, SimError> {
        if lengths.len() != trials.len() {
            return Err(SimError::InvalidDesign("lengths and trials must pair up".into()));
        }
        if lengths.is_empty() {
            return Err(SimError::InvalidDesign("design has no lengths".into()));
        }
        if lengths.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SimError::InvalidDesign("lengths must be strictly increasing".into()));
        }
        if repeats == 0 {
            return Err(SimError::InvalidDesign("repeats must be at least 1".into()));
        }
        if repeats > 1 && trials.iter().any(|&w| w % repeats != 0) {
            return Err(SimError::InvalidDesign(format!(
                "with {repeats} repeats every trial count must be a multiple of it"
            )));
        }
        Ok(Self { lengths, trials, repeats, time })
    }

    pub fn lengths(&self) -> &[u64] {
        &self.lengths
    }

    pub fn trials(&self) -> &[u64] {
        &self.trials
    }

    pub fn repeats(&self) -> u64 {
        self.repeats
    }

    pub fn time(&self) -> &TimeModel {
        &self.time
    }

    pub fn total_time(&self) -> f64 {
        self.lengths
            .iter()
            .zip(&self.trials)
            .map(|(&n, &w)| w as f64 * self.time.trial_time(n).unwrap_or(0.0))
            .sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LengthRecord {
    pub n: u64,
    pub trials: u64,
    pub successes: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SequenceRecord {
    pub n: u64,
    pub sequence_id: u64,
    pub repeats: u64,
    pub successes: u64,
    /// Exact per-sequence success probability; known only in simulation,
    /// exposed for diagnostics and never used by inference.
    pub exact_p: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum DatasetRecords {
    PerLength(Vec<LengthRecord>),
    PerSequence(Vec<SequenceRecord>),
}

/// Observed data plus its provenance (seed and generative descriptor).
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub records: DatasetRecords,
    pub seed: u64,
    pub generative: String,
}

impl Dataset {
    pub fn per_length(&self) -> Option<&[LengthRecord]> {
        match &self.records {
            DatasetRecords::PerLength(v) => Some(v),
            DatasetRecords::PerSequence(_) => None,
        }
    }

    pub fn per_sequence(&self) -> Option<&[SequenceRecord]> {
        match &self.records {
            DatasetRecords::PerSequence(v) => Some(v),
            DatasetRecords::PerLength(_) => None,
        }
    }

    pub fn from_length_records(records: Vec<LengthRecord>) -> Self {
        Dataset {
            records: DatasetRecords::PerLength(records),
            seed: 0,
            generative: "observed".into(),
        }
    }
}

const TRUNCATED_GAUSSIAN_MAX_REJECTS: usize = 10_000;

fn truncated_gaussian(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    for _ in 0..TRUNCATED_GAUSSIAN_MAX_REJECTS {
        let z: f64 = StandardNormal.sample(rng);
        let x = mean + sd * z;
        if (0.0..=1.0).contains(&x) {
            return x;
        }
    }
    mean.clamp(0.0, 1.0)
}

/// Simulate per-length success counts for a fully randomized experiment.
///
/// `FromModel` draws one binomial per length; `GaussianStep` draws a
/// fresh step error for every trial; `GateLevel` uses the fact that for
/// independently randomized trials the counts are exactly binomial with
/// the twirled (depolarized) success probability.
pub fn simulate_counts(
    design: &ExperimentDesign,
    generative: &GenerativeModel,
    seed: u64,
) -> Result<Dataset, SimError> {
    if design.repeats != 1 {
        return Err(SimError::UnsupportedGenerative(
            "per-length simulation requires repeats = 1; use the gate-level simulator for \
             intentionally repeated sequences"
                .into(),
        ));
    }
    let records = match generative {
        GenerativeModel::FromModel { model, params } => {
            let probs: Result<Vec<f64>, ModelError> = design
                .lengths
                .iter()
                .map(|&n| model.success_probability(params, n))
                .collect();
            let probs = probs?;
            design
                .lengths
                .iter()
                .zip(&design.trials)
                .zip(&probs)
                .enumerate()
                .map(|(j, ((&n, &w), &p))| {
                    let mut rng = derive_stream(seed, StreamDomain::SimulateCounts, j as u64);
                    let successes = sample_binomial(&mut rng, w, p);
                    LengthRecord { n, trials: w, successes }
                })
                .collect()
        }
        GenerativeModel::GaussianStep { theta0, mean, sd, dim } => {
            if !(0.0..=1.0).contains(theta0) || !sd.is_finite() || *sd < 0.0 {
                return Err(SimError::InvalidDesign(
                    "gaussian step model needs theta0 in [0,1] and sd >= 0".into(),
                ));
            }
            let basic = Model::basic(*dim);
            let mut trial_offset = 0u64;
            let mut out = Vec::with_capacity(design.lengths.len());
            for (&n, &w) in design.lengths.iter().zip(&design.trials) {
                // Per-trial streams keyed by the global trial index.
                let successes: u64 = (0..w)
                    .into_par_iter()
                    .map(|i| {
                        let mut rng = derive_stream(
                            seed,
                            StreamDomain::SimulateCounts,
                            trial_offset + i,
                        );
                        let eps = truncated_gaussian(&mut rng, *mean, *sd);
                        let p = basic
                            .eval_unchecked(&[*theta0, eps], n)
                            .expect("basic model evaluates everywhere")
                            .p;
                        u64::from(rng.random::<f64>() < p)
                    })
                    .sum();
                out.push(LengthRecord { n, trials: w, successes });
                trial_offset += w;
            }
            out
        }
        GenerativeModel::GateLevel { channel } => {
            let dim = HilbertDim::qubit();
            channel.validate(dim)?;
            // Trials are i.i.d., so the marginal count at each length is
            // exactly Binomial(w, s_bar) with s_bar given by the twirled
            // step error.
            let eps = channel.average_error(dim);
            let basic = Model::basic(dim);
            design
                .lengths
                .iter()
                .zip(&design.trials)
                .enumerate()
                .map(|(j, (&n, &w))| {
                    let p = basic
                        .eval_unchecked(&[0.0, eps], n)
                        .expect("basic model evaluates everywhere")
                        .p;
                    let mut rng = derive_stream(seed, StreamDomain::SimulateCounts, j as u64);
                    let successes = sample_binomial(&mut rng, w, p);
                    LengthRecord { n, trials: w, successes }
                })
                .collect()
        }
    };
    Ok(Dataset {
        records: DatasetRecords::PerLength(records),
        seed,
        generative: generative.descriptor(),
    })
}

fn sample_binomial(rng: &mut impl Rng, n: u64, p: f64) -> u64 {
    let p = p.clamp(0.0, 1.0);
    if n == 0 || p == 0.0 {
        return 0;
    }
    if p == 1.0 {
        return n;
    }
    Binomial::new(n, p).expect("validated binomial parameters").sample(rng)
}

/// Gate-level simulation producing one record per random sequence.
///
/// Each sequence draws its gates uniformly from the 24-element Clifford
/// group, propagates the state through ideal gate followed by the error
/// channel, applies the exact inversion element, and records the
/// resulting success probability together with a binomial draw of the
/// `repeats` runs.
pub fn simulate_gate_level(
    design: &ExperimentDesign,
    channel: &Channel,
    seed: u64,
) -> Result<Dataset, SimError> {
    let dim = HilbertDim::qubit();
    channel.validate(dim)?;
    let l = design.repeats;
    let mut jobs = Vec::new();
    let mut record_index = 0u64;
    for (&n, &w) in design.lengths.iter().zip(&design.trials) {
        let k = w / l;
        for sequence_id in 0..k {
            jobs.push((n, sequence_id, record_index));
            record_index += 1;
        }
    }
    let records: Vec<SequenceRecord> = jobs
        .into_par_iter()
        .map(|(n, sequence_id, r)| {
            let mut rng = derive_stream(seed, StreamDomain::GateSequence, r);
            let s = propagate_sequence(channel, n, &mut rng);
            let successes = sample_binomial(&mut rng, l, s);
            SequenceRecord { n, sequence_id, repeats: l, successes, exact_p: Some(s) }
        })
        .collect();
    Ok(Dataset {
        records: DatasetRecords::PerSequence(records),
        seed,
        generative: channel.descriptor(),
    })
}

/// Success probability of one random sequence of length `n` under the
/// channel. Unitary channels propagate a pure state; the depolarizing
/// channel propagates the density matrix.
fn propagate_sequence(channel: &Channel, n: u64, rng: &mut impl Rng) -> f64 {
    let group = CliffordGroup::get();
    let mut total: u8 = 0; // identity
    match channel {
        Channel::None | Channel::UnitaryX { .. } => {
            let error = match channel {
                Channel::UnitaryX { phi } => Some(unitary_x(*phi)),
                _ => None,
            };
            let mut state = [Complex64::ONE, Complex64::ZERO];
            for _ in 0..n {
                let c = rng.random_range(0..GROUP_SIZE as u8);
                state = mat_vec(group.matrix(c), &state);
                if let Some(e) = &error {
                    state = mat_vec(e, &state);
                }
                total = group.compose(c, total);
            }
            let inv = group.inverse(total);
            state = mat_vec(group.matrix(inv), &state);
            state[0].norm_sqr().clamp(0.0, 1.0)
        }
        Channel::Depolarizing { lambda } => {
            let mut rho: Mat2 = [
                [Complex64::ONE, Complex64::ZERO],
                [Complex64::ZERO, Complex64::ZERO],
            ];
            for _ in 0..n {
                let c = rng.random_range(0..GROUP_SIZE as u8);
                rho = conjugate(group.matrix(c), &rho);
                for (i, row) in rho.iter_mut().enumerate() {
                    for (j, entry) in row.iter_mut().enumerate() {
                        *entry *= 1.0 - lambda;
                        if i == j {
                            *entry += lambda / 2.0;
                        }
                    }
                }
                total = group.compose(c, total);
            }
            let inv = group.inverse(total);
            rho = conjugate(group.matrix(inv), &rho);
            rho[0][0].re.clamp(0.0, 1.0)
        }
    }
}

fn unitary_x(phi: f64) -> Mat2 {
    // exp(-i phi X)
    let c = Complex64::new(phi.cos(), 0.0);
    let s = Complex64::new(0.0, -phi.sin());
    [[c, s], [s, c]]
}

/// Per-length variance analysis of a repeated-sequence dataset.
#[derive(Debug, Clone)]
pub struct VarianceReport {
    pub n: u64,
    pub sequences: usize,
    pub repeats: u64,
    /// Mean success probability over sequences (from the counts).
    pub s_bar: f64,
    /// Bootstrap variance of the mean estimator s-hat.
    pub empirical_var_mean: f64,
    /// s_bar (1 - s_bar) / M with M = k l: the fully randomized part.
    pub binomial_term: f64,
    /// Predicted excess variance from the recorded exact success
    /// probabilities; exactly zero when repeats = 1.
    pub excess_z: f64,
    /// Closed-form variance under the unitary mixture model, when the
    /// observed mean admits one.
    pub unitary_model_var: Option<f64>,
    /// Sample variance of the per-sequence counts.
    pub var_counts_empirical: f64,
    /// l s(1-s) + l(l-1) var(S) from the recorded probabilities.
    pub var_counts_predicted: Option<f64>,
    /// Combined bootstrap standard error of the difference between the
    /// empirical and predicted count variances.
    pub var_counts_se: f64,
}

/// Analyze the spread of per-sequence outcomes at each length.
pub fn variance_of_mean(
    dataset: &Dataset,
    dim: HilbertDim,
    bootstrap_samples: usize,
    seed: u64,
) -> Result<Vec<VarianceReport>, SimError> {
    let records = dataset
        .per_sequence()
        .ok_or_else(|| SimError::InvalidDesign("variance analysis needs per-sequence records".into()))?;
    let mut lengths: Vec<u64> = records.iter().map(|r| r.n).collect();
    lengths.sort_unstable();
    lengths.dedup();

    let mut reports = Vec::new();
    for (length_idx, &n) in lengths.iter().enumerate() {
        let group: Vec<&SequenceRecord> = records.iter().filter(|r| r.n == n).collect();
        let k = group.len();
        if k < 2 {
            return Err(SimError::InsufficientSequences(k));
        }
        let l = group[0].repeats;
        let m_total = (k as u64 * l) as f64;
        let freqs: Vec<f64> = group.iter().map(|r| r.successes as f64 / l as f64).collect();
        let counts: Vec<f64> = group.iter().map(|r| r.successes as f64).collect();
        let s_bar = mean(&freqs);
        let exact: Option<Vec<f64>> =
            group.iter().map(|r| r.exact_p).collect::<Option<Vec<f64>>>();

        // Bootstrap over sequences: variance of the mean estimator and
        // the spread of the empirical count variance.
        let b = bootstrap_samples.max(2);
        let (mut shat_samples, mut varc_samples, mut pred_samples) =
            (Vec::with_capacity(b), Vec::with_capacity(b), Vec::with_capacity(b));
        for rep in 0..b {
            let mut rng = derive_stream(
                seed,
                StreamDomain::VarianceBootstrap,
                (length_idx * b + rep) as u64,
            );
            let mut f_sum = 0.0;
            let mut c_res = Vec::with_capacity(k);
            let mut s_res = Vec::with_capacity(k);
            for _ in 0..k {
                let pick = rng.random_range(0..k);
                f_sum += freqs[pick];
                c_res.push(counts[pick]);
                if let Some(ex) = &exact {
                    s_res.push(ex[pick]);
                }
            }
            shat_samples.push(f_sum / k as f64);
            varc_samples.push(variance(&c_res));
            if !s_res.is_empty() {
                let sb = mean(&s_res);
                let vs = pop_variance(&s_res);
                pred_samples.push(l as f64 * sb * (1.0 - sb) + (l * (l - 1)) as f64 * vs);
            }
        }
        let empirical_var_mean = variance(&shat_samples);
        let binomial_term = s_bar * (1.0 - s_bar) / m_total;
        let excess_z = match (&exact, l) {
            (_, 1) => 0.0,
            (Some(ex), _) => {
                let second: f64 = ex.iter().map(|s| s * s).sum::<f64>() / k as f64;
                let first = mean(ex);
                (l as f64 - 1.0) / m_total * (second - first * first)
            }
            (None, _) => 0.0,
        };
        let unitary_model_var = unitary_model_variance(s_bar, dim, l, (k as u64) * l)
            .ok()
            .map(|r| r.variance);
        let var_counts_empirical = variance(&counts);
        let var_counts_predicted = exact.as_ref().map(|ex| {
            let sb = mean(ex);
            let vs = pop_variance(ex);
            l as f64 * sb * (1.0 - sb) + (l * (l - 1)) as f64 * vs
        });
        let se_emp = variance(&varc_samples).sqrt();
        let se_pred = if pred_samples.is_empty() { 0.0 } else { variance(&pred_samples).sqrt() };
        reports.push(VarianceReport {
            n,
            sequences: k,
            repeats: l,
            s_bar,
            empirical_var_mean,
            binomial_term,
            excess_z,
            unitary_model_var,
            var_counts_empirical,
            var_counts_predicted,
            var_counts_se: (se_emp * se_emp + se_pred * se_pred).sqrt(),
        });
    }
    Ok(reports)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / (v.len() - 1) as f64
}

fn pop_variance(v: &[f64]) -> f64 {
    let m = mean(v);
    v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64
}

#[derive(Debug, Clone, Copy)]
pub struct UnitaryModelVariance {
    pub variance: f64,
    /// Weight of the target state in the mixture model.
    pub lambda: f64,
    /// Total width of the implied 95% interval, 2 * 1.96 * sqrt(var).
    pub ci95_total_width: f64,
}

/// Closed-form variance of the mean success estimator when every
/// sequence ends either exactly on target (probability lambda) or in a
/// Haar-random pure state:
///
/// var = s(1-s)/M + ((l-1)/M) (lambda + (1-lambda) 2/(D(D+1)) - s^2).
pub fn unitary_model_variance(
    s_bar: f64,
    dim: HilbertDim,
    repeats: u64,
    m_total: u64,
) -> Result<UnitaryModelVariance, SimError> {
    let d = dim.d();
    let inv_d = 1.0 / d;
    if s_bar < inv_d || s_bar > 1.0 {
        return Err(SimError::MixtureUndefined { s_bar, inv_d });
    }
    let m = m_total as f64;
    let lambda = (s_bar - inv_d) / (1.0 - inv_d);
    let second_moment = lambda + (1.0 - lambda) * 2.0 / (d * (d + 1.0));
    let variance = s_bar * (1.0 - s_bar) / m
        + (repeats as f64 - 1.0) / m * (second_moment - s_bar * s_bar);
    Ok(UnitaryModelVariance {
        variance,
        lambda,
        ci95_total_width: 2.0 * 1.96 * variance.sqrt(),
    })
}

#[derive(Debug, Clone, Copy)]
pub struct HaarMoments {
    pub samples: u64,
    /// Monte Carlo average of the fidelity with a fixed target state.
    pub first_moment: f64,
    /// Monte Carlo average of the squared fidelity.
    pub second_moment: f64,
    pub second_moment_std_error: f64,
    /// 2 / (D (D+1)).
    pub expected_second_moment: f64,
}

const HAAR_CHUNK: u64 = 4096;

/// Estimate the Haar average of the squared fidelity between a random
/// pure state and a fixed target by sampling normalized complex Gaussian
/// vectors.
pub fn haar_fidelity_second_moment(
    dim: HilbertDim,
    samples: u64,
    seed: u64,
) -> Result<HaarMoments, SimError> {
    if samples < 1_000 {
        return Err(SimError::InvalidDesign("need at least 1000 Haar samples".into()));
    }
    let d = dim.d_int() as usize;
    let chunks: u64 = samples.div_ceil(HAAR_CHUNK);
    let partials: Vec<(f64, f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = derive_stream(seed, StreamDomain::Haar, chunk);
            let lo = chunk * HAAR_CHUNK;
            let hi = ((chunk + 1) * HAAR_CHUNK).min(samples);
            let (mut s1, mut s2, mut s4) = (0.0, 0.0, 0.0);
            for _ in lo..hi {
                // |<chi|psi>|^2 for chi = e_0 and psi a normalized
                // complex Gaussian vector
                let mut norm = 0.0;
                let mut first = 0.0;
                for i in 0..d {
                    let re: f64 = StandardNormal.sample(&mut rng);
                    let im: f64 = StandardNormal.sample(&mut rng);
                    let mag = re * re + im * im;
                    norm += mag;
                    if i == 0 {
                        first = mag;
                    }
                }
                let f = first / norm;
                s1 += f;
                s2 += f * f;
                s4 += f * f * f * f;
            }
            (s1, s2, s4)
        })
        .collect();
    let (sum_f, sum_f2, sum_f4) = partials
        .iter()
        .fold((0.0, 0.0, 0.0), |acc, p| (acc.0 + p.0, acc.1 + p.1, acc.2 + p.2));
    let nf = samples as f64;
    let second = sum_f2 / nf;
    let var_f2 = (sum_f4 / nf - second * second).max(0.0);
    let d_f = dim.d();
    Ok(HaarMoments {
        samples,
        first_moment: sum_f / nf,
        second_moment: second,
        second_moment_std_error: (var_f2 / nf).sqrt(),
        expected_second_moment: 2.0 / (d_f * (d_f + 1.0)),
    })
}
