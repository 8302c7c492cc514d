//! Differentially private publication mechanisms.
//!
//! Three mechanisms are provided: the Laplace mechanism on a query
//! workload, the matrix mechanism (Laplace noise on a low-sensitivity
//! strategy, reconstructed through the pseudo-inverse), and per-record
//! randomized response.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::domain::{Histogram, QueryWorkload};
use crate::error::{Error, Result};
use crate::linalg::WorkloadMatrix;
use crate::noise::{sample_laplace, NoiseSource};

/// Relative tolerance for the representability check Q = (QA+)A.
pub const REPRESENTABILITY_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MechanismId {
    Laplace,
    Matrix,
    RandomizedResponse,
}

impl MechanismId {
    pub fn as_str(&self) -> &'static str {
        match self {
            MechanismId::Laplace => "laplace",
            MechanismId::Matrix => "matrix",
            MechanismId::RandomizedResponse => "randomized-response",
        }
    }

    pub fn parse(s: &str) -> Option<MechanismId> {
        match s {
            "laplace" => Some(MechanismId::Laplace),
            "matrix" => Some(MechanismId::Matrix),
            "randomized-response" => Some(MechanismId::RandomizedResponse),
            _ => None,
        }
    }
}

/// The published answers of one mechanism run, with enough metadata to
/// reproduce it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MechanismOutput {
    pub mechanism: MechanismId,
    pub epsilon: f64,
    pub seed: u64,
    pub stream_id: u64,
    pub answers: Vec<f64>,
}

impl MechanismOutput {
    /// Line-oriented record: mechanism id, epsilon, seed, stream, answers.
    /// Floats carry 17 significant digits so the round trip is exact.
    pub fn to_record_line(&self) -> String {
        let mut line = format!(
            "{} {:.16e} {} {}",
            self.mechanism.as_str(),
            self.epsilon,
            self.seed,
            self.stream_id
        );
        for a in &self.answers {
            line.push_str(&format!(" {:.16e}", a));
        }
        line
    }

    pub fn from_record_line(line: &str) -> Result<MechanismOutput> {
        let mut tok = line.split_whitespace();
        let parse_err = |message: &str| Error::ParseError {
            line: 1,
            message: message.into(),
        };
        let mechanism = tok
            .next()
            .and_then(MechanismId::parse)
            .ok_or_else(|| parse_err("unknown mechanism id"))?;
        let epsilon: f64 = tok
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad epsilon"))?;
        let seed: u64 = tok
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad seed"))?;
        let stream_id: u64 = tok
            .next()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err("bad stream id"))?;
        let answers: Vec<f64> = tok
            .map(|s| s.parse().map_err(|_| parse_err("bad answer value")))
            .collect::<Result<_>>()?;
        Ok(MechanismOutput {
            mechanism,
            epsilon,
            seed,
            stream_id,
            answers,
        })
    }

    /// Optional post-processing: clamp answers at zero. Off by default
    /// because it breaks the closed-form accuracy (the privacy guarantee
    /// is unaffected).
    pub fn clamp_nonnegative(&self) -> MechanismOutput {
        let mut out = self.clone();
        for a in &mut out.answers {
            *a = a.max(0.0);
        }
        out
    }
}

fn check_epsilon(epsilon: f64) -> Result<()> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    Ok(())
}

/// Expected squared l2 error of Laplace-style noise: Var(e) * dA^2 * ||R||_F^2
/// with Var(e) = 2 / eps^2. Shared so structurally identical formulas agree
/// bit for bit across modules.
pub(crate) fn expected_sq_error(epsilon: f64, delta_sq: f64, frobenius_sq: f64) -> f64 {
    let var = 2.0 / (epsilon * epsilon);
    var * delta_sq * frobenius_sq
}

/// Publish Qx + e with e iid Laplace of scale sensitivity(Q) / epsilon.
pub fn laplace_mechanism(
    histogram: &Histogram,
    workload: &QueryWorkload,
    epsilon: f64,
    noise: &NoiseSource,
) -> Result<MechanismOutput> {
    check_epsilon(epsilon)?;
    let mut answers = workload.exact_answer(histogram)?;
    let scale = workload.sensitivity() / epsilon;
    if scale > 0.0 {
        let mut rng = noise.rng();
        for a in &mut answers {
            *a += sample_laplace(scale, &mut rng)?;
        }
    }
    Ok(MechanismOutput {
        mechanism: MechanismId::Laplace,
        epsilon,
        seed: noise.seed(),
        stream_id: noise.stream_id(),
        answers,
    })
}

/// Accuracy of the Laplace mechanism: -k * 2 * (dQ / eps)^2.
pub fn laplace_mechanism_accuracy(workload: &QueryWorkload, epsilon: f64) -> Result<f64> {
    check_epsilon(epsilon)?;
    let delta = workload.sensitivity();
    let k = workload.num_queries() as f64;
    Ok(-expected_sq_error(epsilon, delta * delta, k))
}

/// Moore-Penrose pseudo-inverse of a workload, densely materialized.
pub fn pseudo_inverse(workload: &QueryWorkload) -> DMatrix<f64> {
    workload.matrix().pseudo_inverse().to_dense()
}

/// A strategy matrix with its pseudo-inverse, the reconstruction map QA+,
/// and the strategy sensitivity, precomputed for repeated publication.
#[derive(Debug, Clone)]
pub struct StrategyDecomposition {
    workload: QueryWorkload,
    strategy: QueryWorkload,
    pseudo_inverse: WorkloadMatrix,
    reconstruction: WorkloadMatrix,
    strategy_sensitivity: f64,
}

impl StrategyDecomposition {
    /// Build the decomposition, checking that every workload query is a
    /// linear combination of strategy queries: Q = (QA+)A within
    /// [`REPRESENTABILITY_TOLERANCE`] relative.
    pub fn new(workload: &QueryWorkload, strategy: &QueryWorkload) -> Result<Self> {
        if workload.domain() != strategy.domain() {
            return Err(Error::DomainMismatch(
                "workload and strategy live on different domains".into(),
            ));
        }
        let pseudo_inverse = strategy.matrix().pseudo_inverse();
        let reconstruction = workload.matrix().matmul(&pseudo_inverse);
        let reproduced = reconstruction.matmul(strategy.matrix());
        let residual = workload.matrix().frobenius_distance(&reproduced);
        let q_norm = workload.matrix().frobenius_norm_sq().sqrt();
        if residual > REPRESENTABILITY_TOLERANCE * q_norm.max(f64::MIN_POSITIVE) && q_norm > 0.0 {
            return Err(Error::UnrepresentableWorkload {
                residual: residual / q_norm,
            });
        }
        Ok(StrategyDecomposition {
            workload: workload.clone(),
            strategy: strategy.clone(),
            strategy_sensitivity: strategy.sensitivity(),
            pseudo_inverse,
            reconstruction,
        })
    }

    pub fn workload(&self) -> &QueryWorkload {
        &self.workload
    }

    pub fn strategy(&self) -> &QueryWorkload {
        &self.strategy
    }

    pub fn pseudo_inverse(&self) -> &WorkloadMatrix {
        &self.pseudo_inverse
    }

    /// The reconstruction map QA+.
    pub fn reconstruction(&self) -> &WorkloadMatrix {
        &self.reconstruction
    }

    pub fn strategy_sensitivity(&self) -> f64 {
        self.strategy_sensitivity
    }

    pub fn reconstruction_frobenius_sq(&self) -> f64 {
        self.reconstruction.frobenius_norm_sq()
    }

    /// Publish Qx + QA+(dA)e with e iid Laplace of scale 1/epsilon.
    ///
    /// Computed as Q(x + A+(dA)e), which is the same quantity and makes
    /// derived queries exact post-processing of the strategy answers.
    pub fn publish(
        &self,
        histogram: &Histogram,
        epsilon: f64,
        noise: &NoiseSource,
    ) -> Result<MechanismOutput> {
        check_epsilon(epsilon)?;
        if histogram.domain() != self.workload.domain() {
            return Err(Error::DomainMismatch(
                "histogram and workload live on different domains".into(),
            ));
        }
        let mut synthetic: Vec<f64> = histogram.counts().iter().map(|&c| c as f64).collect();
        if self.strategy_sensitivity > 0.0 {
            let scale = 1.0 / epsilon;
            let mut rng = noise.rng();
            let scaled_noise: Vec<f64> = (0..self.strategy.num_queries())
                .map(|_| sample_laplace(scale, &mut rng).map(|e| self.strategy_sensitivity * e))
                .collect::<Result<_>>()?;
            let correction = self.pseudo_inverse.mul_vec(&scaled_noise);
            for (z, c) in synthetic.iter_mut().zip(&correction) {
                *z += c;
            }
        }
        let answers = self.workload.matrix().mul_vec(&synthetic);
        Ok(MechanismOutput {
            mechanism: MechanismId::Matrix,
            epsilon,
            seed: noise.seed(),
            stream_id: noise.stream_id(),
            answers,
        })
    }

    /// Closed-form accuracy: -Var(e) (dA)^2 ||QA+||_F^2 with Var(e) = 2/eps^2.
    pub fn accuracy(&self, epsilon: f64) -> Result<f64> {
        check_epsilon(epsilon)?;
        let d2 = self.strategy_sensitivity * self.strategy_sensitivity;
        Ok(-expected_sq_error(
            epsilon,
            d2,
            self.reconstruction_frobenius_sq(),
        ))
    }
}

/// Publish the workload through the matrix mechanism with the given
/// strategy.
pub fn matrix_mechanism(
    histogram: &Histogram,
    workload: &QueryWorkload,
    strategy: &QueryWorkload,
    epsilon: f64,
    noise: &NoiseSource,
) -> Result<MechanismOutput> {
    StrategyDecomposition::new(workload, strategy)?.publish(histogram, epsilon, noise)
}

/// Closed-form accuracy of the matrix mechanism.
pub fn matrix_mechanism_accuracy(
    workload: &QueryWorkload,
    strategy: &QueryWorkload,
    epsilon: f64,
) -> Result<f64> {
    StrategyDecomposition::new(workload, strategy)?.accuracy(epsilon)
}

fn check_unit_interval_open(value: f64, name: &str) -> Result<()> {
    if !(value > 0.0 && value < 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "{name} must lie strictly inside (0, 1), got {value}"
        )));
    }
    Ok(())
}

/// Per-record randomized response: each published bit equals the true bit
/// with probability rho and is otherwise a fresh Bernoulli(mu) draw.
pub fn randomized_response_publish(
    bits: &[bool],
    rho: f64,
    mu: f64,
    noise: &NoiseSource,
) -> Result<Vec<bool>> {
    check_unit_interval_open(rho, "rho")?;
    check_unit_interval_open(mu, "mu")?;
    let mut rng = noise.rng();
    Ok(bits
        .iter()
        .map(|&x| if rng.gen_bool(rho) { x } else { rng.gen_bool(mu) })
        .collect())
}

use rand::Rng;

/// Unbiased estimator of the population proportion from randomized
/// responses: (mean(d) - mu(1 - rho)) / rho. The estimate may fall outside
/// [0, 1]; no clamping is applied.
pub fn rr_estimator(published: &[bool], rho: f64, mu: f64) -> Result<f64> {
    if published.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "rho must lie in (0, 1], got {rho}"
        )));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::ParameterOutOfRange(format!(
            "mu must lie in [0, 1], got {mu}"
        )));
    }
    let mean = published.iter().filter(|&&d| d).count() as f64 / published.len() as f64;
    Ok((mean - mu * (1.0 - rho)) / rho)
}

/// Sequential-composition ledger: publishing several workloads from the
/// same database costs the sum of their budgets.
#[derive(Debug, Clone, Default, Serialize)]
pub struct PrivacyLedger {
    entries: Vec<LedgerEntry>,
}

#[derive(Debug, Clone, Serialize)]
pub struct LedgerEntry {
    pub mechanism: MechanismId,
    pub epsilon: f64,
}

impl PrivacyLedger {
    pub fn new() -> Self {
        PrivacyLedger::default()
    }

    pub fn record(&mut self, mechanism: MechanismId, epsilon: f64) -> Result<()> {
        check_epsilon(epsilon)?;
        self.entries.push(LedgerEntry { mechanism, epsilon });
        Ok(())
    }

    pub fn record_output(&mut self, output: &MechanismOutput) -> Result<()> {
        self.record(output.mechanism, output.epsilon)
    }

    pub fn entries(&self) -> &[LedgerEntry] {
        &self.entries
    }

    pub fn total_epsilon(&self) -> f64 {
        self.entries.iter().map(|e| e.epsilon).sum()
    }
}
