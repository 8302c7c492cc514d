//! Verification of privacy guarantees at toy scale.
//!
//! Mechanisms with exactly enumerable output distributions are certified
//! by measuring the worst log probability ratio over all adjacent
//! histogram pairs. The same machinery checks the semantic bound: the
//! Bayes factor an attacker attains on any secret pair under an
//! independent data-generating process stays within [e^-eps, e^eps].

use serde::{Serialize, Serializer};

use crate::domain::{DataDomain, Histogram, QueryWorkload};
use crate::error::{Error, Result};
use crate::noise::NoiseSource;

/// Largest domain and record count accepted for exhaustive certification.
pub const CERTIFY_MAX_DOMAIN: usize = 4;
pub const CERTIFY_MAX_RECORDS: u64 = 4;

/// Slack added to the claimed epsilon when judging a certificate.
pub const CERTIFICATE_SLACK: f64 = 1e-9;

/// A mechanism whose exact output distribution over a finite range can be
/// evaluated for any input histogram. No sampling: a sup-ratio bound
/// cannot be verified from draws.
pub trait DiscreteMechanism {
    fn id(&self) -> String;
    fn num_outcomes(&self) -> usize;
    /// Probability of each outcome given the input histogram.
    fn outcome_probabilities(&self, histogram: &Histogram) -> Vec<f64>;
}

/// Randomized response applied to the single bit "is anyone in the
/// database": reports the true bit with probability rho, otherwise a
/// fresh Bernoulli(mu) draw. The worst adjacent pair is the empty
/// database versus a single record.
#[derive(Debug, Clone, Copy)]
pub struct PresenceBitRandomizedResponse {
    pub rho: f64,
    pub mu: f64,
}

impl DiscreteMechanism for PresenceBitRandomizedResponse {
    fn id(&self) -> String {
        format!("randomized-response(rho={},mu={})", self.rho, self.mu)
    }

    fn num_outcomes(&self) -> usize {
        2
    }

    fn outcome_probabilities(&self, histogram: &Histogram) -> Vec<f64> {
        let bit = histogram.total_count() >= 1;
        let p_one = if bit {
            self.rho + (1.0 - self.rho) * self.mu
        } else {
            (1.0 - self.rho) * self.mu
        };
        vec![1.0 - p_one, p_one]
    }
}

/// One randomized-response bit per domain cell, each reporting whether
/// the cell is occupied. Outcomes are bitmasks over cells.
#[derive(Debug, Clone, Copy)]
pub struct PerCellIndicatorRandomizedResponse {
    pub rho: f64,
    pub mu: f64,
    pub cells: usize,
}

impl DiscreteMechanism for PerCellIndicatorRandomizedResponse {
    fn id(&self) -> String {
        format!(
            "per-cell-randomized-response(rho={},mu={},cells={})",
            self.rho, self.mu, self.cells
        )
    }

    fn num_outcomes(&self) -> usize {
        1 << self.cells
    }

    fn outcome_probabilities(&self, histogram: &Histogram) -> Vec<f64> {
        assert_eq!(histogram.domain().size(), self.cells);
        let mut probs = vec![1.0; self.num_outcomes()];
        for (mask, p) in probs.iter_mut().enumerate() {
            for cell in 0..self.cells {
                let occupied = histogram.counts()[cell] >= 1;
                let p_one = if occupied {
                    self.rho + (1.0 - self.rho) * self.mu
                } else {
                    (1.0 - self.rho) * self.mu
                };
                *p *= if mask >> cell & 1 == 1 { p_one } else { 1.0 - p_one };
            }
        }
        probs
    }
}

/// Publishes a constant, ignoring the data: the trivial 0-DP mechanism.
#[derive(Debug, Clone, Copy)]
pub struct ConstantMechanism {
    pub outcomes: usize,
    pub fixed: usize,
}

impl DiscreteMechanism for ConstantMechanism {
    fn id(&self) -> String {
        format!("constant({})", self.fixed)
    }

    fn num_outcomes(&self) -> usize {
        self.outcomes
    }

    fn outcome_probabilities(&self, _histogram: &Histogram) -> Vec<f64> {
        let mut p = vec![0.0; self.outcomes];
        p[self.fixed] = 1.0;
        p
    }
}

/// Publishes the first cell count exactly: blatant disclosure, fails
/// certification for every finite epsilon.
#[derive(Debug, Clone, Copy)]
pub struct DeterministicCountPublication {
    pub max_count: u64,
}

impl DiscreteMechanism for DeterministicCountPublication {
    fn id(&self) -> String {
        "deterministic-count".into()
    }

    fn num_outcomes(&self) -> usize {
        self.max_count as usize + 1
    }

    fn outcome_probabilities(&self, histogram: &Histogram) -> Vec<f64> {
        let c = (histogram.counts()[0]).min(self.max_count) as usize;
        let mut p = vec![0.0; self.num_outcomes()];
        p[c] = 1.0;
        p
    }
}

/// A deterministic map applied to another mechanism's output. Privacy is
/// invariant to post-processing, so the measured ratio can only shrink.
pub struct PostProcessed<'a, M: DiscreteMechanism + ?Sized> {
    inner: &'a M,
    map: Vec<usize>,
    outcomes: usize,
}

impl<'a, M: DiscreteMechanism + ?Sized> PostProcessed<'a, M> {
    pub fn new(inner: &'a M, map: Vec<usize>, outcomes: usize) -> Result<Self> {
        if map.len() != inner.num_outcomes() {
            return Err(Error::invalid(
                "post-processing map",
                "map length must equal the inner outcome count",
            ));
        }
        if map.iter().any(|&o| o >= outcomes) {
            return Err(Error::invalid(
                "post-processing map",
                "map target out of range",
            ));
        }
        Ok(PostProcessed {
            inner,
            map,
            outcomes,
        })
    }
}

impl<M: DiscreteMechanism + ?Sized> DiscreteMechanism for PostProcessed<'_, M> {
    fn id(&self) -> String {
        format!("post-processed({})", self.inner.id())
    }

    fn num_outcomes(&self) -> usize {
        self.outcomes
    }

    fn outcome_probabilities(&self, histogram: &Histogram) -> Vec<f64> {
        let inner = self.inner.outcome_probabilities(histogram);
        let mut out = vec![0.0; self.outcomes];
        for (o, p) in inner.into_iter().enumerate() {
            out[self.map[o]] += p;
        }
        out
    }
}

fn serialize_log_ratio<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str("infinity")
    }
}

/// The result of certifying a mechanism against a claimed epsilon.
#[derive(Debug, Clone, Serialize)]
pub struct DpCertificate {
    pub mechanism_id: String,
    pub claimed_epsilon: f64,
    #[serde(serialize_with = "serialize_log_ratio")]
    pub measured_max_log_ratio: f64,
    pub exhaustive: bool,
    pub fingerprint: String,
    pub pass: bool,
}

impl DpCertificate {
    fn judge(
        mechanism_id: String,
        claimed_epsilon: f64,
        measured: f64,
        exhaustive: bool,
        fingerprint: String,
    ) -> DpCertificate {
        DpCertificate {
            mechanism_id,
            claimed_epsilon,
            measured_max_log_ratio: measured,
            exhaustive,
            fingerprint,
            pass: measured <= claimed_epsilon + CERTIFICATE_SLACK,
        }
    }

    pub fn passes(&self) -> bool {
        self.pass
    }
}

fn histograms_with_total(cells: usize, total: u64) -> Vec<Vec<u64>> {
    if cells == 1 {
        return vec![vec![total]];
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in histograms_with_total(cells - 1, total - first) {
            let mut h = vec![first];
            h.append(&mut rest);
            out.push(h);
        }
    }
    out
}

/// Exhaustively measure the worst log probability ratio of a discrete
/// mechanism over all adjacent histogram pairs with at most `max_n`
/// records, and judge it against the claimed epsilon.
pub fn certify_discrete_mechanism(
    mechanism: &dyn DiscreteMechanism,
    domain: &DataDomain,
    max_n: u64,
    claimed_epsilon: f64,
) -> Result<DpCertificate> {
    if domain.size() > CERTIFY_MAX_DOMAIN {
        return Err(Error::RangeTooLarge(format!(
            "domain size {} exceeds {CERTIFY_MAX_DOMAIN}",
            domain.size()
        )));
    }
    if max_n == 0 || max_n > CERTIFY_MAX_RECORDS {
        return Err(Error::RangeTooLarge(format!(
            "record bound {max_n} outside 1..={CERTIFY_MAX_RECORDS}"
        )));
    }
    let mut measured: f64 = 0.0;
    for total in 0..max_n {
        for counts in histograms_with_total(domain.size(), total) {
            let x = Histogram::new(domain.clone(), counts.clone())?;
            let px = mechanism.outcome_probabilities(&x);
            for cell in 0..domain.size() {
                let mut bumped = counts.clone();
                bumped[cell] += 1;
                let y = Histogram::new(domain.clone(), bumped)?;
                let py = mechanism.outcome_probabilities(&y);
                for (a, b) in px.iter().zip(&py) {
                    match (*a > 0.0, *b > 0.0) {
                        (false, false) => {}
                        (true, true) => measured = measured.max((a / b).ln().abs()),
                        _ => measured = f64::INFINITY,
                    }
                }
            }
        }
    }
    Ok(DpCertificate::judge(
        mechanism.id(),
        claimed_epsilon,
        measured,
        true,
        format!("domain={};n<={max_n}", domain.size()),
    ))
}

/// Grid points used by the analytic Laplace certificate.
pub const LAPLACE_CERT_GRID: usize = 10_000;

/// Certify the Laplace mechanism on a workload analytically: the log
/// density ratio between adjacent inputs separates per coordinate, is
/// evaluated on a grid of output points, and is constant beyond the grid
/// (the tail bound), where it attains its supremum sensitivity/scale.
pub fn certify_laplace_workload(
    workload: &QueryWorkload,
    epsilon: f64,
    grid_points: usize,
) -> Result<DpCertificate> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let delta = workload.sensitivity();
    let measured = if delta == 0.0 {
        0.0
    } else {
        let scale = delta / epsilon;
        // Worst adjacent pair: empty histogram versus one record in the
        // max-l1 column; the answer difference is that column.
        let worst_col = (0..workload.domain().size())
            .max_by(|&a, &b| {
                let ca: f64 = (0..workload.num_queries())
                    .map(|i| workload.entry(i, a).abs())
                    .sum();
                let cb: f64 = (0..workload.num_queries())
                    .map(|i| workload.entry(i, b).abs())
                    .sum();
                ca.partial_cmp(&cb).unwrap()
            })
            .unwrap();
        let mut total = 0.0;
        for row in 0..workload.num_queries() {
            let d = workload.entry(row, worst_col);
            // g(z) = (|z| - |z - d|) / scale, maximized over the grid and
            // constant at |d|/scale beyond it.
            let span = 2.0 * d.abs() + 1.0;
            let mut best = d.abs() / scale; // tail value, the supremum
            let mut grid_best: f64 = f64::NEG_INFINITY;
            for i in 0..grid_points {
                let z = -span + 2.0 * span * i as f64 / (grid_points - 1) as f64;
                grid_best = grid_best.max((z.abs() - (z - d).abs()) / scale);
            }
            debug_assert!(grid_best <= best + 1e-12);
            best = best.max(grid_best);
            total += best;
        }
        total
    };
    Ok(DpCertificate::judge(
        format!("laplace(eps={epsilon})"),
        epsilon,
        measured,
        false,
        format!(
            "domain={};workload=fnv64:{:016x}",
            workload.domain().size(),
            workload.matrix().fnv1a_hash()
        ),
    ))
}

/// An independent data-generating process: individual i enters the
/// database with probability pi_i and, when present, carries a record
/// drawn from f_i over the domain cells.
#[derive(Debug, Clone)]
pub struct DataGeneratingProcess {
    inclusion_probabilities: Vec<f64>,
    record_distributions: Vec<Vec<f64>>,
}

impl DataGeneratingProcess {
    pub fn new(
        inclusion_probabilities: Vec<f64>,
        record_distributions: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if inclusion_probabilities.len() != record_distributions.len() {
            return Err(Error::invalid(
                "data generating process",
                "one record distribution required per individual",
            ));
        }
        if inclusion_probabilities.is_empty() {
            return Err(Error::EmptyInput);
        }
        for &p in &inclusion_probabilities {
            if !(p > 0.0 && p < 1.0) {
                return Err(Error::ParameterOutOfRange(format!(
                    "inclusion probability {p} outside (0, 1)"
                )));
            }
        }
        for f in &record_distributions {
            if f.is_empty() {
                return Err(Error::EmptyInput);
            }
            if f.iter().any(|&p| p < 0.0) {
                return Err(Error::ParameterOutOfRange(
                    "record probabilities must be nonnegative".into(),
                ));
            }
            let total: f64 = f.iter().sum();
            if (total - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(
                    "data generating process",
                    format!("record distribution sums to {total}, expected 1"),
                ));
            }
        }
        Ok(DataGeneratingProcess {
            inclusion_probabilities,
            record_distributions,
        })
    }

    /// Uniform process: every individual included with probability pi,
    /// records uniform over the cells.
    pub fn uniform(population: usize, pi: f64, cells: usize) -> Result<Self> {
        DataGeneratingProcess::new(
            vec![pi; population],
            vec![vec![1.0 / cells as f64; cells]; population],
        )
    }

    pub fn population(&self) -> usize {
        self.inclusion_probabilities.len()
    }

    pub fn cells(&self) -> usize {
        self.record_distributions[0].len()
    }

    /// Probability of one complete database assignment (None = absent,
    /// Some(cell) = present with that record value).
    pub fn database_probability(&self, assignment: &[Option<usize>]) -> f64 {
        assignment
            .iter()
            .enumerate()
            .map(|(i, state)| match state {
                Some(cell) => self.inclusion_probabilities[i] * self.record_distributions[i][*cell],
                None => 1.0 - self.inclusion_probabilities[i],
            })
            .product()
    }
}

/// A mechanism evaluated on a full database assignment rather than its
/// histogram. Needed to express per-record mechanisms whose output
/// factors across individuals.
pub trait DatabaseMechanism {
    fn id(&self) -> String;
    fn num_outcomes(&self) -> usize;
    fn outcome_probabilities(&self, assignment: &[Option<usize>], domain: &DataDomain) -> Vec<f64>;
}

/// Adapter: any histogram mechanism is a database mechanism through the
/// histogram of the assignment.
pub struct ViaHistogram<'a, M: DiscreteMechanism + ?Sized>(pub &'a M);

impl<M: DiscreteMechanism + ?Sized> DatabaseMechanism for ViaHistogram<'_, M> {
    fn id(&self) -> String {
        self.0.id()
    }

    fn num_outcomes(&self) -> usize {
        self.0.num_outcomes()
    }

    fn outcome_probabilities(&self, assignment: &[Option<usize>], domain: &DataDomain) -> Vec<f64> {
        let mut counts = vec![0u64; domain.size()];
        for state in assignment {
            if let Some(cell) = state {
                counts[*cell] += 1;
            }
        }
        let hist = Histogram::new(domain.clone(), counts).expect("conformable counts");
        self.0.outcome_probabilities(&hist)
    }
}

/// Per-record randomized response on presence: one bit per individual
/// slot, reporting presence truthfully with probability rho. The output
/// distribution factors across individuals.
#[derive(Debug, Clone, Copy)]
pub struct PerRecordPresenceRandomizedResponse {
    pub rho: f64,
    pub mu: f64,
    pub population: usize,
}

impl DatabaseMechanism for PerRecordPresenceRandomizedResponse {
    fn id(&self) -> String {
        format!(
            "per-record-randomized-response(rho={},mu={},population={})",
            self.rho, self.mu, self.population
        )
    }

    fn num_outcomes(&self) -> usize {
        1 << self.population
    }

    fn outcome_probabilities(&self, assignment: &[Option<usize>], _domain: &DataDomain) -> Vec<f64> {
        assert_eq!(assignment.len(), self.population);
        let mut probs = vec![1.0; self.num_outcomes()];
        for (mask, p) in probs.iter_mut().enumerate() {
            for (i, state) in assignment.iter().enumerate() {
                let present = state.is_some();
                let p_one = if present {
                    self.rho + (1.0 - self.rho) * self.mu
                } else {
                    (1.0 - self.rho) * self.mu
                };
                *p *= if mask >> i & 1 == 1 { p_one } else { 1.0 - p_one };
            }
        }
        probs
    }
}

/// Bound on the attacker's Bayes factor under randomized response:
/// max(1 + rho/((1-rho)mu), 1 + rho/((1-rho)(1-mu))). Equals e^eps(rho)
/// at mu = 1/2.
pub fn rr_bayes_factor(rho: f64, mu: f64) -> Result<f64> {
    for (v, name) in [(rho, "rho"), (mu, "mu")] {
        if !(v > 0.0 && v < 1.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "{name} must lie strictly inside (0, 1), got {v}"
            )));
        }
    }
    let affirmative = 1.0 + rho / ((1.0 - rho) * mu);
    let negative = 1.0 + rho / ((1.0 - rho) * (1.0 - mu));
    Ok(affirmative.max(negative))
}

/// Largest population accepted for exhaustive secret-pair enumeration.
pub const SEMANTIC_MAX_POPULATION: usize = 3;
pub const SEMANTIC_MAX_DOMAIN: usize = 3;

fn enumerate_assignments(population: usize, cells: usize) -> Vec<Vec<Option<usize>>> {
    let states_per: usize = cells + 1;
    let total = states_per.pow(population as u32);
    let mut out = Vec::with_capacity(total);
    for code in 0..total {
        let mut c = code;
        let mut assignment = Vec::with_capacity(population);
        for _ in 0..population {
            let s = c % states_per;
            c /= states_per;
            assignment.push(if s == 0 { None } else { Some(s - 1) });
        }
        out.push(assignment);
    }
    out
}

/// Ratio of posterior odds to prior odds for the secret pair
/// "individual is in the database with the given attribute" versus
/// "individual is not in the database", after observing one outcome.
/// Both odds are computed by summing the database probabilities.
pub fn secret_pair_bayes_factor(
    dgp: &DataGeneratingProcess,
    mechanism: &dyn DatabaseMechanism,
    domain: &DataDomain,
    individual: usize,
    attribute: usize,
    outcome: usize,
) -> Result<f64> {
    if dgp.population() > SEMANTIC_MAX_POPULATION {
        return Err(Error::PopulationTooLarge(format!(
            "population {} exceeds {SEMANTIC_MAX_POPULATION}",
            dgp.population()
        )));
    }
    if domain.size() > SEMANTIC_MAX_DOMAIN {
        return Err(Error::PopulationTooLarge(format!(
            "domain size {} exceeds {SEMANTIC_MAX_DOMAIN}",
            domain.size()
        )));
    }
    if dgp.cells() != domain.size() {
        return Err(Error::DomainMismatch(
            "process and domain disagree on the cell count".into(),
        ));
    }
    if individual >= dgp.population() || attribute >= domain.size() {
        return Err(Error::ParameterOutOfRange(
            "individual or attribute index out of range".into(),
        ));
    }
    let mut prior_in = 0.0;
    let mut prior_out = 0.0;
    let mut post_in = 0.0;
    let mut post_out = 0.0;
    for assignment in enumerate_assignments(dgp.population(), domain.size()) {
        let weight = dgp.database_probability(&assignment);
        let p_outcome = mechanism.outcome_probabilities(&assignment, domain)[outcome];
        match assignment[individual] {
            Some(cell) if cell == attribute => {
                prior_in += weight;
                post_in += weight * p_outcome;
            }
            None => {
                prior_out += weight;
                post_out += weight * p_outcome;
            }
            Some(_) => {}
        }
    }
    if post_out == 0.0 || prior_in == 0.0 {
        return Err(Error::ParameterOutOfRange(
            "outcome or secret has probability zero under the process".into(),
        ));
    }
    Ok((post_in / post_out) / (prior_in / prior_out))
}

/// Seeded sampler for the presence-bit randomized response, so the CLI
/// demo and the exact distribution share one definition.
pub fn sample_presence_bit_rr(
    truth: bool,
    rho: f64,
    mu: f64,
    noise: &NoiseSource,
) -> Result<bool> {
    let published =
        crate::mechanisms::randomized_response_publish(&[truth], rho, mu, noise)?;
    Ok(published[0])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rr_certificate_matches_closed_form() {
        let domain = DataDomain::new(1).unwrap();
        for rho in [0.2, 0.5, 0.8] {
            let mech = PresenceBitRandomizedResponse { rho, mu: 0.5 };
            let expected = ((1.0 + rho) / (1.0 - rho)).ln();
            let cert = certify_discrete_mechanism(&mech, &domain, 1, expected).unwrap();
            assert!(
                (cert.measured_max_log_ratio - expected).abs() < 1e-12,
                "rho {rho}: measured {}",
                cert.measured_max_log_ratio
            );
            assert!(cert.pass);
            assert!(cert.exhaustive);
        }
    }

    #[test]
    fn constant_mechanism_is_zero_dp() {
        let domain = DataDomain::new(2).unwrap();
        let mech = ConstantMechanism {
            outcomes: 3,
            fixed: 0,
        };
        let cert = certify_discrete_mechanism(&mech, &domain, 3, 0.0).unwrap();
        assert_eq!(cert.measured_max_log_ratio, 0.0);
        assert!(cert.pass);
    }

    #[test]
    fn deterministic_publication_fails_every_finite_epsilon() {
        let domain = DataDomain::new(2).unwrap();
        let mech = DeterministicCountPublication { max_count: 4 };
        for claimed in [1.0, 100.0, 1e12, f64::MAX] {
            let cert = certify_discrete_mechanism(&mech, &domain, 3, claimed).unwrap();
            assert!(cert.measured_max_log_ratio.is_infinite());
            assert!(!cert.pass, "claimed {claimed}");
        }
    }

    #[test]
    fn certification_rejects_large_instances() {
        let mech = ConstantMechanism {
            outcomes: 1,
            fixed: 0,
        };
        let big = DataDomain::new(5).unwrap();
        assert_eq!(
            certify_discrete_mechanism(&mech, &big, 2, 1.0)
                .unwrap_err()
                .name(),
            "RangeTooLarge"
        );
        let ok = DataDomain::new(2).unwrap();
        assert_eq!(
            certify_discrete_mechanism(&mech, &ok, 9, 1.0)
                .unwrap_err()
                .name(),
            "RangeTooLarge"
        );
    }

    #[test]
    fn post_processing_never_increases_the_ratio() {
        let domain = DataDomain::new(2).unwrap();
        let mech = PerCellIndicatorRandomizedResponse {
            rho: 0.5,
            mu: 0.5,
            cells: 2,
        };
        let base = certify_discrete_mechanism(&mech, &domain, 2, f64::INFINITY).unwrap();

        // Merge everything, relabel, and project away the second bit.
        let merge = PostProcessed::new(&mech, vec![0, 0, 0, 0], 1).unwrap();
        let relabel = PostProcessed::new(&mech, vec![3, 2, 1, 0], 4).unwrap();
        let project = PostProcessed::new(&mech, vec![0, 1, 0, 1], 2).unwrap();
        for (name, processed) in [
            ("merge", &merge as &dyn DiscreteMechanism),
            ("relabel", &relabel),
            ("project", &project),
        ] {
            let cert =
                certify_discrete_mechanism(processed, &domain, 2, f64::INFINITY).unwrap();
            assert!(
                cert.measured_max_log_ratio <= base.measured_max_log_ratio + 1e-12,
                "{name}: {} > {}",
                cert.measured_max_log_ratio,
                base.measured_max_log_ratio
            );
        }
    }

    #[test]
    fn laplace_certificate_is_tight() {
        let domain = DataDomain::new(2).unwrap();
        let q = QueryWorkload::new(
            domain,
            vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
        )
        .unwrap();
        for eps in [0.5, 1.0, 3.0] {
            let cert = certify_laplace_workload(&q, eps, LAPLACE_CERT_GRID).unwrap();
            assert!((cert.measured_max_log_ratio - eps).abs() < 1e-9);
            assert!(cert.pass);
            assert!(!cert.exhaustive);
        }
    }

    #[test]
    fn bayes_factor_examples() {
        assert!((rr_bayes_factor(0.5, 0.5).unwrap() - 3.0).abs() < 1e-12);
        assert!((rr_bayes_factor(1e-9, 0.5).unwrap() - 1.0).abs() < 1e-8);
        assert!((rr_bayes_factor(0.5, 0.25).unwrap() - 5.0).abs() < 1e-12);
        assert!(rr_bayes_factor(0.0, 0.5).is_err());
        assert!(rr_bayes_factor(0.5, 1.0).is_err());
    }

    #[test]
    fn bayes_factor_equals_exp_epsilon_at_balanced_mu() {
        for rho in [0.2, 0.5, 0.8] {
            let bf = rr_bayes_factor(rho, 0.5).unwrap();
            let eps = ((1.0 + rho) / (1.0 - rho)).ln();
            assert!((bf - eps.exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_mechanism_carries_no_information() {
        let domain = DataDomain::new(2).unwrap();
        let dgp = DataGeneratingProcess::uniform(2, 0.5, 2).unwrap();
        let mech = ConstantMechanism {
            outcomes: 2,
            fixed: 1,
        };
        let via = ViaHistogram(&mech);
        for individual in 0..2 {
            for attribute in 0..2 {
                let bf = secret_pair_bayes_factor(&dgp, &via, &domain, individual, attribute, 1)
                    .unwrap();
                assert!((bf - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rr_secret_pairs_stay_inside_the_bound() {
        let domain = DataDomain::new(2).unwrap();
        let dgp = DataGeneratingProcess::uniform(2, 0.5, 2).unwrap();
        let mech = PerCellIndicatorRandomizedResponse {
            rho: 0.5,
            mu: 0.5,
            cells: 2,
        };
        let via = ViaHistogram(&mech);
        let lo = 1.0 / 3.0 - 1e-12;
        let hi = 3.0 + 1e-12;
        for individual in 0..2 {
            for attribute in 0..2 {
                for outcome in 0..4 {
                    let bf = secret_pair_bayes_factor(
                        &dgp, &via, &domain, individual, attribute, outcome,
                    )
                    .unwrap();
                    assert!((lo..=hi).contains(&bf), "bf {bf}");
                }
            }
        }
    }

    #[test]
    fn per_record_mechanism_is_independent_of_other_distributions() {
        let domain = DataDomain::new(2).unwrap();
        let mech = PerRecordPresenceRandomizedResponse {
            rho: 0.5,
            mu: 0.5,
            population: 2,
        };
        let base = DataGeneratingProcess::new(
            vec![0.5, 0.4],
            vec![vec![0.5, 0.5], vec![0.7, 0.3]],
        )
        .unwrap();
        let shifted = DataGeneratingProcess::new(
            vec![0.5, 0.4],
            vec![vec![0.5, 0.5], vec![0.1, 0.9]],
        )
        .unwrap();
        for outcome in 0..4 {
            for attribute in 0..2 {
                let a =
                    secret_pair_bayes_factor(&base, &mech, &domain, 0, attribute, outcome).unwrap();
                let b = secret_pair_bayes_factor(&shifted, &mech, &domain, 0, attribute, outcome)
                    .unwrap();
                assert!((a - b).abs() < 1e-12, "outcome {outcome}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn population_cap_is_enforced() {
        let domain = DataDomain::new(2).unwrap();
        let dgp = DataGeneratingProcess::uniform(4, 0.5, 2).unwrap();
        let mech = ConstantMechanism {
            outcomes: 1,
            fixed: 0,
        };
        let via = ViaHistogram(&mech);
        assert_eq!(
            secret_pair_bayes_factor(&dgp, &via, &domain, 0, 0, 0)
                .unwrap_err()
                .name(),
            "PopulationTooLarge"
        );
    }
}
