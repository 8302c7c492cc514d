//! End-to-end school-funding calibration: district data, the parallel
//! counting-query production function I = -2L/eps^2, the eta-weighted
//! willingness to accept, the closed-form optimum, and a Monte Carlo
//! allocation simulator.

use std::io::BufRead;

use rand::Rng;
use serde::Serialize;

use crate::domain::{DataDomain, QueryWorkload};
use crate::error::{Error, Result};
use crate::frontier::matrix_mechanism_mrt;
use crate::mechanisms::expected_sq_error;
use crate::noise::{sample_laplace, NoiseSource};

/// Number of public school districts in the benchmark calibration.
pub const BENCHMARK_DISTRICTS: u64 = 13_000;
/// School-age children covered by the benchmark calibration.
pub const BENCHMARK_STUDENTS: u64 = 46_000_000;
/// Average squared adjusted per-pupil expenditure, dollars squared.
pub const BENCHMARK_MEAN_SQUARED_SPPE: f64 = 2.0e7;
/// Mean privacy-loss weight: identity-theft cost rounded to the nearest
/// hundred dollars.
pub const IDENTITY_THEFT_COST: f64 = 1_400.0;
/// The unrounded identity-theft cost estimate, for sensitivity checks.
pub const IDENTITY_THEFT_COST_UNROUNDED: f64 = 1_343.0;

/// One school-district row: identifier, adjusted state per-pupil
/// expenditure (dollars), and the count of eligible students.
#[derive(Debug, Clone, PartialEq)]
pub struct DistrictRecord {
    pub district_id: String,
    pub sppe: f64,
    pub eligible_count: u64,
}

/// Load district records from CSV with header
/// `district_id,sppe,eligible_count`.
pub fn load_districts<R: BufRead>(reader: R) -> Result<Vec<DistrictRecord>> {
    let mut records: Vec<DistrictRecord> = Vec::new();
    let mut seen_header = false;
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::ParseError {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim_end_matches('\r');
        if !seen_header {
            if line.trim() != "district_id,sppe,eligible_count" {
                return Err(Error::ParseError {
                    line: line_no,
                    message: format!(
                        "expected header `district_id,sppe,eligible_count`, got {line:?}"
                    ),
                });
            }
            seen_header = true;
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 3 {
            return Err(Error::ParseError {
                line: line_no,
                message: format!("expected 3 fields, got {}", fields.len()),
            });
        }
        let district_id = fields[0].trim().to_string();
        if district_id.is_empty() {
            return Err(Error::ParseError {
                line: line_no,
                message: "empty district id".into(),
            });
        }
        if records.iter().any(|r| r.district_id == district_id) {
            return Err(Error::DuplicateDistrict(district_id));
        }
        let sppe: f64 = fields[1].trim().parse().map_err(|_| Error::ParseError {
            line: line_no,
            message: format!("invalid sppe {:?}", fields[1]),
        })?;
        if !(sppe > 0.0) || !sppe.is_finite() {
            return Err(Error::NonPositiveSppe { line: line_no });
        }
        let eligible_count: u64 = fields[2].trim().parse().map_err(|_| Error::ParseError {
            line: line_no,
            message: format!("invalid eligible count {:?}", fields[2]),
        })?;
        records.push(DistrictRecord {
            district_id,
            sppe,
            eligible_count,
        });
    }
    if !seen_header {
        return Err(Error::ParseError {
            line: 1,
            message: "missing header".into(),
        });
    }
    Ok(records)
}

/// Serialize records back to the CSV interchange format.
pub fn districts_to_csv(records: &[DistrictRecord]) -> String {
    let mut out = String::from("district_id,sppe,eligible_count\n");
    for r in records {
        out.push_str(&format!("{},{},{}\n", r.district_id, r.sppe, r.eligible_count));
    }
    out
}

/// Average squared SPPE across districts.
pub fn mean_squared_sppe(records: &[DistrictRecord]) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let sum: f64 = records.iter().map(|r| r.sppe * r.sppe).sum();
    Ok(sum / records.len() as f64)
}

/// Aggregate inputs of the calibration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Title1Calibration {
    /// Number of school districts, L.
    pub districts: u64,
    /// Number of school-age children, N.
    pub students: u64,
    /// Average squared SPPE, dollars squared.
    pub mean_squared_sppe: f64,
    /// Mean disutility of privacy loss per student, dollars.
    pub mean_privacy_weight: f64,
    /// Relative welfare weight on privacy, eta = phi / (1 - phi).
    pub eta: f64,
}

impl Title1Calibration {
    pub fn new(
        districts: u64,
        students: u64,
        mean_squared_sppe: f64,
        mean_privacy_weight: f64,
        eta: f64,
    ) -> Result<Self> {
        let positive = |v: f64, name: &str| -> Result<()> {
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::ParameterOutOfRange(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
            Ok(())
        };
        if districts == 0 || students == 0 {
            return Err(Error::ParameterOutOfRange(
                "district and student counts must be positive".into(),
            ));
        }
        positive(mean_squared_sppe, "mean squared sppe")?;
        positive(mean_privacy_weight, "mean privacy weight")?;
        positive(eta, "eta")?;
        Ok(Title1Calibration {
            districts,
            students,
            mean_squared_sppe,
            mean_privacy_weight,
            eta,
        })
    }

    /// The benchmark calibration at the given welfare weight.
    pub fn benchmark(eta: f64) -> Result<Self> {
        Title1Calibration::new(
            BENCHMARK_DISTRICTS,
            BENCHMARK_STUDENTS,
            BENCHMARK_MEAN_SQUARED_SPPE,
            IDENTITY_THEFT_COST,
            eta,
        )
    }

    /// Build a calibration from loaded district records plus the
    /// population-side aggregates.
    pub fn from_districts(
        records: &[DistrictRecord],
        students: u64,
        mean_privacy_weight: f64,
        eta: f64,
    ) -> Result<Self> {
        Title1Calibration::new(
            records.len() as u64,
            students,
            mean_squared_sppe(records)?,
            mean_privacy_weight,
            eta,
        )
    }
}

/// Accuracy of publishing all district counts with per-district Laplace
/// noise: I = -2L / eps^2. Identical (bit for bit) to the matrix-mechanism
/// accuracy with the identity workload and strategy.
pub fn title1_accuracy(districts: u64, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    Ok(-expected_sq_error(epsilon, 1.0, districts as f64))
}

/// Willingness to accept privacy loss: eta * N * k_bar / mean(C^2).
pub fn title1_wta(cal: &Title1Calibration) -> f64 {
    cal.eta * cal.students as f64 * cal.mean_privacy_weight / cal.mean_squared_sppe
}

/// Welfare-maximizing privacy loss from MRT = WTA:
/// eps* = (4 L mean(C^2) / (eta N k_bar))^(1/3).
pub fn title1_optimal_epsilon(cal: &Title1Calibration) -> f64 {
    (4.0 * cal.districts as f64 * cal.mean_squared_sppe
        / (cal.eta * cal.students as f64 * cal.mean_privacy_weight))
        .cbrt()
}

/// The welfare weight that would rationalize a target epsilon:
/// eta = 4 L mean(C^2) / (N k_bar eps^3).
pub fn title1_implied_eta(cal: &Title1Calibration, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    Ok(4.0 * cal.districts as f64 * cal.mean_squared_sppe
        / (cal.students as f64 * cal.mean_privacy_weight * epsilon.powi(3)))
}

/// Root-mean-squared misallocation per district, in dollars:
/// sqrt(-mean(C^2) I / L) = sqrt(2 mean(C^2)) / eps.
pub fn title1_rmse(cal: &Title1Calibration, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    Ok((2.0 * cal.mean_squared_sppe).sqrt() / epsilon)
}

/// Misallocation cost per student: rmse * L / N.
pub fn per_student_cost(rmse: f64, districts: u64, students: u64) -> f64 {
    rmse * districts as f64 / students as f64
}

/// Result of a Monte Carlo run of the noisy allocation process.
#[derive(Debug, Clone, Serialize)]
pub struct AllocationSimulation {
    pub epsilon: f64,
    pub replications: u64,
    /// sqrt(mean over replications and districts of C^2 (E_hat - E)^2).
    pub empirical_rmse: f64,
    /// Mean over replications of the total signed misallocation
    /// sum_l C_l (E_hat_l - E_l), in dollars.
    pub mean_signed_misallocation: f64,
    /// Total signed misallocation of each replication.
    pub signed_misallocations: Vec<f64>,
}

impl AllocationSimulation {
    /// Standard error of the per-replication signed misallocation mean.
    pub fn signed_standard_error(&self) -> f64 {
        let n = self.signed_misallocations.len() as f64;
        let mean = self.mean_signed_misallocation;
        let var = self
            .signed_misallocations
            .iter()
            .map(|w| (w - mean) * (w - mean))
            .sum::<f64>()
            / (n - 1.0).max(1.0);
        (var / n).sqrt()
    }
}

/// Publish each district's eligibility count with Laplace noise of scale
/// 1/eps (sensitivity 1 by parallel composition across disjoint
/// districts) and measure the realized misallocation.
///
/// Replication r draws from stream `noise.stream_id() + r`, so runs are
/// independent and any replication can be reproduced in isolation.
pub fn simulate_allocation(
    records: &[DistrictRecord],
    epsilon: f64,
    replications: u64,
    noise: &NoiseSource,
) -> Result<AllocationSimulation> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    if records.is_empty() {
        return Err(Error::EmptyDataset);
    }
    if replications == 0 {
        return Err(Error::ParameterOutOfRange(
            "at least one replication required".into(),
        ));
    }
    let scale = 1.0 / epsilon;
    let mut signed = Vec::with_capacity(replications as usize);
    let mut total_sq = 0.0;
    for rep in 0..replications {
        let mut rng = noise.stream(noise.stream_id() + rep).rng();
        let mut rep_signed = 0.0;
        for r in records {
            let err = sample_laplace(scale, &mut rng)?; // E_hat - E
            rep_signed += r.sppe * err;
            total_sq += r.sppe * r.sppe * err * err;
        }
        signed.push(rep_signed);
    }
    let n = replications as f64 * records.len() as f64;
    Ok(AllocationSimulation {
        epsilon,
        replications,
        empirical_rmse: (total_sq / n).sqrt(),
        mean_signed_misallocation: signed.iter().sum::<f64>() / replications as f64,
        signed_misallocations: signed,
    })
}

/// Seeded synthetic district table matching the benchmark aggregates:
/// the squared-SPPE mean comes out at `mean_squared_sppe_target` and the
/// eligibility counts sum to `total_eligible` exactly.
pub fn synthetic_districts(
    count: u64,
    total_eligible: u64,
    mean_squared_sppe_target: f64,
    seed: u64,
) -> Vec<DistrictRecord> {
    assert!(count > 0, "at least one district");
    let mut rng = NoiseSource::with_stream(seed, 0).rng();

    // SPPE: uniform spread, rescaled so the squared mean hits the target.
    let raw: Vec<f64> = (0..count).map(|_| rng.gen_range(0.6..1.6)).collect();
    let raw_sq_mean = raw.iter().map(|v| v * v).sum::<f64>() / count as f64;
    let scale = (mean_squared_sppe_target / raw_sq_mean).sqrt();

    // Eligibility: random shares of the national total, integerized by
    // largest remainder so the sum is exact.
    let weights: Vec<f64> = (0..count).map(|_| rng.gen_range(0.2..1.8)).collect();
    let weight_sum: f64 = weights.iter().sum();
    let shares: Vec<f64> = weights
        .iter()
        .map(|w| w / weight_sum * total_eligible as f64)
        .collect();
    let mut counts: Vec<u64> = shares.iter().map(|s| s.floor() as u64).collect();
    let assigned: u64 = counts.iter().sum();
    let mut remainder = (total_eligible - assigned) as usize;
    let mut order: Vec<usize> = (0..count as usize).collect();
    order.sort_by(|&i, &j| {
        let fi = shares[i] - shares[i].floor();
        let fj = shares[j] - shares[j].floor();
        fj.partial_cmp(&fi).unwrap().then(i.cmp(&j))
    });
    for &i in order.iter().take(remainder.min(count as usize)) {
        counts[i] += 1;
    }
    remainder = remainder.saturating_sub(count as usize);
    // More records than the remainder in all realistic settings; spread
    // any excess uniformly as a fallback.
    let mut idx = 0;
    while remainder > 0 {
        counts[idx % count as usize] += 1;
        idx += 1;
        remainder -= 1;
    }

    (0..count as usize)
        .map(|i| DistrictRecord {
            district_id: format!("D{:05}", i + 1),
            sppe: raw[i] * scale,
            eligible_count: counts[i],
        })
        .collect()
}

/// The report emitted by the calibration front end.
#[derive(Debug, Clone, Serialize)]
pub struct Title1Report {
    pub epsilon: f64,
    pub eta: f64,
    pub accuracy: f64,
    pub wta: f64,
    pub mrt: f64,
    pub rmse_dollars: f64,
    pub per_student_dollars: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub empirical_rmse: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
}

impl Title1Report {
    /// Evaluate the calibration at its optimum, or at a caller-chosen
    /// epsilon.
    pub fn build(cal: &Title1Calibration, epsilon: Option<f64>) -> Result<Title1Report> {
        let epsilon = match epsilon {
            Some(e) if e > 0.0 && e.is_finite() => e,
            Some(e) => return Err(Error::NonPositiveEpsilon(e)),
            None => title1_optimal_epsilon(cal),
        };
        let identity = QueryWorkload::identity(DataDomain::new(cal.districts as usize)?);
        let rmse = title1_rmse(cal, epsilon)?;
        Ok(Title1Report {
            epsilon,
            eta: cal.eta,
            accuracy: title1_accuracy(cal.districts, epsilon)?,
            wta: title1_wta(cal),
            mrt: matrix_mechanism_mrt(&identity, &identity, epsilon)?,
            rmse_dollars: rmse,
            per_student_dollars: per_student_cost(rmse, cal.districts, cal.students),
            empirical_rmse: None,
            replications: None,
        })
    }

    pub fn with_simulation(mut self, sim: &AllocationSimulation) -> Title1Report {
        self.empirical_rmse = Some(sim.empirical_rmse);
        self.replications = Some(sim.replications);
        self
    }
}
