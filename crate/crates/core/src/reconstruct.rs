//! Toy-scale database reconstruction from exactly published marginals.
//!
//! Publication schemes that release exact linear-query answers admit
//! enumeration of every histogram consistent with them; a singleton
//! solution set is a full disclosure. Hard size caps keep this module an
//! oracle and a demonstrator, not an attack tool.

use serde::Serialize;

use crate::domain::{DataDomain, Histogram, QueryWorkload};
use crate::error::{Error, Result};

/// Largest domain accepted for enumeration.
pub const ENUM_MAX_DOMAIN: usize = 8;
/// Largest record count accepted for enumeration.
pub const ENUM_MAX_RECORDS: u64 = 12;

/// All histograms consistent with the published answers.
#[derive(Debug, Clone, Serialize)]
pub struct ReconstructionResult {
    pub consistent_histograms: Vec<Vec<u64>>,
    pub unique: bool,
    pub published_answers: Vec<i64>,
    pub workload_fingerprint: String,
}

fn check_instance(q: &QueryWorkload, answers: &[i64], n: u64, domain: &DataDomain) -> Result<()> {
    if q.domain() != domain {
        return Err(Error::DomainMismatch(
            "workload and domain disagree".into(),
        ));
    }
    if domain.size() > ENUM_MAX_DOMAIN {
        return Err(Error::InstanceTooLarge(format!(
            "domain size {} exceeds {ENUM_MAX_DOMAIN}",
            domain.size()
        )));
    }
    if n > ENUM_MAX_RECORDS {
        return Err(Error::InstanceTooLarge(format!(
            "record count {n} exceeds {ENUM_MAX_RECORDS}"
        )));
    }
    if answers.len() != q.num_queries() {
        return Err(Error::invalid(
            "answers",
            format!(
                "expected {} answers, got {}",
                q.num_queries(),
                answers.len()
            ),
        ));
    }
    Ok(())
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

fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut result: u128 = 1;
    for i in 0..k {
        result = result * (n - i) as u128 / (i + 1) as u128;
    }
    result as u64
}

/// Number of candidate histograms with the given total over `cells` cells.
pub fn candidate_count(cells: usize, n: u64) -> u64 {
    if cells == 0 {
        return if n == 0 { 1 } else { 0 };
    }
    binomial(n + cells as u64 - 1, cells as u64 - 1)
}

/// Enumerate every nonnegative integer histogram with total `n` whose
/// exact answers equal `answers`. The solution list is in lexicographic
/// order; an empty list means the answers are infeasible (not an error).
///
/// Consistency is exact: the intended setting is exactly published
/// integer tables.
pub fn enumerate_consistent(
    q: &QueryWorkload,
    answers: &[i64],
    n: u64,
    domain: &DataDomain,
) -> Result<ReconstructionResult> {
    check_instance(q, answers, n, domain)?;
    let mut consistent = Vec::new();
    for counts in histograms_with_total(domain.size(), n) {
        let h = Histogram::new(domain.clone(), counts.clone())?;
        let got = q.exact_answer(&h)?;
        if got
            .iter()
            .zip(answers)
            .all(|(value, &target)| *value == target as f64)
        {
            consistent.push(counts);
        }
    }
    Ok(ReconstructionResult {
        unique: consistent.len() == 1,
        consistent_histograms: consistent,
        published_answers: answers.to_vec(),
        workload_fingerprint: format!("fnv64:{:016x}", q.matrix().fnv1a_hash()),
    })
}

/// Candidate counts before and after eliminating cells forced to zero by
/// zero-valued counting-query answers.
pub fn zero_cell_pruning_count(
    q: &QueryWorkload,
    answers: &[i64],
    n: u64,
    domain: &DataDomain,
) -> Result<(u64, u64)> {
    check_instance(q, answers, n, domain)?;
    let before = candidate_count(domain.size(), n);
    let mut forced_zero = vec![false; domain.size()];
    for (row, &answer) in answers.iter().enumerate() {
        if answer != 0 {
            continue;
        }
        let is_counting_row =
            (0..domain.size()).all(|c| q.entry(row, c) == 0.0 || q.entry(row, c) == 1.0);
        if !is_counting_row {
            continue;
        }
        for (cell, forced) in forced_zero.iter_mut().enumerate() {
            if q.entry(row, cell) == 1.0 {
                *forced = true;
            }
        }
    }
    let surviving = forced_zero.iter().filter(|&&z| !z).count();
    let after = candidate_count(surviving, n);
    Ok((before, after))
}
