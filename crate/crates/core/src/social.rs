//! Utilitarian social choice over privacy loss and accuracy.
//!
//! Preferences are linear: privacy enters as -k_i * epsilon and accuracy
//! as a_i + b_i * I. The planner equates the frontier's marginal rate of
//! transformation with the population willingness to accept.

use std::io::BufRead;

use crate::domain::QueryWorkload;
use crate::error::{Error, Result};
use crate::mechanisms::StrategyDecomposition;

/// A block of agents sharing the same preference coefficients. Large
/// homogeneous populations (46 million students, say) stay implicit
/// instead of being materialized agent by agent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PreferenceGroup {
    pub count: u64,
    /// Disutility per unit of privacy loss, k_i >= 0.
    pub privacy_weight: f64,
    /// Intercept of data utility, a_i.
    pub data_intercept: f64,
    /// Marginal utility of accuracy, b_i >= 0.
    pub data_weight: f64,
}

/// Privacy-loss weights and data-utility coefficients for a population.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceProfile {
    groups: Vec<PreferenceGroup>,
}

impl PreferenceProfile {
    pub fn new(groups: Vec<PreferenceGroup>) -> Result<Self> {
        let mut population: u64 = 0;
        let mut sum_b = 0.0;
        for g in &groups {
            if !(g.privacy_weight >= 0.0) {
                return Err(Error::invalid(
                    "preference profile",
                    format!("privacy weight {} is negative", g.privacy_weight),
                ));
            }
            if !(g.data_weight >= 0.0) {
                return Err(Error::invalid(
                    "preference profile",
                    format!("data weight {} is negative", g.data_weight),
                ));
            }
            if !g.data_intercept.is_finite() {
                return Err(Error::invalid("preference profile", "non-finite intercept"));
            }
            population += g.count;
            sum_b += g.count as f64 * g.data_weight;
        }
        if population == 0 {
            return Err(Error::EmptyInput);
        }
        if !(sum_b > 0.0) {
            return Err(Error::ZeroDataWeight);
        }
        Ok(PreferenceProfile { groups })
    }

    /// Per-agent coefficient vectors (k_i, a_i, b_i).
    pub fn from_columns(k: Vec<f64>, a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if k.len() != a.len() || k.len() != b.len() {
            return Err(Error::invalid(
                "preference profile",
                "k, a, b vectors must have equal length",
            ));
        }
        let groups = k
            .into_iter()
            .zip(a)
            .zip(b)
            .map(|((k, a), b)| PreferenceGroup {
                count: 1,
                privacy_weight: k,
                data_intercept: a,
                data_weight: b,
            })
            .collect();
        PreferenceProfile::new(groups)
    }

    /// Compact form: n agents sharing mean weights, expanded implicitly.
    pub fn compact(n: u64, k_bar: f64, b_bar: f64) -> Result<Self> {
        PreferenceProfile::new(vec![PreferenceGroup {
            count: n,
            privacy_weight: k_bar,
            data_intercept: 0.0,
            data_weight: b_bar,
        }])
    }

    /// Load a per-agent CSV with header `k,a,b`.
    pub fn from_csv<R: BufRead>(reader: R) -> Result<Self> {
        let mut k = Vec::new();
        let mut a = Vec::new();
        let mut b = Vec::new();
        for (idx, line) in reader.lines().enumerate() {
            let line = line.map_err(|e| Error::ParseError {
                line: idx + 1,
                message: e.to_string(),
            })?;
            let line = line.trim_end_matches('\r');
            if idx == 0 {
                if line.trim() != "k,a,b" {
                    return Err(Error::ParseError {
                        line: 1,
                        message: format!("expected header `k,a,b`, got {line:?}"),
                    });
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 3 {
                return Err(Error::ParseError {
                    line: idx + 1,
                    message: format!("expected 3 fields, got {}", fields.len()),
                });
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim().parse().map_err(|_| Error::ParseError {
                    line: idx + 1,
                    message: format!("invalid number {s:?}"),
                })
            };
            k.push(parse(fields[0])?);
            a.push(parse(fields[1])?);
            b.push(parse(fields[2])?);
        }
        if k.is_empty() {
            return Err(Error::EmptyDataset);
        }
        PreferenceProfile::from_columns(k, a, b)
    }

    pub fn population(&self) -> u64 {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn sum_privacy_weights(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.count as f64 * g.privacy_weight)
            .sum()
    }

    pub fn sum_data_intercepts(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.count as f64 * g.data_intercept)
            .sum()
    }

    pub fn sum_data_weights(&self) -> f64 {
        self.groups
            .iter()
            .map(|g| g.count as f64 * g.data_weight)
            .sum()
    }
}

/// Utilitarian social welfare at (epsilon, I):
/// sum(a_i) - epsilon * sum(k_i) + I * sum(b_i).
pub fn swf(epsilon: f64, accuracy: f64, prefs: &PreferenceProfile) -> f64 {
    prefs.sum_data_intercepts() - epsilon * prefs.sum_privacy_weights()
        + accuracy * prefs.sum_data_weights()
}

/// Willingness to accept privacy loss in units of accuracy:
/// sum(k_i) / sum(b_i). The profile invariant guarantees the denominator
/// is positive.
pub fn wta(prefs: &PreferenceProfile) -> f64 {
    prefs.sum_privacy_weights() / prefs.sum_data_weights()
}

/// Maximum bisection iterations for the generic equilibrium solver.
pub const MAX_BISECTION_ITERATIONS: usize = 200;

/// Relative tolerance on |MRT - WTA| at the returned optimum.
pub const EQUILIBRIUM_TOLERANCE: f64 = 1e-10;

/// Solve MRT(epsilon) = wta for a monotone-decreasing MRT by bracketed
/// bisection. Requires mrt(lo) > wta > mrt(hi).
pub fn optimal_epsilon<F: Fn(f64) -> f64>(
    mrt: F,
    wta_value: f64,
    bracket: (f64, f64),
) -> Result<f64> {
    let (lo, hi) = bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::ParameterOutOfRange(format!(
            "bracket must satisfy 0 < lo < hi, got ({lo}, {hi})"
        )));
    }
    if !(wta_value > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "wta must be positive, got {wta_value}"
        )));
    }
    let f_lo = mrt(lo);
    let f_hi = mrt(hi);
    if !(f_lo > wta_value && wta_value > f_hi) {
        return Err(Error::BracketDoesNotStraddle {
            lo,
            hi,
            f_lo,
            f_hi,
            target: wta_value,
        });
    }
    let (mut lo, mut hi) = (lo, hi);
    let mut mid = 0.5 * (lo + hi);
    for _ in 0..MAX_BISECTION_ITERATIONS {
        let next = 0.5 * (lo + hi);
        if next <= lo || next >= hi {
            // Interval exhausted at f64 resolution.
            break;
        }
        mid = next;
        let f_mid = mrt(mid);
        if ((f_mid - wta_value) / wta_value).abs() < EQUILIBRIUM_TOLERANCE {
            return Ok(mid);
        }
        if f_mid > wta_value {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(mid)
}

/// Closed-form optimum for the matrix mechanism:
/// epsilon* = (4 (dA)^2 ||QA+||_F^2 / wta)^(1/3).
pub fn optimal_epsilon_matrix(
    workload: &QueryWorkload,
    strategy: &QueryWorkload,
    wta_value: f64,
) -> Result<f64> {
    if !(wta_value > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "wta must be positive, got {wta_value}"
        )));
    }
    let decomp = StrategyDecomposition::new(workload, strategy)?;
    let d2 = decomp.strategy_sensitivity() * decomp.strategy_sensitivity();
    Ok((4.0 * d2 * decomp.reconstruction_frobenius_sq() / wta_value).cbrt())
}

/// Expected utility curvature and wealth weights underlying an agent's
/// data-utility coefficient.
#[derive(Debug, Clone, PartialEq)]
pub struct UtilityCurvatureSpec {
    /// E_x[U''(wealth)] < 0: strict concavity of utility in wealth.
    pub expected_second_derivative: f64,
    /// Per-query wealth weights, conformable with the workload rows.
    pub wealth_weights: Vec<f64>,
}

impl UtilityCurvatureSpec {
    pub fn new(expected_second_derivative: f64, wealth_weights: Vec<f64>) -> Result<Self> {
        if !(expected_second_derivative < 0.0) {
            return Err(Error::ParameterOutOfRange(format!(
                "expected second derivative must be negative, got {expected_second_derivative}"
            )));
        }
        if wealth_weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::invalid("curvature spec", "non-finite wealth weight"));
        }
        Ok(UtilityCurvatureSpec {
            expected_second_derivative,
            wealth_weights,
        })
    }
}

/// Taylor-series data-utility weight:
/// b_i = -(1/2) E[U''] ||Pi^T QA+||_F^2 / ||QA+||_F^2. Always nonnegative.
pub fn data_utility_weight(
    spec: &UtilityCurvatureSpec,
    workload: &QueryWorkload,
    strategy: &QueryWorkload,
) -> Result<f64> {
    if spec.wealth_weights.len() != workload.num_queries() {
        return Err(Error::invalid(
            "curvature spec",
            format!(
                "wealth weights have length {}, workload has {} queries",
                spec.wealth_weights.len(),
                workload.num_queries()
            ),
        ));
    }
    let decomp = StrategyDecomposition::new(workload, strategy)?;
    let recon = decomp.reconstruction();
    // Row vector Pi^T (QA+): length = strategy query count.
    let mut weighted_sq = 0.0;
    for col in 0..recon.ncols() {
        let v: f64 = (0..recon.nrows())
            .map(|row| spec.wealth_weights[row] * recon.entry(row, col))
            .sum();
        weighted_sq += v * v;
    }
    Ok(-0.5 * spec.expected_second_derivative * weighted_sq
        / decomp.reconstruction_frobenius_sq())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DataDomain;

    #[test]
    fn swf_examples() {
        let pure_consumer = PreferenceProfile::from_columns(vec![0.0], vec![0.0], vec![1.0]).unwrap();
        assert_eq!(swf(5.0, -2.0, &pure_consumer), -2.0);

        let err =
            PreferenceProfile::from_columns(vec![1.0, 1.0], vec![0.0, 0.0], vec![0.0, 0.0])
                .unwrap_err();
        assert_eq!(err.name(), "ZeroDataWeight");

        let prefs =
            PreferenceProfile::from_columns(vec![2.0, 1.0], vec![1.0, 0.0], vec![1.0, 3.0])
                .unwrap();
        assert_eq!(swf(1.0, -1.0, &prefs), -6.0);
    }

    #[test]
    fn wta_examples() {
        let single = PreferenceProfile::from_columns(vec![10.0], vec![0.0], vec![5.0]).unwrap();
        assert_eq!(wta(&single), 2.0);

        let nobody =
            PreferenceProfile::from_columns(vec![0.0, 0.0], vec![0.0, 0.0], vec![1.0, 1.0])
                .unwrap();
        assert_eq!(wta(&nobody), 0.0);
    }

    #[test]
    fn profile_rejects_negative_weights() {
        assert!(PreferenceProfile::from_columns(vec![-1.0], vec![0.0], vec![1.0]).is_err());
        assert!(PreferenceProfile::from_columns(vec![1.0], vec![0.0], vec![-1.0]).is_err());
    }

    #[test]
    fn csv_loading() {
        let csv = "k,a,b\n2,1,1\n1,0,3\n";
        let prefs = PreferenceProfile::from_csv(csv.as_bytes()).unwrap();
        assert_eq!(prefs.population(), 2);
        assert_eq!(swf(1.0, -1.0, &prefs), -6.0);

        assert!(PreferenceProfile::from_csv("x,y,z\n1,2,3\n".as_bytes()).is_err());
        assert!(PreferenceProfile::from_csv("k,a,b\n1,2\n".as_bytes()).is_err());
    }

    #[test]
    fn optimal_epsilon_algebraic_examples() {
        // MRT = 4 / eps^3 (single-cell identity workload).
        let mrt = |eps: f64| 4.0 / (eps * eps * eps);
        let star = optimal_epsilon(mrt, 4.0, (1e-3, 1e3)).unwrap();
        assert!((star - 1.0).abs() < 1e-9, "{star}");

        let star = optimal_epsilon(mrt, 0.5, (1e-3, 1e3)).unwrap();
        assert!((star - 2.0).abs() < 1e-9, "{star}");
    }

    #[test]
    fn optimal_epsilon_title_one_example() {
        let id = QueryWorkload::identity(DataDomain::new(13_000).unwrap());
        let mrt = |eps: f64| 4.0 * 13_000.0 / (eps * eps * eps);
        let star = optimal_epsilon(mrt, 3220.0, (1e-3, 1e3)).unwrap();
        assert!((star - 2.53).abs() < 0.5e-2 * 2.52, "{star}");

        let closed = optimal_epsilon_matrix(&id, &id, 3220.0).unwrap();
        assert!((star - closed).abs() < 1e-9);
    }

    #[test]
    fn bracket_must_straddle() {
        let mrt = |eps: f64| 4.0 / (eps * eps * eps);
        let err = optimal_epsilon(mrt, 4.0, (2.0, 3.0)).unwrap_err();
        assert_eq!(err.name(), "BracketDoesNotStraddle");
    }

    #[test]
    fn optimum_is_scale_invariant() {
        let id = QueryWorkload::identity(DataDomain::new(5).unwrap());
        let base = PreferenceProfile::from_columns(
            vec![3.0, 1.0],
            vec![0.0, 0.0],
            vec![0.5, 1.5],
        )
        .unwrap();
        let scaled = PreferenceProfile::from_columns(
            vec![3.0 * 7.0, 1.0 * 7.0],
            vec![0.0, 0.0],
            vec![0.5 * 7.0, 1.5 * 7.0],
        )
        .unwrap();
        let e1 = optimal_epsilon_matrix(&id, &id, wta(&base)).unwrap();
        let e2 = optimal_epsilon_matrix(&id, &id, wta(&scaled)).unwrap();
        assert!((e1 - e2).abs() < 1e-12);
    }

    #[test]
    fn comparative_statics_on_grid() {
        let id = QueryWorkload::identity(DataDomain::new(5).unwrap());
        let sum_k = [1.0, 2.0, 4.0, 8.0, 16.0];
        let sum_b = [0.5, 1.0, 2.0, 4.0, 8.0];
        for (i, &k) in sum_k.iter().enumerate() {
            for (j, &b) in sum_b.iter().enumerate() {
                let star = optimal_epsilon_matrix(&id, &id, k / b).unwrap();
                if i > 0 {
                    let prev = optimal_epsilon_matrix(&id, &id, sum_k[i - 1] / b).unwrap();
                    assert!(star < prev, "eps* must fall as privacy weight rises");
                }
                if j > 0 {
                    let prev = optimal_epsilon_matrix(&id, &id, k / sum_b[j - 1]).unwrap();
                    assert!(star > prev, "eps* must rise as data weight rises");
                }
            }
        }
    }

    #[test]
    fn data_utility_weight_examples() {
        let id4 = QueryWorkload::identity(DataDomain::new(4).unwrap());
        let spec =
            UtilityCurvatureSpec::new(-2.0, vec![1.0, 0.0, 0.0, 0.0]).unwrap();
        let b = data_utility_weight(&spec, &id4, &id4).unwrap();
        assert!((b - 0.25).abs() < 1e-12);

        let zero = UtilityCurvatureSpec::new(-2.0, vec![0.0, 0.0, 0.0, 0.0]).unwrap();
        assert_eq!(data_utility_weight(&zero, &id4, &id4).unwrap(), 0.0);

        let id2 = QueryWorkload::identity(DataDomain::new(2).unwrap());
        let spec = UtilityCurvatureSpec::new(-4.0, vec![1.0, 1.0]).unwrap();
        let b = data_utility_weight(&spec, &id2, &id2).unwrap();
        assert!((b - 2.0).abs() < 1e-12);
    }

    #[test]
    fn curvature_must_be_strictly_concave() {
        assert!(UtilityCurvatureSpec::new(0.0, vec![1.0]).is_err());
        assert!(UtilityCurvatureSpec::new(1.0, vec![1.0]).is_err());
    }
}
