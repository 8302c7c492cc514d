//! Production frontiers: the feasible (epsilon, accuracy) pairs of each
//! mechanism and their derivatives.
//!
//! The marginal rate of transformation dI/d(epsilon) is the accuracy cost
//! of tightening privacy; it is what gets equated with the social
//! willingness to accept in the planner's problem.

use serde::Serialize;

use crate::domain::QueryWorkload;
use crate::error::{Error, Result};
use crate::mechanisms::{MechanismId, StrategyDecomposition};

/// Relative step factor for central finite differences.
pub const FD_STEP_FACTOR: f64 = 1e-6;

/// Privacy loss of randomized response as a function of the truth
/// probability: ln((1 + rho) / (1 - rho)).
pub fn rr_epsilon_of_rho(rho: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&rho) {
        return Err(Error::ParameterOutOfRange(format!(
            "rho must lie in [0, 1), got {rho}"
        )));
    }
    Ok(((1.0 + rho) / (1.0 - rho)).ln())
}

/// Inverse of [`rr_epsilon_of_rho`]: rho = (e^eps - 1) / (1 + e^eps).
pub fn rr_rho_of_epsilon(epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    // Algebraically identical to (e^eps - 1)/(1 + e^eps) but stable for
    // large epsilon.
    Ok((epsilon / 2.0).tanh())
}

/// Closed-form derivative rho'(epsilon) = 2 e^eps / (1 + e^eps)^2
/// = 1 / (1 + cosh(epsilon)).
pub fn rr_rho_of_epsilon_derivative(epsilon: f64) -> Result<f64> {
    if !(epsilon >= 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "epsilon must be nonnegative, got {epsilon}"
        )));
    }
    Ok(1.0 / (1.0 + epsilon.cosh()))
}

fn check_rr_params(rho: f64, pi: f64, mu: f64, n: u64) -> Result<()> {
    if !(rho > 0.0 && rho <= 1.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "rho must lie in (0, 1], got {rho}"
        )));
    }
    if !(0.0..=1.0).contains(&pi) {
        return Err(Error::ParameterOutOfRange(format!(
            "pi must lie in [0, 1], got {pi}"
        )));
    }
    if !(0.0..=1.0).contains(&mu) {
        return Err(Error::ParameterOutOfRange(format!(
            "mu must lie in [0, 1], got {mu}"
        )));
    }
    if n == 0 {
        return Err(Error::ParameterOutOfRange(
            "population size must be positive".into(),
        ));
    }
    Ok(())
}

/// Sampling variance of the randomized-response estimator:
/// [rho(pi - mu) + mu] (1 - rho(pi - mu) - mu) / (rho^2 N).
pub fn rr_variance(rho: f64, pi: f64, mu: f64, n: u64) -> Result<f64> {
    check_rr_params(rho, pi, mu, n)?;
    let p = rho * (pi - mu) + mu; // E[published response]
    Ok(p * (1.0 - p) / (rho * rho * n as f64))
}

/// Which zero point the accuracy measure uses. The two conventions differ
/// by the constant Var at rho = 1, so every derivative is the same.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum AccuracyConvention {
    /// I = -Var of the estimator. The default, and the form the social
    /// welfare function consumes.
    MainText,
    /// I = Var at rho = 1 minus Var at rho: zero when no privacy
    /// protection is applied.
    Appendix,
}

/// Accuracy of randomized response under the chosen convention.
pub fn rr_accuracy(
    rho: f64,
    pi: f64,
    mu: f64,
    n: u64,
    convention: AccuracyConvention,
) -> Result<f64> {
    let var = rr_variance(rho, pi, mu, n)?;
    match convention {
        AccuracyConvention::MainText => Ok(-var),
        AccuracyConvention::Appendix => {
            let baseline = rr_variance(1.0, pi, mu, n)?;
            Ok(baseline - var)
        }
    }
}

/// Slope dI/d(epsilon) of the randomized-response frontier, computed as a
/// central finite difference of the variance formula through
/// rho(epsilon). Always positive.
pub fn rr_frontier_slope(epsilon: f64, pi: f64, mu: f64, n: u64) -> Result<f64> {
    if !(epsilon > 0.0) {
        return Err(Error::ParameterOutOfRange(format!(
            "epsilon must be positive, got {epsilon}"
        )));
    }
    let h = FD_STEP_FACTOR * epsilon.max(1.0);
    if epsilon <= h {
        return Err(Error::ParameterOutOfRange(format!(
            "epsilon {epsilon} too small for finite-difference step {h}"
        )));
    }
    let accuracy_at = |eps: f64| -> Result<f64> {
        rr_accuracy(
            rr_rho_of_epsilon(eps)?,
            pi,
            mu,
            n,
            AccuracyConvention::MainText,
        )
    };
    Ok((accuracy_at(epsilon + h)? - accuracy_at(epsilon - h)?) / (2.0 * h))
}

/// Marginal rate of transformation of the matrix mechanism:
/// 4 (dA)^2 ||QA+||_F^2 / eps^3, the analytic derivative of its accuracy.
pub fn matrix_mechanism_mrt(
    workload: &QueryWorkload,
    strategy: &QueryWorkload,
    epsilon: f64,
) -> Result<f64> {
    let decomp = StrategyDecomposition::new(workload, strategy)?;
    decomposition_mrt(&decomp, epsilon)
}

/// Same as [`matrix_mechanism_mrt`] with a precomputed decomposition.
pub fn decomposition_mrt(decomp: &StrategyDecomposition, epsilon: f64) -> Result<f64> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::NonPositiveEpsilon(epsilon));
    }
    let d2 = decomp.strategy_sensitivity() * decomp.strategy_sensitivity();
    Ok(4.0 * d2 * decomp.reconstruction_frobenius_sq() / (epsilon * epsilon * epsilon))
}

/// One feasible (privacy loss, accuracy) pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrontierPoint {
    pub epsilon: f64,
    pub accuracy: f64,
}

impl FrontierPoint {
    pub fn new(epsilon: f64, accuracy: f64) -> Result<Self> {
        if !(epsilon > 0.0) || !epsilon.is_finite() {
            return Err(Error::NonPositiveEpsilon(epsilon));
        }
        if !(accuracy <= 0.0) {
            return Err(Error::invalid(
                "frontier point",
                format!("accuracy must be nonpositive, got {accuracy}"),
            ));
        }
        Ok(FrontierPoint { epsilon, accuracy })
    }
}

/// A tabulated frontier: strictly increasing in epsilon with
/// nondecreasing accuracy.
#[derive(Debug, Clone, Serialize)]
pub struct FrontierCurve {
    pub mechanism: MechanismId,
    pub parameters: String,
    pub points: Vec<FrontierPoint>,
}

impl FrontierCurve {
    pub fn new(
        mechanism: MechanismId,
        parameters: String,
        points: Vec<FrontierPoint>,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::EmptyInput);
        }
        for pair in points.windows(2) {
            if pair[1].epsilon <= pair[0].epsilon {
                return Err(Error::invalid(
                    "frontier curve",
                    "epsilon grid must be strictly increasing",
                ));
            }
            if pair[1].accuracy < pair[0].accuracy {
                return Err(Error::invalid(
                    "frontier curve",
                    "accuracy must be nondecreasing in epsilon",
                ));
            }
        }
        Ok(FrontierCurve {
            mechanism,
            parameters,
            points,
        })
    }

    /// CSV with an `epsilon,accuracy` header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epsilon,accuracy\n");
        for p in &self.points {
            out.push_str(&format!("{},{}\n", p.epsilon, p.accuracy));
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("frontier curve serializes")
    }
}

/// Parameters selecting which mechanism's frontier to tabulate.
#[derive(Debug, Clone)]
pub enum FrontierSpec {
    RandomizedResponse {
        pi: f64,
        mu: f64,
        n: u64,
        convention: AccuracyConvention,
    },
    Matrix {
        workload: QueryWorkload,
        strategy: QueryWorkload,
    },
}

/// Tabulate the frontier on a strictly increasing positive epsilon grid.
pub fn frontier_curve(spec: &FrontierSpec, eps_grid: &[f64]) -> Result<FrontierCurve> {
    if eps_grid.is_empty() {
        return Err(Error::EmptyInput);
    }
    for pair in eps_grid.windows(2) {
        if pair[1] <= pair[0] {
            return Err(Error::invalid(
                "epsilon grid",
                "grid must be strictly increasing",
            ));
        }
    }
    match spec {
        FrontierSpec::RandomizedResponse {
            pi,
            mu,
            n,
            convention,
        } => {
            let points = eps_grid
                .iter()
                .map(|&eps| {
                    if !(eps > 0.0) {
                        return Err(Error::NonPositiveEpsilon(eps));
                    }
                    let rho = rr_rho_of_epsilon(eps)?;
                    FrontierPoint::new(eps, rr_accuracy(rho, *pi, *mu, *n, *convention)?)
                })
                .collect::<Result<_>>()?;
            FrontierCurve::new(
                MechanismId::RandomizedResponse,
                format!("pi={pi},mu={mu},n={n}"),
                points,
            )
        }
        FrontierSpec::Matrix { workload, strategy } => {
            let decomp = StrategyDecomposition::new(workload, strategy)?;
            let points = eps_grid
                .iter()
                .map(|&eps| FrontierPoint::new(eps, decomp.accuracy(eps)?))
                .collect::<Result<_>>()?;
            FrontierCurve::new(
                MechanismId::Matrix,
                format!(
                    "workload=fnv64:{:016x},strategy=fnv64:{:016x}",
                    workload.matrix().fnv1a_hash(),
                    strategy.matrix().fnv1a_hash()
                ),
                points,
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::DataDomain;
    use crate::mechanisms::matrix_mechanism_accuracy;

    #[test]
    fn epsilon_of_rho_examples() {
        assert_eq!(rr_epsilon_of_rho(0.0).unwrap(), 0.0);
        assert!((rr_epsilon_of_rho(0.5).unwrap() - 3.0_f64.ln()).abs() < 1e-15);
        assert!((rr_epsilon_of_rho(1.0 / 3.0).unwrap() - 2.0_f64.ln()).abs() < 1e-15);
        assert!(rr_epsilon_of_rho(1.0).is_err());
        assert!(rr_epsilon_of_rho(-0.1).is_err());
    }

    #[test]
    fn rho_of_epsilon_examples() {
        assert_eq!(rr_rho_of_epsilon(0.0).unwrap(), 0.0);
        assert!((rr_rho_of_epsilon(3.0_f64.ln()).unwrap() - 0.5).abs() < 1e-15);
        let rho = rr_rho_of_epsilon(10.0).unwrap();
        assert!((rho - 0.9999092).abs() < 1e-7);
        assert!(rho < 1.0);
    }

    #[test]
    fn rho_epsilon_round_trip() {
        for i in 0..=9 {
            let rho = 0.1 * i as f64;
            let back = rr_rho_of_epsilon(rr_epsilon_of_rho(rho).unwrap()).unwrap();
            assert!((back - rho).abs() < 1e-12, "rho {rho} -> {back}");
        }
        let back = rr_rho_of_epsilon(rr_epsilon_of_rho(0.99).unwrap()).unwrap();
        assert!((back - 0.99).abs() < 1e-12);
    }

    #[test]
    fn rho_derivative_closed_form() {
        assert!((rr_rho_of_epsilon_derivative(0.0).unwrap() - 0.5).abs() < 1e-15);
        // Matches a finite difference of the inverse map.
        let eps = 1.7;
        let h = 1e-6;
        let fd = (rr_rho_of_epsilon(eps + h).unwrap() - rr_rho_of_epsilon(eps - h).unwrap())
            / (2.0 * h);
        assert!((rr_rho_of_epsilon_derivative(eps).unwrap() - fd).abs() < 1e-9);
    }

    #[test]
    fn variance_examples() {
        assert!((rr_variance(1.0, 0.5, 0.5, 100).unwrap() - 0.0025).abs() < 1e-15);
        assert!((rr_variance(0.5, 0.5, 0.5, 100).unwrap() - 0.01).abs() < 1e-15);
        assert!(rr_variance(0.0, 0.5, 0.5, 100).is_err());
        assert!(rr_variance(0.5, 1.5, 0.5, 100).is_err());
        assert!(rr_variance(0.5, 0.5, 0.5, 0).is_err());
    }

    #[test]
    fn accuracy_conventions_differ_by_constant() {
        // Appendix convention is zero at rho = 1.
        assert_eq!(
            rr_accuracy(1.0, 0.3, 0.5, 50, AccuracyConvention::Appendix).unwrap(),
            0.0
        );
        assert!(
            (rr_accuracy(1.0, 0.5, 0.5, 100, AccuracyConvention::MainText).unwrap() + 0.0025)
                .abs()
                < 1e-15
        );
        // Same derivative in rho under both conventions.
        let h = 1e-6;
        for convention in [AccuracyConvention::MainText, AccuracyConvention::Appendix] {
            let d = (rr_accuracy(0.5 + h, 0.3, 0.5, 100, convention).unwrap()
                - rr_accuracy(0.5 - h, 0.3, 0.5, 100, convention).unwrap())
                / (2.0 * h);
            let d_main = (rr_accuracy(0.5 + h, 0.3, 0.5, 100, AccuracyConvention::MainText)
                .unwrap()
                - rr_accuracy(0.5 - h, 0.3, 0.5, 100, AccuracyConvention::MainText).unwrap())
                / (2.0 * h);
            assert!((d - d_main).abs() < 1e-9);
        }
    }

    #[test]
    fn frontier_slope_positive_and_decreasing() {
        let s1 = rr_frontier_slope(1.0, 0.5, 0.5, 100).unwrap();
        let s2 = rr_frontier_slope(2.0, 0.5, 0.5, 100).unwrap();
        assert!(s1 > 0.0);
        assert!(s2 > 0.0);
        assert!(s2 < s1, "slope must fall with epsilon: {s1} vs {s2}");
    }

    #[test]
    fn matrix_mrt_examples() {
        let id1 = QueryWorkload::identity(DataDomain::new(1).unwrap());
        assert!((matrix_mechanism_mrt(&id1, &id1, 1.0).unwrap() - 4.0).abs() < 1e-12);

        let id = QueryWorkload::identity(DataDomain::new(13_000).unwrap());
        let mrt = matrix_mechanism_mrt(&id, &id, 2.52).unwrap();
        assert!((mrt - 3249.4).abs() < 1.0, "mrt {mrt}");
    }

    #[test]
    fn matrix_mrt_matches_finite_difference() {
        let id5 = QueryWorkload::identity(DataDomain::new(5).unwrap());
        let eps: f64 = 1.7;
        let h = FD_STEP_FACTOR * eps.max(1.0);
        let fd = (matrix_mechanism_accuracy(&id5, &id5, eps + h).unwrap()
            - matrix_mechanism_accuracy(&id5, &id5, eps - h).unwrap())
            / (2.0 * h);
        let mrt = matrix_mechanism_mrt(&id5, &id5, eps).unwrap();
        assert!((mrt - fd).abs() / mrt < 1e-6);
    }

    #[test]
    fn curve_identity_workload_example() {
        let id2 = QueryWorkload::identity(DataDomain::new(2).unwrap());
        let spec = FrontierSpec::Matrix {
            workload: id2.clone(),
            strategy: id2,
        };
        let curve = frontier_curve(&spec, &[1.0, 2.0, 4.0]).unwrap();
        let acc: Vec<f64> = curve.points.iter().map(|p| p.accuracy).collect();
        assert_eq!(acc, vec![-4.0, -1.0, -0.25]);
    }

    #[test]
    fn curve_single_point_and_validation() {
        let id1 = QueryWorkload::identity(DataDomain::new(1).unwrap());
        let spec = FrontierSpec::Matrix {
            workload: id1.clone(),
            strategy: id1,
        };
        let curve = frontier_curve(&spec, &[0.7]).unwrap();
        assert_eq!(curve.points.len(), 1);

        assert!(frontier_curve(&spec, &[]).is_err());
        assert!(frontier_curve(&spec, &[1.0, 1.0]).is_err());
        assert!(frontier_curve(&spec, &[2.0, 1.0]).is_err());
    }

    #[test]
    fn rr_curve_is_strictly_increasing() {
        let spec = FrontierSpec::RandomizedResponse {
            pi: 0.5,
            mu: 0.5,
            n: 100,
            convention: AccuracyConvention::MainText,
        };
        let grid: Vec<f64> = (0..100).map(|i| 0.1 + 4.9 * i as f64 / 99.0).collect();
        let curve = frontier_curve(&spec, &grid).unwrap();
        for pair in curve.points.windows(2) {
            assert!(pair[1].accuracy > pair[0].accuracy);
        }
    }

    #[test]
    fn csv_export_shape() {
        let id1 = QueryWorkload::identity(DataDomain::new(1).unwrap());
        let spec = FrontierSpec::Matrix {
            workload: id1.clone(),
            strategy: id1,
        };
        let csv = frontier_curve(&spec, &[1.0, 2.0]).unwrap().to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "epsilon,accuracy");
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[1], "1,-2");
    }
}
