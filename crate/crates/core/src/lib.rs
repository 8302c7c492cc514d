//! Privacy-accuracy production frontiers for statistical publication.
//!
//! A statistical agency that publishes with a differentially private
//! mechanism faces a production technology: privacy loss (epsilon) buys
//! statistical accuracy (I, the negative expected squared error). This
//! crate implements that technology end to end:
//!
//! - histograms, linear query workloads, and l1 workload sensitivity;
//! - the Laplace mechanism, the matrix mechanism with its closed-form
//!   accuracy, and randomized response with its unbiased estimator;
//! - frontier curves G(epsilon, I) = 0 and their derivatives (the
//!   marginal rate of transformation);
//! - utilitarian social choice: welfare, willingness to accept, and the
//!   equilibrium condition MRT = WTA that pins the optimal budget;
//! - a school-funding calibration reproducing the benchmark optimum and
//!   its misallocation costs, with a Monte Carlo allocation simulator;
//! - exhaustive toy-scale DP certification and the Bayes-factor semantic
//!   bound;
//! - a reconstruction demonstrator for exactly published marginals.
//!
//! Everything is deterministic given an explicit [`noise::NoiseSource`];
//! all types are immutable after construction and safe to share across
//! threads.

pub mod domain;
pub mod error;
pub mod frontier;
pub mod linalg;
pub mod mechanisms;
pub mod noise;
pub mod reconstruct;
pub mod semantics;
pub mod social;
pub mod title1;

pub use domain::{DataDomain, Histogram, QueryWorkload};
pub use error::{Error, Result};
pub use frontier::{
    frontier_curve, matrix_mechanism_mrt, rr_accuracy, rr_epsilon_of_rho, rr_frontier_slope,
    rr_rho_of_epsilon, rr_variance, AccuracyConvention, FrontierCurve, FrontierPoint, FrontierSpec,
};
pub use mechanisms::{
    laplace_mechanism, matrix_mechanism, matrix_mechanism_accuracy, pseudo_inverse,
    randomized_response_publish, rr_estimator, MechanismId, MechanismOutput, PrivacyLedger,
    StrategyDecomposition,
};
pub use noise::{sample_laplace, NoiseSource};
pub use reconstruct::{enumerate_consistent, zero_cell_pruning_count, ReconstructionResult};
pub use semantics::{
    certify_discrete_mechanism, certify_laplace_workload, rr_bayes_factor,
    secret_pair_bayes_factor, DataGeneratingProcess, DiscreteMechanism, DpCertificate,
};
pub use social::{
    data_utility_weight, optimal_epsilon, optimal_epsilon_matrix, swf, wta, PreferenceGroup,
    PreferenceProfile, UtilityCurvatureSpec,
};
pub use title1::{
    load_districts, mean_squared_sppe, per_student_cost, simulate_allocation, synthetic_districts,
    title1_accuracy, title1_optimal_epsilon, title1_rmse, title1_wta, DistrictRecord,
    Title1Calibration, Title1Report,
};
