//! Offline estimators and the Bell/Wigner inequality harness.

pub mod bootstrap;
pub mod estimator;
pub mod inequality;

pub use bootstrap::{bootstrap_errors, BootstrapError};
pub use estimator::{
    classify, estimate_correlation, self_calibrate_analyzing_power, wigner_probability, AnalyzedPair,
    AnalyzingPowerCalibration, CorrelationEstimate, EstimateError, OutcomeCounts, ProbabilityEstimate,
    CLASSIFICATION_DILUTION,
};
pub use inequality::{
    bell_case, bell_cases, evaluate_bell, evaluate_wigner, wigner_case, wigner_cases, BellCase, InequalityError,
    InequalityKind, InequalityResult, Verdict, WignerCase, BELL_LIMIT, WIGNER_LIMIT,
};
