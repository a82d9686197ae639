//! Estimation of a per-item defect rate and two inspectors' detection rates
//! from independently reported per-item defect counts, without observing
//! which defects were found by both inspectors.
//!
//! The observation model: item m carries a Poisson(lambda) number of defects;
//! inspector i finds each defect independently with probability p_i and
//! reports only the count r_{m,i}. The pair (r_{m,1}, r_{m,2}) is bivariate
//! Poisson, and the covariance between the two reports identifies all three
//! parameters.
//!
//! Modules:
//! - [`model`]: parameters, count types, exact pmf and a slow reference pmf.
//! - [`moment`]: closed-form moment estimators with asymptotic bias/variance.
//! - [`mle`]: maximum likelihood via reduction to one scalar equation.
//! - [`fisher`]: expected Fisher information and ML asymptotic variances.
//! - [`capture`]: the capture-recapture baseline that assumes joint-detection
//!   counts are observed.
//! - [`simulation`]: seeded Monte Carlo studies, reference tables, and the
//!   ML-vs-moment efficiency curve.
//! - [`sampling`]: deterministic counter-based RNG and Poisson samplers.
//!
//! With the default `parallel` feature, studies and Fisher-information
//! assembly fan out over rayon; results are bit-identical to the serial
//! build.

pub mod capture;
pub mod error;
pub mod fisher;
pub mod mle;
pub mod model;
pub mod moment;
pub mod numeric;
pub mod report;
pub mod sampling;
pub mod simulation;

pub use capture::{
    cr_asymptotic_expectation, cr_asymptotic_variance, cr_confidence_intervals, estimate_cr,
    CrEstimate,
};
pub use error::{Error, Result};
pub use fisher::{
    fisher_information, fisher_information_serial, mle_asymptotic_variance,
    mle_confidence_intervals, FisherMatrix,
};
pub use mle::{solve_mle, MleEstimate, SolverOptions};
pub use model::{
    pmf, pmf_oracle, CountPair, CountSample, FullCountSample, LatentTriple, ModelParams, RngSeed,
};
pub use moment::{
    estimate_moment, moment_asymptotic_expectation, moment_asymptotic_variance,
    moment_confidence_intervals, MomentEstimate, SummaryStats,
};
pub use report::{CiSet, EstimateReport, Method, ParamTriple, SolverInfo};
pub use sampling::{derive_stream, sample_counts, sample_full};
pub use simulation::{
    reproduce_tables, run_study, run_study_serial, std_ratio_curve, MethodSet, StudyConfig,
    StudyReport, TableId, TableReport,
};
