//! Point-estimate report shared by the three estimation methods.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Moment,
    Mle,
    CaptureRecapture,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Method::Moment => "moment",
            Method::Mle => "mle",
            Method::CaptureRecapture => "capture_recapture",
        };
        f.write_str(s)
    }
}

/// One value per model parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ParamTriple {
    pub lambda: f64,
    pub p1: f64,
    pub p2: f64,
}

/// Confidence intervals as [low, high] per parameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CiSet {
    pub lambda: [f64; 2],
    pub p1: [f64; 2],
    pub p2: [f64; 2],
}

/// Diagnostics attached when the estimates come from the likelihood solver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverInfo {
    pub iterations: u32,
    /// Values of the three first-order conditions at the solution.
    pub residuals: [f64; 3],
}

/// Point estimates with standard errors and confidence intervals.
///
/// The serialized field names are frozen: {method, m, alpha, estimates,
/// standard_errors, ci, flags, solver}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub method: Method,
    pub m: usize,
    pub alpha: f64,
    pub estimates: ParamTriple,
    pub standard_errors: ParamTriple,
    pub ci: CiSet,
    pub flags: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub solver: Option<SolverInfo>,
}
