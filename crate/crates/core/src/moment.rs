//! Closed-form moment-type estimators.
//!
//! The model gives E(R_i) = lambda * p_i and COV(R1, R2) = lambda * p1 * p2,
//! so plugging in the empirical means and cross-covariance yields
//! p1_hat = s12 / rbar2, p2_hat = s12 / rbar1, lambda_hat = rbar1 rbar2 / s12.
//! Asymptotic bias and variance formulas supply standard errors and
//! confidence intervals.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CountSample, ModelParams};
use crate::numeric::normal_quantile;
use crate::report::{CiSet, EstimateReport, Method, ParamTriple};

/// Empirical means and unbiased (M-1 divisor) cross-covariance of a sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SummaryStats {
    pub r_bar_1: f64,
    pub r_bar_2: f64,
    pub s12: f64,
    pub m: usize,
}

/// Which point estimates fell outside their parameter range. Raw values are
/// reported either way; clamping would silently bias downstream intervals.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Validity {
    pub p1_out_of_range: bool,
    pub p2_out_of_range: bool,
}

impl Validity {
    pub fn any(&self) -> bool {
        self.p1_out_of_range || self.p2_out_of_range
    }

    pub fn flag_names(&self) -> Vec<String> {
        let mut flags = Vec::new();
        if self.p1_out_of_range {
            flags.push("P1_OUT_OF_RANGE".to_string());
        }
        if self.p2_out_of_range {
            flags.push("P2_OUT_OF_RANGE".to_string());
        }
        flags
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MomentEstimate {
    pub lambda_hat: f64,
    pub p1_hat: f64,
    pub p2_hat: f64,
    pub stats: SummaryStats,
    pub validity: Validity,
}

/// Exact means and the two-pass (means first, then deviations)
/// cross-covariance with divisor M-1.
pub fn summarize(sample: &CountSample) -> SummaryStats {
    let m = sample.len();
    let r_bar_1 = sample.items().iter().map(|p| p.r1 as f64).sum::<f64>() / m as f64;
    let r_bar_2 = sample.items().iter().map(|p| p.r2 as f64).sum::<f64>() / m as f64;
    let s12 = sample
        .items()
        .iter()
        .map(|p| (p.r1 as f64 - r_bar_1) * (p.r2 as f64 - r_bar_2))
        .sum::<f64>()
        / (m - 1) as f64;
    SummaryStats { r_bar_1, r_bar_2, s12, m }
}

pub fn estimate_moment(sample: &CountSample) -> Result<MomentEstimate> {
    let stats = summarize(sample);
    if stats.r_bar_1 == 0.0 || stats.r_bar_2 == 0.0 {
        let which = if stats.r_bar_1 == 0.0 { "r_bar_1" } else { "r_bar_2" };
        return Err(Error::UndefinedEstimator(format!("{which} = 0")));
    }
    if stats.s12 <= 0.0 {
        return Err(Error::NonPositiveCovariance(stats.s12));
    }
    let p1_hat = stats.s12 / stats.r_bar_2;
    let p2_hat = stats.s12 / stats.r_bar_1;
    let lambda_hat = stats.r_bar_1 * stats.r_bar_2 / stats.s12;
    let validity = Validity {
        p1_out_of_range: !(0.0..=1.0).contains(&p1_hat),
        p2_out_of_range: !(0.0..=1.0).contains(&p2_hat),
    };
    Ok(MomentEstimate { lambda_hat, p1_hat, p2_hat, stats, validity })
}

fn require_interior_rates(params: ModelParams) -> Result<()> {
    if params.p1() == 0.0 {
        return Err(Error::Domain("p1 = 0 is outside the estimator's domain".into()));
    }
    if params.p2() == 0.0 {
        return Err(Error::Domain("p2 = 0 is outside the estimator's domain".into()));
    }
    Ok(())
}

/// First-order asymptotic expectations of the moment estimators:
/// the detection rates are unbiased to O(1/M^2), the defect-rate bias is
/// ((lambda+1)(1 + 1/(p1 p2)) - 1/p1 - 1/p2) / M.
pub fn moment_asymptotic_expectation(params: ModelParams, m: usize) -> Result<(f64, f64, f64)> {
    require_interior_rates(params)?;
    if m < 2 {
        return Err(Error::SampleTooSmall(m));
    }
    let (lambda, p1, p2) = (params.lambda(), params.p1(), params.p2());
    let bias = (lambda + 1.0) * (1.0 + 1.0 / (p1 * p2)) - 1.0 / p1 - 1.0 / p2;
    Ok((lambda + bias / m as f64, p1, p2))
}

/// First-order asymptotic variances of the moment estimators.
pub fn moment_asymptotic_variance(params: ModelParams, m: usize) -> Result<(f64, f64, f64)> {
    require_interior_rates(params)?;
    if m < 2 {
        return Err(Error::SampleTooSmall(m));
    }
    let (lambda, p1, p2) = (params.lambda(), params.p1(), params.p2());
    let mf = m as f64;
    let v_p = |p_i: f64| p_i * p_i / (p1 * p2) * (1.0 + p1 * p2 + (1.0 - p_i) / lambda) / mf;
    let v_lambda = lambda
        * (lambda * (1.0 / (p1 * p2) + 1.0) + (1.0 / p1 - 1.0) * (1.0 / p2 - 1.0) + 1.0)
        / mf;
    Ok((v_lambda, v_p(p1), v_p(p2)))
}

/// Plug-in confidence intervals at level alpha. Refuses flagged estimates and
/// estimates outside (0, 1].
pub fn moment_confidence_intervals(est: &MomentEstimate, alpha: f64) -> Result<EstimateReport> {
    if est.validity.any() {
        return Err(Error::FlaggedEstimate);
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    if !(est.lambda_hat > 0.0) || !(est.p1_hat > 0.0) || !(est.p2_hat > 0.0) {
        return Err(Error::Domain("plug-in estimates must be positive".into()));
    }
    let plug_in = ModelParams::new(est.lambda_hat, est.p1_hat, est.p2_hat)
        .map_err(|e| Error::Domain(e.to_string()))?;
    let (v_lambda, v_p1, v_p2) = moment_asymptotic_variance(plug_in, est.stats.m)?;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let se = ParamTriple {
        lambda: v_lambda.sqrt(),
        p1: v_p1.sqrt(),
        p2: v_p2.sqrt(),
    };
    let interval = |x: f64, s: f64| [x - z * s, x + z * s];
    Ok(EstimateReport {
        method: Method::Moment,
        m: est.stats.m,
        alpha,
        estimates: ParamTriple {
            lambda: est.lambda_hat,
            p1: est.p1_hat,
            p2: est.p2_hat,
        },
        standard_errors: se,
        ci: CiSet {
            lambda: interval(est.lambda_hat, se.lambda),
            p1: interval(est.p1_hat, se.p1),
            p2: interval(est.p2_hat, se.p2),
        },
        flags: est.validity.flag_names(),
        solver: None,
    })
}
