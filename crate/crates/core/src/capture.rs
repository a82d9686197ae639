//! Capture-recapture baseline: estimation when the joint-detection counts
//! are observed. Only the three aggregate means matter here, but the
//! interface takes per-item triples for symmetry with the main method.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{FullCountSample, ModelParams};
use crate::numeric::normal_quantile;
use crate::report::{CiSet, EstimateReport, Method, ParamTriple};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrEstimate {
    pub lambda_hat: f64,
    pub p1_hat: f64,
    pub p2_hat: f64,
    pub x_bar_1: f64,
    pub x_bar_2: f64,
    pub y_bar: f64,
    pub m: usize,
}

/// p1 = ybar/(xbar2 + ybar), p2 = ybar/(xbar1 + ybar),
/// lambda = (xbar1 + ybar)(xbar2 + ybar)/ybar.
pub fn estimate_cr(sample: &FullCountSample) -> Result<CrEstimate> {
    let m = sample.len();
    let mf = m as f64;
    let x_bar_1 = sample.items().iter().map(|t| t.x1 as f64).sum::<f64>() / mf;
    let x_bar_2 = sample.items().iter().map(|t| t.x2 as f64).sum::<f64>() / mf;
    let y_bar = sample.items().iter().map(|t| t.y as f64).sum::<f64>() / mf;
    if y_bar == 0.0 {
        return Err(Error::UndefinedEstimator("y_bar = 0 (no joint detections)".into()));
    }
    // y_bar > 0 implies both marginal totals are positive.
    Ok(CrEstimate {
        lambda_hat: (x_bar_1 + y_bar) * (x_bar_2 + y_bar) / y_bar,
        p1_hat: y_bar / (x_bar_2 + y_bar),
        p2_hat: y_bar / (x_bar_1 + y_bar),
        x_bar_1,
        x_bar_2,
        y_bar,
        m,
    })
}

fn require_interior_rates(params: ModelParams) -> Result<()> {
    if params.p1() == 0.0 || params.p2() == 0.0 {
        return Err(Error::Domain("detection rates must be positive".into()));
    }
    Ok(())
}

/// The detection-rate estimators are unbiased; the defect-rate bias is
/// (1/p1 - 1)(1/p2 - 1)/m to first order.
pub fn cr_asymptotic_expectation(params: ModelParams, m: usize) -> Result<(f64, f64, f64)> {
    require_interior_rates(params)?;
    let (lambda, p1, p2) = (params.lambda(), params.p1(), params.p2());
    let bias = (1.0 / p1 - 1.0) * (1.0 / p2 - 1.0) / m as f64;
    Ok((lambda + bias, p1, p2))
}

/// First-order asymptotic variances:
/// VAR(p_i) = p_i^2 (1 - p_i)/(lambda p1 p2 m),
/// VAR(lambda) = lambda (1 + (1/p1 - 1)(1/p2 - 1))/m.
pub fn cr_asymptotic_variance(params: ModelParams, m: usize) -> Result<(f64, f64, f64)> {
    require_interior_rates(params)?;
    let (lambda, p1, p2) = (params.lambda(), params.p1(), params.p2());
    let mf = m as f64;
    let v_p = |p_i: f64| p_i * p_i * (1.0 - p_i) / (lambda * p1 * p2 * mf);
    let v_lambda = lambda * (1.0 + (1.0 / p1 - 1.0) * (1.0 / p2 - 1.0)) / mf;
    Ok((v_lambda, v_p(p1), v_p(p2)))
}

/// Plug-in asymptotic confidence intervals built from the variance formulas
/// evaluated at the estimates.
pub fn cr_confidence_intervals(est: &CrEstimate, alpha: f64) -> Result<EstimateReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let plug_in = ModelParams::new(est.lambda_hat, est.p1_hat, est.p2_hat)
        .map_err(|e| Error::Domain(e.to_string()))?;
    let (v_lambda, v_p1, v_p2) = cr_asymptotic_variance(plug_in, est.m)?;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let se = ParamTriple {
        lambda: v_lambda.sqrt(),
        p1: v_p1.sqrt(),
        p2: v_p2.sqrt(),
    };
    let interval = |x: f64, s: f64| [x - z * s, x + z * s];
    Ok(EstimateReport {
        method: Method::CaptureRecapture,
        m: est.m,
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
        flags: vec!["PLUG_IN_ASYMPTOTIC".to_string()],
        solver: None,
    })
}
