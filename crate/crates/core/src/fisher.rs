//! Fisher information of the observed pair distribution, computed as the
//! negative expected Hessian of the log-pmf over a truncated count grid,
//! and the asymptotic variances / confidence intervals it implies for the
//! maximum-likelihood estimators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mle::MleEstimate;
use crate::model::{log_pmf, CountPair, ModelParams};
use crate::numeric::{normal_quantile, poisson_upper_quantile};
use crate::report::{CiSet, EstimateReport, Method, ParamTriple, SolverInfo};

/// 3x3 symmetric information matrix in parameter order (lambda, p1, p2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FisherMatrix {
    entries: [[f64; 3]; 3],
    truncation_r1_max: u32,
    truncation_r2_max: u32,
    captured_mass: f64,
}

impl FisherMatrix {
    pub fn entries(&self) -> &[[f64; 3]; 3] {
        &self.entries
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.entries[i][j]
    }

    pub fn truncation(&self) -> (u32, u32) {
        (self.truncation_r1_max, self.truncation_r2_max)
    }

    pub fn captured_mass(&self) -> f64 {
        self.captured_mass
    }

    /// Inverse via the adjugate; errors if the matrix is singular or not
    /// positive definite.
    pub fn inverse(&self) -> Result<[[f64; 3]; 3]> {
        let m = &self.entries;
        let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
        // Leading principal minors check positive definiteness.
        let minor1 = m[0][0];
        let minor2 = m[0][0] * m[1][1] - m[0][1] * m[1][0];
        if !(minor1 > 0.0 && minor2 > 0.0 && det > 0.0) || !det.is_finite() {
            return Err(Error::SingularMatrix);
        }
        let cof = |a: usize, b: usize, c: usize, d: usize| m[a][b] * m[c][d] - m[a][d] * m[c][b];
        let adj = [
            [cof(1, 1, 2, 2), -cof(0, 1, 2, 2), cof(0, 1, 1, 2)],
            [-cof(1, 0, 2, 2), cof(0, 0, 2, 2), -cof(0, 0, 1, 2)],
            [cof(1, 0, 2, 1), -cof(0, 0, 2, 1), cof(0, 0, 1, 1)],
        ];
        let mut inv = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                inv[i][j] = adj[i][j] / det;
            }
        }
        Ok(inv)
    }
}

/// Extra rows/columns added beyond the marginal Poisson quantiles.
const GRID_BUFFER: u32 = 5;

fn validate_tail_eps(tail_eps: f64) -> Result<()> {
    if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
        return Err(Error::Domain(format!(
            "tail_eps must lie in (0, 1e-6], got {tail_eps}"
        )));
    }
    Ok(())
}

/// Central second difference with one Richardson refinement level.
fn second_diff<F: Fn(f64) -> f64>(f: &F, x: f64, f0: f64, h: f64) -> f64 {
    let d2 = |h: f64| (f(x + h) - 2.0 * f0 + f(x - h)) / (h * h);
    let coarse = d2(h);
    let fine = d2(0.5 * h);
    (4.0 * fine - coarse) / 3.0
}

/// Mixed central difference with one Richardson refinement level.
fn mixed_diff<F: Fn(f64, f64) -> f64>(f: &F, x: f64, y: f64, hx: f64, hy: f64) -> f64 {
    let m = |hx: f64, hy: f64| {
        (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy))
            / (4.0 * hx * hy)
    };
    let coarse = m(hx, hy);
    let fine = m(0.5 * hx, 0.5 * hy);
    (4.0 * fine - coarse) / 3.0
}

/// Packed per-grid-point contribution: probability mass followed by the six
/// upper-triangle entries of P * Hessian(ln P).
fn point_contribution(params: ModelParams, pair: CountPair, steps: [f64; 3]) -> [f64; 7] {
    let (lambda, p1, p2) = (params.lambda(), params.p1(), params.p2());
    let eval = |l: f64, a: f64, b: f64| log_pmf(ModelParams::new(l, a, b).unwrap(), pair);
    let f0 = eval(lambda, p1, p2);
    let prob = f0.exp();

    let h_ll = second_diff(&|l| eval(l, p1, p2), lambda, f0, steps[0]);
    let h_11 = second_diff(&|a| eval(lambda, a, p2), p1, f0, steps[1]);
    let h_22 = second_diff(&|b| eval(lambda, p1, b), p2, f0, steps[2]);
    let h_l1 = mixed_diff(&|l, a| eval(l, a, p2), lambda, p1, steps[0], steps[1]);
    let h_l2 = mixed_diff(&|l, b| eval(l, p1, b), lambda, p2, steps[0], steps[2]);
    let h_12 = mixed_diff(&|a, b| eval(lambda, a, b), p1, p2, steps[1], steps[2]);

    [
        prob,
        prob * h_ll,
        prob * h_l1,
        prob * h_l2,
        prob * h_11,
        prob * h_12,
        prob * h_22,
    ]
}

fn row_contribution(params: ModelParams, r1: u32, r2_max: u32, steps: [f64; 3]) -> [f64; 7] {
    let mut acc = [0.0f64; 7];
    for r2 in 0..=r2_max {
        let c = point_contribution(params, CountPair::new(r1, r2), steps);
        for (slot, v) in acc.iter_mut().zip(c) {
            *slot += v;
        }
    }
    acc
}

fn finite_difference_steps(params: ModelParams) -> [f64; 3] {
    let h_p = |p: f64| (0.1 * p.min(1.0 - p)).min(1e-4);
    [1e-4 * params.lambda(), h_p(params.p1()), h_p(params.p2())]
}

fn grid_bounds(params: ModelParams, tail_eps: f64) -> (u32, u32) {
    (
        poisson_upper_quantile(params.lambda() * params.p1(), tail_eps) + GRID_BUFFER,
        poisson_upper_quantile(params.lambda() * params.p2(), tail_eps) + GRID_BUFFER,
    )
}

fn assemble(rows: Vec<[f64; 7]>, bounds: (u32, u32), tail_eps: f64) -> Result<FisherMatrix> {
    let mut total = [0.0f64; 7];
    for row in rows {
        for (slot, v) in total.iter_mut().zip(row) {
            *slot += v;
        }
    }
    let captured_mass = total[0];
    let required = 1.0 - 100.0 * tail_eps;
    if captured_mass < required {
        return Err(Error::TruncationFailure { captured_mass, required });
    }
    let entries = [
        [-total[1], -total[2], -total[3]],
        [-total[2], -total[4], -total[5]],
        [-total[3], -total[5], -total[6]],
    ];
    Ok(FisherMatrix {
        entries,
        truncation_r1_max: bounds.0,
        truncation_r2_max: bounds.1,
        captured_mass,
    })
}

/// Fisher information at interior parameters: I = -E[Hessian of ln P(r1,r2)],
/// the expectation truncated to the grid r1 <= R1max, r2 <= R2max where Rimax
/// is the Poisson(lambda*p_i) upper quantile at 1 - tail_eps plus a buffer.
/// Row sums are accumulated in fixed row order, so the parallel and serial
/// builds produce bit-identical results.
#[cfg(feature = "parallel")]
pub fn fisher_information(params: ModelParams, tail_eps: f64) -> Result<FisherMatrix> {
    use rayon::prelude::*;
    validate_interior(params)?;
    validate_tail_eps(tail_eps)?;
    let bounds = grid_bounds(params, tail_eps);
    let steps = finite_difference_steps(params);
    let rows: Vec<[f64; 7]> = (0..=bounds.0)
        .into_par_iter()
        .map(|r1| row_contribution(params, r1, bounds.1, steps))
        .collect();
    assemble(rows, bounds, tail_eps)
}

#[cfg(not(feature = "parallel"))]
pub fn fisher_information(params: ModelParams, tail_eps: f64) -> Result<FisherMatrix> {
    fisher_information_serial(params, tail_eps)
}

/// Single-threaded evaluation of [`fisher_information`]; same result bit for
/// bit.
pub fn fisher_information_serial(params: ModelParams, tail_eps: f64) -> Result<FisherMatrix> {
    validate_interior(params)?;
    validate_tail_eps(tail_eps)?;
    let bounds = grid_bounds(params, tail_eps);
    let steps = finite_difference_steps(params);
    let rows: Vec<[f64; 7]> = (0..=bounds.0)
        .map(|r1| row_contribution(params, r1, bounds.1, steps))
        .collect();
    assemble(rows, bounds, tail_eps)
}

fn validate_interior(params: ModelParams) -> Result<()> {
    if !params.is_interior() {
        return Err(Error::Domain(
            "Fisher information requires detection rates strictly inside (0,1)".into(),
        ));
    }
    Ok(())
}

/// Asymptotic variances of the ML estimators: diag(I^{-1}) / m.
pub fn mle_asymptotic_variance(fisher: &FisherMatrix, m: usize) -> Result<(f64, f64, f64)> {
    if m < 2 {
        return Err(Error::SampleTooSmall(m));
    }
    let inv = fisher.inverse()?;
    let mf = m as f64;
    Ok((inv[0][0] / mf, inv[1][1] / mf, inv[2][2] / mf))
}

/// Wald intervals estimate +/- z * sqrt([I^{-1}]_ii / m); the Fisher matrix is
/// expected to have been evaluated at the estimates.
pub fn mle_confidence_intervals(
    est: &MleEstimate,
    fisher: &FisherMatrix,
    m: usize,
    alpha: f64,
) -> Result<EstimateReport> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain(format!("alpha must lie in (0,1), got {alpha}")));
    }
    let (v_lambda, v_p1, v_p2) = mle_asymptotic_variance(fisher, m)?;
    let z = normal_quantile(1.0 - alpha / 2.0)?;
    let se = ParamTriple {
        lambda: v_lambda.sqrt(),
        p1: v_p1.sqrt(),
        p2: v_p2.sqrt(),
    };
    let interval = |x: f64, s: f64| [x - z * s, x + z * s];
    Ok(EstimateReport {
        method: Method::Mle,
        m,
        alpha,
        estimates: ParamTriple {
            lambda: est.lambda_star,
            p1: est.p1_star,
            p2: est.p2_star,
        },
        standard_errors: se,
        ci: CiSet {
            lambda: interval(est.lambda_star, se.lambda),
            p1: interval(est.p1_star, se.p1),
            p2: interval(est.p2_star, se.p2),
        },
        flags: Vec::new(),
        solver: Some(SolverInfo {
            iterations: est.solver_iterations,
            residuals: est.residuals,
        }),
    })
}
