//! Maximum-likelihood estimation.
//!
//! The three-parameter likelihood reduces to one scalar equation: the
//! stationarity conditions force p1 = rbar1/lambda and p2 = rbar2/lambda, and
//! substituting these into the lambda condition leaves
//!
//!   g(lambda) = -(lambda/rbar1 - 1)(lambda/rbar2 - 1)
//!               * PsiPrime((1 - rbar1/lambda)(1 - rbar2/lambda) lambda) - 1 = 0,
//!
//! where Psi(z) is the data-dependent log-sum term of the per-item likelihood
//! and PsiPrime its derivative. The solver brackets a sign change of g above
//! max(rbar1, rbar2) and polishes it with a safeguarded secant/bisection
//! hybrid. When no sign change exists the likelihood maximum sits on the
//! boundary of the parameter domain and the solver reports that instead of
//! inventing an estimate.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{CountSample, ModelParams};
use crate::moment;
use crate::numeric::ln_factorial;

/// Immutable per-sample tables for likelihood evaluation.
///
/// For item m the inner sum of the likelihood runs over the latent
/// joint-detection count l with coefficients
/// c_{m,l} = C(r1,l) C(r2,l) l!, cached here in log form.
#[derive(Debug, Clone)]
pub struct LikelihoodContext {
    /// log c_{m,l} for l = 0..=min(r1,r2), one table per item.
    log_coeffs: Vec<Vec<f64>>,
    /// log(c_{m,l} * l) for l = 1..=min(r1,r2), used by the derivative.
    log_coeffs_deriv: Vec<Vec<f64>>,
    r_bar_1: f64,
    r_bar_2: f64,
    /// (1/M) sum of ln(r1! r2!), the parameter-free likelihood constant.
    ln_factorial_term: f64,
    m: usize,
}

impl LikelihoodContext {
    pub fn new(sample: &CountSample) -> Self {
        let m = sample.len();
        let mut log_coeffs = Vec::with_capacity(m);
        let mut log_coeffs_deriv = Vec::with_capacity(m);
        let mut sum_r1 = 0.0f64;
        let mut sum_r2 = 0.0f64;
        let mut ln_fact = 0.0f64;
        for pair in sample.items() {
            let (r1, r2) = (pair.r1 as u64, pair.r2 as u64);
            sum_r1 += r1 as f64;
            sum_r2 += r2 as f64;
            ln_fact += ln_factorial(r1) + ln_factorial(r2);
            let lmax = r1.min(r2);
            let table: Vec<f64> = (0..=lmax)
                .map(|l| {
                    crate::numeric::ln_binomial(r1, l)
                        + crate::numeric::ln_binomial(r2, l)
                        + ln_factorial(l)
                })
                .collect();
            let deriv: Vec<f64> = (1..=lmax)
                .map(|l| table[l as usize] + (l as f64).ln())
                .collect();
            log_coeffs.push(table);
            log_coeffs_deriv.push(deriv);
        }
        Self {
            log_coeffs,
            log_coeffs_deriv,
            r_bar_1: sum_r1 / m as f64,
            r_bar_2: sum_r2 / m as f64,
            ln_factorial_term: ln_fact / m as f64,
            m,
        }
    }

    pub fn r_bar_1(&self) -> f64 {
        self.r_bar_1
    }

    pub fn r_bar_2(&self) -> f64 {
        self.r_bar_2
    }

    pub fn sample_size(&self) -> usize {
        self.m
    }

    /// Direct recomputation of one cached coefficient, for spot checks.
    pub fn coefficient_log(&self, item: usize, l: usize) -> f64 {
        self.log_coeffs[item][l]
    }
}

fn require_positive_z(z: f64) -> Result<()> {
    if !(z > 0.0) {
        return Err(Error::Domain(format!("Psi requires z > 0, got {z}")));
    }
    Ok(())
}

/// Allocation-free log-sum-exp of `base[l] - scale(l)` style terms.
fn item_log_sum(table: &[f64], ln_z: f64, offset: f64) -> f64 {
    // terms: table[l] - (l + offset) * ln_z, l starting at `offset as usize`
    // is encoded by the caller via the table contents; here l is the index
    // within `table` shifted by `offset`.
    let mut max = f64::NEG_INFINITY;
    for (i, &c) in table.iter().enumerate() {
        let t = c - (i as f64 + offset) * ln_z;
        if t > max {
            max = t;
        }
    }
    if !max.is_finite() {
        return max;
    }
    let mut sum = 0.0;
    for (i, &c) in table.iter().enumerate() {
        sum += (c - (i as f64 + offset) * ln_z - max).exp();
    }
    max + sum.ln()
}

/// Psi(z) = (1/M) sum_m ln sum_l c_{m,l} z^{-l}, inner sums via log-sum-exp.
pub fn psi(z: f64, ctx: &LikelihoodContext) -> Result<f64> {
    require_positive_z(z)?;
    let ln_z = z.ln();
    let total: f64 = ctx
        .log_coeffs
        .iter()
        .map(|table| item_log_sum(table, ln_z, 0.0))
        .sum();
    Ok(total / ctx.m as f64)
}

/// Exact derivative of `psi`; always <= 0.
pub fn psi_prime(z: f64, ctx: &LikelihoodContext) -> Result<f64> {
    require_positive_z(z)?;
    let ln_z = z.ln();
    let mut total = 0.0f64;
    for (table, deriv) in ctx.log_coeffs.iter().zip(&ctx.log_coeffs_deriv) {
        if deriv.is_empty() {
            continue;
        }
        let log_den = item_log_sum(table, ln_z, 0.0);
        // numerator terms: c_l * l * z^{-(l+1)}, l >= 1; deriv[i] holds l = i+1.
        let log_num = item_log_sum(deriv, ln_z, 2.0);
        total += (log_num - log_den).exp();
    }
    Ok(-total / ctx.m as f64)
}

/// Per-item average log-likelihood, including the parameter-free constant.
/// Defined for interior detection rates only; the Psi form is singular at
/// p in {0, 1}.
pub fn log_likelihood(params: ModelParams, ctx: &LikelihoodContext) -> Result<f64> {
    let (lambda, p1, p2) = (params.lambda(), params.p1(), params.p2());
    if !params.is_interior() {
        return Err(Error::Domain(
            "log_likelihood requires detection rates strictly inside (0,1)".into(),
        ));
    }
    let q = (1.0 - p1) * (1.0 - p2);
    let z = q * lambda;
    Ok(-lambda * (1.0 - q)
        + ctx.r_bar_1 * (lambda * p1 * (1.0 - p2)).ln()
        + ctx.r_bar_2 * (lambda * p2 * (1.0 - p1)).ln()
        - ctx.ln_factorial_term
        + psi(z, ctx)?)
}

/// The three first-order conditions (partials of the average log-likelihood
/// with respect to lambda, p1, p2).
pub fn score(params: ModelParams, ctx: &LikelihoodContext) -> Result<[f64; 3]> {
    let (lambda, p1, p2) = (params.lambda(), params.p1(), params.p2());
    if !params.is_interior() {
        return Err(Error::Domain(
            "score requires detection rates strictly inside (0,1)".into(),
        ));
    }
    let q = (1.0 - p1) * (1.0 - p2);
    let w = psi_prime(q * lambda, ctx)?;
    let d_lambda = -(1.0 - q) + (ctx.r_bar_1 + ctx.r_bar_2) / lambda + q * w;
    let d_p1 = -lambda * (1.0 - p2) + ctx.r_bar_1 / p1 - ctx.r_bar_2 / (1.0 - p1)
        - (1.0 - p2) * lambda * w;
    let d_p2 = -lambda * (1.0 - p1) - ctx.r_bar_1 / (1.0 - p2) + ctx.r_bar_2 / p2
        - (1.0 - p1) * lambda * w;
    Ok([d_lambda, d_p1, d_p2])
}

/// The scalar reduction g(lambda); a root above max(rbar1, rbar2) is the
/// interior likelihood maximizer.
pub fn mle_scalar_residual(lambda: f64, ctx: &LikelihoodContext) -> Result<f64> {
    let (r1, r2) = (ctx.r_bar_1, ctx.r_bar_2);
    if r1 == 0.0 || r2 == 0.0 {
        return Err(Error::UndefinedEstimator("r_bar_1 or r_bar_2 is 0".into()));
    }
    if !(lambda > r1.max(r2)) {
        return Err(Error::Domain(format!(
            "g is defined only for lambda > max(r_bar_1, r_bar_2) = {}, got {lambda}",
            r1.max(r2)
        )));
    }
    // (lambda - rbar)/lambda, not 1 - rbar/lambda: the subtraction is exact
    // near the lower bound, where the latter form loses half its digits.
    let a = lambda - r1;
    let b = lambda - r2;
    let z = a * b / lambda;
    let w = psi_prime(z, ctx)?;
    Ok(-(a * b / (r1 * r2)) * w - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    /// Relative width tolerance on the final lambda bracket.
    pub rel_tol: f64,
    /// Geometric bracket expansions in each direction (factor 2 per step).
    pub max_expansions: u32,
    /// Cap on polish iterations.
    pub max_iterations: u32,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-12,
            max_expansions: 60,
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleEstimate {
    pub lambda_star: f64,
    pub p1_star: f64,
    pub p2_star: f64,
    /// First-order conditions evaluated at the solution.
    pub residuals: [f64; 3],
    pub solver_iterations: u32,
}

/// Margin above max(rbar1, rbar2) guarding the boundary singularity of the
/// p = rbar/lambda substitution.
const LOWER_BOUND_MARGIN: f64 = 1e-9;

/// Evaluations of g carry rounding error around this magnitude. A sign
/// change where both endpoints are inside the noise band is indistinguishable
/// from g touching zero at the domain boundary (e.g. zero-covariance data,
/// where g decays to 0+ as lambda grows) and is not treated as a bracket.
const RESIDUAL_NOISE_FLOOR: f64 = 1e-11;

pub fn solve_mle(sample: &CountSample, options: SolverOptions) -> Result<MleEstimate> {
    let ctx = LikelihoodContext::new(sample);
    if ctx.r_bar_1 == 0.0 || ctx.r_bar_2 == 0.0 {
        return Err(Error::UndefinedEstimator("r_bar_1 or r_bar_2 is 0".into()));
    }
    let lo = ctx.r_bar_1.max(ctx.r_bar_2) * (1.0 + LOWER_BOUND_MARGIN);

    // Start at the moment estimate when it exists and is admissible.
    let start = match moment::estimate_moment(sample) {
        Ok(est) if est.lambda_hat > lo => est.lambda_hat,
        _ => 2.0 * ctx.r_bar_1.max(ctx.r_bar_2),
    };
    let start = start.max(lo * (1.0 + LOWER_BOUND_MARGIN));

    // Scan geometrically below (halving toward the lower bound) and above
    // (doubling), keeping every evaluation. The interior maximum corresponds
    // to an upward crossing of g: a bracket with g < 0 on the left and
    // g > 0 on the right.
    let mut points: Vec<(f64, f64)> = vec![(start, mle_scalar_residual(start, &ctx)?)];
    let mut evals = 1u32;
    let mut bracket: Option<((f64, f64), (f64, f64))> = None;
    for k in 1..=options.max_expansions {
        let down = lo + (start - lo) / (1u64 << k.min(52)) as f64;
        let up = start * (1u64 << k.min(52)) as f64;
        for lambda in [down, up] {
            if points.iter().any(|&(x, _)| x == lambda) {
                continue;
            }
            let g = mle_scalar_residual(lambda, &ctx)?;
            evals += 1;
            let pos = points.partition_point(|&(x, _)| x < lambda);
            points.insert(pos, (lambda, g));
        }
        // Innermost adjacent (-, +) pair.
        bracket = points
            .windows(2)
            .filter(|w| {
                w[0].1 < 0.0
                    && w[1].1 >= 0.0
                    && (w[0].1 < -RESIDUAL_NOISE_FLOOR || w[1].1 > RESIDUAL_NOISE_FLOOR)
            })
            .min_by(|a, b| {
                let da = (a[0].0 - start).abs().min((a[1].0 - start).abs());
                let db = (b[0].0 - start).abs().min((b[1].0 - start).abs());
                da.partial_cmp(&db).unwrap()
            })
            .map(|w| (w[0], w[1]));
        if bracket.is_some() {
            break;
        }
    }
    let ((mut a, mut fa), (mut b, mut fb)) = bracket.ok_or_else(|| {
        let scanned_lo = points.first().map(|p| p.0).unwrap_or(lo);
        let scanned_hi = points.last().map(|p| p.0).unwrap_or(start);
        Error::NoInteriorMaximum {
            bracket_lo: scanned_lo,
            bracket_hi: scanned_hi,
        }
    })?;

    // Safeguarded secant/bisection polish on [a, b] with fa < 0 <= fb.
    let mut iterations = evals;
    for _ in 0..options.max_iterations {
        if (b - a) <= options.rel_tol * b {
            break;
        }
        let mut c = b - fb * (b - a) / (fb - fa);
        if !c.is_finite() || c <= a || c >= b {
            c = 0.5 * (a + b);
        }
        // Guard against stagnation at an endpoint.
        if c == a || c == b {
            c = 0.5 * (a + b);
            if c == a || c == b {
                break;
            }
        }
        let fc = mle_scalar_residual(c, &ctx)?;
        iterations += 1;
        if fc == 0.0 {
            a = c;
            b = c;
            fa = fc;
            fb = fc;
            break;
        } else if fc < 0.0 {
            a = c;
            fa = fc;
        } else {
            b = c;
            fb = fc;
        }
    }
    let lambda_star = if fa.abs() <= fb.abs() { a } else { b };

    let p1_star = ctx.r_bar_1 / lambda_star;
    let p2_star = ctx.r_bar_2 / lambda_star;
    let params = ModelParams::new(lambda_star, p1_star, p2_star)
        .map_err(|e| Error::Domain(e.to_string()))?;
    let residuals = score(params, &ctx)?;
    Ok(MleEstimate {
        lambda_star,
        p1_star,
        p2_star,
        residuals,
        solver_iterations: iterations,
    })
}
