//! The probabilistic model: each item carries a Poisson(lambda) number of
//! defects, and two independent inspectors each detect every defect with
//! probability p1 / p2. Only the per-item detection counts (r1, r2) are
//! observed; the joint-detection count is latent.
//!
//! The observed pair (R1, R2) = (X1 + Y, X2 + Y) with independent
//! X1 ~ Poisson(lambda*p1*(1-p2)), X2 ~ Poisson(lambda*p2*(1-p1)) and
//! Y ~ Poisson(lambda*p1*p2), i.e. a bivariate Poisson distribution.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{ln_factorial, log_sum_exp};

/// The parameter triple (lambda, p1, p2).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    lambda: f64,
    p1: f64,
    p2: f64,
}

impl ModelParams {
    /// Requires lambda > 0 and p1, p2 in [0,1]. Boundary detection rates are
    /// legal for pmf evaluation and sampling; estimation routines impose
    /// stricter interior requirements at their call sites.
    pub fn new(lambda: f64, p1: f64, p2: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidLambda(lambda));
        }
        if !(0.0..=1.0).contains(&p1) {
            return Err(Error::InvalidDetectionRate { which: 1, value: p1 });
        }
        if !(0.0..=1.0).contains(&p2) {
            return Err(Error::InvalidDetectionRate { which: 2, value: p2 });
        }
        Ok(Self { lambda, p1, p2 })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn p1(&self) -> f64 {
        self.p1
    }

    pub fn p2(&self) -> f64 {
        self.p2
    }

    /// Rate of defects seen only by inspector 1: lambda * p1 * (1 - p2).
    pub fn theta1(&self) -> f64 {
        self.lambda * self.p1 * (1.0 - self.p2)
    }

    /// Rate of defects seen only by inspector 2: lambda * p2 * (1 - p1).
    pub fn theta2(&self) -> f64 {
        self.lambda * self.p2 * (1.0 - self.p1)
    }

    /// Rate of defects seen by both inspectors: lambda * p1 * p2.
    pub fn theta12(&self) -> f64 {
        // Grouped so the value is bit-identical under inspector relabeling.
        self.lambda * (self.p1 * self.p2)
    }

    /// True if both detection rates are strictly inside (0,1).
    pub fn is_interior(&self) -> bool {
        self.p1 > 0.0 && self.p1 < 1.0 && self.p2 > 0.0 && self.p2 < 1.0
    }

    /// Same model with the two inspectors relabeled.
    pub fn swapped(&self) -> Self {
        Self {
            lambda: self.lambda,
            p1: self.p2,
            p2: self.p1,
        }
    }
}

/// Detection counts for one item.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPair {
    pub r1: u32,
    pub r2: u32,
}

impl CountPair {
    pub fn new(r1: u32, r2: u32) -> Self {
        Self { r1, r2 }
    }
}

/// An observed sample of M >= 2 items.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountSample {
    items: Vec<CountPair>,
}

impl CountSample {
    pub fn new(items: Vec<CountPair>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::SampleTooSmall(items.len()));
        }
        Ok(Self { items })
    }

    pub fn from_pairs(pairs: &[(u32, u32)]) -> Result<Self> {
        Self::new(pairs.iter().map(|&(r1, r2)| CountPair::new(r1, r2)).collect())
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[CountPair] {
        &self.items
    }
}

/// Latent decomposition of one item's counts: defects seen only by
/// inspector 1, only by inspector 2, and by both.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LatentTriple {
    pub x1: u32,
    pub x2: u32,
    pub y: u32,
}

impl LatentTriple {
    pub fn new(x1: u32, x2: u32, y: u32) -> Self {
        Self { x1, x2, y }
    }

    /// The observable pair this triple collapses to.
    pub fn collapse(&self) -> CountPair {
        CountPair::new(self.x1 + self.y, self.x2 + self.y)
    }
}

/// A sample of latent triples, as needed by capture-recapture estimation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FullCountSample {
    items: Vec<LatentTriple>,
}

impl FullCountSample {
    pub fn new(items: Vec<LatentTriple>) -> Result<Self> {
        if items.len() < 2 {
            return Err(Error::SampleTooSmall(items.len()));
        }
        Ok(Self { items })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[LatentTriple] {
        &self.items
    }

    /// Drop the joint-detection information, keeping only observable pairs.
    pub fn collapse(&self) -> CountSample {
        CountSample {
            items: self.items.iter().map(LatentTriple::collapse).collect(),
        }
    }
}

/// Seed for the repo's deterministic PRNG streams.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngSeed(pub u64);

/// ln pmf of Poisson(mean) at k, with the mean = 0 point mass handled.
fn poisson_ln_pmf(mean: f64, k: u32) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * mean.ln() - mean - ln_factorial(k as u64)
}

/// ln P(R1 = r1, R2 = r2) via the convolution over the joint-detection count:
/// sum over l of P(Y = l) P(X1 = r1 - l) P(X2 = r2 - l). This form stays
/// finite at boundary detection rates.
pub fn log_pmf(params: ModelParams, pair: CountPair) -> f64 {
    let (t1, t2, t12) = (params.theta1(), params.theta2(), params.theta12());
    let lmax = pair.r1.min(pair.r2);
    let terms: Vec<f64> = (0..=lmax)
        .map(|l| {
            // Grouping keeps inspector relabeling bit-exact.
            poisson_ln_pmf(t12, l)
                + (poisson_ln_pmf(t1, pair.r1 - l) + poisson_ln_pmf(t2, pair.r2 - l))
        })
        .collect();
    log_sum_exp(&terms)
}

/// P(R1 = r1, R2 = r2).
pub fn pmf(params: ModelParams, pair: CountPair) -> f64 {
    log_pmf(params, pair).exp()
}

/// Brute-force evaluation of the same probability by conditioning on the true
/// defect count: sum over n of Poisson(n; lambda) Bin(r1; n, p1) Bin(r2; n, p2),
/// truncated where the Poisson tail drops below tail_eps. Test oracle for `pmf`.
pub fn pmf_oracle(params: ModelParams, pair: CountPair, tail_eps: f64) -> Result<f64> {
    if !(tail_eps > 0.0 && tail_eps <= 1e-6) {
        return Err(Error::Domain(format!(
            "tail_eps must lie in (0, 1e-6], got {tail_eps}"
        )));
    }
    let lambda = params.lambda();
    let n_max = crate::numeric::poisson_upper_quantile(lambda, tail_eps);
    let ln_lambda = lambda.ln();
    let mut total = 0.0f64;
    for n in pair.r1.max(pair.r2)..=n_max.max(pair.r1.max(pair.r2)) {
        let ln_poisson = n as f64 * ln_lambda - lambda - ln_factorial(n as u64);
        let ln_b1 = binomial_ln_pmf(pair.r1, n, params.p1());
        let ln_b2 = binomial_ln_pmf(pair.r2, n, params.p2());
        total += (ln_poisson + ln_b1 + ln_b2).exp();
    }
    Ok(total)
}

fn binomial_ln_pmf(k: u32, n: u32, p: f64) -> f64 {
    debug_assert!(k <= n);
    if p == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if p == 1.0 {
        return if k == n { 0.0 } else { f64::NEG_INFINITY };
    }
    crate::numeric::ln_binomial(n as u64, k as u64)
        + k as f64 * p.ln()
        + (n - k) as f64 * (1.0 - p).ln()
}
