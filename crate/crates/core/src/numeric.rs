//! Shared numeric utilities: log-factorials, stable log-sum-exp, the inverse
//! normal CDF and deterministic pairwise summation.

use std::sync::OnceLock;

use crate::error::{Error, Result};

/// Entries 0..LN_FACTORIAL_TABLE_LEN are served from a precomputed table;
/// larger arguments fall back to a Stirling series.
const LN_FACTORIAL_TABLE_LEN: usize = 1_000_000;

fn ln_factorial_table() -> &'static [f64] {
    static TABLE: OnceLock<Vec<f64>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut table = Vec::with_capacity(LN_FACTORIAL_TABLE_LEN);
        table.push(0.0);
        // Kahan accumulation keeps the cumulative sum accurate over 1e6 terms.
        let mut sum = 0.0f64;
        let mut comp = 0.0f64;
        for k in 1..LN_FACTORIAL_TABLE_LEN {
            let term = (k as f64).ln() - comp;
            let next = sum + term;
            comp = (next - sum) - term;
            sum = next;
            table.push(sum);
        }
        table
    })
}

/// ln(n!) for nonnegative integer n.
pub fn ln_factorial(n: u64) -> f64 {
    if (n as usize) < LN_FACTORIAL_TABLE_LEN {
        ln_factorial_table()[n as usize]
    } else {
        ln_gamma_stirling(n as f64 + 1.0)
    }
}

/// Stirling series for ln Gamma(x), adequate for large x (used only beyond the table).
fn ln_gamma_stirling(x: f64) -> f64 {
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
        + inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 / 1260.0))
}

/// ln C(n, k) for 0 <= k <= n.
pub fn ln_binomial(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// log(sum(exp(terms))) with the usual max shift. Empty input and all
/// -inf inputs yield -inf.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|&t| (t - max).exp()).sum();
    max + sum.ln()
}

/// Inverse standard normal CDF (Wichura's AS 241 PPND16 approximant,
/// absolute accuracy far below 1e-9 over (0,1)).
pub fn normal_quantile(prob: f64) -> Result<f64> {
    if !(prob > 0.0 && prob < 1.0) {
        return Err(Error::Domain(format!(
            "normal_quantile requires prob in (0,1), got {prob}"
        )));
    }
    let q = prob - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * poly7(r, &PPND16_A) / poly7(r, &PPND16_B));
    }
    let r = if q < 0.0 { prob } else { 1.0 - prob };
    let r = (-r.ln()).sqrt();
    let val = if r <= 5.0 {
        let r = r - 1.6;
        poly7(r, &PPND16_C) / poly7(r, &PPND16_D)
    } else {
        let r = r - 5.0;
        poly7(r, &PPND16_E) / poly7(r, &PPND16_F)
    };
    Ok(if q < 0.0 { -val } else { val })
}

fn poly7(x: f64, c: &[f64; 8]) -> f64 {
    c.iter().rev().fold(0.0, |acc, &ci| acc * x + ci)
}

const PPND16_A: [f64; 8] = [
    3.387_132_872_796_366_608e0,
    1.331_416_678_917_843_774_5e2,
    1.971_590_950_306_551_442_7e3,
    1.373_169_376_550_946_112_5e4,
    4.592_195_393_154_987_145_7e4,
    6.726_577_092_700_870_085_3e4,
    3.343_057_558_358_812_810_5e4,
    2.509_080_928_730_122_672_7e3,
];
const PPND16_B: [f64; 8] = [
    1.0,
    4.231_333_070_160_091_125_2e1,
    6.871_870_074_920_579_083e2,
    5.394_196_021_424_751_107_7e3,
    2.121_379_430_158_659_586_7e4,
    3.930_789_580_009_271_061e4,
    2.872_908_573_572_194_267_4e4,
    5.226_495_278_852_854_561e3,
];
const PPND16_C: [f64; 8] = [
    1.423_437_110_749_683_5e0,
    4.630_337_846_156_546e0,
    5.769_497_221_460_691e0,
    3.647_848_324_763_204_5e0,
    1.270_458_252_452_368_4e0,
    2.417_807_251_774_506e-1,
    2.272_384_498_926_918_4e-2,
    7.745_450_142_783_414e-4,
];
const PPND16_D: [f64; 8] = [
    1.0,
    2.053_191_626_637_759e0,
    1.676_384_830_183_803_8e0,
    6.897_673_349_851e-1,
    1.481_039_764_274_800_8e-1,
    1.519_866_656_361_645_7e-2,
    5.475_938_084_995_345e-4,
    1.050_750_071_644_416_9e-9,
];
const PPND16_E: [f64; 8] = [
    6.657_904_643_501_104e0,
    5.463_784_911_164_114e0,
    1.784_826_539_917_291_3e0,
    2.965_605_718_285_049e-1,
    2.653_218_952_657_612_4e-2,
    1.242_660_947_388_078_4e-3,
    2.711_555_568_743_487_6e-5,
    2.010_334_399_292_288_1e-7,
];
const PPND16_F: [f64; 8] = [
    1.0,
    5.998_322_065_558_88e-1,
    1.369_298_809_227_358e-1,
    1.487_536_129_085_061_5e-2,
    7.868_691_311_456_133e-4,
    1.846_318_317_510_054_8e-5,
    1.421_511_758_316_446e-7,
    2.044_263_103_389_939_7e-15,
];

/// Smallest n such that P(Poisson(mean) > n) < tail_eps.
pub fn poisson_upper_quantile(mean: f64, tail_eps: f64) -> u32 {
    debug_assert!(mean >= 0.0 && tail_eps > 0.0);
    if mean == 0.0 {
        return 0;
    }
    let mut term = (-mean).exp();
    let mut cdf = term;
    let mut n = 0u32;
    let cap = (mean + 20.0 * mean.sqrt() + 60.0) as u32;
    while cdf < 1.0 - tail_eps && n < cap {
        n += 1;
        term *= mean / n as f64;
        cdf += term;
    }
    n
}

/// Pairwise summation; deterministic for a fixed element order and accurate
/// enough that chunked (parallel) and serial aggregation agree bit-for-bit
/// when fed the same ordered slice.
pub fn pairwise_sum(values: &[f64]) -> f64 {
    const LEAF: usize = 32;
    if values.len() <= LEAF {
        return values.iter().sum();
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}
