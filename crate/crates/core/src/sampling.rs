//! Deterministic sampling from the model.
//!
//! The repo's PRNG is SplitMix64 (Steele, Lea & Flood 2014). Per-item streams
//! are derived as `derive_stream(seed, item_index)`, so generating items in
//! parallel or serially yields bit-identical samples.

use crate::error::{Error, Result};
use crate::model::{CountSample, FullCountSample, LatentTriple, ModelParams, RngSeed};
use crate::numeric::ln_factorial;

const GOLDEN_GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

/// SplitMix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        Self { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GOLDEN_GAMMA);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }

    /// Uniform draw in [0, 1) with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }
}

/// Derive the per-item stream seed: one SplitMix64 finalizer application over
/// the study seed offset by the item index.
pub fn derive_stream(seed: RngSeed, index: u64) -> u64 {
    let mut mixer = SplitMix64::new(seed.0 ^ index.wrapping_mul(GOLDEN_GAMMA));
    mixer.next_u64()
}

/// Means up to this value use sequential-search inversion; larger means use
/// Hormann's PTRS transformed rejection. The switch point is internal and
/// fixed, so a given seed always produces the same draws.
const INVERSION_MEAN_CAP: f64 = 30.0;

/// One Poisson(mean) draw from the given stream.
pub fn poisson_draw(rng: &mut SplitMix64, mean: f64) -> u32 {
    debug_assert!(mean >= 0.0 && mean.is_finite());
    if mean == 0.0 {
        0
    } else if mean <= INVERSION_MEAN_CAP {
        poisson_inversion(rng, mean)
    } else {
        poisson_ptrs(rng, mean)
    }
}

fn poisson_inversion(rng: &mut SplitMix64, mean: f64) -> u32 {
    let u = rng.next_f64();
    let mut k = 0u32;
    let mut pmf = (-mean).exp();
    let mut cdf = pmf;
    // The cap only guards the astronomically unlikely rounding stall in the
    // far tail.
    let cap = (mean + 30.0 * mean.sqrt() + 200.0) as u32;
    while u > cdf && k < cap {
        k += 1;
        pmf *= mean / k as f64;
        cdf += pmf;
    }
    k
}

/// Hormann (1993), "The transformed rejection method for generating Poisson
/// random variables", algorithm PTRS.
fn poisson_ptrs(rng: &mut SplitMix64, mean: f64) -> u32 {
    let ln_mean = mean.ln();
    let b = 0.931 + 2.53 * mean.sqrt();
    let a = -0.059 + 0.02483 * b;
    let inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    let v_r = 0.9277 - 3.6224 / (b - 2.0);
    loop {
        let u = rng.next_f64() - 0.5;
        let v = rng.next_f64();
        let us = 0.5 - u.abs();
        let k = ((2.0 * a / us + b) * u + mean + 0.43).floor();
        if us >= 0.07 && v <= v_r {
            return k as u32;
        }
        if k < 0.0 || (us < 0.013 && v > us) {
            continue;
        }
        let lhs = (v * inv_alpha / (a / (us * us) + b)).ln();
        let rhs = k * ln_mean - mean - ln_factorial(k as u64);
        if lhs <= rhs {
            return k as u32;
        }
    }
}

fn draw_triple(params: ModelParams, stream_seed: u64) -> LatentTriple {
    let mut rng = SplitMix64::new(stream_seed);
    let x1 = poisson_draw(&mut rng, params.theta1());
    let x2 = poisson_draw(&mut rng, params.theta2());
    let y = poisson_draw(&mut rng, params.theta12());
    LatentTriple::new(x1, x2, y)
}

/// Draw M latent triples from the model, deterministically in the seed.
pub fn sample_full(params: ModelParams, m: usize, seed: RngSeed) -> Result<FullCountSample> {
    if m < 2 {
        return Err(Error::SampleTooSmall(m));
    }
    let items = (0..m as u64)
        .map(|i| draw_triple(params, derive_stream(seed, i)))
        .collect();
    FullCountSample::new(items)
}

/// Draw M observable pairs; equals `sample_full(..).collapse()` for the same
/// seed since both run the identical generator.
pub fn sample_counts(params: ModelParams, m: usize, seed: RngSeed) -> Result<CountSample> {
    Ok(sample_full(params, m, seed)?.collapse())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::CountPair;

    #[test]
    fn zero_rates_give_all_zero_pairs() {
        let params = ModelParams::new(10.0, 0.0, 0.0).unwrap();
        let sample = sample_counts(params, 5, RngSeed(42)).unwrap();
        assert!(sample.items().iter().all(|p| *p == CountPair::new(0, 0)));
    }

    #[test]
    fn perfect_detection_has_no_exclusive_counts() {
        let params = ModelParams::new(10.0, 1.0, 1.0).unwrap();
        let sample = sample_full(params, 3, RngSeed(7)).unwrap();
        assert!(sample.items().iter().all(|t| t.x1 == 0 && t.x2 == 0));
    }

    #[test]
    fn determinism_and_collapse_consistency() {
        let params = ModelParams::new(10.0, 0.4, 0.7).unwrap();
        let a = sample_counts(params, 100, RngSeed(3)).unwrap();
        let b = sample_counts(params, 100, RngSeed(3)).unwrap();
        assert_eq!(a, b);
        let full = sample_full(params, 100, RngSeed(3)).unwrap();
        assert_eq!(full.collapse(), a);
    }

    #[test]
    fn marginal_and_joint_moments() {
        let params = ModelParams::new(10.0, 0.4, 0.7).unwrap();
        let m = 100_000;
        let full = sample_full(params, m, RngSeed(2024)).unwrap();
        let mean_r1: f64 =
            full.items().iter().map(|t| (t.x1 + t.y) as f64).sum::<f64>() / m as f64;
        let mean_y: f64 = full.items().iter().map(|t| t.y as f64).sum::<f64>() / m as f64;
        // R1 ~ Poisson(lambda*p1) = Poisson(4), Y ~ Poisson(2.8).
        assert!((mean_r1 - 4.0).abs() < 3.0 * (4.0f64 / m as f64).sqrt());
        assert!((mean_y - 2.8).abs() < 3.0 * (2.8f64 / m as f64).sqrt());
    }

    #[test]
    fn sample_size_guard() {
        let params = ModelParams::new(1.0, 0.5, 0.5).unwrap();
        assert!(sample_counts(params, 1, RngSeed(0)).is_err());
        assert!(sample_full(params, 0, RngSeed(0)).is_err());
    }

    #[test]
    fn ptrs_mean_and_variance() {
        // Exercise the rejection branch (mean > 30).
        let mut rng = SplitMix64::new(99);
        let n = 200_000;
        let mean = 50.0;
        let draws: Vec<f64> = (0..n).map(|_| poisson_draw(&mut rng, mean) as f64).collect();
        let avg = draws.iter().sum::<f64>() / n as f64;
        let var = draws.iter().map(|d| (d - avg) * (d - avg)).sum::<f64>() / (n - 1) as f64;
        assert!((avg - mean).abs() < 4.0 * (mean / n as f64).sqrt());
        assert!((var / mean - 1.0).abs() < 0.03);
    }
}
