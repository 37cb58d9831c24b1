//! Sampling kernels for the population engine.
//!
//! Below [`EXACT_SAMPLING_THRESHOLD`] draws are exact (per-support
//! conditional binomials for offspring totals, a rejection/inversion sampler
//! for the binomial split). Above it a Gaussian approximation with
//! continuity correction takes over, clamped into the support range, and the
//! draw is flagged approximate so traces can report it. At that scale the
//! approximation error is far below Monte Carlo error.

use super::count::Count;
use crate::model::OffspringDistribution;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Largest `n` for which binomial draws stay exact (2^48).
pub const EXACT_SAMPLING_THRESHOLD: u64 = 1 << 48;

/// Exact binomial draw for `n` within the exact regime.
fn binomial_u64<R: Rng + ?Sized>(n: u64, p: f64, rng: &mut R) -> u64 {
    debug_assert!(n <= EXACT_SAMPLING_THRESHOLD);
    if n == 0 || p <= 0.0 {
        return 0;
    }
    if p >= 1.0 {
        return n;
    }
    if n <= 8 {
        // hot path: population kernels mostly hold a handful of particles per
        // site, where a Bernoulli loop beats the general sampler setup
        return (0..n).filter(|_| rng.random::<f64>() < p).count() as u64;
    }
    rand_distr::Binomial::new(n, p)
        .expect("p in (0,1) checked above")
        .sample(rng)
}

/// Draws the number of right-movers among `n` children, each moving right
/// independently with probability `p`. Returns the draw and whether the
/// Gaussian approximation was used.
pub fn sample_binomial<C: Count, R: Rng + ?Sized>(n: &C, p: f64, rng: &mut R) -> (C, bool) {
    if p <= 0.0 {
        return (C::zero(), false);
    }
    if p >= 1.0 {
        return (n.clone(), false);
    }
    if let Some(n64) = n.as_u64() {
        if n64 <= EXACT_SAMPLING_THRESHOLD {
            return (C::from_u64(binomial_u64(n64, p, rng)), false);
        }
    }
    let nf = n.to_f64_lossy();
    if nf.is_finite() {
        let mean = nf * p;
        let sd = (nf * p * (1.0 - p)).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        let x = (mean + sd * z + 0.5).floor().max(0.0);
        (C::from_f64_clamped(x, n), true)
    } else {
        // beyond f64 range the sampling noise is relatively ~n^-1/2 of an
        // astronomically large n; use the deterministic fixed-point mean
        // n * round(p * 2^53) >> 53
        let scaled = (p * (1u64 << 53) as f64).round() as u64;
        let b = (n.to_biguint() * scaled) >> 53u32;
        (C::from_biguint_clamped(b, n), true)
    }
}

/// Total number of children produced by `count` particles branching
/// independently with law `dist`. Exact below the threshold (multinomial by
/// sequential conditional binomials), Gaussian-approximate above it.
///
/// Errors only on the fixed-width backend, when the total overflows.
pub fn sample_offspring_total<C: Count, R: Rng + ?Sized>(
    count: &C,
    dist: &OffspringDistribution,
    rng: &mut R,
) -> Result<(C, bool), super::EngineError> {
    let support = dist.support();
    if support.len() == 1 {
        // deterministic law: exact at any scale
        let k = support[0].0 as u64;
        return Ok((count.checked_mul_u64(k)?, false));
    }
    if let Some(n64) = count.as_u64() {
        if n64 <= EXACT_SAMPLING_THRESHOLD {
            let mut remaining = n64;
            let mut remaining_mass = 1.0f64;
            let mut total: u64 = 0;
            for (i, &(k, p)) in support.iter().enumerate() {
                if remaining == 0 {
                    break;
                }
                let draws = if i + 1 == support.len() {
                    remaining
                } else {
                    let cond = (p / remaining_mass).clamp(0.0, 1.0);
                    binomial_u64(remaining, cond, rng)
                };
                // k <= 64 and remaining <= 2^48, so this cannot overflow u64
                total += draws * k as u64;
                remaining -= draws;
                remaining_mass -= p;
            }
            return Ok((C::from_u64(total), false));
        }
    }
    let nf = count.to_f64_lossy();
    let lo = count.checked_mul_u64(dist.min_k() as u64)?;
    let hi = count.checked_mul_u64(dist.max_k() as u64)?;
    let draw = if nf.is_finite() {
        let mean = nf * dist.mean();
        let sd = (nf * dist.variance()).sqrt();
        let z: f64 = StandardNormal.sample(rng);
        let x = (mean + sd * z + 0.5).floor().max(0.0);
        C::from_f64_clamped(x, &hi)
    } else {
        // deterministic fixed-point mean, as in sample_binomial
        let scaled = (dist.mean() * (1u64 << 32) as f64).round() as u64;
        let b = (count.to_biguint() * scaled) >> 32u32;
        C::from_biguint_clamped(b, &hi)
    };
    let draw = if draw.lt(&lo) { lo } else { draw };
    Ok((draw, true))
}
