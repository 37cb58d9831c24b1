//! Particle-count backends.
//!
//! The default backend is arbitrary-precision ([`BigCount`]): populations
//! grow geometrically and overflow `u64` within a couple hundred steps for
//! offspring means near 2. The opt-in `u64` backend trades that safety for
//! speed and errors with [`EngineError::CountOverflow`] on overflow instead
//! of wrapping.

use super::EngineError;
use num_bigint::BigUint;
use num_traits::{FromPrimitive, ToPrimitive, Zero};

/// A nonnegative particle count.
pub trait Count: Clone + PartialEq + Eq + Send + Sync + std::fmt::Debug + 'static {
    /// Short name used in traces and CLI flags.
    const BACKEND: &'static str;

    fn zero() -> Self;
    fn from_u64(v: u64) -> Self;
    /// `Some` iff the value fits in a `u64`.
    fn as_u64(&self) -> Option<u64>;
    /// Lossy conversion; may round or overflow to infinity.
    fn to_f64_lossy(&self) -> f64;
    fn to_biguint(&self) -> BigUint;
    fn is_zero(&self) -> bool;
    fn checked_add(&self, other: &Self) -> Result<Self, EngineError>;
    fn checked_mul_u64(&self, k: u64) -> Result<Self, EngineError>;
    /// Requires `other <= self`; engine arithmetic guarantees it.
    fn saturating_sub(&self, other: &Self) -> Self;
    /// Nearest count to `x`, clamped into `[0, hi]`. Used by the Gaussian
    /// approximation path; `x` is finite and nonnegative.
    fn from_f64_clamped(x: f64, hi: &Self) -> Self;
    /// `min(b, hi)` converted into the backend.
    fn from_biguint_clamped(b: BigUint, hi: &Self) -> Self;
    fn lt(&self, other: &Self) -> bool;
}

/// Arbitrary-precision count (a thin alias; the backend is `num_bigint`).
pub type BigCount = BigUint;

impl Count for BigUint {
    const BACKEND: &'static str = "exact";

    fn zero() -> Self {
        Zero::zero()
    }

    fn from_u64(v: u64) -> Self {
        BigUint::from(v)
    }

    fn as_u64(&self) -> Option<u64> {
        self.to_u64()
    }

    fn to_f64_lossy(&self) -> f64 {
        self.to_f64().unwrap_or(f64::INFINITY)
    }

    fn to_biguint(&self) -> BigUint {
        self.clone()
    }

    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }

    fn checked_add(&self, other: &Self) -> Result<Self, EngineError> {
        Ok(self + other)
    }

    fn checked_mul_u64(&self, k: u64) -> Result<Self, EngineError> {
        Ok(self * k)
    }

    fn saturating_sub(&self, other: &Self) -> Self {
        debug_assert!(other <= self);
        self - other
    }

    fn from_f64_clamped(x: f64, hi: &Self) -> Self {
        debug_assert!(x.is_finite() && x >= 0.0);
        let v = BigUint::from_f64(x).unwrap_or_else(Zero::zero);
        v.min(hi.clone())
    }

    fn from_biguint_clamped(b: BigUint, hi: &Self) -> Self {
        b.min(hi.clone())
    }

    fn lt(&self, other: &Self) -> bool {
        self < other
    }
}

impl Count for u64 {
    const BACKEND: &'static str = "u64";

    fn zero() -> Self {
        0
    }

    fn from_u64(v: u64) -> Self {
        v
    }

    fn as_u64(&self) -> Option<u64> {
        Some(*self)
    }

    fn to_f64_lossy(&self) -> f64 {
        *self as f64
    }

    fn to_biguint(&self) -> BigUint {
        BigUint::from(*self)
    }

    fn is_zero(&self) -> bool {
        *self == 0
    }

    fn checked_add(&self, other: &Self) -> Result<Self, EngineError> {
        u64::checked_add(*self, *other).ok_or(EngineError::CountOverflow)
    }

    fn checked_mul_u64(&self, k: u64) -> Result<Self, EngineError> {
        u64::checked_mul(*self, k).ok_or(EngineError::CountOverflow)
    }

    fn saturating_sub(&self, other: &Self) -> Self {
        debug_assert!(other <= self);
        self - other
    }

    fn from_f64_clamped(x: f64, hi: &Self) -> Self {
        debug_assert!(x.is_finite() && x >= 0.0);
        if x >= *hi as f64 {
            *hi
        } else {
            x as u64
        }
    }

    fn from_biguint_clamped(b: BigUint, hi: &Self) -> Self {
        b.to_u64().unwrap_or(u64::MAX).min(*hi)
    }

    fn lt(&self, other: &Self) -> bool {
        self < other
    }
}
