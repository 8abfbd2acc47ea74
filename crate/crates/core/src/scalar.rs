//! Scalar abstractions shared by the metric and geometry code.
//!
//! [`Scalar`] is the minimum needed for ratio arithmetic on pixel counts and
//! is implemented for `f32`, `f64` and exact rationals. [`Real`] adds the
//! transcendental operations needed for interpolation and feature
//! normalization, and is implemented for `f32` and `f64` only.

use std::fmt::Debug;

use num_rational::Ratio;
use num_traits::{Float, FromPrimitive, Signed, ToPrimitive};

/// Exact rational scalar, used to cross-check floating-point results.
pub type Exact = Ratio<i128>;

pub trait Scalar: num_traits::Num + Signed + Copy + PartialOrd + Debug + Send + Sync + 'static {
    /// Converts a pixel count. Exact for counts below 2^53 with `f64`.
    fn from_count(n: u64) -> Self;

    fn to_f64(self) -> f64;
}

impl Scalar for f32 {
    fn from_count(n: u64) -> Self {
        n as f32
    }

    fn to_f64(self) -> f64 {
        self as f64
    }
}

impl Scalar for f64 {
    fn from_count(n: u64) -> Self {
        n as f64
    }

    fn to_f64(self) -> f64 {
        self
    }
}

impl Scalar for Exact {
    fn from_count(n: u64) -> Self {
        Ratio::from_integer(n as i128)
    }

    fn to_f64(self) -> f64 {
        ToPrimitive::to_f64(&self).unwrap_or(f64::NAN)
    }
}

pub trait Real: Scalar + Float + FromPrimitive {
    fn lit(v: f64) -> Self {
        <Self as FromPrimitive>::from_f64(v).expect("finite f64 converts to every Real")
    }

    fn of_usize(v: usize) -> Self {
        <Self as FromPrimitive>::from_usize(v).expect("usize converts to every Real")
    }

    /// Nearest pixel index, rounding half away from zero.
    fn round_px(self) -> i64 {
        self.round().to_i64().unwrap_or(i64::MIN)
    }
}

impl Real for f32 {}
impl Real for f64 {}
