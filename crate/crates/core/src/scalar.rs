//! Scalar abstraction for the analog side of the model.
//!
//! Times are always integer microseconds; everything measured in dB, dBm,
//! milliamperes or joules is generic over [`Real`] so the whole stack can be
//! instantiated with `f32` or `f64`. The crate root exports `f64` aliases,
//! which is what the CLI and the built-in scenarios use.

use std::fmt::{Debug, Display};

/// Floating-point scalar: `f32` or `f64`.
pub trait Real:
    num_traits::Float
    + num_traits::FromPrimitive
    + num_traits::ToPrimitive
    + Default
    + Debug
    + Display
    + 'static
{
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }

    fn from_u64_lossy(v: u64) -> Self {
        Self::from_u64(v).expect("u64 conversion")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
