//! Scalar abstraction for the continuous-valued parts of the engine.
//!
//! Box geometry, confidences, class scores and evaluation metrics are all
//! generic over a floating-point scalar so the same code runs at f32 or f64
//! precision. Pixel data is always RGB8 and never generic.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive, ToPrimitive};
use serde::de::DeserializeOwned;
use serde::Serialize;

/// Floating-point scalar: f32 or f64.
pub trait Scalar:
    Float
    + FromPrimitive
    + ToPrimitive
    + Debug
    + Display
    + Serialize
    + DeserializeOwned
    + Send
    + Sync
    + 'static
{
    /// Lossy conversion from f64, for wiring constants and wire formats
    /// (JSON numbers are f64) into the working precision.
    fn from_f64_lossy(v: f64) -> Self {
        Self::from_f64(v).expect("finite f64 converts to any Scalar")
    }

    /// Lossy widening to f64 for display and wall-clock arithmetic.
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().expect("Scalar widens to f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
