//! Floating-point abstraction for the probabilistic numerics.
//!
//! Exact parts of the library (Pauli algebra, tableau conjugation) work in
//! integer arithmetic and do not use this trait.

use num_traits::{Float, FromPrimitive};

/// Scalar type of the transfer-matrix engine and cost function: f32 or f64.
pub trait Real:
    Float + FromPrimitive + std::fmt::Debug + std::fmt::Display + Default + Send + Sync + 'static
{
    fn from_f64_exact(v: f64) -> Self {
        Self::from_f64(v).expect("f64 conversion")
    }
}

impl Real for f32 {}
impl Real for f64 {}
