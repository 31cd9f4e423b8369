//! Floating-point abstraction used by every numerical kernel.
//!
//! All matrix, tensor and statevector routines are generic over [`Scalar`],
//! so the same code runs in `f64` (the default used by the CLI and the test
//! suite) or `f32`. Concrete `f64` aliases for the main domain types live at
//! the crate root.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign};

/// Real scalar type for all numerics: `f32` or `f64`.
pub trait Scalar:
    Float + FromPrimitive + NumAssign + Sum + Debug + Display + Send + Sync + 'static
{
    /// Converts an `f64` constant into this scalar type.
    #[inline]
    fn cast(x: f64) -> Self {
        Self::from_f64(x).expect("finite f64 constant")
    }

    /// Widens to `f64` for reporting and serialization.
    #[inline]
    fn widen(self) -> f64 {
        self.to_f64().expect("scalar fits in f64")
    }
}

impl Scalar for f32 {}
impl Scalar for f64 {}
