//! Floating-point scalar abstraction.
//!
//! Everything numerical in this crate is generic over [`Real`], which is any
//! IEEE float with the full `num_traits::Float` surface plus conversions from
//! primitives. `f32` and `f64` both qualify; `f64` is the intended default
//! and the type the concrete aliases at the crate root use.

use std::fmt::{Debug, Display};

use num_traits::{Float, FromPrimitive};

/// Floating-point scalar the library is generic over.
pub trait Real: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

impl<T> Real for T where T: Float + FromPrimitive + Debug + Display + Send + Sync + 'static {}

/// Converts an `f64` literal (tolerances, coefficients, quadrature constants)
/// into the working scalar type.
///
/// Panics if the value is not representable, which cannot happen for the
/// in-range literals this crate uses.
#[inline]
pub fn real<F: Real>(x: f64) -> F {
    F::from_f64(x).expect("literal not representable in scalar type")
}

/// Converts a node / step count into the working scalar type.
#[inline]
pub fn real_of_usize<F: Real>(n: usize) -> F {
    F::from_usize(n).expect("count not representable in scalar type")
}

/// Converts the working scalar back to `f64` for reporting.
#[inline]
pub fn to_f64<F: Real>(x: F) -> f64 {
    x.to_f64().expect("scalar not representable as f64")
}

/// Sup norm of a slice.
pub fn sup_norm<F: Real>(values: &[F]) -> F {
    values.iter().fold(F::zero(), |m, &v| m.max(v.abs()))
}

/// Sup-norm distance between two equally long slices.
pub fn sup_distance<F: Real>(a: &[F], b: &[F]) -> F {
    assert_eq!(a.len(), b.len(), "sup_distance: length mismatch");
    a.iter()
        .zip(b)
        .fold(F::zero(), |m, (&x, &y)| m.max((x - y).abs()))
}

/// Minimum entry of a nonempty slice.
pub fn min_entry<F: Real>(values: &[F]) -> F {
    values
        .iter()
        .fold(F::infinity(), |m, &v| m.min(v))
}

/// Maximum entry of a nonempty slice.
pub fn max_entry<F: Real>(values: &[F]) -> F {
    values
        .iter()
        .fold(F::neg_infinity(), |m, &v| m.max(v))
}
