//! Floating-point scalar abstraction and the dense-vector kernels built on it.
//!
//! Everything geometric in the crate (distances, centroids, layer norm,
//! cosine) is written against [`Scalar`] so the same code runs at `f32`
//! or `f64`. Corpus vectors are stored as `f32`; analysis pipelines pick
//! the accumulation precision through the type parameter.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar usable by every numeric kernel in the crate.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Lossy conversion from any other primitive float.
    #[inline]
    fn cast<S: ToPrimitive>(x: S) -> Self {
        // float -> float casts through NumCast never fail
        Self::from(x).unwrap_or_else(Self::nan)
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl<T> Scalar for T where
    T: Float
        + FromPrimitive
        + ToPrimitive
        + NumAssign
        + Sum
        + Debug
        + Display
        + Default
        + Send
        + Sync
        + 'static
{
}

/// Converts a slice of one float type into a `Vec` of another.
pub fn widen<S: Scalar, T: Scalar>(src: &[S]) -> Vec<T> {
    src.iter().map(|&x| T::cast(x)).collect()
}

/// Overwrites `dst` with the converted contents of `src`.
pub fn widen_into<S: Scalar, T: Scalar>(src: &[S], dst: &mut Vec<T>) {
    dst.clear();
    dst.extend(src.iter().map(|&x| T::cast(x)));
}

#[inline]
pub fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Scalar>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

#[inline]
pub fn sq_dist<T: Scalar>(a: &[T], b: &[T]) -> T {
    debug_assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| {
        let d = x - y;
        acc + d * d
    })
}

#[inline]
pub fn euclidean<T: Scalar>(a: &[T], b: &[T]) -> T {
    sq_dist(a, b).sqrt()
}

/// Componentwise `acc += x`, converting `x` to the accumulator type.
#[inline]
pub fn add_assign<S: Scalar, T: Scalar>(acc: &mut [T], x: &[S]) {
    debug_assert_eq!(acc.len(), x.len());
    for (a, &v) in acc.iter_mut().zip(x) {
        *a += T::cast(v);
    }
}

/// Arithmetic mean of the components.
pub fn component_mean<T: Scalar>(x: &[T]) -> T {
    let n = T::from_usize(x.len()).unwrap_or_else(T::nan);
    x.iter().copied().sum::<T>() / n
}

/// Population (1/D) standard deviation of the components.
pub fn component_sd<T: Scalar>(x: &[T]) -> T {
    let mean = component_mean(x);
    let n = T::from_usize(x.len()).unwrap_or_else(T::nan);
    let ss = x.iter().fold(T::zero(), |acc, &v| {
        let d = v - mean;
        acc + d * d
    });
    (ss / n).sqrt()
}

/// Largest absolute componentwise difference.
pub fn max_abs_diff<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}
