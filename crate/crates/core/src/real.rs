//! Scalar abstraction and angle arithmetic.
//!
//! Everything numeric in this crate is generic over [`Real`], a floating
//! point scalar backed by `num-traits`. `f32` works for exploratory runs;
//! the stated tolerances assume `f64`.

use num_traits::{Float, FloatConst, FromPrimitive};

/// Floating-point scalar the laboratory computes with.
pub trait Real:
    Float
    + FloatConst
    + FromPrimitive
    + num_traits::NumAssignOps
    + core::iter::Sum
    + core::fmt::Debug
    + core::fmt::Display
    + core::fmt::LowerExp
    + Send
    + Sync
    + 'static
{
    /// Converts an `f64` literal; panics only if the type cannot represent
    /// any `f64`, which none of the blanket impls do.
    fn lit(v: f64) -> Self {
        Self::from_f64(v).expect("f64 literal conversion")
    }

    fn two_pi() -> Self {
        Self::PI() + Self::PI()
    }

    fn half() -> Self {
        Self::one() / (Self::one() + Self::one())
    }
}

impl Real for f32 {}
impl Real for f64 {}

/// Wraps an angle to `(-pi, pi]`. Signed zeros normalize to `+0`.
pub fn wrap_to_pi<T: Real>(angle: T) -> T {
    let two_pi = T::two_pi();
    let mut r = angle % two_pi;
    if r > T::PI() {
        r -= two_pi;
    } else if r <= -T::PI() {
        r += two_pi;
    }
    if r == T::zero() {
        return T::zero();
    }
    r
}

/// Wraps an angle to `[0, 2pi)`.
pub fn wrap_to_two_pi<T: Real>(angle: T) -> T {
    let two_pi = T::two_pi();
    let mut r = angle % two_pi;
    if r < T::zero() {
        r += two_pi;
    }
    // The addition above can round exactly onto 2pi for tiny negative inputs.
    if r >= two_pi {
        r = T::zero();
    }
    r
}

/// Fractional part mapped to `[0, 1)`; `frac(1.0) == 0.0` exactly, which is
/// what keeps sampled loops bitwise closed.
pub fn frac<T: Real>(u: T) -> T {
    let f = u - u.floor();
    if f >= T::one() {
        T::zero()
    } else {
        f
    }
}

/// Pairwise (balanced) summation; deterministic and more accurate than a
/// running sum for long inputs.
pub fn pairwise_sum<V>(values: &[V]) -> V
where
    V: Copy + num_traits::Zero + core::ops::Add<Output = V>,
{
    match values.len() {
        0 => V::zero(),
        1 => values[0],
        2 => values[0] + values[1],
        n => {
            let mid = n / 2;
            pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
        }
    }
}
