//! Real-valued scalar abstraction.
//!
//! Everything that lives in continuous space (penalty coefficients, duration
//! statistics, estimator parameters, regret values) is generic over [`Real`].
//! Time itself is discrete and always an integer ([`crate::Time`]).

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

/// Floating-point scalar usable by the stochastic parts of the library.
pub trait Real:
    Float + FromPrimitive + ToPrimitive + Sum + Debug + Display + Default + Send + Sync + 'static
{
    /// Draw one standard normal variate.
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self;

    /// Lossless-enough conversion from `f64` literals.
    fn of(value: f64) -> Self {
        Self::from_f64(value).expect("f64 literal representable")
    }

    fn of_u64(value: u64) -> Self {
        Self::from_u64(value).expect("integer representable")
    }

    fn as_f64(self) -> f64 {
        self.to_f64().expect("finite scalar")
    }
}

impl Real for f32 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

impl Real for f64 {
    fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> Self {
        StandardNormal.sample(rng)
    }
}

/// Round half up to an integer duration, clamped to at least `min`.
///
/// Negative inputs clamp to `min`.
pub fn round_clamp<F: Real>(value: F, min: u32) -> u32 {
    let rounded = (value + F::of(0.5)).floor();
    if !(rounded >= F::of_u64(u64::from(min))) {
        return min;
    }
    rounded.to_u32().unwrap_or(u32::MAX)
}
