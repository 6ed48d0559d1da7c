//! Round-robin differential phase shift key rate for a single-photon source.

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Inputs of the key-rate formula.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KeyRateParams<T> {
    /// Pulses per train.
    pub pulses: u32,
    pub v_th: T,
    /// Valid detections per train.
    pub q: T,
    pub e_bit: T,
}

impl<T: Real> KeyRateParams<T> {
    pub fn validate(&self) -> Result<()> {
        if self.pulses < 2 {
            return Err(Error::domain("pulse train length must be at least 2"));
        }
        let bound = max_v_th::<T>(self.pulses);
        if !(self.v_th >= T::one() && self.v_th <= bound) {
            return Err(Error::domain(format!("v_th {} outside [1, {bound}]", self.v_th)));
        }
        if !(self.q >= T::zero() && self.q.is_finite()) {
            return Err(Error::domain("Q must be non-negative"));
        }
        if !(self.e_bit >= T::zero() && self.e_bit <= T::lit(0.5)) {
            return Err(Error::domain(format!("e_bit {} outside [0, 0.5]", self.e_bit)));
        }
        Ok(())
    }
}

fn max_v_th<T: Real>(pulses: u32) -> T {
    T::from_u32(pulses - 1).expect("fits") / T::lit(2.0)
}

/// `h(x) = -x log2 x - (1 - x) log2 (1 - x)`, with `h(0) = h(1) = 0`.
pub fn binary_entropy<T: Real>(x: T) -> Result<T> {
    if !(x >= T::zero() && x <= T::one()) {
        return Err(Error::domain(format!("probability {x} outside [0, 1]")));
    }
    let term = |p: T| if p > T::zero() { -p * p.log2() } else { T::zero() };
    Ok(term(x) + term(T::one() - x))
}

fn phase_error_penalty<T: Real>(pulses: u32, v_th: T) -> T {
    let x = v_th / T::from_u32(pulses - 1).expect("fits");
    binary_entropy(x).expect("v_th within (0, (L-1)/2]")
}

/// Key bits per pulse train, `Q (1 - h(e_bit) - h(v_th / (L - 1)))`.
/// Negative values mean no key can be distilled.
pub fn key_rate<T: Real>(p: &KeyRateParams<T>) -> Result<T> {
    p.validate()?;
    Ok(p.q * (T::one() - binary_entropy(p.e_bit)? - phase_error_penalty(p.pulses, p.v_th)))
}

/// Largest tolerable bit error rate: the root of `1 - h(e) - h(v_th / (L - 1))`
/// on `(0, 0.5)`, found by bisection to 1e-9. Zero when no root exists.
///
/// `v_th` may be any value in `(0, (L - 1) / 2]` here.
pub fn error_threshold<T: Real>(pulses: u32, v_th: T) -> Result<T> {
    if pulses < 2 {
        return Err(Error::domain("pulse train length must be at least 2"));
    }
    if !(v_th > T::zero() && v_th <= max_v_th::<T>(pulses)) {
        return Err(Error::domain(format!("v_th {v_th} outside (0, {}]", max_v_th::<T>(pulses))));
    }
    let budget = T::one() - phase_error_penalty(pulses, v_th);
    if budget <= T::zero() {
        return Ok(T::zero());
    }
    // h is increasing on [0, 0.5]; f(lo) > 0 >= f(hi).
    let f = |e: T| budget - binary_entropy(e).expect("e in [0, 0.5]");
    let (mut lo, mut hi) = (T::zero(), T::lit(0.5));
    let tol = T::lit(1e-9);
    while hi - lo > tol {
        let mid = (lo + hi) / T::lit(2.0);
        // f32 cannot resolve 1e-9 near 0.35; stop once the midpoint stalls.
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok((lo + hi) / T::lit(2.0))
}
