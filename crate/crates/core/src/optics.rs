//! Two-port interference physics.
//!
//! A Mach-Zehnder interferometer splits input power `I` between its two
//! output ports according to the relative phase between the arms. Port 1 is
//! the constructive port: at zero total phase it receives all the light.

use std::ops::{Add, Neg, Sub};

use crate::error::{Error, Result};
use crate::hardware::DetectorCounts;
use crate::scalar::Real;

/// Intrinsic fringe contrast used when nothing else is configured.
pub const DEFAULT_CONTRAST: f64 = 0.995;

/// Relative optical phase in radians, stored as its representative in `[0, 2π)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, PartialOrd)]
pub struct PhaseAngle<T>(T);

impl<T: Real> PhaseAngle<T> {
    pub fn new(radians: T) -> Self {
        PhaseAngle(canonicalize(radians))
    }

    pub fn zero() -> Self {
        PhaseAngle(T::zero())
    }

    pub fn value(self) -> T {
        self.0
    }

    /// Signed representative in `(-π, π]`.
    pub fn signed(self) -> T {
        if self.0 > T::PI() {
            self.0 - T::TAU()
        } else {
            self.0
        }
    }

    /// Shortest angular distance to `other`, in `[0, π]`.
    pub fn distance(self, other: Self) -> T {
        (self - other).signed().abs()
    }
}

/// Maps any finite angle onto `[0, 2π)`.
pub fn canonicalize<T: Real>(radians: T) -> T {
    let tau = T::TAU();
    let mut r = radians % tau;
    if r < T::zero() {
        r = r + tau;
    }
    // `r + tau` can round up to exactly tau for tiny negative inputs.
    if r >= tau {
        r = T::zero();
    }
    r
}

impl<T: Real> Add for PhaseAngle<T> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        PhaseAngle::new(self.0 + rhs.0)
    }
}

impl<T: Real> Sub for PhaseAngle<T> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        PhaseAngle::new(self.0 - rhs.0)
    }
}

impl<T: Real> Neg for PhaseAngle<T> {
    type Output = Self;
    fn neg(self) -> Self {
        PhaseAngle::new(-self.0)
    }
}

/// Powers leaving the two output ports.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PortIntensities<T> {
    pub i1: T,
    pub i2: T,
}

impl<T: Real> PortIntensities<T> {
    pub fn total(&self) -> T {
        self.i1 + self.i2
    }
}

/// Intrinsic fringe contrast of the interferometer, `1` for ideal mode overlap.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Contrast<T>(T);

impl<T: Real> Contrast<T> {
    pub fn new(v0: T) -> Result<Self> {
        if !(v0 >= T::zero() && v0 <= T::one()) {
            return Err(Error::domain(format!("contrast {v0} outside [0, 1]")));
        }
        Ok(Contrast(v0))
    }

    pub fn ideal() -> Self {
        Contrast(T::one())
    }

    pub fn value(self) -> T {
        self.0
    }
}

impl<T: Real> Default for Contrast<T> {
    fn default() -> Self {
        Contrast(T::lit(DEFAULT_CONTRAST))
    }
}

/// Splits `input_power` between the two ports for the given total phase.
pub fn port_intensities<T: Real>(
    input_power: T,
    total_phase: PhaseAngle<T>,
    contrast: Contrast<T>,
) -> Result<PortIntensities<T>> {
    if !(input_power >= T::zero()) {
        return Err(Error::domain(format!("negative input power {input_power}")));
    }
    let half = input_power / T::lit(2.0);
    let fringe = contrast.value() * total_phase.value().cos();
    Ok(PortIntensities {
        i1: half * (T::one() + fringe),
        i2: half * (T::one() - fringe),
    })
}

/// Signed visibility `(c1 - c2) / (c1 + c2)`.
pub fn visibility<T: Real>(counts: &DetectorCounts) -> Result<T> {
    let total = counts.c1 + counts.c2;
    if total == 0 {
        return Err(Error::UndefinedVisibility);
    }
    let c1 = T::from_u64(counts.c1).expect("count fits");
    let c2 = T::from_u64(counts.c2).expect("count fits");
    Ok((c1 - c2) / (c1 + c2))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, PI, TAU};
    use std::time::Duration;

    use approx::assert_relative_eq;
    use proptest::prelude::*;

    use super::*;

    fn counts(c1: u64, c2: u64) -> DetectorCounts {
        DetectorCounts { c1, c2, window: Duration::from_micros(100) }
    }

    #[test]
    fn intensity_extremes() {
        let p = port_intensities(1.0, PhaseAngle::zero(), Contrast::ideal()).unwrap();
        assert_relative_eq!(p.i1, 1.0);
        assert_relative_eq!(p.i2, 0.0);

        let p = port_intensities(1.0, PhaseAngle::new(FRAC_PI_2), Contrast::ideal()).unwrap();
        assert_relative_eq!(p.i1, 0.5, epsilon = 1e-15);
        assert_relative_eq!(p.i2, 0.5, epsilon = 1e-15);

        let p = port_intensities(2.0, PhaseAngle::new(FRAC_PI_3), Contrast::ideal()).unwrap();
        assert_relative_eq!(p.i1, 1.5, epsilon = 1e-15);
        assert_relative_eq!(p.i2, 0.5, epsilon = 1e-15);
    }

    #[test]
    fn negative_power_rejected() {
        assert!(matches!(
            port_intensities(-1.0, PhaseAngle::zero(), Contrast::<f64>::ideal()),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn contrast_bounds() {
        assert!(Contrast::new(1.01).is_err());
        assert!(Contrast::new(-0.1).is_err());
        assert!(Contrast::new(f64::NAN).is_err());
        assert_eq!(Contrast::<f64>::default().value(), 0.995);
    }

    #[test]
    fn visibility_examples() {
        assert_eq!(visibility::<f64>(&counts(100, 0)).unwrap(), 1.0);
        assert_eq!(visibility::<f64>(&counts(50, 50)).unwrap(), 0.0);
        assert_relative_eq!(visibility::<f64>(&counts(980, 20)).unwrap(), 0.96, epsilon = 1e-15);
        assert!(matches!(visibility::<f64>(&counts(0, 0)), Err(Error::UndefinedVisibility)));
    }

    #[test]
    fn works_in_single_precision() {
        let p = port_intensities(2.0f32, PhaseAngle::new(std::f32::consts::FRAC_PI_3), Contrast::ideal())
            .unwrap();
        assert!((p.i1 - 1.5).abs() < 1e-6);
        assert!((visibility::<f32>(&counts(980, 20)).unwrap() - 0.96).abs() < 1e-6);
    }

    #[test]
    fn canonicalize_edges() {
        assert_eq!(canonicalize(0.0), 0.0);
        assert_eq!(canonicalize(TAU), 0.0);
        assert_eq!(canonicalize(-1e-300), 0.0);
        assert_relative_eq!(canonicalize(-PI), PI);
        assert_relative_eq!(PhaseAngle::new(3.0 * PI / 2.0).signed(), -FRAC_PI_2);
    }

    proptest! {
        #[test]
        fn canonical_range_and_periodicity(x in -1e3f64..1e3) {
            let a = canonicalize(x);
            prop_assert!((0.0..TAU).contains(&a));
            let b = canonicalize(x + TAU);
            prop_assert!(PhaseAngle(a).distance(PhaseAngle(b)) < 1e-9);
        }

        #[test]
        fn energy_conservation(power in 0.0f64..1e6, phase in -10.0f64..10.0, v0 in 0.0f64..=1.0) {
            let p = port_intensities(power, PhaseAngle::new(phase), Contrast::new(v0).unwrap()).unwrap();
            prop_assert!(p.i1 >= 0.0 && p.i2 >= 0.0);
            prop_assert!((p.total() - power).abs() <= 1e-12 * power.max(1.0));
        }

        #[test]
        fn fringe_symmetry(phase in 0.0f64..TAU, v0 in 0.0f64..=1.0) {
            let c = Contrast::new(v0).unwrap();
            let a = port_intensities(1.0, PhaseAngle::new(phase), c).unwrap();
            let b = port_intensities(1.0, PhaseAngle::new(phase + PI), c).unwrap();
            prop_assert!((a.i1 - b.i2).abs() < 1e-12);
        }

        #[test]
        fn visibility_antisymmetric(c1 in 0u64..1_000_000, c2 in 0u64..1_000_000) {
            prop_assume!(c1 + c2 > 0);
            let v: f64 = visibility(&counts(c1, c2)).unwrap();
            let w: f64 = visibility(&counts(c2, c1)).unwrap();
            prop_assert_eq!(v, -w);
        }

        #[test]
        fn noiseless_counts_track_cosine(phase in 0.0f64..TAU) {
            let total = 1_000_000.0;
            let p = port_intensities(total, PhaseAngle::new(phase), Contrast::ideal()).unwrap();
            let c = counts(p.i1.round() as u64, p.i2.round() as u64);
            let v: f64 = visibility(&c).unwrap();
            prop_assert!((v - phase.cos()).abs() <= 2.0 / total);
        }
    }
}
