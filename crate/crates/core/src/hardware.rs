//! DAC, phase modulator, delay gates and photon detectors.

use std::time::Duration;

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::optics::{PhaseAngle, PortIntensities};
use crate::scalar::Real;

pub const NUM_GATES: usize = 7;
pub const NUM_DELAYS: usize = 1 << NUM_GATES;
/// Delay added by each gate's fiber, gate `i` contributing `2^(i+1)` ns.
pub const FIBER_DELAYS_NS: [u32; NUM_GATES] = [2, 4, 8, 16, 32, 64, 128];

/// A DAC output code together with the converter's resolution.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct DacCode {
    code: u32,
    bits: u8,
}

impl DacCode {
    pub fn new(code: u32, bits: u8) -> Result<Self> {
        if !(1..=31).contains(&bits) {
            return Err(Error::domain(format!("unsupported DAC resolution {bits} bits")));
        }
        if code > Self::max_for(bits) {
            return Err(Error::domain(format!("code {code} exceeds {bits}-bit range")));
        }
        Ok(DacCode { code, bits })
    }

    pub fn code(self) -> u32 {
        self.code
    }

    pub fn bits(self) -> u8 {
        self.bits
    }

    pub fn max_for(bits: u8) -> u32 {
        (1u32 << bits) - 1
    }
}

/// Output span of the DAC and half-wave voltage of the phase modulator it drives.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PmConfig<T> {
    pub v_min: T,
    pub v_max: T,
    pub v_pi: T,
    pub dac_bits: u8,
}

impl<T: Real> Default for PmConfig<T> {
    fn default() -> Self {
        PmConfig { v_min: T::zero(), v_max: T::lit(10.0), v_pi: T::lit(4.0), dac_bits: 16 }
    }
}

impl<T: Real> PmConfig<T> {
    pub fn validate(&self) -> Result<()> {
        if !(self.v_max > self.v_min) {
            return Err(Error::config("pm.v_max must exceed pm.v_min"));
        }
        if !(self.v_pi > T::zero()) {
            return Err(Error::config("pm.v_pi must be positive"));
        }
        if self.v_max - self.v_min < T::lit(2.0) * self.v_pi {
            return Err(Error::config("pm voltage span must cover 2*v_pi (a full fringe)"));
        }
        if !(1..=31).contains(&self.dac_bits) {
            return Err(Error::config("pm.dac_bits must be within 1..=31"));
        }
        Ok(())
    }

    pub fn span(&self) -> T {
        self.v_max - self.v_min
    }

    pub fn max_code(&self) -> u32 {
        DacCode::max_for(self.dac_bits)
    }

    /// Volts per DAC code step.
    pub fn lsb(&self) -> T {
        self.span() / T::from_u32(self.max_code()).expect("code fits")
    }

    pub fn code(&self, code: u32) -> Result<DacCode> {
        DacCode::new(code, self.dac_bits)
    }
}

pub fn dac_to_voltage<T: Real>(code: DacCode, cfg: &PmConfig<T>) -> T {
    let max = T::from_u32(DacCode::max_for(code.bits())).expect("code fits");
    cfg.v_min + T::from_u32(code.code()).expect("code fits") * cfg.span() / max
}

/// Nearest DAC code for `v`. Voltages more than half an LSB outside the span
/// are a range error.
pub fn voltage_to_code<T: Real>(v: T, cfg: &PmConfig<T>) -> Result<DacCode> {
    let half_lsb = cfg.lsb() / T::lit(2.0);
    if !(v >= cfg.v_min - half_lsb && v <= cfg.v_max + half_lsb) {
        return Err(Error::Range(format!("{v} V outside [{}, {}] V", cfg.v_min, cfg.v_max)));
    }
    let max = cfg.max_code();
    let steps = ((v - cfg.v_min) / cfg.lsb()).round();
    let code = steps.to_u32().unwrap_or(0).min(max);
    cfg.code(code)
}

/// Phase added by the modulator at voltage `v`: `π (v - v_min) / v_pi`.
pub fn voltage_to_phase<T: Real>(v: T, cfg: &PmConfig<T>) -> Result<PhaseAngle<T>> {
    if !(v >= cfg.v_min && v <= cfg.v_max) {
        return Err(Error::Range(format!("{v} V outside [{}, {}] V", cfg.v_min, cfg.v_max)));
    }
    Ok(PhaseAngle::new(T::PI() * (v - cfg.v_min) / cfg.v_pi))
}

/// Lowest voltage producing `phase`, always within `[v_min, v_min + 2 v_pi)`.
pub fn phase_to_voltage<T: Real>(phase: PhaseAngle<T>, cfg: &PmConfig<T>) -> T {
    cfg.v_min + cfg.v_pi * phase.value() / T::PI()
}

/// One of the 128 interferometer paths, addressed by its 7-bit gate pattern.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DelaySelector {
    index: u8,
}

impl DelaySelector {
    pub fn index(self) -> u8 {
        self.index
    }

    /// Gate `i` is on when bit `i` of the index is set.
    pub fn gate_bits(self) -> [bool; NUM_GATES] {
        std::array::from_fn(|i| self.index >> i & 1 == 1)
    }

    pub fn from_gate_bits(bits: [bool; NUM_GATES]) -> Self {
        let index = bits.iter().enumerate().fold(0u8, |acc, (i, &on)| acc | (u8::from(on) << i));
        DelaySelector { index }
    }

    pub fn delay_ns(self) -> u32 {
        self.gate_bits()
            .iter()
            .zip(FIBER_DELAYS_NS)
            .filter(|(&on, _)| on)
            .map(|(_, ns)| ns)
            .sum()
    }

    pub fn all() -> impl Iterator<Item = DelaySelector> {
        (0..NUM_DELAYS as u8).map(|index| DelaySelector { index })
    }
}

impl std::fmt::Display for DelaySelector {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:07b}", self.index)
    }
}

pub fn select_delay(random7: u32) -> Result<DelaySelector> {
    if random7 >= NUM_DELAYS as u32 {
        return Err(Error::domain(format!("delay index {random7} outside 0..=127")));
    }
    Ok(DelaySelector { index: random7 as u8 })
}

/// How detector counts are produced from their expected values.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CountModel {
    #[default]
    Poisson,
    /// Counts are the expected values rounded to the nearest integer.
    Mean,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct DetectorConfig {
    pub efficiency: f64,
    /// counts/s per detector
    pub dark_rate: f64,
    /// photons/s arriving at the interferometer
    pub input_rate: f64,
    pub model: CountModel,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig { efficiency: 0.2, dark_rate: 100.0, input_rate: 2.5e7, model: CountModel::Poisson }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(Error::config("detector.efficiency must be within (0, 1]"));
        }
        if !(self.dark_rate >= 0.0 && self.dark_rate.is_finite()) {
            return Err(Error::config("detector.dark_rate must be non-negative"));
        }
        if !(self.input_rate >= 0.0 && self.input_rate.is_finite()) {
            return Err(Error::config("detector.input_rate must be non-negative"));
        }
        Ok(())
    }

    /// Expected counts `(λ1, λ2)` for one window.
    pub fn expected_counts(&self, intensities: &PortIntensities<f64>, window: Duration) -> (f64, f64) {
        let secs = window.as_secs_f64();
        let total = intensities.total();
        let signal = self.input_rate * self.efficiency * secs;
        let dark = self.dark_rate * secs;
        let share = |i: f64| if total > 0.0 { i / total } else { 0.0 };
        (share(intensities.i1) * signal + dark, share(intensities.i2) * signal + dark)
    }
}

/// Photon counts from the two output ports over one integration window.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DetectorCounts {
    pub c1: u64,
    pub c2: u64,
    pub window: Duration,
}

impl DetectorCounts {
    pub fn total(&self) -> u64 {
        self.c1 + self.c2
    }

    /// `c1 / (c1 + c2)`, or `None` when both ports are dark.
    pub fn port1_fraction(&self) -> Option<f64> {
        let total = self.total();
        (total > 0).then(|| self.c1 as f64 / total as f64)
    }
}

fn draw_count<R: Rng + ?Sized>(lambda: f64, model: CountModel, rng: &mut R) -> u64 {
    if lambda <= 0.0 {
        return 0;
    }
    match model {
        CountModel::Mean => lambda.round() as u64,
        CountModel::Poisson => Poisson::new(lambda).expect("positive finite rate").sample(rng) as u64,
    }
}

/// Draws one window of counts. Port 1 is always drawn before port 2.
pub fn sample_counts<R: Rng + ?Sized>(
    intensities: &PortIntensities<f64>,
    det: &DetectorConfig,
    window: Duration,
    rng: &mut R,
) -> DetectorCounts {
    let (l1, l2) = det.expected_counts(intensities, window);
    let c1 = draw_count(l1, det.model, rng);
    let c2 = draw_count(l2, det.model, rng);
    DetectorCounts { c1, c2, window }
}
