//! The simulated interferometer as seen by the control system.

use std::time::Duration;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::drift::{DriftConfig, DriftState};
use crate::error::Result;
use crate::hardware::{
    dac_to_voltage, sample_counts, voltage_to_phase, DacCode, DelaySelector, DetectorConfig, DetectorCounts,
    PmConfig,
};
use crate::optics::{port_intensities, Contrast, PhaseAngle};

/// Independent random streams derived from one run seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Drift = 0,
    Detector = 1,
    DelayDraw = 2,
    Offsets = 3,
}

pub fn rng_stream(seed: u64, stream: Stream) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream as u64);
    rng
}

/// What the calibrator and controller are allowed to do to the hardware.
pub trait Plant {
    /// Routes light through `delay`, drives the modulator with `code` and
    /// integrates both detectors for `window`.
    fn measure(&mut self, delay: DelaySelector, code: DacCode, window: Duration) -> Result<DetectorCounts>;

    /// Lets simulated time pass without counting.
    fn idle(&mut self, duration: Duration);

    /// Total simulated time consumed so far.
    fn elapsed(&self) -> Duration;
}

#[derive(Clone, Debug, PartialEq)]
pub struct PlantConfig {
    pub pm: PmConfig<f64>,
    pub det: DetectorConfig,
    pub contrast: Contrast<f64>,
    pub drift: DriftConfig,
    /// Longest interval the drift state is advanced in one step.
    pub drift_step: Duration,
    pub seed: u64,
}

impl Default for PlantConfig {
    fn default() -> Self {
        PlantConfig {
            pm: PmConfig::default(),
            det: DetectorConfig::default(),
            contrast: Contrast::default(),
            drift: DriftConfig::default(),
            drift_step: Duration::from_micros(100),
            seed: 0,
        }
    }
}

#[derive(Debug)]
pub struct SimulatedPlant {
    cfg: PlantConfig,
    drift: DriftState,
    drift_rng: ChaCha8Rng,
    detector_rng: ChaCha8Rng,
    elapsed: Duration,
}

impl SimulatedPlant {
    pub fn new(cfg: PlantConfig) -> Result<Self> {
        cfg.pm.validate()?;
        cfg.det.validate()?;
        cfg.drift.validate()?;
        if cfg.drift_step.is_zero() {
            return Err(crate::Error::config("drift step must be positive"));
        }
        let mut drift_rng = rng_stream(cfg.seed, Stream::Drift);
        let drift = DriftState::new(&cfg.drift, &mut drift_rng);
        let detector_rng = rng_stream(cfg.seed, Stream::Detector);
        Ok(SimulatedPlant { cfg, drift, drift_rng, detector_rng, elapsed: Duration::ZERO })
    }

    pub fn config(&self) -> &PlantConfig {
        &self.cfg
    }

    pub fn drift_state(&self) -> &DriftState {
        &self.drift
    }

    pub fn true_phase(&self, delay: DelaySelector) -> PhaseAngle<f64> {
        self.drift.true_phase(delay, &self.cfg.drift)
    }

    /// Total phase seen by the detectors for `delay` under `code`.
    pub fn total_phase(&self, delay: DelaySelector, code: DacCode) -> Result<PhaseAngle<f64>> {
        let pm_phase = voltage_to_phase(dac_to_voltage(code, &self.cfg.pm), &self.cfg.pm)?;
        Ok(self.true_phase(delay) + pm_phase)
    }

    fn advance(&mut self, duration: Duration) {
        let mut left = duration;
        while !left.is_zero() {
            let dt = left.min(self.cfg.drift_step);
            self.drift.advance(dt.as_secs_f64(), &self.cfg.drift, &mut self.drift_rng);
            left -= dt;
        }
        self.elapsed += duration;
    }
}

impl Plant for SimulatedPlant {
    fn measure(&mut self, delay: DelaySelector, code: DacCode, window: Duration) -> Result<DetectorCounts> {
        if window.is_zero() {
            return Err(crate::Error::domain("integration window must be positive"));
        }
        // Phase is held constant over the window, then time moves on.
        let phase = self.total_phase(delay, code)?;
        let intensities = port_intensities(1.0, phase, self.cfg.contrast)?;
        let counts = sample_counts(&intensities, &self.cfg.det, window, &mut self.detector_rng);
        self.advance(window);
        Ok(counts)
    }

    fn idle(&mut self, duration: Duration) {
        self.advance(duration);
    }

    fn elapsed(&self) -> Duration {
        self.elapsed
    }
}
