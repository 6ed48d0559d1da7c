//! Time-varying relative phase of the 128 interferometer paths.
//!
//! Two disturbances are combined. The laser's fractional frequency detuning
//! follows an Ornstein-Uhlenbeck process and shifts every path in proportion
//! to its delay, so longer paths are more sensitive. Each path also carries an
//! independent Brownian phase walk standing in for thermal and mechanical
//! drift of its fibers.

use std::f64::consts::TAU;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::hardware::{DelaySelector, NUM_DELAYS};
use crate::optics::PhaseAngle;

pub const DEFAULT_OPTICAL_FREQUENCY_HZ: f64 = 193.4e12;

#[derive(Clone, Debug, PartialEq)]
pub struct DriftConfig {
    /// Stationary std of the fractional laser detuning.
    pub laser_ou_sigma: f64,
    /// Mean-reversion time of the laser detuning, seconds.
    pub laser_ou_tau: f64,
    /// Per-path random walk, rad/√s.
    pub path_walk_sigma: f64,
    pub optical_frequency_hz: f64,
    /// Relative phase of each path at t = 0, radians.
    pub static_offsets: Vec<f64>,
}

impl Default for DriftConfig {
    fn default() -> Self {
        DriftConfig {
            laser_ou_sigma: 2.0e-9,
            laser_ou_tau: 30.0,
            path_walk_sigma: 0.15,
            optical_frequency_hz: DEFAULT_OPTICAL_FREQUENCY_HZ,
            static_offsets: vec![0.0; NUM_DELAYS],
        }
    }
}

impl DriftConfig {
    /// A configuration with every noise source switched off.
    pub fn quiet() -> Self {
        DriftConfig { laser_ou_sigma: 0.0, path_walk_sigma: 0.0, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.laser_ou_sigma >= 0.0 && self.path_walk_sigma >= 0.0) {
            return Err(Error::config("drift sigmas must be non-negative"));
        }
        if !(self.laser_ou_tau > 0.0) {
            return Err(Error::config("drift.laser_ou_tau must be positive"));
        }
        if !(self.optical_frequency_hz > 0.0) {
            return Err(Error::config("drift.optical_frequency_hz must be positive"));
        }
        if self.static_offsets.len() != NUM_DELAYS {
            return Err(Error::config(format!(
                "drift.static_offsets needs {NUM_DELAYS} values, got {}",
                self.static_offsets.len()
            )));
        }
        Ok(())
    }

    /// Phase shift per unit fractional detuning for `delay`: `2π ν0 Δt`.
    pub fn laser_sensitivity(&self, delay: DelaySelector) -> f64 {
        TAU * self.optical_frequency_hz * f64::from(delay.delay_ns()) * 1e-9
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DriftState {
    /// Simulated seconds since the start of the run.
    pub t: f64,
    pub laser_eps: f64,
    pub path_phases: Vec<f64>,
}

impl DriftState {
    /// Fresh state at t = 0 with the laser detuning drawn from its
    /// stationary distribution.
    pub fn new<R: Rng + ?Sized>(cfg: &DriftConfig, rng: &mut R) -> Self {
        let laser_eps = if cfg.laser_ou_sigma > 0.0 {
            cfg.laser_ou_sigma * rng.sample::<f64, _>(StandardNormal)
        } else {
            0.0
        };
        DriftState { t: 0.0, laser_eps, path_phases: vec![0.0; NUM_DELAYS] }
    }

    /// Steps the state forward by `dt` seconds using the exact OU transition
    /// and independent Gaussian walk increments. Noise sources with zero
    /// sigma consume no random numbers.
    pub fn advance<R: Rng + ?Sized>(&mut self, dt: f64, cfg: &DriftConfig, rng: &mut R) {
        debug_assert!(dt > 0.0);
        if cfg.laser_ou_sigma > 0.0 {
            let decay = (-dt / cfg.laser_ou_tau).exp();
            let kick = cfg.laser_ou_sigma * (1.0 - decay * decay).sqrt();
            self.laser_eps = self.laser_eps * decay + kick * rng.sample::<f64, _>(StandardNormal);
        }
        if cfg.path_walk_sigma > 0.0 {
            let step = cfg.path_walk_sigma * dt.sqrt();
            for phase in &mut self.path_phases {
                *phase += step * rng.sample::<f64, _>(StandardNormal);
            }
        }
        self.t += dt;
    }

    /// Uncanonicalized `α_r`; useful when comparing magnitudes across paths.
    pub fn raw_phase(&self, delay: DelaySelector, cfg: &DriftConfig) -> f64 {
        let r = delay.index() as usize;
        cfg.static_offsets[r] + self.path_phases[r] + cfg.laser_sensitivity(delay) * self.laser_eps
    }

    pub fn true_phase(&self, delay: DelaySelector, cfg: &DriftConfig) -> PhaseAngle<f64> {
        PhaseAngle::new(self.raw_phase(delay, cfg))
    }
}
