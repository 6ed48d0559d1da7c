//! Simulation of a 128-path variable-delay Mach-Zehnder interferometer and
//! the controller that keeps its phase stable.
//!
//! Every second the controller spends 340 ms recalibrating each of the 128
//! paths with a least-squares estimate refined by two voltage scans, and the
//! remaining 660 ms switching paths at 10 kHz while applying the stored
//! compensation voltage. The [`rrdps`] module turns measured visibilities
//! into round-robin DPS key-rate figures.
//!
//! Pure math ([`optics`], [`calibration::least_squares_phase`], [`rrdps`],
//! the modulator transfer functions) is generic over [`Real`]; the simulated
//! plant and controller run in `f64`.

// `!(x > 0.0)` also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod calibration;
pub mod config;
pub mod controller;
pub mod drift;
pub mod error;
pub mod hardware;
pub mod optics;
pub mod output;
pub mod plant;
pub mod rrdps;
pub mod scalar;
pub mod stats;
pub mod sweep;

pub use error::{Error, Result};
pub use scalar::Real;

pub use calibration::{CalibConfig, CalibResult, InitialStepPlan};
pub use controller::{run_experiment, ExperimentConfig, ExperimentReport, LoopMode};
pub use hardware::{DacCode, DelaySelector, DetectorConfig, DetectorCounts};
pub use plant::{Plant, PlantConfig, SimulatedPlant};

pub type PhaseAngle64 = optics::PhaseAngle<f64>;
pub type PhaseAngle32 = optics::PhaseAngle<f32>;
pub type Contrast64 = optics::Contrast<f64>;
pub type Contrast32 = optics::Contrast<f32>;
pub type PortIntensities64 = optics::PortIntensities<f64>;
pub type PortIntensities32 = optics::PortIntensities<f32>;
pub type PmConfig64 = hardware::PmConfig<f64>;
pub type PmConfig32 = hardware::PmConfig<f32>;
pub type StepPlan64 = calibration::InitialStepPlan<f64>;
pub type StepPlan32 = calibration::InitialStepPlan<f32>;
pub type KeyRateParams64 = rrdps::KeyRateParams<f64>;
pub type KeyRateParams32 = rrdps::KeyRateParams<f32>;
