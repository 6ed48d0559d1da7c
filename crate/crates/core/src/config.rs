//! Run configuration file: TOML with one section per subsystem.
//!
//! ```toml
//! [run]
//! seconds = 60
//! mode = "closed-loop"
//!
//! [drift]
//! path_walk_sigma = 0.15
//! static_offsets = "random"
//! ```
//!
//! Every key has a default, so an empty file is a valid configuration.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};
use std::time::Duration;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{CalibConfig, InitialStepPlan};
use crate::controller::{ExperimentConfig, FrameSchedule, LoopMode};
use crate::drift::{DriftConfig, DEFAULT_OPTICAL_FREQUENCY_HZ};
use crate::error::{Error, Result};
use crate::hardware::{DetectorConfig, PmConfig, NUM_DELAYS};
use crate::optics::{Contrast, DEFAULT_CONTRAST};
use crate::plant::{rng_stream, PlantConfig, Stream};

pub const DEFAULT_SEED: u64 = 2017;
pub const EFFECTIVE_CONFIG_FILE: &str = "effective_config.toml";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seconds: u32,
    pub mode: LoopMode,
    pub seed: u64,
    pub output_dir: PathBuf,
}

impl Default for RunSection {
    fn default() -> Self {
        RunSection { seconds: 60, mode: LoopMode::ClosedLoop, seed: DEFAULT_SEED, output_dir: PathBuf::from("out") }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OpticsSection {
    pub contrast: f64,
}

impl Default for OpticsSection {
    fn default() -> Self {
        OpticsSection { contrast: DEFAULT_CONTRAST }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PmSection {
    pub v_min: f64,
    pub v_max: f64,
    pub v_pi: f64,
    pub dac_bits: u8,
}

impl Default for PmSection {
    fn default() -> Self {
        let pm = PmConfig::<f64>::default();
        PmSection { v_min: pm.v_min, v_max: pm.v_max, v_pi: pm.v_pi, dac_bits: pm.dac_bits }
    }
}

/// `"random"` (uniform, seeded), `"zero"`, or 128 explicit radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StaticOffsets {
    Named(String),
    Explicit(Vec<f64>),
}

impl Default for StaticOffsets {
    fn default() -> Self {
        StaticOffsets::Named("random".into())
    }
}

impl StaticOffsets {
    pub fn resolve(&self, seed: u64) -> Result<Vec<f64>> {
        match self {
            StaticOffsets::Named(name) if name == "random" => {
                let mut rng = rng_stream(seed, Stream::Offsets);
                Ok((0..NUM_DELAYS).map(|_| rng.random_range(0.0..TAU)).collect())
            }
            StaticOffsets::Named(name) if name == "zero" => Ok(vec![0.0; NUM_DELAYS]),
            StaticOffsets::Named(name) => {
                Err(Error::config(format!("drift.static_offsets: unknown value {name:?} (random | zero | list)")))
            }
            StaticOffsets::Explicit(v) if v.len() == NUM_DELAYS => Ok(v.clone()),
            StaticOffsets::Explicit(v) => {
                Err(Error::config(format!("drift.static_offsets needs {NUM_DELAYS} values, got {}", v.len())))
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DriftSection {
    pub laser_ou_sigma: f64,
    pub laser_ou_tau: f64,
    pub path_walk_sigma: f64,
    pub optical_frequency_hz: f64,
    pub static_offsets: StaticOffsets,
    /// Longest drift integration step, seconds.
    pub step: f64,
}

impl Default for DriftSection {
    fn default() -> Self {
        let d = DriftConfig::default();
        DriftSection {
            laser_ou_sigma: d.laser_ou_sigma,
            laser_ou_tau: d.laser_ou_tau,
            path_walk_sigma: d.path_walk_sigma,
            optical_frequency_hz: DEFAULT_OPTICAL_FREQUENCY_HZ,
            static_offsets: StaticOffsets::default(),
            step: 100e-6,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CalibrationSection {
    /// Seconds per calibration step.
    pub step_window: f64,
    pub coarse_interval: f64,
    pub fine_interval: f64,
    pub accept_threshold: f64,
    pub ext_phases: [f64; 4],
}

impl Default for CalibrationSection {
    fn default() -> Self {
        let c = CalibConfig::default();
        CalibrationSection {
            step_window: c.step_window.as_secs_f64(),
            coarse_interval: c.coarse_interval,
            fine_interval: c.fine_interval,
            accept_threshold: c.accept_threshold,
            ext_phases: c.plan.ext_phases().map(|p| p.value()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScheduleSection {
    pub stab_duration: f64,
    pub perm_slot: f64,
    pub qkd_duration: f64,
    /// Path switching rate during the QKD stage, Hz.
    pub switch_rate: f64,
}

impl Default for ScheduleSection {
    fn default() -> Self {
        ScheduleSection { stab_duration: 0.34, perm_slot: 0.0025, qkd_duration: 0.66, switch_rate: 10_000.0 }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub optics: OpticsSection,
    pub pm: PmSection,
    pub detector: DetectorConfig,
    pub drift: DriftSection,
    pub calibration: CalibrationSection,
    pub schedule: ScheduleSection,
}

/// Seconds to a whole number of nanoseconds.
fn duration(secs: f64, key: &str) -> Result<Duration> {
    if !(secs.is_finite() && secs > 0.0) {
        return Err(Error::config(format!("{key} must be a positive number of seconds")));
    }
    Ok(Duration::from_nanos((secs * 1e9).round() as u64))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Applies `section.key=value`. A bare `key` is accepted when it names
    /// exactly one key across all sections. Values are parsed as TOML, falling
    /// back to a plain string.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| Error::config(format!("override {assignment:?} is not key=value")))?;
        self.set(key.trim(), raw.trim())
    }

    pub fn set(&mut self, key: &str, raw: &str) -> Result<()> {
        let mut doc = toml::Table::try_from(&*self).map_err(|e| Error::config(e.to_string()))?;
        let (section, field) = resolve_key(&doc, key)?;
        let value = parse_value(raw);
        doc.get_mut(&section)
            .and_then(toml::Value::as_table_mut)
            .expect("section exists")
            .insert(field, value);
        *self = toml::Value::Table(doc)
            .try_into()
            .map_err(|e: toml::de::Error| Error::config(format!("{key}: {}", e.message())))?;
        Ok(())
    }

    pub fn schedule(&self) -> Result<FrameSchedule> {
        let s = &self.schedule;
        if !(s.switch_rate.is_finite() && s.switch_rate > 0.0) {
            return Err(Error::config("schedule.switch_rate must be positive"));
        }
        Ok(FrameSchedule {
            stab_duration: duration(s.stab_duration, "schedule.stab_duration")?,
            perm_slot: duration(s.perm_slot, "schedule.perm_slot")?,
            qkd_duration: duration(s.qkd_duration, "schedule.qkd_duration")?,
            qkd_slot: duration(1.0 / s.switch_rate, "schedule.switch_rate")?,
        })
    }

    /// Validated experiment description; the seed is `run.seed`.
    pub fn experiment(&self) -> Result<ExperimentConfig> {
        let pm = PmConfig { v_min: self.pm.v_min, v_max: self.pm.v_max, v_pi: self.pm.v_pi, dac_bits: self.pm.dac_bits };
        let d = &self.drift;
        let drift = DriftConfig {
            laser_ou_sigma: d.laser_ou_sigma,
            laser_ou_tau: d.laser_ou_tau,
            path_walk_sigma: d.path_walk_sigma,
            optical_frequency_hz: d.optical_frequency_hz,
            static_offsets: d.static_offsets.resolve(self.run.seed)?,
        };
        let c = &self.calibration;
        let calib = CalibConfig {
            step_window: duration(c.step_window, "calibration.step_window")?,
            coarse_interval: c.coarse_interval,
            fine_interval: c.fine_interval,
            accept_threshold: c.accept_threshold,
            plan: InitialStepPlan::new(c.ext_phases)?,
        };
        let cfg = ExperimentConfig {
            plant: PlantConfig {
                pm,
                det: self.detector,
                contrast: Contrast::new(self.optics.contrast)
                    .map_err(|_| Error::config("optics.contrast must be within [0, 1]"))?,
                drift,
                drift_step: duration(d.step, "drift.step")?,
                seed: self.run.seed,
            },
            calib,
            schedule: self.schedule()?,
            mode: self.run.mode,
            seconds: self.run.seconds,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

fn resolve_key(doc: &toml::Table, key: &str) -> Result<(String, String)> {
    if let Some((section, field)) = key.split_once('.') {
        let known = doc.get(section).and_then(toml::Value::as_table).is_some_and(|t| t.contains_key(field));
        if !known {
            return Err(Error::config(format!("unknown config key {key:?}")));
        }
        return Ok((section.to_string(), field.to_string()));
    }
    let owners: Vec<&String> = doc
        .iter()
        .filter(|(_, v)| v.as_table().is_some_and(|t| t.contains_key(key)))
        .map(|(k, _)| k)
        .collect();
    match owners.as_slice() {
        [one] => Ok(((*one).clone(), key.to_string())),
        [] => Err(Error::config(format!("unknown config key {key:?}"))),
        _ => Err(Error::config(format!("config key {key:?} is ambiguous; qualify it with a section"))),
    }
}

fn parse_value(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_is_default() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        let exp = cfg.experiment().unwrap();
        assert_eq!(exp.schedule, FrameSchedule::default());
        assert_eq!(exp.calib, CalibConfig::default());
        assert_eq!(exp.seconds, 60);
    }

    #[test]
    fn round_trip_through_toml() {
        let mut cfg = RunConfig::default();
        cfg.set("drift.path_walk_sigma", "0.3").unwrap();
        cfg.set("mode", "open-loop").unwrap();
        cfg.set("drift.static_offsets", "\"zero\"").unwrap();
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
        assert_eq!(back.run.mode, LoopMode::OpenLoop);
    }

    #[test]
    fn overrides() {
        let mut cfg = RunConfig::default();
        cfg.apply_override("fine_interval=0.05").unwrap();
        assert_eq!(cfg.calibration.fine_interval, 0.05);
        cfg.apply_override("detector.model = mean").unwrap();
        assert_eq!(cfg.detector.model, crate::hardware::CountModel::Mean);
        cfg.apply_override("calibration.ext_phases=[0.0, 1.0, 2.0, 3.5]").unwrap();
        assert_eq!(cfg.calibration.ext_phases[3], 3.5);
        assert!(cfg.apply_override("nonsense=1").is_err());
        assert!(cfg.apply_override("drift.nonsense=1").is_err());
        assert!(cfg.apply_override("seconds").is_err());
        assert!(cfg.apply_override("seconds=soon").is_err());
        assert!(cfg.apply_override("mode=sideways").is_err());
    }

    #[test]
    fn unknown_keys_rejected_in_files() {
        assert!(RunConfig::from_toml("[drift]\nwobble = 1.0\n").is_err());
        assert!(RunConfig::from_toml("[nope]\n").is_err());
    }

    #[test]
    fn offsets() {
        let random = StaticOffsets::default().resolve(1).unwrap();
        assert_eq!(random.len(), 128);
        assert!(random.iter().all(|x| (0.0..TAU).contains(x)));
        assert_eq!(random, StaticOffsets::default().resolve(1).unwrap());
        assert_ne!(random, StaticOffsets::default().resolve(2).unwrap());
        assert_eq!(StaticOffsets::Named("zero".into()).resolve(0).unwrap(), vec![0.0; 128]);
        assert!(StaticOffsets::Named("wavy".into()).resolve(0).is_err());
        assert!(StaticOffsets::Explicit(vec![1.0; 4]).resolve(0).is_err());
        let cfg = RunConfig::from_toml(&format!("[drift]\nstatic_offsets = {:?}\n", vec![0.5; 128])).unwrap();
        assert_eq!(cfg.experiment().unwrap().plant.drift.static_offsets, vec![0.5; 128]);
    }

    #[test]
    fn invalid_values_fail_validation() {
        for (k, v) in [
            ("seconds", "0"),
            ("contrast", "1.5"),
            ("pm.v_pi", "6.0"),
            ("efficiency", "0.0"),
            ("laser_ou_tau", "0.0"),
            ("step_window", "0.0002"),
            ("stab_duration", "0.3"),
            ("switch_rate", "7000"),
            ("ext_phases", "[0.0, 0.0, 1.0, 4.0]"),
        ] {
            let mut cfg = RunConfig::default();
            cfg.set(k, v).unwrap();
            assert!(matches!(cfg.experiment(), Err(Error::Config(_))), "{k}={v}");
        }
    }
}
