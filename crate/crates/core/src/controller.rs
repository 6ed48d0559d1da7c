//! One-second control frame: recalibrate every path, then switch paths at
//! random with table-lookup compensation.

use std::time::Duration;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::calibration::{run_calibration, CalibConfig, CalibResult, CalibStepRecord};
use crate::error::{Error, Result};
use crate::hardware::{select_delay, voltage_to_code, DacCode, DelaySelector, DetectorCounts, PmConfig, NUM_DELAYS};
use crate::optics::visibility;
use crate::plant::{rng_stream, Plant, PlantConfig, SimulatedPlant, Stream};
use crate::rrdps::{error_threshold, key_rate, KeyRateParams};

/// Mean visibility each path is expected to hold.
pub const VISIBILITY_TARGET: f64 = 0.96;
/// Train length and `v_th` used for the summary key-rate figures.
pub const SUMMARY_PULSES: u32 = NUM_DELAYS as u32;
pub const SUMMARY_V_TH: f64 = 1.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameSchedule {
    pub stab_duration: Duration,
    pub perm_slot: Duration,
    pub qkd_duration: Duration,
    pub qkd_slot: Duration,
}

impl Default for FrameSchedule {
    fn default() -> Self {
        FrameSchedule {
            stab_duration: Duration::from_millis(340),
            perm_slot: Duration::from_micros(2500),
            qkd_duration: Duration::from_millis(660),
            qkd_slot: Duration::from_micros(100),
        }
    }
}

impl FrameSchedule {
    pub fn calibration_budget(&self) -> Duration {
        self.perm_slot * NUM_DELAYS as u32
    }

    pub fn qkd_slots(&self) -> u32 {
        (self.qkd_duration.as_nanos() / self.qkd_slot.as_nanos()) as u32
    }

    pub fn validate(&self, calib: &CalibConfig) -> Result<()> {
        if self.perm_slot.is_zero() || self.qkd_slot.is_zero() {
            return Err(Error::config("schedule slots must be positive"));
        }
        if self.calibration_budget() > self.stab_duration {
            return Err(Error::config("128 permutation slots do not fit the stabilization stage"));
        }
        if self.stab_duration + self.qkd_duration != Duration::from_secs(1) {
            return Err(Error::config("stabilization and QKD stages must add up to one second"));
        }
        if !self.qkd_duration.as_nanos().is_multiple_of(self.qkd_slot.as_nanos()) {
            return Err(Error::config("QKD stage is not a whole number of switching slots"));
        }
        if calib.duration() > self.perm_slot {
            return Err(Error::config("23 calibration steps do not fit one permutation slot"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LoopMode {
    #[default]
    ClosedLoop,
    /// Calibrate in the first second only and keep that table.
    OpenLoop,
}

impl std::fmt::Display for LoopMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            LoopMode::ClosedLoop => "closed-loop",
            LoopMode::OpenLoop => "open-loop",
        })
    }
}

impl std::str::FromStr for LoopMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "closed-loop" => Ok(LoopMode::ClosedLoop),
            "open-loop" => Ok(LoopMode::OpenLoop),
            _ => Err(Error::config(format!("unknown mode {s:?} (closed-loop | open-loop)"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TableEntry {
    pub optimal_code: DacCode,
    pub calib_visibility: Option<f64>,
    pub accepted: bool,
    /// Second in which the entry was last refreshed; `None` before the first
    /// stabilization stage.
    pub refreshed_at: Option<u32>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompensationTable {
    entries: Vec<TableEntry>,
}

impl CompensationTable {
    /// Cold-start table: every path at the zero-phase code.
    pub fn bootstrap(pm: &PmConfig<f64>) -> Result<Self> {
        let code = voltage_to_code(pm.v_min, pm)?;
        let entry = TableEntry { optimal_code: code, calib_visibility: None, accepted: false, refreshed_at: None };
        Ok(CompensationTable { entries: vec![entry; NUM_DELAYS] })
    }

    pub fn entry(&self, delay: DelaySelector) -> &TableEntry {
        &self.entries[delay.index() as usize]
    }

    pub fn entries(&self) -> &[TableEntry] {
        &self.entries
    }

    pub fn accepted_count(&self) -> usize {
        self.entries.iter().filter(|e| e.accepted).count()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum CalibOutcome {
    Completed(CalibResult),
    Aborted { delay_index: u8, reason: String, trace: Vec<CalibStepRecord> },
}

impl CalibOutcome {
    pub fn delay_index(&self) -> u8 {
        match self {
            CalibOutcome::Completed(r) => r.delay_index,
            CalibOutcome::Aborted { delay_index, .. } => *delay_index,
        }
    }

    pub fn trace(&self) -> &[CalibStepRecord] {
        match self {
            CalibOutcome::Completed(r) => &r.trace,
            CalibOutcome::Aborted { trace, .. } => trace,
        }
    }

    pub fn result(&self) -> Option<&CalibResult> {
        match self {
            CalibOutcome::Completed(r) => Some(r),
            CalibOutcome::Aborted { .. } => None,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StabilizationStage {
    pub table: CompensationTable,
    pub outcomes: Vec<CalibOutcome>,
}

/// Calibrates all 128 paths in index order, one permutation slot each, then
/// idles out the rest of the stage.
pub fn run_stabilization_stage<P: Plant + ?Sized>(
    second: u32,
    plant: &mut P,
    previous: &CompensationTable,
    pm: &PmConfig<f64>,
    calib: &CalibConfig,
    schedule: &FrameSchedule,
) -> Result<StabilizationStage> {
    let mut entries = Vec::with_capacity(NUM_DELAYS);
    let mut outcomes = Vec::with_capacity(NUM_DELAYS);
    for delay in DelaySelector::all() {
        let slot_start = plant.elapsed();
        let (entry, outcome) = match run_calibration(delay, plant, pm, calib) {
            Ok(res) => (
                TableEntry {
                    optimal_code: res.optimal_code,
                    calib_visibility: Some(res.final_visibility),
                    accepted: res.accepted,
                    refreshed_at: Some(second),
                },
                CalibOutcome::Completed(res),
            ),
            Err(Error::CalibrationAborted { delay_index, reason, partial_trace, .. }) => (
                TableEntry {
                    optimal_code: previous.entry(delay).optimal_code,
                    calib_visibility: None,
                    accepted: false,
                    refreshed_at: Some(second),
                },
                CalibOutcome::Aborted { delay_index, reason, trace: partial_trace },
            ),
            Err(e) => return Err(e),
        };
        entries.push(entry);
        outcomes.push(outcome);
        // An aborted calibration still owns its whole slot.
        let used = plant.elapsed() - slot_start;
        plant.idle(schedule.perm_slot.saturating_sub(used));
    }
    plant.idle(schedule.stab_duration - schedule.calibration_budget());
    Ok(StabilizationStage { table: CompensationTable { entries }, outcomes })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QkdSlotRecord {
    pub second: u32,
    pub slot: u32,
    pub delay_index: u8,
    pub dac_code: DacCode,
    pub counts: DetectorCounts,
    /// `None` when neither detector clicked.
    pub visibility: Option<f64>,
}

/// Switches to a uniformly drawn path every slot and applies its table code.
pub fn run_qkd_stage<P: Plant + ?Sized, R: Rng + ?Sized>(
    second: u32,
    table: &CompensationTable,
    plant: &mut P,
    rng: &mut R,
    schedule: &FrameSchedule,
) -> Result<Vec<QkdSlotRecord>> {
    (0..schedule.qkd_slots())
        .map(|slot| {
            let delay = select_delay(rng.random_range(0..NUM_DELAYS as u32))?;
            let code = table.entry(delay).optimal_code;
            let counts = plant.measure(delay, code, schedule.qkd_slot)?;
            Ok(QkdSlotRecord {
                second,
                slot,
                delay_index: delay.index(),
                dac_code: code,
                counts,
                visibility: visibility::<f64>(&counts).ok(),
            })
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub plant: PlantConfig,
    pub calib: CalibConfig,
    pub schedule: FrameSchedule,
    pub mode: LoopMode,
    pub seconds: u32,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            plant: PlantConfig::default(),
            calib: CalibConfig::default(),
            schedule: FrameSchedule::default(),
            mode: LoopMode::ClosedLoop,
            seconds: 60,
        }
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.seconds == 0 {
            return Err(Error::config("seconds must be at least 1"));
        }
        self.plant.pm.validate()?;
        self.plant.det.validate()?;
        self.plant.drift.validate()?;
        self.calib.validate()?;
        self.schedule.validate(&self.calib)
    }
}

/// Simulated-clock marks for one frame.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FrameTiming {
    pub second: u32,
    pub start: Duration,
    pub stab_end: Duration,
    pub end: Duration,
    pub calibrated: bool,
    pub qkd_slots: u32,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DelaySummary {
    pub delay_index: u8,
    pub delay_ns: u32,
    /// Mean over every QKD slot that selected this path.
    pub mean_visibility: Option<f64>,
    /// Lowest per-second mean.
    pub min_visibility: Option<f64>,
    pub e_bit_proxy: Option<f64>,
    /// Fraction of performed calibrations that were accepted.
    pub accepted_fraction: f64,
    pub slots: u64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Summary {
    pub global_mean_visibility: f64,
    pub final_second_mean_visibility: f64,
    pub fraction_delays_at_target: f64,
    pub min_delay_mean_visibility: f64,
    pub mean_final_calib_visibility: f64,
    pub min_accepted_per_second: usize,
    pub missing_slots: u64,
    /// Mean `e_bit` proxy over delays 1..=127.
    pub mean_e_bit: f64,
    /// Key bits per valid detection (`Q = 1`) at `mean_e_bit`.
    pub key_rate_per_detection: f64,
    pub error_threshold: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentReport {
    pub mode: LoopMode,
    pub seed: u64,
    pub seconds: u32,
    pub calibrations: Vec<(u32, CalibOutcome)>,
    /// Table in force during each second's QKD stage.
    pub tables: Vec<CompensationTable>,
    pub slots: Vec<QkdSlotRecord>,
    pub frames: Vec<FrameTiming>,
    /// `per_second[s][r]`: mean slot visibility of path `r` in second `s`.
    pub per_second: Vec<Vec<Option<f64>>>,
    pub per_delay: Vec<DelaySummary>,
    pub summary: Summary,
    pub elapsed: Duration,
}

pub fn run_experiment(cfg: &ExperimentConfig, seed: u64) -> Result<ExperimentReport> {
    cfg.validate()?;
    let pm = cfg.plant.pm;
    let mut plant = SimulatedPlant::new(PlantConfig { seed, ..cfg.plant.clone() })?;
    let mut delay_rng: ChaCha8Rng = rng_stream(seed, Stream::DelayDraw);
    let mut table = CompensationTable::bootstrap(&pm)?;

    let mut calibrations = Vec::new();
    let mut tables = Vec::with_capacity(cfg.seconds as usize);
    let mut slots = Vec::with_capacity(cfg.seconds as usize * cfg.schedule.qkd_slots() as usize);
    let mut frames = Vec::with_capacity(cfg.seconds as usize);

    for second in 0..cfg.seconds {
        let start = plant.elapsed();
        let calibrate = second == 0 || cfg.mode == LoopMode::ClosedLoop;
        if calibrate {
            let stage = run_stabilization_stage(second, &mut plant, &table, &pm, &cfg.calib, &cfg.schedule)?;
            table = stage.table;
            calibrations.extend(stage.outcomes.into_iter().map(|o| (second, o)));
        } else {
            plant.idle(cfg.schedule.stab_duration);
        }
        let stab_end = plant.elapsed();
        let records = run_qkd_stage(second, &table, &mut plant, &mut delay_rng, &cfg.schedule)?;
        frames.push(FrameTiming {
            second,
            start,
            stab_end,
            end: plant.elapsed(),
            calibrated: calibrate,
            qkd_slots: records.len() as u32,
        });
        slots.extend(records);
        tables.push(table.clone());
    }

    let per_second = per_second_means(cfg.seconds, &slots);
    let per_delay = summarize_delays(&slots, &per_second, &calibrations);
    let summary = summarize(&slots, &per_delay, &calibrations, &tables, &frames)?;
    Ok(ExperimentReport {
        mode: cfg.mode,
        seed,
        seconds: cfg.seconds,
        calibrations,
        tables,
        slots,
        frames,
        per_second,
        per_delay,
        summary,
        elapsed: plant.elapsed(),
    })
}

fn mean(acc: (f64, u64)) -> Option<f64> {
    (acc.1 > 0).then(|| acc.0 / acc.1 as f64)
}

fn per_second_means(seconds: u32, slots: &[QkdSlotRecord]) -> Vec<Vec<Option<f64>>> {
    let mut acc = vec![vec![(0.0, 0u64); NUM_DELAYS]; seconds as usize];
    for s in slots {
        if let Some(v) = s.visibility {
            let cell = &mut acc[s.second as usize][s.delay_index as usize];
            cell.0 += v;
            cell.1 += 1;
        }
    }
    acc.into_iter().map(|row| row.into_iter().map(mean).collect()).collect()
}

fn summarize_delays(
    slots: &[QkdSlotRecord],
    per_second: &[Vec<Option<f64>>],
    calibrations: &[(u32, CalibOutcome)],
) -> Vec<DelaySummary> {
    let mut acc = vec![(0.0, 0u64); NUM_DELAYS];
    let mut counts = vec![0u64; NUM_DELAYS];
    for s in slots {
        counts[s.delay_index as usize] += 1;
        if let Some(v) = s.visibility {
            acc[s.delay_index as usize].0 += v;
            acc[s.delay_index as usize].1 += 1;
        }
    }
    let mut calibs = vec![(0u32, 0u32); NUM_DELAYS];
    for (_, o) in calibrations {
        let c = &mut calibs[o.delay_index() as usize];
        c.1 += 1;
        if o.result().is_some_and(|r| r.accepted) {
            c.0 += 1;
        }
    }
    DelaySelector::all()
        .map(|d| {
            let r = d.index() as usize;
            let mean_visibility = mean(acc[r]);
            let min_visibility = per_second.iter().filter_map(|row| row[r]).reduce(f64::min);
            DelaySummary {
                delay_index: d.index(),
                delay_ns: d.delay_ns(),
                mean_visibility,
                min_visibility,
                e_bit_proxy: mean_visibility.map(|v| ((1.0 - v) / 2.0).clamp(0.0, 0.5)),
                accepted_fraction: if calibs[r].1 > 0 { f64::from(calibs[r].0) / f64::from(calibs[r].1) } else { 0.0 },
                slots: counts[r],
            }
        })
        .collect()
}

fn summarize(
    slots: &[QkdSlotRecord],
    per_delay: &[DelaySummary],
    calibrations: &[(u32, CalibOutcome)],
    tables: &[CompensationTable],
    frames: &[FrameTiming],
) -> Result<Summary> {
    let valid: Vec<f64> = slots.iter().filter_map(|s| s.visibility).collect();
    let global = valid.iter().sum::<f64>() / valid.len().max(1) as f64;
    let last_second = frames.last().map_or(0, |f| f.second);
    let last: Vec<f64> = slots.iter().filter(|s| s.second == last_second).filter_map(|s| s.visibility).collect();
    let final_second = last.iter().sum::<f64>() / last.len().max(1) as f64;
    let means: Vec<f64> = per_delay.iter().map(|d| d.mean_visibility.unwrap_or(0.0)).collect();
    let at_target = means.iter().filter(|&&v| v >= VISIBILITY_TARGET).count() as f64 / NUM_DELAYS as f64;
    let min_mean = means.iter().copied().fold(f64::INFINITY, f64::min);
    let finals: Vec<f64> = calibrations.iter().filter_map(|(_, o)| o.result()).map(|r| r.final_visibility).collect();
    let mean_final = finals.iter().sum::<f64>() / finals.len().max(1) as f64;
    let min_accepted = frames
        .iter()
        .zip(tables)
        .filter(|(f, _)| f.calibrated)
        .map(|(_, t)| t.accepted_count())
        .min()
        .unwrap_or(0);
    // Delay 0 interferes a pulse with itself and carries no key.
    let e: Vec<f64> = per_delay.iter().skip(1).filter_map(|d| d.e_bit_proxy).collect();
    let mean_e_bit = e.iter().sum::<f64>() / e.len().max(1) as f64;
    let params = KeyRateParams { pulses: SUMMARY_PULSES, v_th: SUMMARY_V_TH, q: 1.0, e_bit: mean_e_bit };
    Ok(Summary {
        global_mean_visibility: global,
        final_second_mean_visibility: final_second,
        fraction_delays_at_target: at_target,
        min_delay_mean_visibility: min_mean,
        mean_final_calib_visibility: mean_final,
        min_accepted_per_second: min_accepted,
        missing_slots: slots.iter().filter(|s| s.visibility.is_none()).count() as u64,
        mean_e_bit,
        key_rate_per_detection: key_rate(&params)?,
        error_threshold: error_threshold(SUMMARY_PULSES, SUMMARY_V_TH)?,
    })
}

#[cfg(test)]
mod tests {
    use rand::SeedableRng;

    use super::*;
    use crate::drift::DriftConfig;
    use crate::hardware::{CountModel, DetectorConfig};
    use crate::optics::Contrast;
    use crate::stats::spearman;

    fn noiseless(offsets: Vec<f64>, seconds: u32) -> ExperimentConfig {
        ExperimentConfig {
            plant: PlantConfig {
                contrast: Contrast::ideal(),
                det: DetectorConfig { dark_rate: 0.0, input_rate: 1e12, model: CountModel::Mean, ..Default::default() },
                drift: DriftConfig { static_offsets: offsets, ..DriftConfig::quiet() },
                ..Default::default()
            },
            seconds,
            ..Default::default()
        }
    }

    fn spread_offsets() -> Vec<f64> {
        (0..NUM_DELAYS).map(|r| (r as f64 * 0.37).rem_euclid(std::f64::consts::TAU)).collect()
    }

    #[test]
    fn noiseless_run_locks_every_path() {
        let rep = run_experiment(&noiseless(spread_offsets(), 2), 1).unwrap();
        for (s, table) in rep.tables.iter().enumerate() {
            assert_eq!(table.accepted_count(), NUM_DELAYS);
            for e in table.entries() {
                assert_eq!(e.refreshed_at, Some(s as u32));
                assert!(e.calib_visibility.unwrap() > 0.9999);
            }
        }
        assert_eq!(rep.calibrations.len(), 2 * NUM_DELAYS);
        assert!(rep.slots.iter().all(|s| s.visibility.unwrap() > 0.9999));
        assert_eq!(rep.summary.missing_slots, 0);
    }

    #[test]
    fn zero_offsets_give_perfect_visibility() {
        let rep = run_experiment(&noiseless(vec![0.0; NUM_DELAYS], 1), 3).unwrap();
        assert!(rep.slots.iter().all(|s| s.visibility == Some(1.0)));
        assert_eq!(rep.summary.mean_e_bit, 0.0);
        assert!(rep.per_delay.iter().all(|d| d.mean_visibility == Some(1.0)));
    }

    #[test]
    fn qkd_stage_applies_table_codes() {
        let rep = run_experiment(&noiseless(spread_offsets(), 2), 4).unwrap();
        let schedule = FrameSchedule::default();
        assert_eq!(schedule.qkd_slots(), 6600);
        for s in 0..2u32 {
            let slots: Vec<_> = rep.slots.iter().filter(|r| r.second == s).collect();
            assert_eq!(slots.len(), 6600);
            assert!(slots.iter().enumerate().all(|(i, r)| r.slot == i as u32));
            let table = &rep.tables[s as usize];
            for r in slots {
                assert_eq!(r.dac_code, table.entry(select_delay(u32::from(r.delay_index)).unwrap()).optimal_code);
            }
        }
    }

    #[test]
    fn frame_timing_is_exact() {
        for mode in [LoopMode::ClosedLoop, LoopMode::OpenLoop] {
            let cfg = ExperimentConfig { mode, ..noiseless(spread_offsets(), 3) };
            let rep = run_experiment(&cfg, 5).unwrap();
            for (s, f) in rep.frames.iter().enumerate() {
                assert_eq!(f.start, Duration::from_secs(s as u64));
                assert_eq!(f.stab_end - f.start, Duration::from_millis(340));
                assert_eq!(f.end, Duration::from_secs(s as u64 + 1));
                assert_eq!(f.calibrated, s == 0 || mode == LoopMode::ClosedLoop);
            }
            assert_eq!(rep.elapsed, Duration::from_secs(3));
        }
    }

    #[test]
    fn open_loop_keeps_the_first_table() {
        let cfg = ExperimentConfig { mode: LoopMode::OpenLoop, ..noiseless(spread_offsets(), 3) };
        let rep = run_experiment(&cfg, 6).unwrap();
        assert_eq!(rep.calibrations.len(), NUM_DELAYS);
        assert!(rep.calibrations.iter().all(|(s, _)| *s == 0));
        assert!(rep.tables.iter().all(|t| t == &rep.tables[0]));
    }

    /// Passes through to a simulated plant except for one path, which goes
    /// dark while `dark` is set.
    struct Flaky {
        inner: SimulatedPlant,
        victim: u8,
        dark: bool,
    }

    impl Plant for Flaky {
        fn measure(&mut self, delay: DelaySelector, code: DacCode, window: Duration) -> Result<DetectorCounts> {
            let c = self.inner.measure(delay, code, window)?;
            if self.dark && delay.index() == self.victim {
                return Ok(DetectorCounts { c1: 0, c2: 0, window });
            }
            Ok(c)
        }
        fn idle(&mut self, dt: Duration) {
            self.inner.idle(dt);
        }
        fn elapsed(&self) -> Duration {
            self.inner.elapsed()
        }
    }

    #[test]
    fn aborted_calibration_keeps_previous_code() {
        let cfg = noiseless(spread_offsets(), 1);
        let pm = cfg.plant.pm;
        let schedule = FrameSchedule::default();
        let mut plant = Flaky { inner: SimulatedPlant::new(cfg.plant.clone()).unwrap(), victim: 17, dark: false };
        let boot = CompensationTable::bootstrap(&pm).unwrap();
        let first = run_stabilization_stage(0, &mut plant, &boot, &pm, &cfg.calib, &schedule).unwrap();
        plant.dark = true;
        let second = run_stabilization_stage(1, &mut plant, &first.table, &pm, &cfg.calib, &schedule).unwrap();

        let victim = select_delay(17).unwrap();
        let e = second.table.entry(victim);
        assert_eq!(e.optimal_code, first.table.entry(victim).optimal_code);
        assert!(!e.accepted);
        assert_eq!(e.calib_visibility, None);
        assert_eq!(e.refreshed_at, Some(1));
        assert!(matches!(&second.outcomes[17], CalibOutcome::Aborted { delay_index: 17, trace, .. } if trace.is_empty()));
        assert_eq!(second.table.accepted_count(), NUM_DELAYS - 1);
        // The aborted path still occupies its slot.
        assert_eq!(plant.elapsed(), Duration::from_millis(680));
    }

    #[test]
    fn default_plant_accepts_most_paths() {
        let cfg = ExperimentConfig { seconds: 5, ..Default::default() };
        let offsets: Vec<f64> = {
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            (0..NUM_DELAYS).map(|_| rng.random_range(0.0..std::f64::consts::TAU)).collect()
        };
        let cfg = ExperimentConfig {
            plant: PlantConfig { drift: DriftConfig { static_offsets: offsets, ..Default::default() }, ..cfg.plant },
            ..cfg
        };
        let rep = run_experiment(&cfg, 9).unwrap();
        assert!(rep.summary.min_accepted_per_second >= 120, "{}", rep.summary.min_accepted_per_second);
    }

    #[test]
    fn laser_drift_hurts_long_paths() {
        let mut cfg = ExperimentConfig { seconds: 20, ..Default::default() };
        cfg.plant.drift.path_walk_sigma = 0.0;
        let rep = run_experiment(&cfg, 11).unwrap();
        let (ns, vis): (Vec<f64>, Vec<f64>) = rep
            .per_delay
            .iter()
            .map(|d| (f64::from(d.delay_ns), d.mean_visibility.unwrap()))
            .unzip();
        let rho = spearman(&ns, &vis);
        assert!(rho < 0.0, "rho {rho}");
    }

    #[test]
    fn invalid_config_is_rejected() {
        assert!(run_experiment(&ExperimentConfig { seconds: 0, ..Default::default() }, 0).is_err());
        let schedule = FrameSchedule { stab_duration: Duration::from_millis(300), ..Default::default() };
        assert!(run_experiment(&ExperimentConfig { schedule, ..Default::default() }, 0).is_err());
    }

    #[test]
    fn loop_mode_round_trips() {
        for m in [LoopMode::ClosedLoop, LoopMode::OpenLoop] {
            assert_eq!(m.to_string().parse::<LoopMode>().unwrap(), m);
        }
        assert!("both".parse::<LoopMode>().is_err());
    }
}
