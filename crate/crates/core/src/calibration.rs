//! Per-path calibration: a four-point least-squares phase estimate followed by
//! a coarse and a fine voltage scan, 23 measurements in total.
//!
//! | steps   | working point | action                                         |
//! |---------|---------------|------------------------------------------------|
//! | 1 - 4   |               | apply the four probe phases of the step plan   |
//! | 5       | PT1           | apply the least-squares compensation           |
//! | 6 - 14  | PT2 -> PT3    | 9 voltages spaced `coarse_interval` around PT1 |
//! | 15 - 22 | PT4 -> PT5    | 8 voltages spaced `fine_interval` around PT3   |
//! | 23      | PT6           | re-apply PT5 and record the final visibility   |

use std::time::Duration;

use crate::error::{Error, Result};
use crate::hardware::{
    dac_to_voltage, phase_to_voltage, voltage_to_code, DacCode, DelaySelector, DetectorCounts, PmConfig,
};
use crate::optics::{visibility, PhaseAngle};
use crate::plant::Plant;
use crate::scalar::Real;

pub const STEPS_PER_CALIBRATION: usize = 23;
pub const COARSE_POINTS: usize = 9;
pub const FINE_POINTS: usize = 8;
pub const GRID_POINTS: usize = 4096;

const PT1_STEP: u8 = 5;
const COARSE_FIRST_STEP: u8 = 6;
const FINE_FIRST_STEP: u8 = 15;
const VERIFY_STEP: u8 = 23;

/// The four probe phases applied in steps 1 to 4.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InitialStepPlan<T> {
    ext_phases: [PhaseAngle<T>; 4],
}

impl<T: Real> InitialStepPlan<T> {
    pub fn new(ext_phases: [T; 4]) -> Result<Self> {
        let phases = ext_phases.map(PhaseAngle::new);
        let eps = T::lit(1e-9);
        for i in 0..4 {
            for j in i + 1..4 {
                if phases[i].distance(phases[j]) < eps {
                    return Err(Error::config("initial step phases must be pairwise distinct"));
                }
            }
        }
        let values = phases.map(PhaseAngle::value);
        let lo = values.iter().copied().fold(T::infinity(), T::min);
        let hi = values.iter().copied().fold(T::neg_infinity(), T::max);
        if hi - lo < T::PI() - eps {
            return Err(Error::config("initial step phases must span at least π"));
        }
        Ok(InitialStepPlan { ext_phases: phases })
    }

    /// `{0, π/2, π, 3π/2}`.
    pub fn quadrature() -> Self {
        let q = T::FRAC_PI_2();
        InitialStepPlan {
            ext_phases: [T::zero(), q, T::PI(), T::lit(3.0) * q].map(PhaseAngle::new),
        }
    }

    pub fn ext_phases(&self) -> [PhaseAngle<T>; 4] {
        self.ext_phases
    }

    fn is_quadrature(&self) -> bool {
        let q = Self::quadrature();
        self.ext_phases
            .iter()
            .zip(q.ext_phases)
            .all(|(a, b)| a.distance(b) < T::lit(1e-9))
    }
}

impl<T: Real> Default for InitialStepPlan<T> {
    fn default() -> Self {
        Self::quadrature()
    }
}

/// Least-squares residual of the ideal fringe `(1 + cos(α + α_k)) / 2`
/// against the measured port-1 fractions.
pub fn fringe_residual<T: Real>(alpha: T, fractions: &[T; 4], plan: &InitialStepPlan<T>) -> T {
    let half = T::lit(0.5);
    plan.ext_phases
        .iter()
        .zip(fractions)
        .map(|(ext, &f)| {
            let model = half * (T::one() + (alpha + ext.value()).cos());
            (model - f).powi(2)
        })
        .fold(T::zero(), |acc, r| acc + r)
}

/// Estimates `α_r` from the port-1 fractions `c1 / (c1 + c2)` of the four
/// probe steps.
///
/// For the quadrature plan the minimizer is `atan2(f3 - f1, f0 - f2)`;
/// other plans are solved on a 4096-point grid.
pub fn least_squares_phase<T: Real>(fractions: [T; 4], plan: &InitialStepPlan<T>) -> Result<PhaseAngle<T>> {
    if fractions.iter().any(|f| !(*f >= T::zero() && *f <= T::one())) {
        return Err(Error::domain("port fractions must lie in [0, 1]"));
    }
    if plan.is_quadrature() {
        let cos = fractions[0] - fractions[2];
        let sin = fractions[3] - fractions[1];
        if cos.hypot(sin) < T::lit(1e-12) {
            return Err(Error::AmbiguousPhase);
        }
        return Ok(PhaseAngle::new(sin.atan2(cos)));
    }
    grid_least_squares(&fractions, plan)
}

fn grid_least_squares<T: Real>(fractions: &[T; 4], plan: &InitialStepPlan<T>) -> Result<PhaseAngle<T>> {
    let n = T::from_usize(GRID_POINTS).expect("grid size fits");
    let (mut best_j, mut best, mut worst) = (0usize, T::infinity(), T::neg_infinity());
    for j in 0..GRID_POINTS {
        let alpha = T::TAU() * T::from_usize(j).expect("index fits") / n;
        let s = fringe_residual(alpha, fractions, plan);
        if s < best {
            best = s;
            best_j = j;
        }
        worst = worst.max(s);
    }
    if worst - best < T::lit(1e-12) {
        return Err(Error::AmbiguousPhase);
    }
    Ok(PhaseAngle::new(T::TAU() * T::from_usize(best_j).expect("index fits") / n))
}

/// DAC code whose modulator phase cancels `alpha_hat`, using the lowest
/// voltage that produces it.
pub fn phase_to_compensation_code<T: Real>(alpha_hat: PhaseAngle<T>, cfg: &PmConfig<T>) -> Result<DacCode> {
    cfg.validate()?;
    voltage_to_code(phase_to_voltage(-alpha_hat, cfg), cfg)
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibConfig {
    pub step_window: Duration,
    /// Spacing of the 9-point preliminary scan, volts.
    pub coarse_interval: f64,
    /// Spacing of the 8-point secondary scan, volts.
    pub fine_interval: f64,
    pub accept_threshold: f64,
    pub plan: InitialStepPlan<f64>,
}

impl Default for CalibConfig {
    fn default() -> Self {
        CalibConfig {
            step_window: Duration::from_micros(100),
            coarse_interval: 0.1,
            fine_interval: 0.025,
            accept_threshold: 0.90,
            plan: InitialStepPlan::quadrature(),
        }
    }
}

impl CalibConfig {
    pub fn validate(&self) -> Result<()> {
        if self.step_window.is_zero() {
            return Err(Error::config("calibration.step_window must be positive"));
        }
        if !(self.coarse_interval > 0.0 && self.fine_interval > 0.0) {
            return Err(Error::config("calibration scan intervals must be positive"));
        }
        if !(-1.0..=1.0).contains(&self.accept_threshold) {
            return Err(Error::config("calibration.accept_threshold must be within [-1, 1]"));
        }
        Ok(())
    }

    /// Simulated time spent measuring one path.
    pub fn duration(&self) -> Duration {
        self.step_window * STEPS_PER_CALIBRATION as u32
    }

    /// Half-width of the voltage window the two scans can reach around PT1.
    fn scan_reach(&self) -> f64 {
        self.coarse_interval * (COARSE_POINTS / 2) as f64 + self.fine_interval * (FINE_POINTS as f64 - 1.0) / 2.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CalibStepRecord {
    pub step_index: u8,
    pub dac_code: DacCode,
    pub voltage: f64,
    pub counts: DetectorCounts,
    pub visibility: f64,
}

/// Step indices (1-based) of the named working points.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct WorkingPoints {
    pub pt1: u8,
    pub pt3: u8,
    pub pt5: u8,
    pub pt6: u8,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CalibResult {
    pub delay_index: u8,
    pub estimated_phase: PhaseAngle<f64>,
    pub optimal_code: DacCode,
    pub final_visibility: f64,
    pub trace: Vec<CalibStepRecord>,
    pub points: WorkingPoints,
    pub accepted: bool,
}

impl CalibResult {
    pub fn step(&self, step_index: u8) -> &CalibStepRecord {
        &self.trace[step_index as usize - 1]
    }
}

struct Run<'a, P: ?Sized> {
    delay: DelaySelector,
    plant: &'a mut P,
    pm: &'a PmConfig<f64>,
    window: Duration,
    trace: Vec<CalibStepRecord>,
}

impl<P: Plant + ?Sized> Run<'_, P> {
    fn abort(&mut self, reason: impl Into<String>) -> Error {
        Error::CalibrationAborted {
            delay_index: self.delay.index(),
            step: self.trace.len() as u8 + 1,
            reason: reason.into(),
            partial_trace: std::mem::take(&mut self.trace),
        }
    }

    fn apply_voltage(&mut self, voltage: f64) -> Result<&CalibStepRecord> {
        let v = voltage.clamp(self.pm.v_min, self.pm.v_max);
        let code = voltage_to_code(v, self.pm)?;
        self.apply(code)
    }

    fn apply(&mut self, code: DacCode) -> Result<&CalibStepRecord> {
        let counts = match self.plant.measure(self.delay, code, self.window) {
            Ok(c) => c,
            Err(e) => return Err(self.abort(format!("plant fault: {e}"))),
        };
        let Ok(vis) = visibility::<f64>(&counts) else {
            return Err(self.abort("no photon counts"));
        };
        self.trace.push(CalibStepRecord {
            step_index: self.trace.len() as u8 + 1,
            dac_code: code,
            voltage: dac_to_voltage(code, self.pm),
            counts,
            visibility: vis,
        });
        Ok(self.trace.last().expect("just pushed"))
    }

    /// Best step among `steps`; the earliest wins ties.
    fn best_of(&self, steps: impl IntoIterator<Item = u8>) -> CalibStepRecord {
        let mut best: Option<&CalibStepRecord> = None;
        for s in steps {
            let rec = &self.trace[s as usize - 1];
            if best.is_none_or(|b| rec.visibility > b.visibility) {
                best = Some(rec);
            }
        }
        *best.expect("non-empty candidate set")
    }
}

/// Picks the representative of `v` (mod `2 v_pi`) that keeps `[v - reach, v + reach]`
/// inside the DAC span, or the one closest to fitting.
fn scan_center(v: f64, reach: f64, pm: &PmConfig<f64>) -> f64 {
    let period = 2.0 * pm.v_pi;
    let mut best = v;
    let mut best_overflow = f64::INFINITY;
    let mut candidate = pm.v_min + (v - pm.v_min).rem_euclid(period);
    while candidate <= pm.v_max {
        let overflow = (pm.v_min - (candidate - reach)).max(0.0) + ((candidate + reach) - pm.v_max).max(0.0);
        if overflow < best_overflow {
            best = candidate;
            best_overflow = overflow;
        }
        if overflow == 0.0 {
            break;
        }
        candidate += period;
    }
    best
}

/// Runs the 23-step search for one path and returns the compensation code.
pub fn run_calibration<P: Plant + ?Sized>(
    delay: DelaySelector,
    plant: &mut P,
    pm: &PmConfig<f64>,
    cfg: &CalibConfig,
) -> Result<CalibResult> {
    let mut run = Run {
        delay,
        plant,
        pm,
        window: cfg.step_window,
        trace: Vec::with_capacity(STEPS_PER_CALIBRATION),
    };

    let mut fractions = [0.0; 4];
    for (k, ext) in cfg.plan.ext_phases().into_iter().enumerate() {
        let rec = run.apply_voltage(phase_to_voltage(ext, pm))?;
        fractions[k] = rec.counts.port1_fraction().expect("non-empty counts");
    }

    let alpha_hat = match least_squares_phase(fractions, &cfg.plan) {
        Ok(a) => a,
        Err(e) => return Err(run.abort(e.to_string())),
    };
    let pt1_voltage = scan_center(phase_to_voltage(-alpha_hat, pm), cfg.scan_reach(), pm);
    let pt1 = run.apply_voltage(pt1_voltage)?.voltage;

    let half = (COARSE_POINTS / 2) as f64;
    for j in 0..COARSE_POINTS {
        run.apply_voltage(pt1 + (j as f64 - half) * cfg.coarse_interval)?;
    }
    let coarse_steps = COARSE_FIRST_STEP..COARSE_FIRST_STEP + COARSE_POINTS as u8;
    let pt3 = run.best_of(coarse_steps);

    let half = (FINE_POINTS as f64 - 1.0) / 2.0;
    for j in 0..FINE_POINTS {
        run.apply_voltage(pt3.voltage + (j as f64 - half) * cfg.fine_interval)?;
    }
    // PT4 is PT3 itself, so its coarse measurement competes with the fine scan.
    let fine_steps = FINE_FIRST_STEP..FINE_FIRST_STEP + FINE_POINTS as u8;
    let pt5 = run.best_of(std::iter::once(pt3.step_index).chain(fine_steps));

    let final_visibility = run.apply(pt5.dac_code)?.visibility;
    debug_assert_eq!(run.trace.len(), STEPS_PER_CALIBRATION);

    Ok(CalibResult {
        delay_index: delay.index(),
        estimated_phase: alpha_hat,
        optimal_code: pt5.dac_code,
        final_visibility,
        trace: run.trace,
        points: WorkingPoints { pt1: PT1_STEP, pt3: pt3.step_index, pt5: pt5.step_index, pt6: VERIFY_STEP },
        accepted: final_visibility >= cfg.accept_threshold,
    })
}
