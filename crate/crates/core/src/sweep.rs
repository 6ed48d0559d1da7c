//! One experiment per value of a single config key.

use std::io::Write;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::controller::run_experiment;
use crate::error::Result;

pub const SWEEP_HEADER: [&str; 9] = [
    "parameter",
    "value",
    "seed",
    "global_mean_visibility",
    "fraction_delays_at_target",
    "min_delay_mean_visibility",
    "mean_final_calib_visibility",
    "min_accepted_per_second",
    "mean_e_bit",
];

#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub parameter: String,
    pub value: String,
    pub seed: u64,
    pub global_mean_visibility: f64,
    pub fraction_delays_at_target: f64,
    pub min_delay_mean_visibility: f64,
    pub mean_final_calib_visibility: f64,
    pub min_accepted_per_second: usize,
    pub mean_e_bit: f64,
}

/// Runs `base` once per value of `parameter`, in parallel, and returns rows in
/// value order. All runs share `base.run.seed`, so rows are paired
/// comparisons. Every value is checked before any experiment starts.
pub fn run_sweep(base: &RunConfig, parameter: &str, values: &[String]) -> Result<Vec<SweepRow>> {
    let configs = values
        .iter()
        .map(|v| {
            let mut cfg = base.clone();
            cfg.set(parameter, v)?;
            let exp = cfg.experiment()?;
            Ok((v.clone(), cfg.run.seed, exp))
        })
        .collect::<Result<Vec<_>>>()?;
    configs
        .into_par_iter()
        .map(|(value, seed, exp)| {
            let s = run_experiment(&exp, seed)?.summary;
            Ok(SweepRow {
                parameter: parameter.to_string(),
                value,
                seed,
                global_mean_visibility: s.global_mean_visibility,
                fraction_delays_at_target: s.fraction_delays_at_target,
                min_delay_mean_visibility: s.min_delay_mean_visibility,
                mean_final_calib_visibility: s.mean_final_calib_visibility,
                min_accepted_per_second: s.min_accepted_per_second,
                mean_e_bit: s.mean_e_bit,
            })
        })
        .collect()
}

pub fn write_sweep_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SWEEP_HEADER)?;
    for r in rows {
        w.write_record([
            r.parameter.clone(),
            r.value.clone(),
            r.seed.to_string(),
            format!("{:.6}", r.global_mean_visibility),
            format!("{:.6}", r.fraction_delays_at_target),
            format!("{:.6}", r.min_delay_mean_visibility),
            format!("{:.6}", r.mean_final_calib_visibility),
            r.min_accepted_per_second.to_string(),
            format!("{:.6}", r.mean_e_bit),
        ])?;
    }
    w.flush()?;
    Ok(())
}
