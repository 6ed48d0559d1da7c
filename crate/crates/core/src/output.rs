//! CSV traces and the human-readable run report.
//!
//! Column layouts are part of the tool's interface ([`CSV_SCHEMA_VERSION`]):
//!
//! * `calib_trace.csv`: second, delay_index, step_index, dac_code, voltage, c1, c2, visibility
//! * `qkd_trace.csv`: second, slot, delay_index, c1, c2, visibility
//! * `per_delay_summary.csv`: delay_index, delay_ns, mean_visibility, min_visibility, e_bit_proxy, accepted_fraction
//!
//! Missing values (a slot with no counts, a path never selected) are empty fields.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::{RunConfig, EFFECTIVE_CONFIG_FILE};
use crate::controller::{ExperimentReport, VISIBILITY_TARGET};
use crate::error::Result;

pub const CSV_SCHEMA_VERSION: u32 = 1;
pub const CALIB_TRACE_FILE: &str = "calib_trace.csv";
pub const QKD_TRACE_FILE: &str = "qkd_trace.csv";
pub const PER_DELAY_FILE: &str = "per_delay_summary.csv";
pub const REPORT_FILE: &str = "report.txt";

pub const CALIB_TRACE_HEADER: [&str; 8] =
    ["second", "delay_index", "step_index", "dac_code", "voltage", "c1", "c2", "visibility"];
pub const QKD_TRACE_HEADER: [&str; 6] = ["second", "slot", "delay_index", "c1", "c2", "visibility"];
pub const PER_DELAY_HEADER: [&str; 6] =
    ["delay_index", "delay_ns", "mean_visibility", "min_visibility", "e_bit_proxy", "accepted_fraction"];

fn fixed(x: f64) -> String {
    format!("{x:.6}")
}

fn opt(x: Option<f64>) -> String {
    x.map(fixed).unwrap_or_default()
}

pub fn write_calib_trace<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CALIB_TRACE_HEADER)?;
    for (second, outcome) in &report.calibrations {
        for step in outcome.trace() {
            w.write_record([
                second.to_string(),
                outcome.delay_index().to_string(),
                step.step_index.to_string(),
                step.dac_code.code().to_string(),
                fixed(step.voltage),
                step.counts.c1.to_string(),
                step.counts.c2.to_string(),
                fixed(step.visibility),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_qkd_trace<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(QKD_TRACE_HEADER)?;
    for s in &report.slots {
        w.write_record([
            s.second.to_string(),
            s.slot.to_string(),
            s.delay_index.to_string(),
            s.counts.c1.to_string(),
            s.counts.c2.to_string(),
            opt(s.visibility),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_per_delay_summary<W: Write>(report: &ExperimentReport, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(PER_DELAY_HEADER)?;
    for d in &report.per_delay {
        w.write_record([
            d.delay_index.to_string(),
            d.delay_ns.to_string(),
            opt(d.mean_visibility),
            opt(d.min_visibility),
            opt(d.e_bit_proxy),
            fixed(d.accepted_fraction),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn render_report(report: &ExperimentReport) -> String {
    let s = &report.summary;
    let at_target = (s.fraction_delays_at_target * report.per_delay.len() as f64).round() as usize;
    let mut out = String::new();
    let _ = writeln!(out, "phase stabilization run");
    let _ = writeln!(out, "csv_schema_version = {CSV_SCHEMA_VERSION}");
    let _ = writeln!(out, "mode = {}", report.mode);
    let _ = writeln!(out, "seed = {}", report.seed);
    let _ = writeln!(out, "seconds = {}", report.seconds);
    let _ = writeln!(out, "simulated_time_s = {:.6}", report.elapsed.as_secs_f64());
    let _ = writeln!(out, "qkd_slots = {}", report.slots.len());
    let _ = writeln!(out, "missing_slots = {}", s.missing_slots);
    let _ = writeln!(out, "global_mean_visibility = {:.6}", s.global_mean_visibility);
    let _ = writeln!(out, "final_second_mean_visibility = {:.6}", s.final_second_mean_visibility);
    let _ = writeln!(out, "min_delay_mean_visibility = {:.6}", s.min_delay_mean_visibility);
    let _ = writeln!(out, "mean_final_calib_visibility = {:.6}", s.mean_final_calib_visibility);
    let _ = writeln!(out, "min_accepted_per_second = {}", s.min_accepted_per_second);
    let _ = writeln!(
        out,
        "delays_at_target = {at_target}/{} ({:.1}% of delays >= {VISIBILITY_TARGET:.2} visibility)",
        report.per_delay.len(),
        100.0 * s.fraction_delays_at_target
    );
    let verdict = if s.fraction_delays_at_target >= 0.9 { "PASS" } else { "FAIL" };
    let _ = writeln!(out, "target_90pct = {verdict} (>= 90% of delays >= {VISIBILITY_TARGET:.2})");
    let _ = writeln!(out, "mean_e_bit_proxy = {:.6}", s.mean_e_bit);
    let _ = writeln!(out, "key_rate_per_detection = {:.6}", s.key_rate_per_detection);
    let _ = writeln!(out, "error_threshold = {:.6}", s.error_threshold);
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OutputFiles {
    pub calib_trace: PathBuf,
    pub qkd_trace: PathBuf,
    pub per_delay: PathBuf,
    pub report: PathBuf,
    pub effective_config: PathBuf,
}

/// Writes every artifact of a run into `dir`, creating it if needed.
pub fn write_outputs(report: &ExperimentReport, cfg: &RunConfig, dir: &Path) -> Result<OutputFiles> {
    fs::create_dir_all(dir)?;
    let files = OutputFiles {
        calib_trace: dir.join(CALIB_TRACE_FILE),
        qkd_trace: dir.join(QKD_TRACE_FILE),
        per_delay: dir.join(PER_DELAY_FILE),
        report: dir.join(REPORT_FILE),
        effective_config: dir.join(EFFECTIVE_CONFIG_FILE),
    };
    let open = |p: &Path| fs::File::create(p).map(std::io::BufWriter::new);
    write_calib_trace(report, open(&files.calib_trace)?)?;
    write_qkd_trace(report, open(&files.qkd_trace)?)?;
    write_per_delay_summary(report, open(&files.per_delay)?)?;
    fs::write(&files.report, render_report(report))?;
    fs::write(&files.effective_config, cfg.to_toml())?;
    Ok(files)
}
