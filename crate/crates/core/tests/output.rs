use std::fs;

use phasestab::config::{RunConfig, EFFECTIVE_CONFIG_FILE};
use phasestab::output::{
    render_report, write_outputs, write_qkd_trace, CALIB_TRACE_FILE, CALIB_TRACE_HEADER, PER_DELAY_FILE,
    PER_DELAY_HEADER, QKD_TRACE_FILE, QKD_TRACE_HEADER,
};
use phasestab::run_experiment;

fn small() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.run.seconds = 2;
    cfg
}

fn run_into(cfg: &RunConfig, dir: &std::path::Path) {
    let report = run_experiment(&cfg.experiment().unwrap(), cfg.run.seed).unwrap();
    write_outputs(&report, cfg, dir).unwrap();
}

#[test]
fn files_have_stable_headers_and_row_counts() {
    let dir = tempfile::tempdir().unwrap();
    run_into(&small(), dir.path());
    let read = |name: &str| fs::read_to_string(dir.path().join(name)).unwrap();

    let calib = read(CALIB_TRACE_FILE);
    assert_eq!(calib.lines().next().unwrap(), CALIB_TRACE_HEADER.join(","));
    assert_eq!(calib.lines().count(), 1 + 2 * 128 * 23);

    let qkd = read(QKD_TRACE_FILE);
    assert_eq!(qkd.lines().next().unwrap(), QKD_TRACE_HEADER.join(","));
    assert_eq!(qkd.lines().count(), 1 + 2 * 6600);

    let per_delay = read(PER_DELAY_FILE);
    assert_eq!(per_delay.lines().next().unwrap(), PER_DELAY_HEADER.join(","));
    assert_eq!(per_delay.lines().count(), 129);
    for (r, line) in per_delay.lines().skip(1).enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 6);
        assert_eq!(fields[0], r.to_string());
        assert_eq!(fields[1], (2 * r).to_string());
    }

    let report = read("report.txt");
    assert!(report.contains("csv_schema_version = 1"));
    assert!(report.contains("of delays >= 0.96 visibility"));
}

#[test]
fn calib_rows_are_numbered_one_to_twenty_three() {
    let dir = tempfile::tempdir().unwrap();
    run_into(&small(), dir.path());
    let mut rdr = csv::Reader::from_path(dir.path().join(CALIB_TRACE_FILE)).unwrap();
    let steps: Vec<u32> = rdr.records().map(|r| r.unwrap()[2].parse().unwrap()).collect();
    for (i, s) in steps.iter().enumerate() {
        assert_eq!(*s as usize, i % 23 + 1);
    }
}

#[test]
fn outputs_are_byte_identical_for_same_seed() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let cfg = small();
    run_into(&cfg, a.path());
    run_into(&cfg, b.path());
    for name in [CALIB_TRACE_FILE, QKD_TRACE_FILE, PER_DELAY_FILE, "report.txt"] {
        assert_eq!(fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap(), "{name}");
    }
}

#[test]
fn effective_config_reproduces_the_run() {
    let mut cfg = small();
    cfg.apply_override("drift.path_walk_sigma=0.2").unwrap();
    cfg.apply_override("seed=99").unwrap();
    let a = tempfile::tempdir().unwrap();
    run_into(&cfg, a.path());

    let reloaded = RunConfig::load(&a.path().join(EFFECTIVE_CONFIG_FILE)).unwrap();
    assert_eq!(reloaded, cfg);
    let b = tempfile::tempdir().unwrap();
    run_into(&reloaded, b.path());
    assert_eq!(
        fs::read(a.path().join(QKD_TRACE_FILE)).unwrap(),
        fs::read(b.path().join(QKD_TRACE_FILE)).unwrap()
    );
}

#[test]
fn empty_slots_leave_visibility_blank() {
    let mut cfg = small();
    cfg.run.seconds = 1;
    for o in ["input_rate=0", "dark_rate=0"] {
        cfg.apply_override(o).unwrap();
    }
    // Every calibration aborts, so the table stays at the bootstrap codes.
    let report = run_experiment(&cfg.experiment().unwrap(), 1).unwrap();
    assert_eq!(report.summary.missing_slots, 6600);
    assert!(render_report(&report).contains("missing_slots = 6600"));
    let mut buf = Vec::new();
    write_qkd_trace(&report, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    assert!(text.lines().skip(1).all(|l| l.ends_with(",0,0,")));
}
