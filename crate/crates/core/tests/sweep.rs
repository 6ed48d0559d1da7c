use phasestab::config::RunConfig;
use phasestab::sweep::{run_sweep, write_sweep_csv, SWEEP_HEADER};

fn noiseless() -> RunConfig {
    let mut cfg = RunConfig::default();
    for o in [
        "seconds=1",
        "contrast=1.0",
        "dark_rate=0",
        "input_rate=1e12",
        "model=mean",
        "laser_ou_sigma=0",
        "path_walk_sigma=0",
    ] {
        cfg.apply_override(o).unwrap();
    }
    cfg
}

fn strings(v: &[&str]) -> Vec<String> {
    v.iter().map(|s| s.to_string()).collect()
}

#[test]
fn finer_scan_never_hurts_noiseless_optimum() {
    let rows = run_sweep(&noiseless(), "fine_interval", &strings(&["0.1", "0.05", "0.025"])).unwrap();
    let v: Vec<f64> = rows.iter().map(|r| r.mean_final_calib_visibility).collect();
    assert!(v.windows(2).all(|w| w[1] >= w[0]), "{v:?}");
}

#[test]
fn closed_loop_beats_open_loop_on_paired_seed() {
    let mut cfg = RunConfig::default();
    cfg.run.seconds = 20;
    let rows = run_sweep(&cfg, "mode", &strings(&["open-loop", "closed-loop"])).unwrap();
    assert_eq!(rows[0].seed, rows[1].seed);
    assert!(rows[1].global_mean_visibility > rows[0].global_mean_visibility);
}

#[test]
fn rows_follow_value_order() {
    let values = strings(&["0.3", "0", "0.1", "0.2"]);
    let mut cfg = noiseless();
    cfg.run.seconds = 2;
    let rows = run_sweep(&cfg, "drift.path_walk_sigma", &values).unwrap();
    let got: Vec<&str> = rows.iter().map(|r| r.value.as_str()).collect();
    assert_eq!(got, ["0.3", "0", "0.1", "0.2"]);
    assert_eq!(rows[1].global_mean_visibility, 1.0);
    assert!(rows[0].global_mean_visibility < 1.0);
    assert_eq!(rows, run_sweep(&cfg, "drift.path_walk_sigma", &values).unwrap());
}

#[test]
fn bad_parameter_or_value_is_rejected_up_front() {
    let cfg = noiseless();
    assert!(run_sweep(&cfg, "no_such_key", &strings(&["1"])).is_err());
    assert!(run_sweep(&cfg, "fine_interval", &strings(&["0.025", "-1"])).is_err());
    assert!(run_sweep(&cfg, "mode", &strings(&["sideways"])).is_err());
}

#[test]
fn sweep_csv_layout() {
    let rows = run_sweep(&noiseless(), "path_walk_sigma", &strings(&["0"])).unwrap();
    let mut buf = Vec::new();
    write_sweep_csv(&rows, &mut buf).unwrap();
    let text = String::from_utf8(buf).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_HEADER.join(","));
    assert_eq!(
        lines.next().unwrap(),
        "path_walk_sigma,0,2017,1.000000,1.000000,1.000000,1.000000,128,0.000000"
    );
    assert!(lines.next().is_none());
}
