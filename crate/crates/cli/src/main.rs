use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use phasestab::config::RunConfig;
use phasestab::output::{render_report, write_outputs};
use phasestab::rrdps::{error_threshold, key_rate, KeyRateParams};
use phasestab::sweep::{run_sweep, write_sweep_csv};
use phasestab::{run_experiment, Error, LoopMode};

/// Simulate an actively phase-stabilized 128-path delay interferometer.
#[derive(Parser)]
#[command(name = "phasestab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write traces and a report.
    Run(RunArgs),
    /// Evaluate the key rate and the tolerable bit error rate.
    Keyrate(KeyrateArgs),
    /// Repeat an experiment for each value of one config key.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct Common {
    /// TOML configuration file; defaults apply to anything it leaves out.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "N")]
    seconds: Option<u32>,
    /// closed-loop or open-loop.
    #[arg(long, value_name = "M")]
    mode: Option<LoopMode>,
    /// Output directory.
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Override a config key, e.g. `drift.path_walk_sigma=0.1`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

impl Common {
    fn load(&self) -> phasestab::Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        for o in &self.overrides {
            cfg.apply_override(o)?;
        }
        if let Some(seed) = self.seed {
            cfg.run.seed = seed;
        }
        if let Some(seconds) = self.seconds {
            cfg.run.seconds = seconds;
        }
        if let Some(mode) = self.mode {
            cfg.run.mode = mode;
        }
        if let Some(out) = &self.out {
            cfg.run.output_dir = out.clone();
        }
        Ok(cfg)
    }
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct KeyrateArgs {
    /// Pulses per train.
    #[arg(short = 'L', long, default_value_t = 128)]
    pulses: u32,
    #[arg(long, default_value_t = 1.0)]
    vth: f64,
    /// Valid detections per train.
    #[arg(long, default_value_t = 1.0)]
    q: f64,
    #[arg(long, default_value_t = 0.0)]
    ebit: f64,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    /// Config key to vary, e.g. `fine_interval` or `drift.path_walk_sigma`.
    #[arg(long, value_name = "KEY")]
    param: String,
    /// Comma-separated values, run in the order given.
    #[arg(long, value_delimiter = ',', required = true, num_args = 1..)]
    values: Vec<String>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Keyrate(a) => cmd_keyrate(&a),
        Command::Sweep(a) => cmd_sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Config(_) | Error::Domain(_) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn cmd_run(args: &RunArgs) -> phasestab::Result<()> {
    let cfg = args.common.load()?;
    let exp = cfg.experiment()?;
    let report = run_experiment(&exp, cfg.run.seed)?;
    let files = write_outputs(&report, &cfg, &cfg.run.output_dir)?;
    print!("{}", render_report(&report));
    println!("wrote {}", files.report.parent().unwrap_or(&cfg.run.output_dir).display());
    Ok(())
}

fn cmd_keyrate(args: &KeyrateArgs) -> phasestab::Result<()> {
    let p = KeyRateParams { pulses: args.pulses, v_th: args.vth, q: args.q, e_bit: args.ebit };
    let r = key_rate(&p)?;
    let threshold = error_threshold(args.pulses, args.vth)?;
    // Keep a zero rate from printing as -0.000000.
    let r = if r == 0.0 { 0.0 } else { r };
    println!("R = {r:.6}");
    println!("threshold = {threshold:.6}");
    Ok(())
}

fn cmd_sweep(args: &SweepArgs) -> phasestab::Result<()> {
    let cfg = args.common.load()?;
    cfg.experiment()?;
    let rows = run_sweep(&cfg, &args.param, &args.values)?;
    std::fs::create_dir_all(&cfg.run.output_dir)?;
    let path = cfg.run.output_dir.join("sweep.csv");
    write_sweep_csv(&rows, std::fs::File::create(&path)?)?;
    write_sweep_csv(&rows, std::io::stdout().lock())?;
    eprintln!("wrote {}", path.display());
    Ok(())
}
