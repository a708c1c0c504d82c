use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use serde_json::json;

use octolift::harness::checks::{alloc_check, care_check};
use octolift::harness::{
    compute_metrics, evaluate_bounds, run_experiment, Bounds, DisturbanceProfile,
    ExperimentConfig, TrajectoryLog,
};

/// Octocopter load-transport simulation with cascaded W-infinity control and
/// joint UKF estimation.
#[derive(Parser)]
#[command(name = "octolift", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the closed-loop experiment and print metrics as JSON.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the noise seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Disable measurement noise.
        #[arg(long)]
        no_noise: bool,
        /// Control from the true state and load, bypassing the filter.
        #[arg(long)]
        true_params: bool,
        /// Remove every disturbance window.
        #[arg(long)]
        no_disturbance: bool,
        /// CSV log destination (defaults to `run.output` of the config).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Solve both Riccati equations and report residuals and stability.
    CareCheck {
        #[arg(long)]
        config: PathBuf,
    },
    /// Check allocation exactness on random feasible inputs.
    AllocCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
    /// Print the built-in configuration as TOML.
    DefaultConfig,
    /// Recompute metrics from a CSV log.
    Metrics {
        #[arg(long)]
        log: PathBuf,
        /// Config the log was produced with (defaults to the built-in one).
        #[arg(long)]
        config: Option<PathBuf>,
    },
}

fn print_json(value: &serde_json::Value) {
    println!("{}", serde_json::to_string_pretty(value).expect("json values serialize"));
}

fn exit_for(passed: bool) -> ExitCode {
    if passed {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn execute(cli: Cli) -> octolift::Result<ExitCode> {
    match cli.command {
        Command::Run {
            config,
            seed,
            no_noise,
            true_params,
            no_disturbance,
            out,
        } => {
            let mut cfg = ExperimentConfig::read(&config)?;
            if let Some(seed) = seed {
                cfg.run.seed = seed;
            }
            cfg.run.noise &= !no_noise;
            cfg.run.true_params |= true_params;
            if no_disturbance {
                cfg.disturbance = DisturbanceProfile::none();
            }
            let result = run_experiment(&cfg)?;
            if let Some(path) = out.or_else(|| cfg.run.output.as_ref().map(PathBuf::from)) {
                result.log.write(&path)?;
                log::info!("wrote {} rows to {}", result.log.len(), path.display());
            }
            let checks = evaluate_bounds(&result.metrics, &cfg, &Bounds::default());
            let passed = checks.iter().all(|c| c.passed);
            print_json(&json!({
                "metrics": result.metrics,
                "stats": result.stats,
                "checks": checks,
                "passed": passed,
            }));
            Ok(exit_for(passed))
        }
        Command::CareCheck { config } => {
            let cfg = ExperimentConfig::read(&config)?;
            let reports = care_check(&cfg)?;
            let passed = reports.iter().all(|r| r.passed);
            print_json(&json!({ "groups": reports, "passed": passed }));
            Ok(exit_for(passed))
        }
        Command::AllocCheck { config, samples } => {
            let cfg = ExperimentConfig::read(&config)?;
            let report = alloc_check(&cfg, samples)?;
            let passed = report.passed;
            print_json(&json!(report));
            Ok(exit_for(passed))
        }
        Command::DefaultConfig => {
            print!("{}", ExperimentConfig::default().to_toml_string()?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Metrics { log, config } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::read(&path)?,
                None => ExperimentConfig::default(),
            };
            let trajectory = TrajectoryLog::read(&log)?;
            let metrics = compute_metrics(&trajectory, &cfg);
            let checks = evaluate_bounds(&metrics, &cfg, &Bounds::default());
            let passed = checks.iter().all(|c| c.passed);
            print_json(&json!({ "metrics": metrics, "checks": checks, "passed": passed }));
            Ok(exit_for(passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match execute(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            ExitCode::from(2)
        }
    }
}
