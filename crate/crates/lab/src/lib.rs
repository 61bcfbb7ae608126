//! Experiment harness around `straddle-core`: configuration, parallel
//! drivers, and CSV/JSON output.

pub mod config;
pub mod experiments;
pub mod output;
pub mod report;

use serde_json::json;

use config::RunConfig;
use output::Table;
use report::{all_pass, Check};

#[derive(Debug, thiserror::Error)]
pub enum LabError {
    #[error(transparent)]
    Config(#[from] config::ConfigError),
    #[error(transparent)]
    Core(#[from] straddle_core::Error),
    #[error("{path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("{0}")]
    Runtime(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Simulate,
    Analytic,
    Buckets,
    Converge,
    Application,
    RateCheck,
    ValidateSamplers,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Simulate => "simulate",
            Command::Analytic => "analytic",
            Command::Buckets => "check-thm32",
            Command::Converge => "converge",
            Command::Application => "application",
            Command::RateCheck => "rate-check",
            Command::ValidateSamplers => "validate-samplers",
        }
    }

    /// Whether the command draws random numbers and so needs a seed.
    pub fn requires_seed(self) -> bool {
        !matches!(self, Command::Analytic)
    }

    pub fn default_file(self) -> &'static str {
        match self {
            Command::Simulate => "straddle.csv",
            Command::Analytic => "analytic.csv",
            Command::Buckets => "buckets.csv",
            Command::Converge => "convergence.csv",
            Command::Application => "application.csv",
            Command::RateCheck => "rate.csv",
            Command::ValidateSamplers => "samplers.csv",
        }
    }
}

/// Rendered outputs of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub csv: String,
    pub summary: String,
    pub checks: Vec<Check>,
}

impl Outcome {
    pub fn pass(&self) -> bool {
        all_pass(&self.checks)
    }
}

fn finish(command: Command, cfg: &RunConfig, table: Table, checks: Vec<Check>, extra: serde_json::Value) -> Outcome {
    Outcome {
        csv: output::csv(command.name(), cfg, &table),
        summary: output::summary(command.name(), cfg, &checks, extra),
        checks,
    }
}

/// Runs `command` and renders its outputs.
pub fn run(command: Command, cfg: &RunConfig, workers: usize) -> Result<Outcome, LabError> {
    use experiments as ex;
    Ok(match command {
        Command::Simulate => {
            let study = ex::run_straddle_study(cfg, cfg.t, cfg.n, 0, workers)?;
            let checks = ex::study_checks(cfg, &study)?;
            let extra = json!({
                "accepted": study.rows.len(),
                "attempts": study.attempts(),
                "never_exited": study.never_exited(),
            });
            finish(command, cfg, output::study_table(&study), checks, extra)
        }
        Command::Analytic => {
            let (rows, checks) = ex::analytic(cfg, workers)?;
            finish(command, cfg, output::analytic_table(&rows), checks, json!({}))
        }
        Command::Buckets => {
            let r = ex::check_buckets(cfg, workers)?;
            let extra = json!({
                "accepted": r.study.rows.len(),
                "never_exited": r.study.never_exited(),
            });
            finish(command, cfg, output::bucket_table(&r.buckets), r.checks, extra)
        }
        Command::Converge => {
            let (rows, checks) = ex::check_convergence(cfg, workers)?;
            finish(command, cfg, output::convergence_table(&rows), checks, json!({}))
        }
        Command::Application => {
            let (rows, checks) = ex::application_limit(cfg, workers)?;
            finish(command, cfg, output::application_table(&rows), checks, json!({}))
        }
        Command::RateCheck => {
            let r = ex::rate_check(cfg, workers)?;
            let extra = json!({ "exit_rate": r.exit_rate });
            finish(command, cfg, output::rate_table(&r.rows), r.checks, extra)
        }
        Command::ValidateSamplers => {
            let (rows, checks) = ex::validate_samplers(cfg, workers)?;
            finish(command, cfg, output::sampler_table(&rows), checks, json!({}))
        }
    })
}
