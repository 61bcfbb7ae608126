use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use straddle_lab::config::ConfigSource;
use straddle_lab::{run, Command, LabError};

/// Default output directory when `--out` is not given.
const OUT_DIR_ENV: &str = "STRADDLE_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "straddle-lab",
    version,
    about = "Brownian excursions straddling a fixed time"
)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Straddling excursions of Brownian motion observed at time t.
    Simulate(Args),
    /// Survival probabilities, the limit age law and exit rates.
    Analytic(Args),
    /// Bucketed comparison with the conditioned excursion law at finite t.
    #[command(name = "check-thm32")]
    Buckets(Args),
    /// Distances to the limit law over a list of observation times.
    Converge(Args),
    /// Joint age/displacement probabilities, direct and from the limit law.
    Application(Args),
    /// Excursion counts per unit local time at the boundary.
    RateCheck(Args),
    /// Conditioned excursion sampler against the boundary-offset oracle.
    ValidateSamplers(Args),
}

macro_rules! settings {
    ($($field:ident),* $(,)?) => {
        #[derive(clap::Args)]
        struct Args {
            /// Config file of `key = value` lines; flags take precedence.
            #[arg(long)]
            config: Option<PathBuf>,
            /// Primary CSV path; the summary JSON goes next to it.
            #[arg(long)]
            out: Option<PathBuf>,
            /// Worker threads. Changes wall time only, never the output.
            #[arg(long, default_value_t = 1)]
            workers: usize,
            $(
                #[arg(long, allow_hyphen_values = true)]
                $field: Option<String>,
            )*
        }

        impl Args {
            fn flags(&self) -> Vec<(&'static str, &str)> {
                let mut v = Vec::new();
                $(
                    if let Some(x) = &self.$field {
                        v.push((stringify!($field), x.as_str()));
                    }
                )*
                v
            }
        }
    };
}

settings!(
    interval,
    seed,
    t,
    t_list,
    n,
    start,
    coarse_dt,
    fine_dt,
    tail_tolerance,
    max_terms,
    switch,
    block,
    rejection_cap,
    alpha,
    buckets,
    r,
    ref_draws,
    u,
    y,
    s_threshold,
    epsilon,
    horizon,
    replicates,
    min_excursions,
    grid_x,
    grid_s,
    mc_paths,
    s_list,
    oracle_eps,
);

fn read(path: &Path) -> Result<String, LabError> {
    std::fs::read_to_string(path).map_err(|source| LabError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), LabError> {
    std::fs::write(path, text).map_err(|source| LabError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn summary_path(csv: &Path) -> PathBuf {
    let stem = csv.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    csv.with_file_name(format!("{stem}.summary.json"))
}

fn execute(command: Command, args: &Args) -> Result<bool, LabError> {
    let mut source = match &args.config {
        Some(p) => ConfigSource::parse_file(&read(p)?)?,
        None => ConfigSource::new(),
    };
    for (k, v) in args.flags() {
        source.set_flag(k, v)?;
    }
    let cfg = source.resolve(command.requires_seed())?;
    let out = match &args.out {
        Some(p) => p.clone(),
        None => {
            let dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from).unwrap_or_default();
            dir.join(command.default_file())
        }
    };
    let outcome = run(command, &cfg, args.workers)?;
    write(&out, &outcome.csv)?;
    let summary = summary_path(&out);
    write(&summary, &outcome.summary)?;
    for c in &outcome.checks {
        println!("{} {}", if c.pass { "PASS" } else { "FAIL" }, c.name);
    }
    println!("wrote {} and {}", out.display(), summary.display());
    Ok(outcome.pass())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match &cli.command {
        Cmd::Simulate(a) => (Command::Simulate, a),
        Cmd::Analytic(a) => (Command::Analytic, a),
        Cmd::Buckets(a) => (Command::Buckets, a),
        Cmd::Converge(a) => (Command::Converge, a),
        Cmd::Application(a) => (Command::Application, a),
        Cmd::RateCheck(a) => (Command::RateCheck, a),
        Cmd::ValidateSamplers(a) => (Command::ValidateSamplers, a),
    };
    match execute(command, args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
