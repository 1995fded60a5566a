use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use drive_events_cli::commands::{baselines, damage_report, fit_emission, run_online, simulate};
use drive_events_cli::config::{parse_beta_list, policy_from_flags};
use drive_events_cli::io::{open_input, read_signal, warn_malformed};
use drive_events_cli::{CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "drive-events", version, about = "Online detection of turns and expected fatigue damage")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON run configuration
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file; standard output when omitted
    #[arg(long, global = true)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct PolicyFlags {
    /// decaying, fixed, rk or per-state
    #[arg(long)]
    policy: Option<String>,
    /// Fixed forgetting factor (or base factor of per-state)
    #[arg(long)]
    gamma: Option<f64>,
    /// Exponent of the decaying policy
    #[arg(long)]
    alpha: Option<f64>,
    /// Forgetting factor giving the last K samples total weight R
    #[arg(long, value_name = "R,K")]
    rk: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a regime-switching journey to CSV plus a JSON sidecar
    Simulate,
    /// Fit per-state emission parameters from a labelled CSV
    FitEmission {
        /// Input CSV, `-` for standard input
        input: PathBuf,
    },
    /// Stream a CSV through the online estimator, writing NDJSON
    RunOnline {
        input: PathBuf,
        #[command(flatten)]
        policy: PolicyFlags,
        /// Emit a record every N samples
        #[arg(long)]
        stride: Option<u64>,
        /// Resume from a snapshot written by --snapshot
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Write the stream state here when done
        #[arg(long)]
        snapshot: Option<PathBuf>,
        /// Stop after this many input rows
        #[arg(long)]
        max_rows: Option<u64>,
    },
    /// Expected and rainflow damage per frame; simulates a journey when no
    /// input is given
    DamageReport {
        input: Option<PathBuf>,
        #[command(flatten)]
        policy: PolicyFlags,
        /// Damage exponents, comma separated
        #[arg(long, value_name = "LIST")]
        beta: Option<String>,
        #[arg(long)]
        frames: Option<usize>,
    },
    /// Compare online, Viterbi and observed turn counts; replicates simulated
    /// journeys when no input is given
    CompareBaselines {
        input: Option<PathBuf>,
        /// Replaces the configured policy list with a single policy
        #[command(flatten)]
        policy: PolicyFlags,
        #[arg(long)]
        replications: Option<usize>,
    },
}

fn apply_policy(cfg: &mut RunConfig, flags: &PolicyFlags) -> CliResult<bool> {
    match policy_from_flags(flags.policy.as_deref(), flags.gamma, flags.alpha, flags.rk.as_deref())? {
        Some(p) => {
            cfg.policy = p;
            Ok(true)
        }
        None => Ok(false),
    }
}

fn read_input(path: &Path, cfg: &RunConfig) -> CliResult<drive_events_cli::io::Signal> {
    let sig = read_signal(open_input(path)?, cfg.malformed_limit)?;
    warn_malformed(&sig.malformed);
    Ok(sig)
}

fn gated(sig: drive_events_cli::io::Signal, threshold: f64) -> damage_report::DamageInput {
    let keep: Vec<_> = sig.records.iter().filter(|r| r.speed.is_none_or(|v| v >= threshold)).collect();
    if keep.len() < sig.records.len() {
        eprintln!("note: {} rows below the speed threshold skipped", sig.records.len() - keep.len());
    }
    damage_report::DamageInput {
        y: keep.iter().map(|r| r.y).collect(),
        states: keep.iter().map(|r| r.state).collect(),
        speed: keep.iter().map(|r| r.speed).collect(),
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let common = cli.common;
    let mut cfg = RunConfig::load(common.config.as_deref())?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let output = common.output.as_deref();
    match cli.command {
        Command::Simulate => {
            simulate::cmd_simulate(&cfg, output)?;
        }
        Command::FitEmission { input } => {
            let sig = read_input(&input, &cfg)?;
            let m = cfg.emission_model()?.m();
            fit_emission::cmd_fit_emission(&sig, m, output)?;
        }
        Command::RunOnline { input, policy, stride, resume, snapshot, max_rows } => {
            apply_policy(&mut cfg, &policy)?;
            if let Some(s) = stride {
                cfg.stride = s;
            }
            cfg.validate()?;
            let opts = run_online::OnlineOptions { resume, snapshot, max_rows };
            run_online::cmd_run_online(&cfg, &input, output, &opts)?;
        }
        Command::DamageReport { input, policy, beta, frames } => {
            apply_policy(&mut cfg, &policy)?;
            if let Some(b) = beta {
                cfg.betas = parse_beta_list(&b)?;
            }
            if let Some(f) = frames {
                cfg.frames = f;
            }
            cfg.validate()?;
            let data = match input {
                Some(path) => gated(read_input(&path, &cfg)?, cfg.speed_threshold),
                None => {
                    let sim = simulate::run_simulation(&cfg)?;
                    damage_report::DamageInput { y: sim.y, states: Some(sim.path), speed: None }
                }
            };
            damage_report::cmd_damage_report(&data, &cfg, output)?;
        }
        Command::CompareBaselines { input, policy, replications } => {
            if apply_policy(&mut cfg, &policy)? {
                cfg.policies = vec![cfg.policy];
            }
            if let Some(r) = replications {
                cfg.replications = r;
            }
            cfg.validate()?;
            let cmp = match input {
                Some(path) => {
                    let data = gated(read_input(&path, &cfg)?, cfg.speed_threshold);
                    let states = data
                        .states
                        .ok_or_else(|| CliError::Validation("compare-baselines needs a state column".into()))?;
                    baselines::compare_recorded(&data.y, &states, &cfg)?
                }
                None => baselines::compare_simulated(&cfg)?,
            };
            baselines::write_comparison(&cmp, output)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
