use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::NaiveDate;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use evcharge::agent::Checkpoint;
use evcharge::data::{
    ingest_csv, load_dataset, synthesize_dataset, write_csv, write_json, ColumnMap, Dataset, IngestOptions,
    SynthProfile,
};
use evcharge::harness::run::{BEST_CHECKPOINT_FILE, FINAL_CHECKPOINT_FILE};
use evcharge::harness::{
    dp_oracle, evaluate, exhaustive_oracle, read_manifest, train, write_report, write_run, Evaluation, Policy,
    RunConfig,
};
use evcharge::{Error, Result};

#[derive(Parser)]
#[command(name = "evcharge", version, about = "Solar-aware household EV charging scheduler")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Aggregate a metered CSV into 15-minute household days.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        /// Column mapping, e.g. `timestamp=ts,pv=solar,total=grid,ev=car`.
        #[arg(long, default_value = "")]
        map: String,
        /// Interpolate short interior gaps instead of dropping the day.
        #[arg(long)]
        gap_fill: bool,
        /// Write the days as `.json` or `.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Generate synthetic household days.
    Synth {
        #[arg(long)]
        days: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        /// JSON or TOML synthesis profile.
        #[arg(long)]
        profile: Option<PathBuf>,
        #[arg(long, default_value = "2018-06-01")]
        start: NaiveDate,
    },
    /// Train a DQN agent and write a run directory.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint (or a baseline) on every day of a dataset.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = PolicyKind::Dqn)]
        policy: PolicyKind,
        /// Only evaluate the configured held-out days.
        #[arg(long)]
        test_only: bool,
        /// Also write report files here.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact reward-maximising schedule for one day.
    Oracle {
        #[arg(long)]
        day: NaiveDate,
        #[arg(long, default_value_t = 96)]
        horizon: usize,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Enumerate every action sequence instead of using dynamic programming.
        #[arg(long)]
        exhaustive: bool,
    },
    /// Write evaluation reports for a run, or export the flexibility profile.
    Report(ReportArgs),
}

#[derive(Args)]
#[command(args_conflicts_with_subcommands = true)]
struct ReportArgs {
    #[command(subcommand)]
    what: Option<ReportKind>,
    /// Run directory written by `train`.
    #[arg(long)]
    run: Option<PathBuf>,
}

#[derive(Subcommand)]
enum ReportKind {
    /// Habit profile derived from the training days.
    Flex {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyKind {
    Dqn,
    Metered,
    Random,
    TariffGreedy,
    SolarGreedy,
    Oracle,
}

fn policy_for(kind: PolicyKind, checkpoint: &Checkpoint) -> Policy {
    match kind {
        PolicyKind::Dqn => Policy::Dqn(checkpoint.network.clone()),
        PolicyKind::Metered => Policy::MeteredReplay,
        PolicyKind::Random => Policy::Random {
            seed: checkpoint.train_config.seed,
        },
        PolicyKind::TariffGreedy => Policy::TariffGreedy,
        PolicyKind::SolarGreedy => Policy::SolarGreedy,
        PolicyKind::Oracle => Policy::DpOracle,
    }
}

fn load_config(path: Option<&Path>) -> Result<RunConfig> {
    match path {
        Some(p) => RunConfig::load(p),
        None => Ok(RunConfig::default()),
    }
}

fn is_json(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

fn save_dataset(dataset: &Dataset, path: &Path) -> Result<()> {
    if is_json(path) {
        write_json(dataset, path)
    } else {
        write_csv(dataset, path)
    }
}

fn print_json(value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    match writeln!(std::io::stdout(), "{text}") {
        Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(Error::io("<stdout>", e)),
        _ => Ok(()),
    }
}

fn actions_string(actions: &[evcharge::env::Action]) -> String {
    actions.iter().map(|a| if a.index() == 1 { '1' } else { '0' }).collect()
}

#[derive(Serialize)]
struct IngestSummary {
    days: usize,
    first: Option<NaiveDate>,
    last: Option<NaiveDate>,
    rows_read: usize,
    rejected_negative: usize,
    dropped_days: Vec<NaiveDate>,
    filled_slots: usize,
}

#[derive(Serialize)]
struct OracleOutput {
    date: NaiveDate,
    horizon: usize,
    method: &'static str,
    total_reward: f64,
    charge_slots: Vec<usize>,
    actions: String,
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest { input, map, gap_fill, out } => {
            let columns: ColumnMap = map.parse()?;
            let report = ingest_csv(&input, &columns, IngestOptions { gap_fill })?;
            if let Some(out) = &out {
                save_dataset(&report.dataset, out)?;
            }
            let days = report.dataset.days();
            print_json(&IngestSummary {
                days: days.len(),
                first: days.first().map(|d| d.date()),
                last: days.last().map(|d| d.date()),
                rows_read: report.rows_read,
                rejected_negative: report.rejected_negative,
                dropped_days: report.dropped_days,
                filled_slots: report.filled_slots,
            })
        }
        Command::Synth {
            days,
            seed,
            out,
            profile,
            start,
        } => {
            let profile = match profile {
                Some(p) => load_profile(&p)?,
                None => SynthProfile::default(),
            };
            let dataset = synthesize_dataset(days, seed, &profile, start)?;
            save_dataset(&dataset, &out)?;
            eprintln!("wrote {} days to {}", dataset.len(), out.display());
            Ok(())
        }
        Command::Train { data, config, out } => {
            let cfg = load_config(config.as_deref())?;
            let (dataset, env) = cfg.prepare(&data)?;
            let outcome = train(dataset.train_days(), &env, &cfg.train)?;
            let manifest = write_run(&out, &data, &cfg, &outcome)?;
            eprintln!(
                "trained {} epochs ({} updates); best greedy reward {:.3}; run written to {}",
                cfg.train.epochs,
                manifest.updates,
                manifest.best_greedy_reward,
                out.display()
            );
            Ok(())
        }
        Command::Eval {
            checkpoint,
            data,
            config,
            policy,
            test_only,
            out,
        } => {
            let cfg = load_config(config.as_deref())?;
            let ckpt = Checkpoint::load(&checkpoint)?;
            let dataset = load_dataset(&data, &cfg.columns, cfg.ingest)?;
            let dataset = if test_only { cfg.split.apply(dataset)? } else { dataset };
            let policy = policy_for(policy, &ckpt);
            let evaluation = if test_only {
                evaluate(&policy, &ckpt.env, dataset.test_days(), cfg.solar_accounting)?
            } else {
                evaluate(&policy, &ckpt.env, dataset.days(), cfg.solar_accounting)?
            };
            if let Some(out) = out {
                write_report(out, &ckpt.env.tariff, &evaluation)?;
            }
            print_json(&evaluation.report)
        }
        Command::Oracle {
            day,
            horizon,
            data,
            config,
            exhaustive,
        } => {
            let cfg = load_config(config.as_deref())?;
            let (dataset, env) = cfg.prepare(&data)?;
            let d = dataset.day(day)?;
            let (solution, method) = if exhaustive {
                (exhaustive_oracle(&env, d, horizon)?, "exhaustive")
            } else {
                (dp_oracle(&env, d, horizon)?, "dynamic-programming")
            };
            print_json(&OracleOutput {
                date: day,
                horizon,
                method,
                total_reward: solution.total_reward,
                charge_slots: (0..solution.actions.len())
                    .filter(|&t| solution.actions[t].index() == 1)
                    .collect(),
                actions: actions_string(&solution.actions),
            })
        }
        Command::Report(args) => match (args.what, args.run) {
            (Some(ReportKind::Flex { data, config, out }), _) => {
                let cfg = load_config(config.as_deref())?;
                let (_, env) = cfg.prepare(&data)?;
                let text = serde_json::to_string_pretty(&env.flex)?;
                std::fs::write(&out, text).map_err(|e| Error::io(&out, e))?;
                eprintln!("wrote flexibility profile to {}", out.display());
                Ok(())
            }
            (None, Some(dir)) => report_run(&dir),
            (None, None) => Err(Error::Config("report needs --run <dir> or the `flex` subcommand".into())),
        },
    }
}

fn load_profile(path: &Path) -> Result<SynthProfile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let profile: SynthProfile = if is_json(path) {
        serde_json::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
    } else {
        toml::from_str(&text).map_err(|e| Error::Config(e.to_string()))?
    };
    profile.validate()?;
    Ok(profile)
}

/// Evaluates the run's best checkpoint and every baseline on its held-out days.
fn report_run(dir: &Path) -> Result<()> {
    let manifest = read_manifest(dir)?;
    let cfg = &manifest.config;
    let dataset = cfg.split.apply(load_dataset(&manifest.data, &cfg.columns, cfg.ingest)?)?;
    let best = dir.join(BEST_CHECKPOINT_FILE);
    let ckpt = Checkpoint::load(if best.exists() { best } else { dir.join(FINAL_CHECKPOINT_FILE) })?;
    let env = &ckpt.env;
    let report_dir = dir.join("report");
    let dqn: Evaluation = evaluate(&Policy::Dqn(ckpt.network.clone()), env, dataset.test_days(), cfg.solar_accounting)?;
    write_report(&report_dir, &env.tariff, &dqn)?;

    let mut baselines = Vec::new();
    for p in [
        Policy::MeteredReplay,
        Policy::DpOracle,
        Policy::TariffGreedy,
        Policy::SolarGreedy,
        Policy::Random {
            seed: ckpt.train_config.seed,
        },
    ] {
        let e = evaluate(&p, env, dataset.test_days(), cfg.solar_accounting)?;
        write_report(report_dir.join("baselines").join(p.name()), &env.tariff, &e)?;
        baselines.push(e.report);
    }
    let path = report_dir.join("baselines.json");
    std::fs::write(&path, serde_json::to_string_pretty(&baselines)?).map_err(|e| Error::io(&path, e))?;
    print_json(&dqn.report)
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Config(_)
        | Error::ColumnMap(_)
        | Error::InvalidTariff(_)
        | Error::InvalidBattery(_)
        | Error::InvalidProfile(_)
        | Error::CheckpointVersion { .. }
        | Error::HorizonTooLarge { .. }
        | Error::UnknownDay(_) => 2,
        Error::Divergence { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
