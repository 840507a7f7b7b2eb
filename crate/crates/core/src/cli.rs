//! Command-line front end: `train`, `compare` and `replay`.

use std::fmt::Write as _;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::agents::{AgentKind, Policy};
use crate::env::{EnvConfig, Environment};
use crate::error::{Error, Result};
use crate::harness::{derive_seed, run_comparison, run_episode, train_agent, ExperimentConfig};
use crate::metrics::EpisodeMetrics;
use crate::report;

/// Exit status for a bad config, checkpoint or argument.
pub const EXIT_CONFIG: i32 = 2;
/// Exit status for a filesystem failure.
pub const EXIT_IO: i32 = 3;

/// Environment variable read for the log filter.
pub const LOG_ENV: &str = "CONSTELLATION_LOG";

#[derive(Debug, Parser)]
#[command(name = "constellation", version, about = "Train and compare constellation retasking agents")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train one agent and write its checkpoint and training curve.
    Train(CommonArgs),
    /// Train and evaluate every configured agent over every seed.
    Compare(CommonArgs),
    /// Play one greedy episode from a checkpoint, one line per round.
    Replay(ReplayArgs),
}

#[derive(Debug, Args)]
pub struct CommonArgs {
    /// Experiment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory, created if missing.
    #[arg(long)]
    pub out: PathBuf,
    /// Run only this seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Run only this agent.
    #[arg(long)]
    pub agent: Option<String>,
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// Experiment config or bare environment config (JSON).
    #[arg(long)]
    pub config: PathBuf,
    /// Agent checkpoint written by `train`.
    #[arg(long)]
    pub checkpoint: PathBuf,
    /// Also write the replay log here.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Maps an error to its process exit status.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Io { .. } => EXIT_IO,
        Error::Csv(e) if e.is_io_error() => EXIT_IO,
        _ => EXIT_CONFIG,
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(a) => {
            let config = load_experiment(&a.config, a.seed, a.agent.as_deref())?;
            let written = cmd_train(&config, &a.out)?;
            for p in written {
                println!("{}", p.display());
            }
            Ok(())
        }
        Command::Compare(a) => {
            let config = load_experiment(&a.config, a.seed, a.agent.as_deref())?;
            let summary = cmd_compare(&config, &a.out)?;
            print!("{summary}");
            Ok(())
        }
        Command::Replay(a) => {
            let env = load_env(&a.config)?;
            let text = read(&a.checkpoint)?;
            let policy = Policy::from_json(&text)?;
            let log = cmd_replay(&policy, &env, a.seed)?;
            if let Some(out) = &a.out {
                if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                    create_dir(dir)?;
                }
                write(out, &log)?;
            }
            std::io::stdout()
                .write_all(log.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

/// Reads and validates an experiment config, then narrows it to one seed
/// and/or one agent when asked.
pub fn load_experiment(
    path: &Path,
    seed: Option<u64>,
    agent: Option<&str>,
) -> Result<ExperimentConfig> {
    let text = read(path)?;
    let mut config = ExperimentConfig::from_json(&text).map_err(|source| Error::Parse {
        path: path.to_path_buf(),
        source,
    })?;
    if let Some(s) = seed {
        config.seeds = vec![s];
    }
    if let Some(name) = agent {
        let kind: AgentKind = name
            .parse()
            .map_err(|_| Error::config(format!("field `agent`: unknown agent {name:?}")))?;
        config.agents = vec![kind];
    }
    config.validate()?;
    Ok(config)
}

/// Accepts either a full experiment config (its `env` is used) or a bare
/// environment config.
pub fn load_env(path: &Path) -> Result<EnvConfig> {
    let text = read(path)?;
    let parse_err = |source| Error::Parse {
        path: path.to_path_buf(),
        source,
    };
    let value: serde_json::Value = serde_json::from_str(&text).map_err(parse_err)?;
    let env = if value.get("env").is_some() {
        ExperimentConfig::from_json(&text).map_err(parse_err)?.env
    } else {
        EnvConfig::from_json(&text).map_err(parse_err)?
    };
    env.validate()?;
    Ok(env)
}

fn checkpoint_name(agent: AgentKind, seed: u64) -> String {
    format!("{}_seed{seed}.json", agent.name().to_lowercase())
}

/// Trains the first configured agent on the first configured seed. Writes the
/// checkpoint and the per-episode training curve; returns their paths.
pub fn cmd_train(config: &ExperimentConfig, out: &Path) -> Result<Vec<PathBuf>> {
    config.validate()?;
    let spec = &config.specs()[0];
    let seed = config.seeds[0];
    create_dir(out)?;
    log::info!("training {} seed {seed} for {} episodes", spec.agent, spec.train_episodes);
    let trained = train_agent(spec, seed)?;

    let checkpoint = out.join(checkpoint_name(spec.agent, seed));
    write(&checkpoint, &trained.agent.policy().to_json())?;

    let rows: Vec<_> = trained
        .curve
        .iter()
        .enumerate()
        .map(|(i, m)| {
            report::ResultsRow::from_metrics(&config.experiment_id, spec.agent, seed, i, m)
        })
        .collect();
    let curve = out.join(format!(
        "training_{}_seed{seed}.csv",
        spec.agent.name().to_lowercase()
    ));
    write(&curve, &report::results_to_string(&rows))?;
    Ok(vec![checkpoint, curve])
}

/// Runs the full comparison and writes `results.csv`, `summary.csv` and the
/// three charts. Returns the summary CSV text.
pub fn cmd_compare(config: &ExperimentConfig, out: &Path) -> Result<String> {
    config.validate()?;
    create_dir(out)?;
    let comparison = run_comparison(config)?;

    let rows = report::comparison_rows(&comparison);
    write(&out.join("results.csv"), &report::results_to_string(&rows))?;

    let summary = report::summary_rows(&comparison);
    let mut buf = Vec::new();
    report::write_summary(&mut buf, &summary)?;
    let summary_text = String::from_utf8(buf).expect("CSV is UTF-8");
    write(&out.join("summary.csv"), &summary_text)?;

    for (name, svg) in report::summary_charts(&summary) {
        write(&out.join(name), &svg)?;
    }
    Ok(summary_text)
}

/// Plays one greedy episode. Each round prints
/// `round  action  from  to  reward  operational  failed-ids`, tab-separated,
/// and a final `summary` line carries the episode metrics.
pub fn cmd_replay(policy: &Policy, env_config: &EnvConfig, seed: u64) -> Result<String> {
    policy.check_env(env_config)?;
    let mut env = Environment::new(env_config.clone().with_seed(derive_seed(seed, 2)))?;
    let n = env_config.num_sats;
    let mut log = String::new();
    let mut round = 0usize;
    let metrics = run_episode(policy, &mut env, |_, action, out| {
        let a = crate::env::Action::decode(action, n);
        let operational = out.observation.operational().count();
        let failed = if out.info.failures_this_step.is_empty() {
            "-".to_string()
        } else {
            out.info
                .failures_this_step
                .iter()
                .map(usize::to_string)
                .collect::<Vec<_>>()
                .join(",")
        };
        let _ = writeln!(
            log,
            "{round}\t{action}\t{}\t{}\t{}\t{operational}\t{failed}",
            a.from_sat,
            a.to_sat,
            report::format_sig9(out.reward)
        );
        round += 1;
    });
    log.push_str(&summary_line(&metrics));
    Ok(log)
}

fn summary_line(m: &EpisodeMetrics) -> String {
    format!(
        "summary\treward_sum={}\ttcr_percent={}\tart_seconds={}\tfailures={}\tcapacity_violations={}\ttmax_violations={}\n",
        report::format_sig9(m.reward_sum),
        report::format_sig9(m.tcr),
        m.art.map(report::format_sig9).unwrap_or_else(|| "none".into()),
        m.failures,
        m.capacity_violations,
        m.tmax_violations
    )
}
