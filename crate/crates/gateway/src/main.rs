use std::fs;
use std::io::Write;
use std::net::TcpListener;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use bridgesim::assessment::{questionnaire_ingest, ScoreCard};
use bridgesim::scenario::{load_scenario_file, ScenarioSpec, ScoringWeights};
use bridgesim::session::{
    read_log, replay, rescore, resimulate, run_session, NoObserver, OutcomeSummary, PilotFile, SessionConfig,
    SessionStore,
};
use bridgesim::testing::two_bridges;
use bridgesim_gateway::reporting::{participant_report, write_group_report, write_session_report};
use bridgesim_gateway::server::{serve, ServerConfig, ADDR_ENV, DEFAULT_ADDR};
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use tracing_subscriber::EnvFilter;

#[derive(Parser)]
#[command(name = "bridgesim", version, about = "Drone bridge inspection training simulator")]
struct Cli {
    /// Output format for results on standard output.
    #[arg(long, value_enum, default_value_t = Format::Text, global = true)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Host interactive sessions for the cockpit.
    Serve {
        #[arg(long, env = ADDR_ENV, default_value = DEFAULT_ADDR)]
        addr: String,
        /// Scenario file; the built-in two-bridge site when omitted.
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[arg(long, default_value = "sessions")]
        store: PathBuf,
        #[arg(long, default_value = "anonymous")]
        participant: String,
        /// Do not record sessions in the participant history.
        #[arg(long)]
        practice: bool,
        /// Send state to the cockpit every N frames.
        #[arg(long, default_value_t = 2)]
        decimation: u32,
        /// Simulated seconds per wall-clock second; 0 runs unpaced.
        #[arg(long, default_value_t = 1.0)]
        speedup: f64,
        /// Exit after the first session.
        #[arg(long)]
        once: bool,
    },
    /// Fly a pilot file headless.
    RunScripted {
        pilot: PathBuf,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Session seed; defaults to the scenario's.
        #[arg(long)]
        seed: Option<u64>,
        /// Record the session and its report in this store.
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long, default_value = "anonymous")]
        participant: String,
        #[arg(long)]
        practice: bool,
        /// Log path when no store is given.
        #[arg(long, default_value = "session.ndjson")]
        log: PathBuf,
    },
    /// Re-analyse a session log and check it against the recorded scores.
    Replay {
        log: PathBuf,
        /// Also fly the logged inputs again and compare the logs byte for byte.
        #[arg(long)]
        resimulate: bool,
    },
    /// Score a session log, optionally with different weights.
    Score {
        log: PathBuf,
        /// JSON file with a full set of scoring weights.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Write the report bundle for a participant's session.
    Report {
        participant: String,
        #[arg(long, default_value = "sessions")]
        store: PathBuf,
        /// Repetition number; the latest when omitted.
        #[arg(long)]
        session: Option<u32>,
        /// Completed questionnaire form (JSON).
        #[arg(long)]
        questionnaire: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Group statistics over a session store or a folder of score cards.
    GroupReport {
        dir: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check a scenario file.
    Validate { scenario: PathBuf },
}

fn scenario_or_default(path: Option<&Path>) -> Result<ScenarioSpec> {
    match path {
        Some(p) => Ok(load_scenario_file(p)?),
        None => Ok(two_bridges()),
    }
}

fn emit<T: Serialize>(format: Format, value: &T, text: impl FnOnce() -> String) -> Result<()> {
    let body = match format {
        Format::Json => serde_json::to_string_pretty(value)?,
        Format::Text => text(),
    };
    match writeln!(std::io::stdout().lock(), "{body}") {
        Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
        r => Ok(r?),
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".into(), |v| format!("{v:.3}"))
}

fn scorecard_text(c: &ScoreCard) -> String {
    let s = &c.standardized;
    let mut out = format!(
        "frames        {} ({:.2} s)\nconformity    {:.3}\nefficiency    {:.3}\nsafety        {:.3}\naccuracy      {}\nstandardized  C {:.1}  E {:.1}  S {:.1}  A {}",
        c.frames,
        c.duration,
        c.p_c(),
        c.efficiency,
        c.safety,
        fmt_opt(c.p_a()),
        s.conformity,
        s.efficiency,
        s.safety,
        s.accuracy.map_or_else(|| "n/a".into(), |a| format!("{a:.1}")),
    );
    for n in &c.notes {
        out.push_str(&format!("\nnote: {n}"));
    }
    out
}

#[derive(Serialize)]
struct ScriptedResult {
    #[serde(flatten)]
    outcome: OutcomeSummary,
    report: Option<PathBuf>,
}

#[derive(Serialize)]
struct ReplayResult {
    #[serde(flatten)]
    outcome: OutcomeSummary,
    matches_recorded: bool,
    resimulated_identical: Option<bool>,
}

fn run(cli: Cli) -> Result<ExitCode> {
    let format = cli.format;
    match cli.command {
        Command::Serve { addr, scenario, store, participant, practice, decimation, speedup, once } => {
            let spec = scenario_or_default(scenario.as_deref())?;
            let mut config = ServerConfig::new(spec, SessionStore::new(store));
            config.participant = participant;
            config.practice = practice;
            config.decimation = decimation;
            config.speedup = speedup;
            let listener = TcpListener::bind(&addr).with_context(|| format!("binding {addr}"))?;
            serve(&listener, &config, once)?;
        }
        Command::RunScripted { pilot, scenario, seed, store, participant, practice, log } => {
            let spec = scenario_or_default(scenario.as_deref())?;
            let pilot = PilotFile::load(&pilot)?;
            let store = store.map(SessionStore::new);
            let repetition = match &store {
                Some(s) if !practice => s.next_repetition(&participant)?,
                _ => 1,
            };
            let log_path = match &store {
                Some(s) => s.log_path(&participant, repetition, practice)?,
                None => log,
            };
            let mut config = SessionConfig::new(spec, log_path);
            if let Some(seed) = seed {
                config.seed = seed;
            }
            config.participant = participant.clone();
            config.repetition = repetition;
            config.practice = practice;
            let spec = if config.seed == config.scenario.seed { config.scenario.clone() } else { config.scenario.reseeded(config.seed)? };
            let mut source = pilot.into_source(&spec)?;
            let outcome = run_session(&config, source.as_mut(), &mut NoObserver)?;
            let mut report = None;
            if let Some(s) = &store {
                if !practice {
                    s.record_repetition(&participant, &outcome, &outcome.scorecard)?;
                }
                let out = practice.then(|| outcome.log_path.with_extension("report"));
                report = Some(write_session_report(s, &participant, repetition, &outcome.log_path, None, out.as_deref())?.0);
            }
            let result = ScriptedResult { outcome: OutcomeSummary::from(&outcome), report };
            emit(format, &result, || {
                let mut t = format!(
                    "end           {}\nlog           {}\n{}",
                    outcome.end.as_str(),
                    outcome.log_path.display(),
                    scorecard_text(&outcome.scorecard)
                );
                if let Some(r) = &result.report {
                    t.push_str(&format!("\nreport        {}", r.display()));
                }
                t
            })?;
        }
        Command::Replay { log, resimulate: again } => {
            let r = replay(&log)?;
            let matches = r.matches_recorded();
            let identical = if again {
                let dir = std::env::temp_dir().join(format!("bridgesim-replay-{}", std::process::id()));
                let out = dir.join("resimulated.ndjson");
                let o = resimulate(&r.log, &out)?;
                let same = fs::read(&log)? == fs::read(&o.log_path)?;
                let _ = fs::remove_dir_all(&dir);
                Some(same)
            } else {
                None
            };
            let result = ReplayResult {
                outcome: OutcomeSummary::from(&r.outcome),
                matches_recorded: matches,
                resimulated_identical: identical,
            };
            emit(format, &result, || {
                let mut t = format!(
                    "end           {}\n{}\nrecorded scores reproduced: {}",
                    r.outcome.end.as_str(),
                    scorecard_text(&r.outcome.scorecard),
                    if matches { "yes" } else { "no" }
                );
                if let Some(same) = identical {
                    t.push_str(&format!("\nre-simulated log identical: {}", if same { "yes" } else { "no" }));
                }
                t
            })?;
            if !matches || identical == Some(false) {
                return Ok(ExitCode::from(2));
            }
        }
        Command::Score { log, weights } => {
            let parsed = read_log(&log)?;
            let weights = match weights {
                Some(p) => serde_json::from_str::<ScoringWeights>(&fs::read_to_string(&p)?)
                    .with_context(|| format!("reading weights from {}", p.display()))?,
                None => parsed.header.scenario.job.weights,
            };
            let card = rescore(&parsed, weights);
            emit(format, &card, || scorecard_text(&card))?;
        }
        Command::Report { participant, store, session, questionnaire, out } => {
            let store = SessionStore::new(store);
            let q = match questionnaire {
                Some(p) => {
                    let v: serde_json::Value = serde_json::from_str(&fs::read_to_string(&p)?)
                        .with_context(|| format!("reading {}", p.display()))?;
                    Some(questionnaire_ingest(&v)?)
                }
                None => None,
            };
            let (dir, report) = participant_report(&store, &participant, session, q.as_ref(), out.as_deref())?;
            emit(format, &report, || format!("report        {}\n{}", dir.display(), scorecard_text(&report.scorecard)))?;
        }
        Command::GroupReport { dir, out } => {
            if !dir.is_dir() {
                bail!("{} is not a directory", dir.display());
            }
            let out = out.unwrap_or_else(|| dir.join("group-report"));
            let (path, report) = write_group_report(&dir, &out)?;
            emit(format, &report.stats, || {
                let mut t = format!("participants  {}\nreport        {}", report.stats.participants, path.display());
                for d in &report.stats.dimensions {
                    t.push_str(&format!(
                        "\n{:<13} min {:.2}  q1 {:.2}  median {:.2}  q3 {:.2}  max {:.2}",
                        d.dimension, d.min, d.q1, d.median, d.q3, d.max
                    ));
                }
                t
            })?;
        }
        Command::Validate { scenario } => {
            let spec = load_scenario_file(&scenario)?;
            #[derive(Serialize)]
            struct Valid<'a> {
                name: &'a str,
                tasks: usize,
                elements: usize,
                defects: usize,
                agents: usize,
            }
            let v = Valid {
                name: &spec.name,
                tasks: spec.tasks.len(),
                elements: spec.elements.len(),
                defects: spec.defects.len(),
                agents: spec.traffic.agents.len(),
            };
            emit(format, &v, || {
                format!(
                    "{}: valid ({} tasks, {} elements, {} defects, {} traffic agents)",
                    v.name, v.tasks, v.elements, v.defects, v.agents
                )
            })?;
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let default = if matches!(cli.command, Command::Serve { .. }) { "info" } else { "warn" };
    tracing_subscriber::fmt()
        .with_env_filter(EnvFilter::try_from_default_env().unwrap_or_else(|_| EnvFilter::new(default)))
        .with_writer(std::io::stderr)
        .init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
