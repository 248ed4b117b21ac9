//! Session orchestration: the fixed-rate loop from pilot input through
//! dynamics and telemetry to the on-disk log, plus replay and history.

mod log;
mod pilot;
mod sim;
mod store;

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::assessment::{score_session, ScoreCard};
use crate::error::SessionError;
use crate::scenario::{ScenarioSpec, ScoringWeights};
use crate::telemetry::{analyze_frames, Analysis, FrameOutput, TelemetryEvent, TelemetryPipeline};

pub use log::{
    parse_log, read_log, LogEnd, LogHeader, LogRecord, LogSummary, LogWriter, SessionLog, SessionMode, LOG_VERSION,
};
pub use pilot::{
    FrameInputs, Heading, InputContext, InputSource, Leg, PilotFile, Route, RoutePilot, ScriptedPilot, TimelineEntry,
};
pub use sim::{
    EdgeDetector, EndReason, SimFrame, Simulator, LANDING_ALTITUDE, LANDING_FRAMES, LANDING_SPEED, PAD_RADIUS,
};
pub use store::{HistoryEntry, SessionStore};

#[derive(Debug, Clone)]
pub struct SessionConfig {
    pub scenario: ScenarioSpec,
    pub mode: SessionMode,
    /// Session seed; the scenario's seeded parts are re-resolved when it
    /// differs from the scenario's own seed.
    pub seed: u64,
    pub participant: String,
    pub repetition: u32,
    /// Practice sessions are not recorded in the participant history.
    pub practice: bool,
    /// Where the log is written (or read, in replay mode).
    pub log_path: PathBuf,
}

impl SessionConfig {
    pub fn new(scenario: ScenarioSpec, log_path: impl Into<PathBuf>) -> Self {
        Self {
            seed: scenario.seed,
            scenario,
            mode: SessionMode::Scripted,
            participant: "anonymous".into(),
            repetition: 1,
            practice: false,
            log_path: log_path.into(),
        }
    }

    pub fn validate(&self) -> Result<(), SessionError> {
        if self.mode == SessionMode::Replay && !self.log_path.is_file() {
            return Err(SessionError::MissingLog);
        }
        Ok(())
    }

    fn resolved_scenario(&self) -> Result<ScenarioSpec, SessionError> {
        if self.seed == self.scenario.seed {
            self.scenario.validate()?;
            Ok(self.scenario.clone())
        } else {
            Ok(self.scenario.reseeded(self.seed)?)
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SessionOutcome {
    pub end: EndReason,
    /// Frames simulated after takeoff.
    pub frames: u64,
    pub log_path: PathBuf,
    pub analysis: Analysis,
    pub scorecard: ScoreCard,
}

/// Hooks for watching a session as it runs.
pub trait SessionObserver {
    fn on_start(&mut self, _header: &LogHeader) {}
    fn on_frame(&mut self, _sim: &Simulator, _frame: &SimFrame, _output: &FrameOutput) {}
    fn on_end(&mut self, _outcome: &SessionOutcome) {}
}

/// Observer that ignores everything.
pub struct NoObserver;

impl SessionObserver for NoObserver {}

/// Run one session to completion and write its log.
///
/// The source is sampled once per tick. Ticks before takeoff produce no
/// frames; an exhausted source aborts the session.
pub fn run_session(
    config: &SessionConfig,
    source: &mut dyn InputSource,
    observer: &mut dyn SessionObserver,
) -> Result<SessionOutcome, SessionError> {
    if config.mode == SessionMode::Replay {
        config.validate()?;
        return replay(&config.log_path).map(|r| r.outcome);
    }
    let scenario = config.resolved_scenario()?;
    let header = LogHeader {
        version: LOG_VERSION,
        participant: config.participant.clone(),
        repetition: config.repetition,
        mode: config.mode,
        practice: config.practice,
        scenario,
    };
    let mut log = LogWriter::create(&config.log_path)?;
    log.write(&LogRecord::Header(Box::new(header.clone())))?;
    observer.on_start(&header);
    let scenario = header.scenario;
    let mut pipeline = TelemetryPipeline::new(&scenario.tasks, &scenario.job);
    let mut sim = Simulator::new(scenario);
    let mut tick = 0u64;
    loop {
        let ctx = InputContext {
            tick,
            started: sim.started(),
            state: sim.state(),
        };
        let Some(input) = source.next_input(&ctx) else {
            sim.abort();
            break;
        };
        tick += 1;
        let Some(frame) = sim.tick(input) else { continue };
        let out = pipeline.push(frame.index, frame.input, &frame.state, frame.collision.clone(), frame.visible.clone());
        log.write(&LogRecord::Frame(out.record.clone()))?;
        for e in &out.events {
            log.write(&match e {
                TelemetryEvent::Snapshot(s) => LogRecord::Snapshot(s.clone()),
                TelemetryEvent::Crash(c) => LogRecord::Crash(c.clone()),
                TelemetryEvent::Message(m) => LogRecord::Message(m.clone()),
            })?;
        }
        observer.on_frame(&sim, &frame, &out);
        if frame.end.is_some() {
            break;
        }
    }
    let end = sim.ended().unwrap_or(EndReason::Aborted);
    let frames = sim.frames();
    let analysis = pipeline.finalize(end == EndReason::BatteryExhausted);
    let scorecard = score_session(&analysis, &sim.scenario().job, sim.scenario().defects.len());
    log.write(&LogRecord::End(LogEnd { reason: end, frames }))?;
    log.write(&LogRecord::Summary(Box::new(LogSummary {
        ledger: analysis.ledger.clone(),
        scorecard: scorecard.clone(),
    })))?;
    let outcome = SessionOutcome {
        end,
        frames,
        log_path: log.finish()?,
        analysis,
        scorecard,
    };
    observer.on_end(&outcome);
    Ok(outcome)
}

/// Result of re-analysing a log.
#[derive(Debug, Clone, PartialEq)]
pub struct Replay {
    pub outcome: SessionOutcome,
    pub log: SessionLog,
}

impl Replay {
    /// Whether the recomputed ledger and score card equal the ones
    /// recorded when the session ran.
    pub fn matches_recorded(&self) -> bool {
        self.log.summary.as_ref().is_some_and(|s| {
            s.ledger == self.outcome.analysis.ledger && s.scorecard == self.outcome.scorecard
        })
    }
}

fn analyze_log(log: &SessionLog, weights: Option<ScoringWeights>) -> (Analysis, ScoreCard) {
    let scenario = &log.header.scenario;
    let mut job = scenario.job.clone();
    if let Some(w) = weights {
        job.weights = w;
    }
    let analysis = analyze_frames(
        &scenario.tasks,
        &job,
        &log.frames,
        &log.snapshots,
        log.end.reason == EndReason::BatteryExhausted,
    );
    let card = score_session(&analysis, &job, scenario.defects.len());
    (analysis, card)
}

/// Recompute telemetry and scores from a log's frames.
pub fn replay(path: &Path) -> Result<Replay, SessionError> {
    if !path.is_file() {
        return Err(SessionError::MissingLog);
    }
    let log = read_log(path)?;
    let (analysis, scorecard) = analyze_log(&log, None);
    Ok(Replay {
        outcome: SessionOutcome {
            end: log.end.reason,
            frames: log.end.frames,
            log_path: path.to_path_buf(),
            analysis,
            scorecard,
        },
        log,
    })
}

/// Score a logged session under different weights.
pub fn rescore(log: &SessionLog, weights: ScoringWeights) -> ScoreCard {
    analyze_log(log, Some(weights)).1
}

/// Fly the logged inputs again in the logged scenario, writing a fresh log
/// to `out`. For an intact log the result is byte-identical.
pub fn resimulate(log: &SessionLog, out: &Path) -> Result<SessionOutcome, SessionError> {
    let h = &log.header;
    let config = SessionConfig {
        scenario: h.scenario.clone(),
        mode: h.mode,
        seed: h.scenario.seed,
        participant: h.participant.clone(),
        repetition: h.repetition,
        practice: h.practice,
        log_path: out.to_path_buf(),
    };
    let mut inputs = FrameInputs::new(log.frames.iter().map(|f| f.input).collect());
    let outcome = run_session(&config, &mut inputs, &mut NoObserver)?;
    if outcome.end != log.end.reason || outcome.frames != log.end.frames {
        return Err(SessionError::Diverged(format!(
            "logged {} after {} frames, re-simulated {} after {}",
            log.end.reason.as_str(),
            log.end.frames,
            outcome.end.as_str(),
            outcome.frames
        )));
    }
    Ok(outcome)
}

/// Serializable digest of an outcome for CLIs and the wire protocol.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutcomeSummary {
    pub end_reason: EndReason,
    pub frames: u64,
    pub duration: f64,
    pub log: PathBuf,
    pub scorecard: ScoreCard,
}

impl From<&SessionOutcome> for OutcomeSummary {
    fn from(o: &SessionOutcome) -> Self {
        Self {
            end_reason: o.end,
            frames: o.frames,
            duration: o.scorecard.duration,
            log: o.log_path.clone(),
            scorecard: o.scorecard.clone(),
        }
    }
}
