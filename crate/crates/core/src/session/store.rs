use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{EndReason, SessionOutcome};
use crate::assessment::ScoreCard;
use crate::error::SessionError;

const HISTORY_FILE: &str = "history.json";

/// One recorded training repetition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HistoryEntry {
    pub repetition: u32,
    pub log: PathBuf,
    pub end_reason: EndReason,
    pub frames: u64,
    pub scorecard: ScoreCard,
}

/// Per-participant session logs and training history under one root:
/// `<root>/<participant>/session-NNN.ndjson` plus `history.json`.
#[derive(Debug, Clone)]
pub struct SessionStore {
    root: PathBuf,
}

impl SessionStore {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn participant_dir(&self, participant: &str) -> Result<PathBuf, SessionError> {
        let ok = !participant.is_empty()
            && participant.chars().all(|c| c.is_ascii_alphanumeric() || c == '-' || c == '_');
        if !ok {
            return Err(SessionError::Pilot(format!("invalid participant id `{participant}`")));
        }
        Ok(self.root.join(participant))
    }

    pub fn log_path(&self, participant: &str, repetition: u32, practice: bool) -> Result<PathBuf, SessionError> {
        let stem = if practice { "practice" } else { "session" };
        Ok(self.participant_dir(participant)?.join(format!("{stem}-{repetition:03}.ndjson")))
    }

    pub fn report_dir(&self, participant: &str, repetition: u32) -> Result<PathBuf, SessionError> {
        Ok(self.participant_dir(participant)?.join(format!("report-{repetition:03}")))
    }

    /// Recorded repetitions, oldest first; empty for a new participant.
    pub fn history(&self, participant: &str) -> Result<Vec<HistoryEntry>, SessionError> {
        let path = self.participant_dir(participant)?.join(HISTORY_FILE);
        match fs::read_to_string(&path) {
            Ok(text) => Ok(serde_json::from_str(&text)?),
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(Vec::new()),
            Err(source) => Err(SessionError::Io { path, source }),
        }
    }

    pub fn next_repetition(&self, participant: &str) -> Result<u32, SessionError> {
        Ok(self.history(participant)?.last().map_or(1, |e| e.repetition + 1))
    }

    /// Append a finished session to the participant's history.
    pub fn record_repetition(
        &self,
        participant: &str,
        outcome: &SessionOutcome,
        scorecard: &ScoreCard,
    ) -> Result<HistoryEntry, SessionError> {
        let mut history = self.history(participant)?;
        let entry = HistoryEntry {
            repetition: history.last().map_or(1, |e| e.repetition + 1),
            log: outcome.log_path.clone(),
            end_reason: outcome.end,
            frames: outcome.frames,
            scorecard: scorecard.clone(),
        };
        history.push(entry.clone());
        let dir = self.participant_dir(participant)?;
        let path = dir.join(HISTORY_FILE);
        let io = |source| SessionError::Io { path: path.clone(), source };
        fs::create_dir_all(&dir).map_err(io)?;
        fs::write(&path, serde_json::to_vec_pretty(&history)?).map_err(io)?;
        Ok(entry)
    }

    /// Participants with a history file, sorted.
    pub fn participants(&self) -> Result<Vec<String>, SessionError> {
        let rd = match fs::read_dir(&self.root) {
            Ok(rd) => rd,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(Vec::new()),
            Err(source) => return Err(SessionError::Io { path: self.root.clone(), source }),
        };
        let mut out: Vec<String> = rd
            .filter_map(Result::ok)
            .filter(|e| e.path().join(HISTORY_FILE).is_file())
            .filter_map(|e| e.file_name().into_string().ok())
            .collect();
        out.sort();
        Ok(out)
    }
}
