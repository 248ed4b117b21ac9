//! Newline-delimited JSON session logs.
//!
//! A log is a header record, one record per frame with the frame's events
//! interleaved after it, an end record and a summary record. Records carry
//! no wall-clock data, so equal sessions produce byte-identical logs.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::sim::EndReason;
use crate::assessment::ScoreCard;
use crate::error::{LogError, SessionError};
use crate::scenario::ScenarioSpec;
use crate::telemetry::{CrashRecord, EventLedger, FeedbackMessage, FrameRecord, SnapshotRecord};

/// Format version written into every header.
pub const LOG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SessionMode {
    Interactive,
    Scripted,
    Replay,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogHeader {
    pub version: u32,
    pub participant: String,
    pub repetition: u32,
    pub mode: SessionMode,
    pub practice: bool,
    /// The fully resolved scenario the session ran in.
    pub scenario: ScenarioSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogEnd {
    pub reason: EndReason,
    pub frames: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogSummary {
    pub ledger: EventLedger,
    pub scorecard: ScoreCard,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum LogRecord {
    Header(Box<LogHeader>),
    Frame(FrameRecord),
    Snapshot(SnapshotRecord),
    Crash(CrashRecord),
    Message(FeedbackMessage),
    End(LogEnd),
    Summary(Box<LogSummary>),
}

/// Streams records to a file, one JSON object per line.
pub struct LogWriter {
    out: BufWriter<File>,
    path: PathBuf,
}

impl LogWriter {
    pub fn create(path: &Path) -> Result<Self, SessionError> {
        let io = |source| SessionError::Io { path: path.to_path_buf(), source };
        if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(dir).map_err(io)?;
        }
        let file = File::create(path).map_err(io)?;
        Ok(Self {
            out: BufWriter::new(file),
            path: path.to_path_buf(),
        })
    }

    pub fn write(&mut self, record: &LogRecord) -> Result<(), SessionError> {
        serde_json::to_writer(&mut self.out, record)?;
        self.out.write_all(b"\n").map_err(|source| SessionError::Io {
            path: self.path.clone(),
            source,
        })
    }

    pub fn finish(mut self) -> Result<PathBuf, SessionError> {
        self.out.flush().map_err(|source| SessionError::Io {
            path: self.path.clone(),
            source,
        })?;
        Ok(self.path)
    }
}

/// A parsed log, split by record type.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionLog {
    pub header: LogHeader,
    pub frames: Vec<FrameRecord>,
    pub snapshots: Vec<SnapshotRecord>,
    pub crashes: Vec<CrashRecord>,
    pub messages: Vec<FeedbackMessage>,
    pub end: LogEnd,
    pub summary: Option<LogSummary>,
}

pub fn read_log(path: &Path) -> Result<SessionLog, LogError> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    parse_log(&bytes)
}

/// Parse log bytes. A final line without its newline, or a log without an
/// end record, is reported as truncation at the byte where data runs out.
pub fn parse_log(bytes: &[u8]) -> Result<SessionLog, LogError> {
    let mut offset = 0usize;
    let mut header = None;
    let mut frames = Vec::new();
    let mut snapshots = Vec::new();
    let mut crashes = Vec::new();
    let mut messages = Vec::new();
    let mut end = None;
    let mut summary = None;
    while offset < bytes.len() {
        let at = offset as u64;
        let Some(len) = bytes[offset..].iter().position(|&b| b == b'\n') else {
            return Err(LogError::Truncated { offset: at });
        };
        let line = &bytes[offset..offset + len];
        offset += len + 1;
        if line.iter().all(u8::is_ascii_whitespace) {
            continue;
        }
        let malformed = |message: String| LogError::Malformed { offset: at, message };
        if header.is_none() {
            let value: serde_json::Value = serde_json::from_slice(line).map_err(|e| malformed(e.to_string()))?;
            if value.get("type").and_then(|t| t.as_str()) != Some("header") {
                return Err(malformed("first record must be the header".into()));
            }
            let found = value.get("version").and_then(|v| v.as_u64()).unwrap_or(0) as u32;
            if found != LOG_VERSION {
                return Err(LogError::VersionMismatch { found, expected: LOG_VERSION });
            }
        }
        let record: LogRecord = serde_json::from_slice(line).map_err(|e| malformed(e.to_string()))?;
        if end.is_some() && !matches!(record, LogRecord::Summary(_)) {
            return Err(malformed("record after end".into()));
        }
        match record {
            LogRecord::Header(h) if header.is_none() => header = Some(*h),
            LogRecord::Header(_) => return Err(malformed("duplicate header".into())),
            LogRecord::Frame(f) => {
                if f.index != frames.len() as u64 {
                    return Err(malformed(format!("expected frame {}, found {}", frames.len(), f.index)));
                }
                frames.push(f);
            }
            LogRecord::Snapshot(s) => snapshots.push(s),
            LogRecord::Crash(c) => crashes.push(c),
            LogRecord::Message(m) => messages.push(m),
            LogRecord::End(e) => end = Some(e),
            LogRecord::Summary(s) if end.is_some() && summary.is_none() => summary = Some(*s),
            LogRecord::Summary(_) => return Err(malformed("summary must follow the end record once".into())),
        }
    }
    let Some(header) = header else {
        return Err(LogError::Truncated { offset: 0 });
    };
    let Some(end) = end else {
        return Err(LogError::Truncated { offset: bytes.len() as u64 });
    };
    if end.frames != frames.len() as u64 {
        return Err(LogError::Malformed {
            offset: bytes.len() as u64,
            message: format!("end record claims {} frames, log has {}", end.frames, frames.len()),
        });
    }
    Ok(SessionLog {
        header,
        frames,
        snapshots,
        crashes,
        messages,
        end,
        summary,
    })
}
