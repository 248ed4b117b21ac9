//! Wire protocol between the session server and the cockpit.
//!
//! Every message is one line of JSON: `{"seq": n, "kind": "...", "body": {...}}`.
//! Sequence numbers start at 1 and strictly increase per direction. The
//! client opens with `hello` carrying the protocol version `v`.

use std::io::{BufRead, Write};

use bridgesim::assessment::Standardized;
use bridgesim::dynamics::ControlInput;
use bridgesim::geometry::Vec3;
use bridgesim::scenario::{AgentKind, ScenarioSpec};
use bridgesim::session::EndReason;
use bridgesim::telemetry::{FeedbackMessage, Hud};
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub const PROTOCOL_VERSION: u32 = 1;

/// Longest accepted line, bytes.
pub const MAX_LINE: usize = 1 << 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hello {
    pub v: u32,
    /// Free-form peer name.
    pub agent: String,
    /// Trainee flying this session; the server default when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSummary {
    pub id: u32,
    pub name: String,
    pub reference_points: Vec<Vec3>,
    pub corridor_threshold: f64,
    pub speed_limit: f64,
    pub light_required: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JobSummary {
    pub frame_rate: f64,
    pub v_max: f64,
    pub tau_min: f64,
    pub tau_max: f64,
    pub battery_capacity: f64,
    pub snapshot_range: f64,
    pub camera_fov: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSummary {
    pub name: String,
    pub ground_station: Vec3,
    pub tasks: Vec<TaskSummary>,
    pub job: JobSummary,
    pub defects: u32,
    /// Frames between consecutive `frame`/`hud` messages.
    pub decimation: u32,
}

impl ScenarioSummary {
    pub fn new(spec: &ScenarioSpec, decimation: u32) -> Self {
        let j = &spec.job;
        Self {
            name: spec.name.clone(),
            ground_station: spec.ground_station,
            tasks: spec
                .tasks
                .iter()
                .map(|t| TaskSummary {
                    id: t.id,
                    name: t.name.clone(),
                    reference_points: t.reference_points.clone(),
                    corridor_threshold: t.corridor_threshold,
                    speed_limit: t.speed_limit,
                    light_required: t.light_required,
                })
                .collect(),
            job: JobSummary {
                frame_rate: j.frame_rate,
                v_max: j.v_max,
                tau_min: j.tau_min,
                tau_max: j.tau_max,
                battery_capacity: j.battery_capacity,
                snapshot_range: j.snapshot_range,
                camera_fov: j.camera_fov,
            },
            defects: spec.defects.len() as u32,
            decimation,
        }
    }
}

/// Stick and button state as held by the trainee.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Control {
    pub fb: f64,
    pub rl: f64,
    pub ud: f64,
    pub rt: f64,
    #[serde(default)]
    pub light: bool,
    #[serde(default)]
    pub snapshot: bool,
}

impl From<Control> for ControlInput {
    fn from(c: Control) -> Self {
        ControlInput {
            fb: c.fb,
            rl: c.rl,
            ud: c.ud,
            rt: c.rt,
            light: c.light,
            snapshot: c.snapshot,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentPose {
    pub id: String,
    pub kind: AgentKind,
    pub position: Vec3,
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub i: u64,
    /// Seconds since takeoff.
    pub t: f64,
    pub position: Vec3,
    pub velocity: Vec3,
    pub yaw: f64,
    pub task: Option<u32>,
    pub l_star: Option<f64>,
    pub speeding: bool,
    pub min_clearance: f64,
    pub agents: Vec<AgentPose>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackBatch {
    pub frame: u64,
    pub messages: Vec<FeedbackMessage>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HudUpdate {
    pub frame: u64,
    pub hud: Hud,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEnd {
    pub reason: EndReason,
    pub frames: u64,
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportReady {
    /// Directory holding `report.json` and the chart payloads.
    pub path: String,
    pub standardized: Standardized,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub code: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "body", rename_all = "snake_case")]
pub enum Body {
    Hello(Hello),
    ScenarioSummary(ScenarioSummary),
    Control(Control),
    Frame(FrameState),
    Feedback(FeedbackBatch),
    Hud(HudUpdate),
    SessionEnd(SessionEnd),
    ReportReady(ReportReady),
    /// Post-session self-assessment form, as filled in by the trainee.
    Questionnaire(serde_json::Value),
    Error(ErrorBody),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    ToServer,
    ToClient,
    Both,
}

impl Body {
    pub fn kind(&self) -> &'static str {
        match self {
            Body::Hello(_) => "hello",
            Body::ScenarioSummary(_) => "scenario_summary",
            Body::Control(_) => "control",
            Body::Frame(_) => "frame",
            Body::Feedback(_) => "feedback",
            Body::Hud(_) => "hud",
            Body::SessionEnd(_) => "session_end",
            Body::ReportReady(_) => "report_ready",
            Body::Questionnaire(_) => "questionnaire",
            Body::Error(_) => "error",
        }
    }

    pub fn direction(&self) -> Direction {
        match self {
            Body::Hello(_) | Body::Error(_) => Direction::Both,
            Body::Control(_) | Body::Questionnaire(_) => Direction::ToServer,
            _ => Direction::ToClient,
        }
    }

    pub fn error(code: &str, message: impl Into<String>) -> Self {
        Body::Error(ErrorBody {
            code: code.into(),
            message: message.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WireMessage {
    pub seq: u64,
    #[serde(flatten)]
    pub body: Body,
}

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("malformed message: {0}")]
    Malformed(String),
    #[error("`{kind}` may not be sent in this direction")]
    WrongDirection { kind: &'static str },
    #[error("sequence number {found} does not follow {last}")]
    Sequence { last: u64, found: u64 },
    #[error("unsupported protocol version {0}")]
    Version(u32),
    #[error("expected `{expected}`, got `{found}`")]
    Unexpected { expected: &'static str, found: &'static str },
    #[error("message exceeds {MAX_LINE} bytes")]
    TooLong,
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ProtocolError {
    /// Short machine-readable code sent in `error` messages.
    pub fn code(&self) -> &'static str {
        match self {
            ProtocolError::Malformed(_) | ProtocolError::TooLong => "malformed",
            ProtocolError::WrongDirection { .. } => "wrong_direction",
            ProtocolError::Sequence { .. } => "sequence",
            ProtocolError::Version(_) => "version",
            ProtocolError::Unexpected { .. } => "unexpected_kind",
            ProtocolError::Io(_) => "io",
        }
    }
}

pub fn encode(msg: &WireMessage) -> String {
    let mut s = serde_json::to_string(msg).expect("wire messages always serialize");
    s.push('\n');
    s
}

pub fn decode(line: &str) -> Result<WireMessage, ProtocolError> {
    serde_json::from_str(line.trim_end()).map_err(|e| ProtocolError::Malformed(e.to_string()))
}

/// Reads messages from one peer and enforces direction and ordering.
pub struct MessageReader<R> {
    inner: R,
    accept: Direction,
    last_seq: u64,
    line: String,
}

impl<R: BufRead> MessageReader<R> {
    /// `accept` is the direction of travel this reader sits on.
    pub fn new(inner: R, accept: Direction) -> Self {
        Self {
            inner,
            accept,
            last_seq: 0,
            line: String::new(),
        }
    }

    /// Next message, or `None` at end of stream.
    pub fn next_message(&mut self) -> Result<Option<WireMessage>, ProtocolError> {
        loop {
            self.line.clear();
            let n = std::io::Read::take(&mut self.inner, MAX_LINE as u64 + 1).read_line(&mut self.line)?;
            if n == 0 {
                return Ok(None);
            }
            if n > MAX_LINE {
                return Err(ProtocolError::TooLong);
            }
            if self.line.trim().is_empty() {
                continue;
            }
            let msg = decode(&self.line)?;
            let d = msg.body.direction();
            if d != Direction::Both && d != self.accept {
                return Err(ProtocolError::WrongDirection { kind: msg.body.kind() });
            }
            if msg.seq <= self.last_seq {
                return Err(ProtocolError::Sequence {
                    last: self.last_seq,
                    found: msg.seq,
                });
            }
            self.last_seq = msg.seq;
            return Ok(Some(msg));
        }
    }
}

/// Numbers outgoing messages.
pub struct MessageWriter<W> {
    inner: W,
    seq: u64,
}

impl<W: Write> MessageWriter<W> {
    pub fn new(inner: W) -> Self {
        Self { inner, seq: 0 }
    }

    pub fn send(&mut self, body: Body) -> std::io::Result<u64> {
        self.seq += 1;
        let msg = WireMessage { seq: self.seq, body };
        self.inner.write_all(encode(&msg).as_bytes())?;
        self.inner.flush()?;
        Ok(self.seq)
    }

    pub fn into_inner(self) -> W {
        self.inner
    }
}
