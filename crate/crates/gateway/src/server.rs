//! Interactive session server: one cockpit connection flies one session.

use std::io::{BufReader, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::path::PathBuf;
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering};
use std::sync::mpsc;
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use anyhow::{Context, Result};
use bridgesim::assessment::questionnaire_ingest;
use bridgesim::dynamics::ControlInput;
use bridgesim::scenario::ScenarioSpec;
use bridgesim::session::{
    run_session, InputContext, InputSource, OutcomeSummary, SessionConfig, SessionMode, SessionObserver,
    SessionStore, SimFrame, Simulator,
};
use bridgesim::telemetry::{FrameOutput, TelemetryEvent};
use crossbeam_queue::ArrayQueue;
use tracing::{debug, info, warn};

use crate::protocol::{
    AgentPose, Body, Control, Direction, FeedbackBatch, FrameState, Hello, HudUpdate, MessageReader, MessageWriter,
    ProtocolError, ReportReady, ScenarioSummary, SessionEnd, PROTOCOL_VERSION,
};
use crate::reporting::{save_questionnaire, write_session_report};

/// Environment variable naming the default listen address.
pub const ADDR_ENV: &str = "BRIDGESIM_ADDR";
pub const DEFAULT_ADDR: &str = "127.0.0.1:7878";

#[derive(Debug, Clone)]
pub struct ServerConfig {
    pub scenario: ScenarioSpec,
    pub store: SessionStore,
    /// Used when the cockpit's hello names no participant.
    pub participant: String,
    pub practice: bool,
    /// Send frame and HUD state every this many frames.
    pub decimation: u32,
    /// Simulated seconds per wall-clock second; 0 runs as fast as possible.
    pub speedup: f64,
    /// Simulated seconds flown with neutral input after the cockpit goes
    /// away, before the session is aborted.
    pub disconnect_grace: f64,
    pub handshake_timeout: Duration,
    /// How long to wait for a questionnaire after the report is ready.
    pub questionnaire_timeout: Duration,
    /// Capacity of the outgoing state queue; the oldest entry is dropped
    /// when it is full.
    pub queue_capacity: usize,
}

impl ServerConfig {
    pub fn new(scenario: ScenarioSpec, store: SessionStore) -> Self {
        Self {
            scenario,
            store,
            participant: "anonymous".into(),
            practice: false,
            decimation: 2,
            speedup: 1.0,
            disconnect_grace: 5.0,
            handshake_timeout: Duration::from_secs(10),
            questionnaire_timeout: Duration::from_secs(600),
            queue_capacity: 256,
        }
    }
}

/// What happened on one connection.
#[derive(Debug, Clone, Default)]
pub struct ConnectionSummary {
    pub participant: String,
    pub outcome: Option<OutcomeSummary>,
    pub report_dir: Option<PathBuf>,
    /// Axis values outside [-1, 1] that were clamped.
    pub clamped_axes: u64,
    /// Outgoing messages discarded because the client fell behind.
    pub dropped_messages: u64,
    /// Frames simulated when the client was found gone.
    pub disconnected_at: Option<u64>,
    pub questionnaire: bool,
}

#[derive(Default)]
struct Shared {
    disconnected: AtomicBool,
    clamped: AtomicU64,
    dropped: AtomicU64,
}

/// Accept connections until the listener fails, or after one session when
/// `once` is set.
pub fn serve(listener: &TcpListener, config: &ServerConfig, once: bool) -> Result<()> {
    info!(addr = %listener.local_addr()?, "listening");
    for stream in listener.incoming() {
        let stream = stream.context("accepting connection")?;
        let peer = stream.peer_addr().ok();
        match handle_connection(stream, config) {
            Ok(s) => info!(?peer, participant = %s.participant, end = ?s.outcome.as_ref().map(|o| o.end_reason), "session finished"),
            Err(e) => warn!(?peer, "connection failed: {e:#}"),
        }
        if once {
            break;
        }
    }
    Ok(())
}

fn send_error(w: &mut MessageWriter<TcpStream>, e: &ProtocolError) {
    let _ = w.send(Body::error(e.code(), e.to_string()));
}

fn handshake(
    reader: &mut MessageReader<BufReader<TcpStream>>,
    writer: &mut MessageWriter<TcpStream>,
    config: &ServerConfig,
) -> Result<Hello> {
    let hello = match reader.next_message() {
        Ok(Some(m)) => match m.body {
            Body::Hello(h) if h.v == PROTOCOL_VERSION => Ok(h),
            Body::Hello(h) => Err(ProtocolError::Version(h.v)),
            other => Err(ProtocolError::Unexpected { expected: "hello", found: other.kind() }),
        },
        Ok(None) => anyhow::bail!("client closed before hello"),
        Err(e) => Err(e),
    };
    let hello = hello.inspect_err(|e| send_error(writer, e))?;
    writer.send(Body::Hello(Hello {
        v: PROTOCOL_VERSION,
        agent: format!("bridgesim {}", env!("CARGO_PKG_VERSION")),
        participant: None,
    }))?;
    writer.send(Body::ScenarioSummary(ScenarioSummary::new(&config.scenario, config.decimation.max(1))))?;
    Ok(hello)
}

/// Fly one session for a connected cockpit, then report.
pub fn handle_connection(stream: TcpStream, config: &ServerConfig) -> Result<ConnectionSummary> {
    stream.set_nodelay(true).ok();
    stream.set_read_timeout(Some(config.handshake_timeout))?;
    let mut reader = MessageReader::new(BufReader::new(stream.try_clone()?), Direction::ToServer);
    let mut writer = MessageWriter::new(stream.try_clone()?);
    let hello = handshake(&mut reader, &mut writer, config)?;
    stream.set_read_timeout(None)?;
    let participant = hello.participant.unwrap_or_else(|| config.participant.clone());
    let store = &config.store;
    store.participant_dir(&participant)?;

    let shared = Arc::new(Shared::default());
    let inbox = Arc::new(ArrayQueue::<Control>::new(64));
    let outbox = Arc::new(ArrayQueue::<Body>::new(config.queue_capacity.max(8)));
    let (forms_tx, forms_rx) = mpsc::channel();
    let done = Arc::new(AtomicBool::new(false));

    let reader_thread = {
        let (shared, inbox, outbox) = (shared.clone(), inbox.clone(), outbox.clone());
        thread::spawn(move || {
            loop {
                match reader.next_message() {
                    Ok(Some(m)) => match m.body {
                        Body::Control(c) => {
                            let input = ControlInput::from(c);
                            let n = input.out_of_range_axes() as u64;
                            if n > 0 {
                                shared.clamped.fetch_add(n, Ordering::Relaxed);
                                warn!(?c, "control axis out of range, clamped");
                            }
                            let k = input.clamped();
                            let c = Control { fb: k.fb, rl: k.rl, ud: k.ud, rt: k.rt, ..c };
                            inbox.force_push(c);
                        }
                        Body::Questionnaire(v) => {
                            let _ = forms_tx.send(v);
                        }
                        other => {
                            let e = ProtocolError::Unexpected { expected: "control", found: other.kind() };
                            outbox.force_push(Body::error(e.code(), e.to_string()));
                            break;
                        }
                    },
                    Ok(None) => break,
                    Err(ProtocolError::Io(e)) => {
                        debug!("read failed: {e}");
                        break;
                    }
                    Err(e) => {
                        outbox.force_push(Body::error(e.code(), e.to_string()));
                        break;
                    }
                }
            }
            shared.disconnected.store(true, Ordering::SeqCst);
        })
    };

    let writer_thread = {
        let (shared, outbox, done, stream) = (shared.clone(), outbox.clone(), done.clone(), stream.try_clone()?);
        thread::spawn(move || {
            let mut broken = false;
            loop {
                match outbox.pop() {
                    Some(body) if !broken => {
                        let error = matches!(body, Body::Error(_));
                        if writer.send(body).is_err() {
                            broken = true;
                            shared.disconnected.store(true, Ordering::SeqCst);
                        } else if error {
                            // a protocol violation closes the connection
                            let _ = writer.into_inner().flush();
                            let _ = stream.shutdown(Shutdown::Both);
                            return;
                        }
                    }
                    Some(_) => {}
                    None if done.load(Ordering::SeqCst) => return,
                    None => thread::sleep(Duration::from_millis(1)),
                }
            }
        })
    };

    let repetition = if config.practice { practice_number(store, &participant)? } else { store.next_repetition(&participant)? };
    let mut session = SessionConfig::new(config.scenario.clone(), store.log_path(&participant, repetition, config.practice)?);
    session.mode = SessionMode::Interactive;
    session.participant = participant.clone();
    session.repetition = repetition;
    session.practice = config.practice;

    let mut source = CockpitSource::new(inbox, shared.clone(), &config.scenario, config.speedup, config.disconnect_grace);
    let mut observer = CockpitObserver {
        outbox: outbox.clone(),
        shared: shared.clone(),
        decimation: u64::from(config.decimation.max(1)),
    };
    let outcome = run_session(&session, &mut source, &mut observer)?;
    let push = |b: Body| {
        if outbox.force_push(b).is_some() {
            shared.dropped.fetch_add(1, Ordering::Relaxed);
        }
    };
    push(Body::SessionEnd(SessionEnd {
        reason: outcome.end,
        frames: outcome.frames,
        duration: outcome.scorecard.duration,
    }));
    if !config.practice {
        store.record_repetition(&participant, &outcome, &outcome.scorecard)?;
    }
    let out_dir = config.practice.then(|| outcome.log_path.with_extension("report"));
    let (dir, report) = write_session_report(store, &participant, repetition, &outcome.log_path, None, out_dir.as_deref())?;
    push(Body::ReportReady(ReportReady {
        path: dir.display().to_string(),
        standardized: report.scorecard.standardized,
    }));

    let mut summary = ConnectionSummary {
        participant: participant.clone(),
        outcome: Some(OutcomeSummary::from(&outcome)),
        report_dir: Some(dir.clone()),
        disconnected_at: source.disconnected_at,
        ..Default::default()
    };

    // the cockpit may now submit the self-assessment form
    let deadline = Instant::now() + config.questionnaire_timeout;
    while !shared.disconnected.load(Ordering::SeqCst) && Instant::now() < deadline {
        match forms_rx.recv_timeout(Duration::from_millis(20)) {
            Ok(form) => {
                match questionnaire_ingest(&form) {
                    Ok(q) => {
                        save_questionnaire(store, &participant, repetition, &q)?;
                        let (dir, report) =
                            write_session_report(store, &participant, repetition, &outcome.log_path, Some(&q), out_dir.as_deref())?;
                        summary.questionnaire = true;
                        push(Body::ReportReady(ReportReady {
                            path: dir.display().to_string(),
                            standardized: report.scorecard.standardized,
                        }));
                    }
                    Err(e) => push(Body::error("questionnaire", e.to_string())),
                }
                break;
            }
            Err(mpsc::RecvTimeoutError::Timeout) => {}
            Err(mpsc::RecvTimeoutError::Disconnected) => break,
        }
    }

    done.store(true, Ordering::SeqCst);
    let _ = writer_thread.join();
    let _ = stream.shutdown(Shutdown::Both);
    let _ = reader_thread.join();
    summary.clamped_axes = shared.clamped.load(Ordering::Relaxed);
    summary.dropped_messages = shared.dropped.load(Ordering::Relaxed);
    Ok(summary)
}

fn practice_number(store: &SessionStore, participant: &str) -> Result<u32> {
    let mut n = 1;
    while store.log_path(participant, n, true)?.exists() {
        n += 1;
    }
    Ok(n)
}

/// Samples the latest cockpit control once per tick.
struct CockpitSource {
    inbox: Arc<ArrayQueue<Control>>,
    shared: Arc<Shared>,
    held: Control,
    dt: f64,
    speedup: f64,
    started_at: Option<Instant>,
    grace_ticks: u64,
    since_disconnect: u64,
    disconnected_at: Option<u64>,
}

impl CockpitSource {
    fn new(inbox: Arc<ArrayQueue<Control>>, shared: Arc<Shared>, spec: &ScenarioSpec, speedup: f64, grace: f64) -> Self {
        Self {
            inbox,
            shared,
            held: Control::default(),
            dt: spec.job.dt(),
            speedup,
            started_at: None,
            grace_ticks: (grace * spec.job.frame_rate).round() as u64,
            since_disconnect: 0,
            disconnected_at: None,
        }
    }

    fn pace(&mut self, tick: u64) {
        if self.speedup <= 0.0 {
            return;
        }
        let start = *self.started_at.get_or_insert_with(Instant::now);
        let due = start + Duration::from_secs_f64(tick as f64 * self.dt / self.speedup);
        let now = Instant::now();
        if due > now {
            thread::sleep(due - now);
        }
    }
}

impl InputSource for CockpitSource {
    fn next_input(&mut self, ctx: &InputContext<'_>) -> Option<ControlInput> {
        self.pace(ctx.tick);
        if self.shared.disconnected.load(Ordering::SeqCst) {
            let frames = (ctx.state.flight_time / self.dt).round() as u64;
            self.disconnected_at.get_or_insert(frames);
            if self.since_disconnect == self.grace_ticks {
                return None;
            }
            self.since_disconnect += 1;
            return Some(ControlInput::NEUTRAL);
        }
        let mut latest = None;
        let (mut light, mut snapshot) = (false, false);
        while let Some(c) = self.inbox.pop() {
            light |= c.light;
            snapshot |= c.snapshot;
            latest = Some(c);
        }
        let mut out = self.held;
        if let Some(c) = latest {
            self.held = c;
            out = Control { light, snapshot, ..c };
        }
        Some(out.into())
    }
}

struct CockpitObserver {
    outbox: Arc<ArrayQueue<Body>>,
    shared: Arc<Shared>,
    decimation: u64,
}

impl CockpitObserver {
    fn push(&self, b: Body) {
        if self.outbox.force_push(b).is_some() {
            self.shared.dropped.fetch_add(1, Ordering::Relaxed);
        }
    }
}

impl SessionObserver for CockpitObserver {
    fn on_frame(&mut self, sim: &Simulator, frame: &SimFrame, out: &FrameOutput) {
        let messages: Vec<_> = out
            .events
            .iter()
            .filter_map(|e| match e {
                TelemetryEvent::Message(m) => Some(m.clone()),
                _ => None,
            })
            .collect();
        if !messages.is_empty() {
            self.push(Body::Feedback(FeedbackBatch { frame: frame.index, messages }));
        }
        if !frame.index.is_multiple_of(self.decimation) && frame.end.is_none() {
            return;
        }
        let s = &frame.state;
        self.push(Body::Frame(FrameState {
            i: frame.index,
            t: s.flight_time,
            position: s.position,
            velocity: s.velocity,
            yaw: s.yaw,
            task: out.record.task,
            l_star: out.record.l_star,
            speeding: out.record.speeding,
            min_clearance: frame.collision.min_clearance,
            agents: sim
                .traffic()
                .agents
                .iter()
                .map(|a| AgentPose {
                    id: a.id.clone(),
                    kind: a.kind,
                    position: a.position,
                    heading: a.heading,
                })
                .collect(),
        }));
        self.push(Body::Hud(HudUpdate {
            frame: frame.index,
            hud: out.feedback.hud.clone(),
        }));
    }
}
