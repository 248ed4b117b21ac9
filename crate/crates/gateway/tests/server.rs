use std::io::{BufReader, Write};
use std::net::{Shutdown, TcpListener, TcpStream};
use std::thread;
use std::time::Duration;

use bridgesim::session::{read_log, EndReason, SessionStore};
use bridgesim::testing::{road_crossing, two_bridges};
use bridgesim_gateway::protocol::{
    encode, Body, Control, Direction, Hello, MessageReader, WireMessage, PROTOCOL_VERSION,
};
use bridgesim_gateway::server::{handle_connection, ConnectionSummary, ServerConfig};

struct Client {
    stream: TcpStream,
    reader: MessageReader<BufReader<TcpStream>>,
    seq: u64,
}

impl Client {
    fn connect(addr: std::net::SocketAddr) -> Self {
        let stream = TcpStream::connect(addr).unwrap();
        stream.set_read_timeout(Some(Duration::from_secs(30))).unwrap();
        let reader = MessageReader::new(BufReader::new(stream.try_clone().unwrap()), Direction::ToClient);
        Self { stream, reader, seq: 0 }
    }

    fn send(&mut self, body: Body) {
        self.seq += 1;
        let _ = self.stream.write_all(encode(&WireMessage { seq: self.seq, body }).as_bytes());
    }

    fn recv(&mut self) -> Option<WireMessage> {
        self.reader.next_message().unwrap()
    }

    fn hello(&mut self, participant: &str) -> Vec<WireMessage> {
        self.send(Body::Hello(Hello { v: PROTOCOL_VERSION, agent: "test".into(), participant: Some(participant.into()) }));
        vec![self.recv().unwrap(), self.recv().unwrap()]
    }

    /// Read until the server closes, collecting everything.
    fn drain(&mut self) -> Vec<WireMessage> {
        let mut out = Vec::new();
        while let Ok(Some(m)) = self.reader.next_message() {
            out.push(m);
        }
        out
    }
}

fn server(config: ServerConfig) -> (std::net::SocketAddr, thread::JoinHandle<anyhow::Result<ConnectionSummary>>) {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let addr = listener.local_addr().unwrap();
    let h = thread::spawn(move || {
        let (stream, _) = listener.accept()?;
        handle_connection(stream, &config)
    });
    (addr, h)
}

fn config(dir: &std::path::Path) -> ServerConfig {
    let mut c = ServerConfig::new(road_crossing(), SessionStore::new(dir));
    c.speedup = 0.0;
    c.questionnaire_timeout = Duration::from_secs(5);
    c
}

fn up() -> Body {
    Body::Control(Control { ud: 0.5, ..Control::default() })
}

#[test]
fn hello_is_answered_with_the_scenario_summary() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.scenario = two_bridges();
    let (addr, h) = server(cfg);
    let mut c = Client::connect(addr);
    let msgs = c.hello("p1");
    assert!(matches!(&msgs[0].body, Body::Hello(h) if h.v == PROTOCOL_VERSION));
    let Body::ScenarioSummary(s) = &msgs[1].body else { panic!("{:?}", msgs[1]) };
    assert_eq!(s.tasks.iter().map(|t| t.id).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
    assert_eq!(s.job.frame_rate, 50.0);
    assert_eq!(s.job.tau_min, 900.0);
    assert_eq!(s.decimation, 2);
    assert_eq!(s.defects, 6);
    assert_eq!((msgs[0].seq, msgs[1].seq), (1, 2));
    drop(c);
    let summary = h.join().unwrap().unwrap();
    assert_eq!(summary.outcome.unwrap().end_reason, EndReason::Aborted);
}

#[test]
fn out_of_range_axes_are_clamped_and_counted() {
    let dir = tempfile::tempdir().unwrap();
    let (addr, h) = server(config(dir.path()));
    let mut c = Client::connect(addr);
    c.hello("p1");
    c.send(Body::Control(Control { fb: 1.7, ud: 1.0, ..Control::default() }));
    // wait for a frame so the control has been sampled
    loop {
        if let Body::Frame(_) = c.recv().unwrap().body {
            break;
        }
    }
    c.stream.shutdown(Shutdown::Both).unwrap();
    let s = h.join().unwrap().unwrap();
    assert_eq!(s.clamped_axes, 1);
    let log = read_log(&s.outcome.unwrap().log).unwrap();
    assert_eq!(log.frames[0].input.fb, 1.0);
    assert_eq!(log.frames[0].input.ud, 1.0);
}

#[test]
fn disconnect_mid_flight_flies_five_seconds_neutral_then_aborts() {
    let dir = tempfile::tempdir().unwrap();
    let (addr, h) = server(config(dir.path()));
    let mut c = Client::connect(addr);
    c.hello("p1");
    c.send(up());
    loop {
        if let Body::Frame(f) = c.recv().unwrap().body {
            if f.i >= 10 {
                break;
            }
        }
    }
    c.stream.shutdown(Shutdown::Both).unwrap();
    let s = h.join().unwrap().unwrap();
    let outcome = s.outcome.unwrap();
    assert_eq!(outcome.end_reason, EndReason::Aborted);
    let at = s.disconnected_at.unwrap();
    assert!(at >= 10);
    // 5 s at 50 Hz
    assert_eq!(outcome.frames - at, 250);
    let log = read_log(&outcome.log).unwrap();
    assert!(log.frames[at as usize..].iter().all(|f| f.input.is_neutral()));
    assert_eq!(log.end.reason, EndReason::Aborted);
}

#[test]
fn session_end_then_report_ready_and_questionnaire() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.disconnect_grace = 5.0;
    let (addr, h) = server(cfg);
    let mut c = Client::connect(addr);
    c.hello("p7");
    // creep upward while flying straight into the truck
    c.send(Body::Control(Control { fb: 0.4, ud: 0.02, ..Control::default() }));
    let mut frames = Vec::new();
    let mut huds = 0;
    let end = loop {
        let m = c.recv().unwrap();
        match m.body {
            Body::Frame(f) => frames.push(f.i),
            Body::Hud(_) => huds += 1,
            Body::SessionEnd(e) => break e,
            _ => {}
        }
    };
    assert_eq!(end.reason, EndReason::CrashTraffic);
    let Body::ReportReady(r) = c.recv().unwrap().body else { panic!() };
    assert!(std::path::Path::new(&r.path).join("report.json").is_file());
    assert_eq!(r.standardized.safety, 0.0);
    // decimated frames: every other frame plus the last one
    assert!(frames.iter().all(|i| i % 2 == 0 || *i == end.frames - 1));
    assert_eq!(frames.len(), huds);

    let form = serde_json::json!({
        "overall": {"time_pressure": 2, "frustration": 1, "in_task_feedback": 5},
        "by_phase": {
            "calibration": {"performance": 4, "mental_demand": 2, "physical_demand": 1},
            "takeoff": {"performance": 4, "mental_demand": 2, "physical_demand": 1},
            "task1": {"performance": 4, "mental_demand": 2, "physical_demand": 1},
            "task2": {"performance": 4, "mental_demand": 3, "physical_demand": 1},
            "task3": {"performance": 4, "mental_demand": 2, "physical_demand": 1},
            "task4": {"performance": 4, "mental_demand": 2, "physical_demand": 1},
            "landing": {"performance": 4, "mental_demand": 2, "physical_demand": 1}
        }
    });
    c.send(Body::Questionnaire(form));
    let m = c.recv().unwrap();
    let Body::ReportReady(again) = m.body else { panic!("{m:?}") };
    let report: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(std::path::Path::new(&again.path).join("report.json")).unwrap()).unwrap();
    assert_eq!(report["self_assessment"]["by_phase"]["task2"]["mental_demand"], 3);
    drop(c);
    let s = h.join().unwrap().unwrap();
    assert!(s.questionnaire);
    assert_eq!(SessionStore::new(dir.path()).history("p7").unwrap().len(), 1);
}

#[test]
fn server_only_messages_from_the_client_are_a_protocol_violation() {
    let dir = tempfile::tempdir().unwrap();
    let (addr, h) = server(config(dir.path()));
    let mut c = Client::connect(addr);
    c.hello("p1");
    c.send(up());
    c.send(Body::SessionEnd(bridgesim_gateway::protocol::SessionEnd {
        reason: EndReason::LandedAtStation,
        frames: 1,
        duration: 0.02,
    }));
    let rest = c.drain();
    let err = rest.iter().find_map(|m| match &m.body {
        Body::Error(e) => Some(e.clone()),
        _ => None,
    });
    assert_eq!(err.unwrap().code, "wrong_direction");
    // the error is the last thing the client sees
    assert!(matches!(rest.last().unwrap().body, Body::Error(_)));
    let s = h.join().unwrap().unwrap();
    assert_eq!(s.outcome.unwrap().end_reason, EndReason::Aborted);
}

#[test]
fn wrong_protocol_version_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let (addr, h) = server(config(dir.path()));
    let mut c = Client::connect(addr);
    c.send(Body::Hello(Hello { v: 99, agent: "old".into(), participant: None }));
    let Body::Error(e) = c.recv().unwrap().body else { panic!() };
    assert_eq!(e.code, "version");
    assert!(h.join().unwrap().is_err());
}

#[test]
fn a_client_that_never_reads_does_not_stall_the_session() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(dir.path());
    cfg.scenario = two_bridges();
    cfg.queue_capacity = 16;
    cfg.decimation = 1;
    let (addr, h) = server(cfg);
    let mut c = Client::connect(addr);
    c.hello("p1");
    // climb forever; the battery runs out after 75 000 frames
    c.send(Body::Control(Control { ud: 0.05, ..Control::default() }));
    let s = h.join().unwrap().unwrap();
    let outcome = s.outcome.unwrap();
    assert_eq!(outcome.end_reason, EndReason::BatteryExhausted);
    assert_eq!(outcome.frames, 75_001);
    assert!(s.dropped_messages > 0);
    drop(c);
}
