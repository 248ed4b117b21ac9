use bridgesim::dynamics::ControlInput;
use bridgesim::error::{LogError, SessionError};
use bridgesim::session::{
    parse_log, read_log, replay, rescore, resimulate, run_session, EndReason, NoObserver, PilotFile, ScriptedPilot,
    SessionConfig, SessionMode, SessionStore, TimelineEntry,
};
use bridgesim::testing::{road_crossing, tiny_scenario, two_bridges, CRASH_PILOT, PERFECT_ROUTE};

fn fly(spec: bridgesim::scenario::ScenarioSpec, pilot: &str, log: &std::path::Path) -> bridgesim::session::SessionOutcome {
    let mut src = PilotFile::parse(pilot).unwrap().into_source(&spec).unwrap();
    run_session(&SessionConfig::new(spec, log), src.as_mut(), &mut NoObserver).unwrap()
}

#[test]
fn pilot_that_never_takes_off_is_aborted_with_no_frames() {
    let dir = tempfile::tempdir().unwrap();
    let mut pilot = ScriptedPilot::new(vec![TimelineEntry {
        start: 0,
        end: 100,
        input: ControlInput::axes(1.0, 0.0, 0.0, 0.0),
    }])
    .unwrap();
    let out = run_session(&SessionConfig::new(tiny_scenario(), dir.path().join("s.ndjson")), &mut pilot, &mut NoObserver).unwrap();
    assert_eq!(out.end, EndReason::Aborted);
    assert_eq!(out.frames, 0);
    let log = read_log(&out.log_path).unwrap();
    assert!(log.frames.is_empty());
    assert_eq!(log.end.reason, EndReason::Aborted);
}

#[test]
fn flying_into_a_vehicle_ends_the_session_at_the_crash_frame() {
    let dir = tempfile::tempdir().unwrap();
    let out = fly(road_crossing(), CRASH_PILOT, &dir.path().join("crash.ndjson"));
    assert_eq!(out.end, EndReason::CrashTraffic);
    assert!(out.analysis.ledger.crash_vehicle);
    assert!(!out.analysis.ledger.crash_human);
    let log = read_log(&out.log_path).unwrap();
    let last = log.frames.last().unwrap();
    assert!(last.collision.vehicle);
    assert!(log.frames[..log.frames.len() - 1].iter().all(|f| !f.collision.vehicle));
    assert_eq!(out.frames, log.frames.len() as u64);
    assert_eq!(out.scorecard.safety, -100.0);
}

#[test]
fn perfect_pilot_lands_with_full_conformity_and_efficiency() {
    let dir = tempfile::tempdir().unwrap();
    let out = fly(two_bridges(), PERFECT_ROUTE, &dir.path().join("perfect.ndjson"));
    assert_eq!(out.end, EndReason::LandedAtStation);
    assert_eq!(out.scorecard.p_c(), 100.0);
    assert_eq!(out.scorecard.efficiency, 100.0);
    assert_eq!(out.scorecard.safety, 0.0);
    assert_eq!(out.scorecard.p_a(), Some(100.0));
    assert!(out.analysis.tasks.iter().all(|t| t.window.entered && t.speeding_frames == 0));
}

#[test]
fn runs_are_byte_identical_and_replay_reproduces_the_scorecard() {
    let dir = tempfile::tempdir().unwrap();
    let a = fly(two_bridges(), PERFECT_ROUTE, &dir.path().join("a.ndjson"));
    let b = fly(two_bridges(), PERFECT_ROUTE, &dir.path().join("b.ndjson"));
    let bytes = std::fs::read(&a.log_path).unwrap();
    assert_eq!(bytes, std::fs::read(&b.log_path).unwrap());

    let r = replay(&a.log_path).unwrap();
    assert!(r.matches_recorded());
    assert_eq!(r.outcome.scorecard, a.scorecard);
    assert_eq!(r.outcome.analysis, a.analysis);

    let again = resimulate(&r.log, &dir.path().join("c.ndjson")).unwrap();
    assert_eq!(std::fs::read(&again.log_path).unwrap(), bytes);
}

#[test]
fn crash_session_replays_and_resimulates_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = fly(road_crossing(), CRASH_PILOT, &dir.path().join("a.ndjson"));
    let log = read_log(&a.log_path).unwrap();
    let b = resimulate(&log, &dir.path().join("b.ndjson")).unwrap();
    assert_eq!(std::fs::read(&a.log_path).unwrap(), std::fs::read(&b.log_path).unwrap());
    assert!(replay(&a.log_path).unwrap().matches_recorded());
}

#[test]
fn rescoring_with_a_harsher_other_crash_weight_changes_only_safety() {
    let dir = tempfile::tempdir().unwrap();
    let spec = tiny_scenario();
    // climb to slab height, fly through the slab and back
    let mut pilot = ScriptedPilot::new(vec![
        TimelineEntry { start: 0, end: 300, input: ControlInput::axes(0.0, 0.0, 0.3, 0.0) },
        TimelineEntry { start: 300, end: 450, input: ControlInput::axes(0.5, 0.0, 0.0, 0.0) },
        TimelineEntry { start: 450, end: 600, input: ControlInput::axes(-0.5, 0.0, 0.0, 0.0) },
    ])
    .unwrap();
    let out = run_session(&SessionConfig::new(spec, dir.path().join("bump.ndjson")), &mut pilot, &mut NoObserver).unwrap();
    assert!(out.analysis.ledger.crash_other >= 1, "{:?}", out.analysis.ledger);
    let log = read_log(&out.log_path).unwrap();
    let mut w = log.header.scenario.job.weights;
    w.crash_other = -10.0;
    let card = rescore(&log, w);
    assert_ne!(card.safety, out.scorecard.safety);
    assert_eq!(card.conformity, out.scorecard.conformity);
    assert_eq!(card.efficiency, out.scorecard.efficiency);
    assert_eq!(card.accuracy, out.scorecard.accuracy);
    assert_eq!(card.standardized.conformity, out.scorecard.standardized.conformity);
    assert_eq!(card.standardized.efficiency, out.scorecard.standardized.efficiency);
}

#[test]
fn truncated_log_names_the_byte_offset() {
    let dir = tempfile::tempdir().unwrap();
    let out = fly(road_crossing(), CRASH_PILOT, &dir.path().join("t.ndjson"));
    let bytes = std::fs::read(&out.log_path).unwrap();
    let lines: Vec<usize> = bytes.iter().enumerate().filter(|(_, b)| **b == b'\n').map(|(i, _)| i + 1).collect();
    // cut in the middle of the fourth record
    let start = lines[2];
    let cut = start + (lines[3] - start) / 2;
    match parse_log(&bytes[..cut]) {
        Err(LogError::Truncated { offset }) => assert_eq!(offset, start as u64),
        other => panic!("{other:?}"),
    }
    // cut on a record boundary before the end record
    let n = lines.len();
    match parse_log(&bytes[..lines[n - 3]]) {
        Err(LogError::Truncated { offset }) => assert_eq!(offset, lines[n - 3] as u64),
        other => panic!("{other:?}"),
    }
}

#[test]
fn malformed_and_foreign_version_logs_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let out = fly(road_crossing(), CRASH_PILOT, &dir.path().join("m.ndjson"));
    let text = std::fs::read_to_string(&out.log_path).unwrap();
    let first = text.find('\n').unwrap() + 1;
    let bad = format!("{}{{\"type\": \"frame\", \"i\": \"x\"}}\n{}", &text[..first], &text[first..]);
    assert!(matches!(parse_log(bad.as_bytes()), Err(LogError::Malformed { offset, .. }) if offset == first as u64));
    let old = text.replacen("\"version\":1", "\"version\":99", 1);
    assert!(matches!(parse_log(old.as_bytes()), Err(LogError::VersionMismatch { found: 99, expected: 1 })));
}

#[test]
fn replay_mode_requires_an_existing_log() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = SessionConfig::new(tiny_scenario(), dir.path().join("missing.ndjson"));
    cfg.mode = SessionMode::Replay;
    let mut pilot = ScriptedPilot::new(vec![]).unwrap();
    assert!(matches!(run_session(&cfg, &mut pilot, &mut NoObserver), Err(SessionError::MissingLog)));
    assert!(matches!(replay(&dir.path().join("missing.ndjson")), Err(SessionError::MissingLog)));
}

#[test]
fn store_records_history_and_skips_practice() {
    let dir = tempfile::tempdir().unwrap();
    let store = SessionStore::new(dir.path());
    assert!(store.history("p1").unwrap().is_empty());
    assert_eq!(store.next_repetition("p1").unwrap(), 1);
    let path = store.log_path("p1", 1, false).unwrap();
    assert!(path.ends_with("p1/session-001.ndjson"));
    let out = fly(road_crossing(), CRASH_PILOT, &path);
    let e = store.record_repetition("p1", &out, &out.scorecard).unwrap();
    assert_eq!(e.repetition, 1);
    let out2 = fly(road_crossing(), CRASH_PILOT, &store.log_path("p1", 2, false).unwrap());
    store.record_repetition("p1", &out2, &out2.scorecard).unwrap();
    let h = store.history("p1").unwrap();
    assert_eq!(h.iter().map(|e| e.repetition).collect::<Vec<_>>(), vec![1, 2]);
    assert_eq!(store.participants().unwrap(), vec!["p1".to_string()]);
    assert!(store.log_path("p1", 1, true).unwrap().ends_with("practice-001.ndjson"));
    assert!(store.participant_dir("../x").is_err());
}
