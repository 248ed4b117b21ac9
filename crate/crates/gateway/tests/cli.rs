use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn bridgesim(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bridgesim"))
        .current_dir(dir)
        .args(args)
        .env_remove("BRIDGESIM_ADDR")
        .output()
        .unwrap()
}

fn json(out: &Output) -> Value {
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn scripted_perfect_pilot_scores_full_conformity() {
    let dir = tempfile::tempdir().unwrap();
    let pilot = fixture("perfect_route.json");
    let run = json(&bridgesim(dir.path(), &["--format", "json", "run-scripted", pilot.to_str().unwrap(), "--log", "perfect.ndjson"]));
    assert_eq!(run["end_reason"], "landed_at_station");

    let card = json(&bridgesim(dir.path(), &["--format", "json", "score", "perfect.ndjson"]));
    assert_eq!(card["conformity"]["p_c"], 100.0);
    assert_eq!(card["efficiency"], 100.0);

    let text = bridgesim(dir.path(), &["score", "perfect.ndjson"]);
    assert!(String::from_utf8_lossy(&text.stdout).contains("conformity    100.000"));

    let replay = json(&bridgesim(dir.path(), &["--format", "json", "replay", "perfect.ndjson", "--resimulate"]));
    assert_eq!(replay["matches_recorded"], true);
    assert_eq!(replay["resimulated_identical"], true);
}

#[test]
fn score_with_harsher_weights_changes_only_safety() {
    let dir = tempfile::tempdir().unwrap();
    let pilot = fixture("crash_pilot.json");
    let scenario = fixture("road_crossing.json");
    json(&bridgesim(
        dir.path(),
        &["--format", "json", "run-scripted", pilot.to_str().unwrap(), "--scenario", scenario.to_str().unwrap(), "--log", "c.ndjson"],
    ));
    let base = json(&bridgesim(dir.path(), &["--format", "json", "score", "c.ndjson"]));
    let log = std::fs::read_to_string(dir.path().join("c.ndjson")).unwrap();
    let header: Value = serde_json::from_str(log.lines().next().unwrap()).unwrap();
    let mut w = header["scenario"]["job"]["weights"].clone();
    w["crash_vehicle"] = (-50.0).into();
    std::fs::write(dir.path().join("w.json"), w.to_string()).unwrap();
    let other = json(&bridgesim(dir.path(), &["--format", "json", "score", "c.ndjson", "--weights", "w.json"]));
    assert_eq!(base["safety"], -100.0);
    assert_eq!(other["safety"], -50.0);
    for k in ["conformity", "efficiency", "accuracy", "frames"] {
        assert_eq!(base[k], other[k], "{k}");
    }
}

#[test]
fn validate_reports_the_violated_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let ok = bridgesim(dir.path(), &["validate", fixture("two_bridges.json").to_str().unwrap()]);
    assert!(ok.status.success());
    assert!(String::from_utf8_lossy(&ok.stdout).contains("valid"));

    std::fs::write(
        dir.path().join("bad.json"),
        r#"{"version": 1, "name": "bad", "ground_station": [0, 0, 0], "elements": [],
            "tasks": [{"id": 1, "reference_points": [[0, 0, 1]], "recommended_distance": [1, 2]}]}"#,
    )
    .unwrap();
    let bad = bridgesim(dir.path(), &["validate", "bad.json"]);
    assert!(!bad.status.success());
    let err = String::from_utf8_lossy(&bad.stderr);
    assert!(err.contains("reference_points_min_two"), "{err}");
}

#[test]
fn unknown_subcommands_and_missing_files_fail() {
    let dir = tempfile::tempdir().unwrap();
    assert!(!bridgesim(dir.path(), &["fly"]).status.success());
    let missing = bridgesim(dir.path(), &["replay", "nope.ndjson"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("existing log"));
    assert!(!bridgesim(dir.path(), &["validate", "nope.json"]).status.success());
    assert!(!bridgesim(dir.path(), &["report", "nobody", "--store", "st"]).status.success());
}

#[test]
fn group_report_over_seven_cards_gives_hand_computed_quartiles() {
    let dir = tempfile::tempdir().unwrap();
    let pilot = fixture("perfect_route.json");
    json(&bridgesim(dir.path(), &["--format", "json", "run-scripted", pilot.to_str().unwrap(), "--log", "p.ndjson"]));
    let mut base = json(&bridgesim(dir.path(), &["--format", "json", "score", "p.ndjson"]));
    let cards = dir.path().join("cards");
    std::fs::create_dir(&cards).unwrap();
    // conformity values deliberately out of order
    let values = [65.0, 10.0, 95.0, 50.0, 20.0, 80.0, 35.0];
    for (k, v) in values.iter().enumerate() {
        base["standardized"]["conformity"] = (*v).into();
        base["standardized"]["safety"] = (100.0 - *v).into();
        std::fs::write(cards.join(format!("p{k}.json")), base.to_string()).unwrap();
    }
    let stats = json(&bridgesim(dir.path(), &["--format", "json", "group-report", "cards", "--out", "group"]));
    assert_eq!(stats["participants"], 7);
    let dims = stats["dimensions"].as_array().unwrap();
    let c = dims.iter().find(|d| d["dimension"] == "conformity").unwrap();
    // sorted: 10 20 35 | 50 | 65 80 95
    assert_eq!([&c["min"], &c["q1"], &c["median"], &c["q3"], &c["max"]], [10.0, 20.0, 50.0, 80.0, 95.0].map(Value::from).each_ref());
    let s = dims.iter().find(|d| d["dimension"] == "safety").unwrap();
    assert_eq!([&s["q1"], &s["median"], &s["q3"]], [20.0, 50.0, 80.0].map(Value::from).each_ref());
    for f in ["group.json", "charts/boxplot.json", "charts/crash_stacks.json", "charts/questionnaire.json", "scorecards.csv"] {
        assert!(dir.path().join("group").join(f).is_file(), "{f}");
    }
}

#[test]
fn store_sessions_feed_reports_and_the_improvement_series() {
    let dir = tempfile::tempdir().unwrap();
    let pilot = fixture("crash_pilot.json");
    let scenario = fixture("road_crossing.json");
    let args = ["--format", "json", "run-scripted", pilot.to_str().unwrap(), "--scenario", scenario.to_str().unwrap(), "--store", "st", "--participant", "p3"];
    let first = json(&bridgesim(dir.path(), &args));
    let second = json(&bridgesim(dir.path(), &args));
    assert!(first["report"].as_str().unwrap().ends_with("report-001"));
    assert!(second["report"].as_str().unwrap().ends_with("report-002"));
    let report = json(&bridgesim(dir.path(), &["--format", "json", "report", "p3", "--store", "st"]));
    assert_eq!(report["session"], 2);
    assert_eq!(report["improvement"].as_array().unwrap().len(), 2);
    assert!(report.get("self_assessment").is_none());

    let mut practice = args.to_vec();
    practice.push("--practice");
    json(&bridgesim(dir.path(), &practice));
    let history: Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("st/p3/history.json")).unwrap()).unwrap();
    assert_eq!(history.as_array().unwrap().len(), 2);
    assert!(dir.path().join("st/p3/practice-001.ndjson").is_file());

    let group = json(&bridgesim(dir.path(), &["--format", "json", "group-report", "st"]));
    assert_eq!(group["participants"], 1);
    assert!(dir.path().join("st/group-report/charts/crash_stacks.json").is_file());
}

#[test]
fn serve_listens_on_the_address_from_the_environment() {
    use bridgesim_gateway::protocol::{encode, Body, Direction, Hello, MessageReader, WireMessage, PROTOCOL_VERSION};
    use std::io::{BufReader, Write};

    let dir = tempfile::tempdir().unwrap();
    let port = std::net::TcpListener::bind("127.0.0.1:0").unwrap().local_addr().unwrap().port();
    let addr = format!("127.0.0.1:{port}");
    let mut child = Command::new(env!("CARGO_BIN_EXE_bridgesim"))
        .current_dir(dir.path())
        .args(["serve", "--once", "--speedup", "0", "--store", "st"])
        .env("BRIDGESIM_ADDR", &addr)
        .spawn()
        .unwrap();
    let mut stream = None;
    for _ in 0..200 {
        match std::net::TcpStream::connect(&addr) {
            Ok(s) => {
                stream = Some(s);
                break;
            }
            Err(_) => std::thread::sleep(std::time::Duration::from_millis(20)),
        }
    }
    let mut stream = stream.expect("server did not come up");
    let hello = Body::Hello(Hello { v: PROTOCOL_VERSION, agent: "test".into(), participant: Some("envtest".into()) });
    stream.write_all(encode(&WireMessage { seq: 1, body: hello }).as_bytes()).unwrap();
    let mut r = MessageReader::new(BufReader::new(stream.try_clone().unwrap()), Direction::ToClient);
    assert_eq!(r.next_message().unwrap().unwrap().body.kind(), "hello");
    assert_eq!(r.next_message().unwrap().unwrap().body.kind(), "scenario_summary");
    drop(r);
    drop(stream);
    assert!(child.wait().unwrap().success());
    assert!(dir.path().join("st/envtest/session-001.ndjson").is_file());
}
