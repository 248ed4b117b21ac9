//! Fly the built-in perfect route over the two-bridge site and print the
//! score card.
//!
//!     cargo run -p bridgesim --example fly_perfect [LOG]

use std::error::Error;
use std::path::PathBuf;

use bridgesim::session::{run_session, NoObserver, PilotFile, SessionConfig};
use bridgesim::testing::{two_bridges, PERFECT_ROUTE};

fn main() -> Result<(), Box<dyn Error>> {
    let log = std::env::args_os()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("bridgesim-perfect.ndjson"));
    let spec = two_bridges();
    let mut pilot = PilotFile::parse(PERFECT_ROUTE)?.into_source(&spec)?;
    let out = run_session(&SessionConfig::new(spec, &log), pilot.as_mut(), &mut NoObserver)?;

    println!("{} after {} frames, log at {}", out.end.as_str(), out.frames, log.display());
    for t in &out.analysis.tasks {
        println!(
            "task {}: frames {}..={}, on path {}, speeding {}",
            t.task(),
            t.window.start,
            t.window.end,
            t.on_path_frames,
            t.speeding_frames
        );
    }
    println!("{}", serde_json::to_string_pretty(&out.scorecard.standardized)?);
    Ok(())
}
