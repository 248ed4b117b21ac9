use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::events::{
    attribute_crashes, record_snapshot, CrashRecord, CrashTracker, DroneSample, EventLedger, FrameRecord,
    SnapshotRecord, TaskWindow,
};
use super::feedback::{feedback_tick, Feedback, FeedbackMessage, OnsetFilter};
use super::path::assign_task;
use crate::dynamics::{CollisionReport, ControlInput, DroneState};
use crate::scenario::{JobSpec, TaskSpec};

/// Per-task conformity inputs over the task's window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskStats {
    pub window: TaskWindow,
    /// Frames in the window with the drone on this task's path.
    pub on_path_frames: u64,
    /// Frames in the window flagged as speeding.
    pub speeding_frames: u64,
    /// Sum of `v / limit` over speeding frames, each ratio capped at
    /// `v_max / limit`.
    pub speeding_sum: f64,
    pub speed_limit: f64,
}

impl TaskStats {
    pub fn task(&self) -> u32 {
        self.window.task
    }
}

/// Everything the assessment needs from one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Analysis {
    pub frames: u64,
    pub tasks: Vec<TaskStats>,
    /// Frames speeding under the retrospective (window-based) definition.
    pub speeding: Vec<u64>,
    pub ledger: EventLedger,
}

impl Analysis {
    pub fn windows(&self) -> Vec<TaskWindow> {
        self.tasks.iter().map(|s| s.window).collect()
    }
}

/// Telemetry events emitted alongside frame records.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TelemetryEvent {
    Snapshot(SnapshotRecord),
    Crash(CrashRecord),
    Message(FeedbackMessage),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameOutput {
    pub record: FrameRecord,
    pub feedback: Feedback,
    pub events: Vec<TelemetryEvent>,
}

/// Shared accumulation used by both the live pipeline and batch analysis so
/// the two agree bit for bit.
#[derive(Debug, Clone)]
struct Accumulator {
    tasks: Vec<TaskSpec>,
    v_max: f64,
    min_limit: f64,
    windows: Vec<TaskWindow>,
    on_path: Vec<u64>,
    /// (frame, speed) for frames above the lowest task limit.
    candidates: Vec<(u64, f64)>,
    crashes: CrashTracker,
    detected: BTreeSet<String>,
    ledger: EventLedger,
    frames: u64,
}

impl Accumulator {
    fn new(tasks: &[TaskSpec], job: &JobSpec) -> Self {
        Self {
            tasks: tasks.to_vec(),
            v_max: job.v_max,
            min_limit: tasks.iter().map(|t| t.speed_limit).fold(f64::INFINITY, f64::min),
            windows: tasks.iter().map(|t| TaskWindow::empty(t.id)).collect(),
            on_path: vec![0; tasks.len()],
            candidates: Vec::new(),
            crashes: CrashTracker::default(),
            detected: BTreeSet::new(),
            ledger: EventLedger::default(),
            frames: 0,
        }
    }

    fn assign(&mut self, i: u64, task: Option<u32>, speed: f64) {
        if let Some(t) = task {
            if let Some(k) = self.tasks.iter().position(|s| s.id == t) {
                self.windows[k].extend(i);
                self.on_path[k] += 1;
            }
        }
        if speed > self.min_limit {
            self.candidates.push((i, speed));
        }
        self.frames = self.frames.max(i + 1);
    }

    fn finish(mut self, battery_failed: bool) -> Analysis {
        let mut stats: Vec<TaskStats> = self
            .tasks
            .iter()
            .zip(&self.windows)
            .zip(&self.on_path)
            .map(|((t, w), on)| TaskStats {
                window: *w,
                on_path_frames: *on,
                speeding_frames: 0,
                speeding_sum: 0.0,
                speed_limit: t.speed_limit,
            })
            .collect();
        let mut speeding = Vec::new();
        for &(i, v) in &self.candidates {
            let flagged = stats.iter().any(|s| s.window.contains(i) && v > s.speed_limit);
            if !flagged {
                continue;
            }
            speeding.push(i);
            for s in stats.iter_mut().filter(|s| s.window.contains(i)) {
                s.speeding_frames += 1;
                s.speeding_sum += v.min(self.v_max) / s.speed_limit;
            }
        }
        attribute_crashes(&mut self.ledger, &self.windows);
        self.ledger.battery_failed = battery_failed;
        Analysis {
            frames: self.frames,
            tasks: stats,
            speeding,
            ledger: self.ledger,
        }
    }
}

/// Streaming telemetry: one `push` per simulated frame, then `finalize`.
#[derive(Debug, Clone)]
pub struct TelemetryPipeline {
    acc: Accumulator,
    onsets: OnsetFilter,
}

impl TelemetryPipeline {
    pub fn new(tasks: &[TaskSpec], job: &JobSpec) -> Self {
        Self {
            acc: Accumulator::new(tasks, job),
            onsets: OnsetFilter::default(),
        }
    }

    /// Process frame `index`. `visible` lists the defects in the camera
    /// frustum and is only consulted when the snapshot button was pressed.
    pub fn push(
        &mut self,
        index: u64,
        input: ControlInput,
        state: &DroneState,
        collision: CollisionReport,
        visible: Vec<String>,
    ) -> FrameOutput {
        let a = assign_task(&self.acc.tasks, &state.position);
        let speed = state.speed();
        let live_speeding = a
            .task()
            .and_then(|t| self.acc.tasks.iter().find(|s| s.id == t))
            .is_some_and(|t| speed > t.speed_limit);
        let record = FrameRecord {
            index,
            input,
            drone: DroneSample {
                pos: state.position,
                v: speed,
                b: state.battery,
            },
            yaw: state.yaw,
            light: state.light_on,
            task: a.task(),
            l_star: a.l_star(),
            speeding: live_speeding,
            collision,
        };
        self.acc.assign(index, record.task, speed);

        let mut events = Vec::new();
        if input.snapshot {
            let s = record_snapshot(index, state.position, visible, &mut self.acc.detected, &mut self.acc.ledger);
            events.push(TelemetryEvent::Snapshot(s));
        }
        let rising = self.acc.crashes.is_rising(&record.collision);
        for c in self.acc.crashes.observe(index, &record.collision, &mut self.acc.ledger) {
            events.push(TelemetryEvent::Crash(c));
        }
        let feedback = feedback_tick(&record, &a, rising);
        for m in self.onsets.onsets(&feedback.messages) {
            events.push(TelemetryEvent::Message(m));
        }
        FrameOutput {
            record,
            feedback,
            events,
        }
    }

    /// Current provisional ledger (crash tasks not yet attributed).
    pub fn ledger(&self) -> &EventLedger {
        &self.acc.ledger
    }

    pub fn finalize(self, battery_failed: bool) -> Analysis {
        self.acc.finish(battery_failed)
    }
}

/// Recompute the full analysis from logged frames. Task assignment is
/// re-derived from positions; snapshot visibility comes from the logged
/// snapshot records.
pub fn analyze_frames(
    tasks: &[TaskSpec],
    job: &JobSpec,
    frames: &[FrameRecord],
    snapshots: &[SnapshotRecord],
    battery_failed: bool,
) -> Analysis {
    let mut acc = Accumulator::new(tasks, job);
    let mut shots = snapshots.iter().peekable();
    for f in frames {
        let a = assign_task(tasks, &f.drone.pos);
        acc.assign(f.index, a.task(), f.drone.v);
        if f.input.snapshot {
            while shots.next_if(|s| s.frame < f.index).is_some() {}
            let visible = shots.next_if(|s| s.frame == f.index).map(|s| s.visible.clone()).unwrap_or_default();
            record_snapshot(f.index, f.drone.pos, visible, &mut acc.detected, &mut acc.ledger);
        }
        acc.crashes.observe(f.index, &f.collision, &mut acc.ledger);
    }
    acc.finish(battery_failed)
}
