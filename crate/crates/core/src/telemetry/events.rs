use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::dynamics::{CollisionReport, ControlInput};
use crate::geometry::Vec3;
use crate::scenario::{ElementKind, TaskSpec};

/// Drone readings logged each frame: position, speed and battery.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroneSample {
    pub pos: Vec3,
    pub v: f64,
    pub b: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameRecord {
    #[serde(rename = "i")]
    pub index: u64,
    #[serde(rename = "o")]
    pub input: ControlInput,
    #[serde(rename = "d")]
    pub drone: DroneSample,
    pub yaw: f64,
    pub light: bool,
    /// Task the drone is on this frame.
    pub task: Option<u32>,
    /// Distance to the assigned task's path, else to the nearest one.
    pub l_star: Option<f64>,
    /// Live speeding flag (speed above the assigned task's limit).
    pub speeding: bool,
    pub collision: CollisionReport,
}

/// First and last frame the drone was on a task's path.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskWindow {
    pub task: u32,
    pub start: u64,
    pub end: u64,
    pub entered: bool,
}

impl TaskWindow {
    pub fn empty(task: u32) -> Self {
        Self {
            task,
            start: 0,
            end: 0,
            entered: false,
        }
    }

    pub fn contains(&self, i: u64) -> bool {
        self.entered && self.start <= i && i <= self.end
    }

    /// Number of frames in the window; 0 when never entered.
    pub fn len(&self) -> u64 {
        if self.entered {
            self.end - self.start + 1
        } else {
            0
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub(crate) fn extend(&mut self, i: u64) {
        if !self.entered {
            self.entered = true;
            self.start = i;
        }
        self.end = i;
    }
}

/// Windows for every task in `tasks`, in that order.
pub fn task_windows(frames: &[FrameRecord], tasks: &[TaskSpec]) -> Vec<TaskWindow> {
    let mut windows: Vec<TaskWindow> = tasks.iter().map(|t| TaskWindow::empty(t.id)).collect();
    for f in frames {
        if let Some(t) = f.task {
            if let Some(w) = windows.iter_mut().find(|w| w.task == t) {
                w.extend(f.index);
            }
        }
    }
    windows
}

/// Retrospective speeding: frame `i` lies in some task's window and the
/// speed exceeds that task's limit.
pub fn speeding_flag(i: u64, speed: f64, windows: &[TaskWindow], tasks: &[TaskSpec]) -> bool {
    windows
        .iter()
        .zip(tasks)
        .any(|(w, t)| w.contains(i) && speed > t.speed_limit)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "object", rename_all = "snake_case")]
pub enum CrashObject {
    Human,
    Vehicle,
    Element { id: String, kind: ElementKind },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrashRecord {
    pub frame: u64,
    #[serde(flatten)]
    pub object: CrashObject,
    /// Task whose window contains the frame; `None` for transit.
    pub task: Option<u32>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SnapshotRecord {
    pub frame: u64,
    pub position: Vec3,
    /// Defects inside the camera frustum when the snapshot was taken.
    pub visible: Vec<String>,
    /// Visible defects credited for the first time by this snapshot.
    pub credited: Vec<String>,
}

impl SnapshotRecord {
    pub fn is_true_detection(&self) -> bool {
        !self.visible.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct EventLedger {
    pub crash_human: bool,
    pub crash_vehicle: bool,
    /// Rising edges of contact with scene elements.
    pub crash_other: u32,
    pub crash_records: Vec<CrashRecord>,
    pub snapshots: Vec<SnapshotRecord>,
    /// Snapshot presses.
    pub snapshots_taken: u32,
    /// Distinct defects captured.
    pub true_detections: u32,
    pub battery_failed: bool,
}

/// Edge detector over consecutive collision reports. Human and vehicle
/// contacts are recorded once; element contacts on each rising edge.
#[derive(Debug, Clone, Default)]
pub struct CrashTracker {
    prev_other: bool,
    prev_human: bool,
    prev_vehicle: bool,
}

impl CrashTracker {
    /// Update the ledger for frame `i` and return the new crash records.
    pub fn observe(&mut self, i: u64, c: &CollisionReport, ledger: &mut EventLedger) -> Vec<CrashRecord> {
        let mut out = Vec::new();
        if c.human && !ledger.crash_human {
            ledger.crash_human = true;
            out.push(CrashRecord { frame: i, object: CrashObject::Human, task: None });
        }
        if c.vehicle && !ledger.crash_vehicle {
            ledger.crash_vehicle = true;
            out.push(CrashRecord { frame: i, object: CrashObject::Vehicle, task: None });
        }
        if let Some(o) = &c.other {
            if !self.prev_other {
                ledger.crash_other += 1;
                out.push(CrashRecord {
                    frame: i,
                    object: CrashObject::Element { id: o.id.clone(), kind: o.kind },
                    task: None,
                });
            }
        }
        self.prev_other = c.other.is_some();
        self.prev_human = c.human;
        self.prev_vehicle = c.vehicle;
        ledger.crash_records.extend(out.iter().cloned());
        out
    }

    /// Whether `c` turns on any contact flag relative to the last observed
    /// frame. Call before [`CrashTracker::observe`].
    pub fn is_rising(&self, c: &CollisionReport) -> bool {
        (c.human && !self.prev_human) || (c.vehicle && !self.prev_vehicle) || (c.other.is_some() && !self.prev_other)
    }
}

/// Crash flags and records over a whole frame sequence.
pub fn record_crashes(frames: &[FrameRecord]) -> EventLedger {
    let mut ledger = EventLedger::default();
    let mut tracker = CrashTracker::default();
    for f in frames {
        tracker.observe(f.index, &f.collision, &mut ledger);
    }
    ledger
}

/// Register a snapshot taken at `frame`. Each defect is credited at most
/// once over the session.
pub fn record_snapshot(
    frame: u64,
    position: Vec3,
    mut visible: Vec<String>,
    detected: &mut BTreeSet<String>,
    ledger: &mut EventLedger,
) -> SnapshotRecord {
    visible.sort();
    visible.dedup();
    let credited: Vec<String> = visible.iter().filter(|d| detected.insert((*d).clone())).cloned().collect();
    ledger.snapshots_taken += 1;
    ledger.true_detections += credited.len() as u32;
    let record = SnapshotRecord {
        frame,
        position,
        visible,
        credited,
    };
    ledger.snapshots.push(record.clone());
    record
}

/// Attribute crash records to the task whose window contains them.
pub fn attribute_crashes(ledger: &mut EventLedger, windows: &[TaskWindow]) {
    for r in &mut ledger.crash_records {
        r.task = windows.iter().find(|w| w.contains(r.frame)).map(|w| w.task);
    }
}
