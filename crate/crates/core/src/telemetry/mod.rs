//! Per-frame event extraction: on-path analysis, task windows, speeding,
//! crashes, snapshots and in-flight feedback.

mod events;
mod feedback;
mod path;
mod pipeline;

pub use events::{
    attribute_crashes, record_crashes, record_snapshot, speeding_flag, task_windows, CrashObject, CrashRecord,
    CrashTracker, DroneSample, EventLedger, FrameRecord, SnapshotRecord, TaskWindow,
};
pub use feedback::{
    battery_color, feedback_tick, BatteryColor, Feedback, FeedbackKind, FeedbackMessage, Hud, OnsetFilter,
    DISTANCE_REMINDER_RANGE, PROXIMITY_RANGE,
};
pub use path::{assign_task, on_path, Assignment, OnPath};
pub use pipeline::{analyze_frames, Analysis, FrameOutput, TaskStats, TelemetryEvent, TelemetryPipeline};
