//! Plain-data chart payloads for the report viewer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::scoring::{ScoreCard, Standardized, DIMENSIONS};
use crate::telemetry::{CrashObject, EventLedger};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KiviatAxis {
    pub axis: String,
    /// Percent; `None` when the dimension does not apply.
    pub value: Option<f64>,
}

/// Four-axis radar payload in the fixed order conformity, efficiency,
/// safety, accuracy.
pub fn kiviat_data(s: &Standardized) -> Vec<KiviatAxis> {
    DIMENSIONS
        .iter()
        .zip(s.as_array())
        .map(|(a, v)| KiviatAxis { axis: a.to_string(), value: v })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaterfallStep {
    pub task: u32,
    pub gain: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Waterfall {
    pub steps: Vec<WaterfallStep>,
    pub total: f64,
}

impl Waterfall {
    pub fn component_sum(&self) -> f64 {
        self.steps.iter().map(|s| s.gain + s.loss).sum()
    }
}

/// Per-task on-path gains and speeding losses; `total` is the conformity
/// score they add up to.
pub fn conformity_waterfall(card: &ScoreCard) -> Waterfall {
    Waterfall {
        steps: card
            .conformity
            .per_task
            .iter()
            .map(|t| WaterfallStep {
                task: t.task,
                gain: t.on_path_gain,
                loss: t.speeding_loss,
            })
            .collect(),
        total: card.conformity.p_c,
    }
}

pub const TRANSIT: &str = "transit";

/// Crash counts per task plus transit.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct CrashStack {
    pub buckets: BTreeMap<String, u32>,
    pub by_object: BTreeMap<String, u32>,
}

impl CrashStack {
    pub fn total(&self) -> u32 {
        self.buckets.values().sum()
    }
}

pub fn task_bucket(task: Option<u32>) -> String {
    task.map_or_else(|| TRANSIT.to_string(), |t| format!("task-{t}"))
}

/// Split the ledger's crashes by the task window they occurred in.
pub fn crash_by_task(ledger: &EventLedger, task_ids: &[u32]) -> CrashStack {
    let mut s = CrashStack::default();
    for t in task_ids {
        s.buckets.insert(task_bucket(Some(*t)), 0);
    }
    s.buckets.insert(TRANSIT.into(), 0);
    for r in &ledger.crash_records {
        *s.buckets.entry(task_bucket(r.task)).or_default() += 1;
        let object = match &r.object {
            CrashObject::Human => "human".to_string(),
            CrashObject::Vehicle => "vehicle".to_string(),
            CrashObject::Element { kind, .. } => kind.as_str().to_string(),
        };
        *s.by_object.entry(object).or_default() += 1;
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AccuracySummary {
    pub defects: u32,
    pub snapshots: u32,
    pub true_detections: u32,
    pub false_snapshots: u32,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f_beta: Option<f64>,
}

pub fn accuracy_summary(card: &ScoreCard, ledger: &EventLedger, defects: u32) -> AccuracySummary {
    AccuracySummary {
        defects,
        snapshots: ledger.snapshots_taken,
        true_detections: ledger.true_detections,
        false_snapshots: ledger.snapshots.iter().filter(|s| !s.is_true_detection()).count() as u32,
        recall: card.accuracy.as_ref().map(|a| a.recall),
        precision: card.accuracy.as_ref().map(|a| a.precision),
        f_beta: card.accuracy.as_ref().map(|a| a.f_beta),
    }
}

/// Relative change in percent; `None` when the baseline is 0.
pub fn relative_change(old: f64, new: f64) -> Option<f64> {
    (old != 0.0).then(|| (new - old) / old.abs() * 100.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImprovementPoint {
    pub session: usize,
    pub standardized: Standardized,
    /// Change from the previous session per dimension, percent.
    pub delta: BTreeMap<String, Option<f64>>,
}

/// Standardized scores over repeated sessions with session-to-session
/// relative changes.
pub fn improvement_series(history: &[Standardized]) -> Vec<ImprovementPoint> {
    history
        .iter()
        .enumerate()
        .map(|(k, s)| {
            let delta = DIMENSIONS
                .iter()
                .enumerate()
                .map(|(d, name)| {
                    let change = k
                        .checked_sub(1)
                        .and_then(|p| Some((history[p].as_array()[d]?, s.as_array()[d]?)))
                        .and_then(|(old, new)| relative_change(old, new));
                    (name.to_string(), change)
                })
                .collect();
            ImprovementPoint {
                session: k + 1,
                standardized: *s,
                delta,
            }
        })
        .collect()
}
