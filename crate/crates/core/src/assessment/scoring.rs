use serde::{Deserialize, Serialize};

use crate::scenario::{JobSpec, ScoringWeights};
use crate::telemetry::{Analysis, EventLedger, TaskStats};

/// One task's share of the conformity score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskBreakdown {
    pub task: u32,
    pub entered: bool,
    /// Fraction of the window spent on path.
    pub on_path_fraction: f64,
    /// Speed-weighted speeding fraction of the window.
    pub speeding_fraction: f64,
    /// `on_path_fraction` times the on-path weight.
    pub on_path_gain: f64,
    /// `speeding_fraction` times the (negative) speeding weight.
    pub speeding_loss: f64,
    pub crash_count: u32,
    /// Window length, seconds.
    pub duration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Conformity {
    /// Sum of on-path fractions over tasks.
    pub p_p: f64,
    /// Sum of speed-weighted speeding fractions over tasks.
    pub p_s: f64,
    pub p_c: f64,
    pub per_task: Vec<TaskBreakdown>,
}

/// Conformity from per-task window statistics. Tasks never entered
/// contribute nothing.
pub fn conformity_score(stats: &[TaskStats], weights: &ScoringWeights, frame_rate: f64) -> Conformity {
    let mut p_p = 0.0;
    let mut p_s = 0.0;
    let mut per_task = Vec::with_capacity(stats.len());
    for s in stats {
        let len = s.window.len();
        let (on, sp) = if len == 0 {
            (0.0, 0.0)
        } else {
            (s.on_path_frames as f64 / len as f64, s.speeding_sum / len as f64)
        };
        p_p += on;
        p_s += sp;
        per_task.push(TaskBreakdown {
            task: s.task(),
            entered: s.window.entered,
            on_path_fraction: on,
            speeding_fraction: sp,
            on_path_gain: weights.on_path * on,
            // adding 0 turns -0.0 into 0.0
            speeding_loss: weights.speeding * sp + 0.0,
            crash_count: 0,
            duration: len as f64 / frame_rate,
        });
    }
    Conformity {
        p_p,
        p_s,
        p_c: weights.on_path * p_p + weights.speeding * p_s,
        per_task,
    }
}

/// Time efficiency for a session of `frames` frames. Running past the
/// maximum flight time counts as a battery failure.
pub fn efficiency_score(frames: u64, frame_rate: f64, battery_failed: bool, job: &JobSpec) -> f64 {
    let elapsed = frames as f64 / frame_rate;
    let w = &job.weights;
    if battery_failed || elapsed > job.tau_max {
        w.battery_failure
    } else {
        w.efficiency_base + w.efficiency_slope * (elapsed - job.tau_min).max(0.0)
    }
}

pub fn safety_score(ledger: &EventLedger, weights: &ScoringWeights) -> f64 {
    let raw = weights.crash_human * f64::from(u8::from(ledger.crash_human))
        + weights.crash_vehicle * f64::from(u8::from(ledger.crash_vehicle))
        + weights.crash_other * f64::from(ledger.crash_other)
        + 0.0;
    raw.max(weights.safety_floor)
}

/// Weighted harmonic combination of precision and recall; 0 when both are 0.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> f64 {
    let b2 = beta * beta;
    let den = b2 * precision + recall;
    if den == 0.0 {
        0.0
    } else {
        (1.0 + b2) * precision * recall / den
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Accuracy {
    pub recall: f64,
    pub precision: f64,
    pub f_beta: f64,
    pub p_a: f64,
    pub note: Option<String>,
}

pub const NO_SNAPSHOTS_NOTE: &str = "no snapshots taken";

/// Detection accuracy; `None` when the scenario has no defects.
pub fn accuracy_score(true_detections: u32, snapshots: u32, defects: u32, weights: &ScoringWeights) -> Option<Accuracy> {
    if defects == 0 {
        return None;
    }
    let recall = f64::from(true_detections) / f64::from(defects);
    let (precision, note) = if snapshots == 0 {
        (0.0, Some(NO_SNAPSHOTS_NOTE.to_string()))
    } else {
        (f64::from(true_detections) / f64::from(snapshots), None)
    };
    let f = f_beta(precision, recall, weights.beta);
    Some(Accuracy {
        recall,
        precision,
        f_beta: f,
        p_a: weights.accuracy * f,
        note,
    })
}

/// Scores mapped onto 0..=100 percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Standardized {
    pub conformity: f64,
    pub efficiency: f64,
    pub safety: f64,
    pub accuracy: Option<f64>,
}

impl Standardized {
    pub fn as_array(&self) -> [Option<f64>; 4] {
        [Some(self.conformity), Some(self.efficiency), Some(self.safety), self.accuracy]
    }
}

pub const DIMENSIONS: [&str; 4] = ["conformity", "efficiency", "safety", "accuracy"];

fn affine(x: f64, lo: f64, hi: f64) -> f64 {
    if x == lo {
        0.0
    } else if x == hi {
        100.0
    } else {
        (x - lo) / (hi - lo) * 100.0
    }
}

/// Map raw scores onto percentages. Conformity and efficiency span
/// [-100, 100], safety [floor, 0], accuracy [0, accuracy weight].
pub fn standardize(p_c: f64, p_e: f64, p_s: f64, p_a: Option<f64>, weights: &ScoringWeights) -> Standardized {
    Standardized {
        conformity: affine(p_c, -100.0, 100.0),
        efficiency: affine(p_e, -100.0, 100.0),
        safety: affine(p_s, weights.safety_floor, 0.0),
        accuracy: p_a.map(|a| affine(a, 0.0, weights.accuracy)),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCard {
    pub frames: u64,
    /// Session length, seconds.
    pub duration: f64,
    pub conformity: Conformity,
    pub efficiency: f64,
    pub safety: f64,
    pub accuracy: Option<Accuracy>,
    pub standardized: Standardized,
    pub notes: Vec<String>,
}

impl ScoreCard {
    pub fn p_c(&self) -> f64 {
        self.conformity.p_c
    }

    pub fn p_a(&self) -> Option<f64> {
        self.accuracy.as_ref().map(|a| a.p_a)
    }
}

/// Score a finished session.
pub fn score_session(analysis: &Analysis, job: &JobSpec, defect_count: usize) -> ScoreCard {
    let w = &job.weights;
    let mut conformity = conformity_score(&analysis.tasks, w, job.frame_rate);
    for b in &mut conformity.per_task {
        b.crash_count = analysis.ledger.crash_records.iter().filter(|r| r.task == Some(b.task)).count() as u32;
    }
    let l = &analysis.ledger;
    let efficiency = efficiency_score(analysis.frames, job.frame_rate, l.battery_failed, job);
    let safety = safety_score(l, w);
    let accuracy = accuracy_score(l.true_detections, l.snapshots_taken, defect_count as u32, w);
    let mut notes = Vec::new();
    match &accuracy {
        None => notes.push("accuracy not applicable: the scenario has no defects".to_string()),
        Some(a) => notes.extend(a.note.clone()),
    }
    if conformity.per_task.iter().any(|t| !t.entered) {
        let missed: Vec<String> = conformity.per_task.iter().filter(|t| !t.entered).map(|t| t.task.to_string()).collect();
        notes.push(format!("tasks never entered: {}", missed.join(", ")));
    }
    let standardized = standardize(conformity.p_c, efficiency, safety, accuracy.as_ref().map(|a| a.p_a), w);
    ScoreCard {
        frames: analysis.frames,
        duration: analysis.frames as f64 / job.frame_rate,
        conformity,
        efficiency,
        safety,
        accuracy,
        standardized,
        notes,
    }
}
