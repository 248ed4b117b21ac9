//! Post-session self-assessment on a five-point Likert scale, where 1
//! (strongly agree) is the most positive answer.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::AssessmentError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Calibration,
    Takeoff,
    Task1,
    Task2,
    Task3,
    Task4,
    Landing,
}

impl Phase {
    pub const ALL: [Phase; 7] = [
        Phase::Calibration,
        Phase::Takeoff,
        Phase::Task1,
        Phase::Task2,
        Phase::Task3,
        Phase::Task4,
        Phase::Landing,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Phase::Calibration => "calibration",
            Phase::Takeoff => "takeoff",
            Phase::Task1 => "task1",
            Phase::Task2 => "task2",
            Phase::Task3 => "task3",
            Phase::Task4 => "task4",
            Phase::Landing => "landing",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OverallRatings {
    pub time_pressure: u8,
    pub frustration: u8,
    pub in_task_feedback: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseRatings {
    pub performance: u8,
    pub mental_demand: u8,
    pub physical_demand: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionnaireResponse {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub participant: Option<String>,
    pub overall: OverallRatings,
    pub by_phase: BTreeMap<Phase, PhaseRatings>,
}

impl QuestionnaireResponse {
    /// Every (question, answer) pair, questions named `overall.x` or
    /// `<phase>.x`.
    pub fn answers(&self) -> Vec<(String, u8)> {
        let o = &self.overall;
        let mut out = vec![
            ("overall.time_pressure".to_string(), o.time_pressure),
            ("overall.frustration".to_string(), o.frustration),
            ("overall.in_task_feedback".to_string(), o.in_task_feedback),
        ];
        for (phase, r) in &self.by_phase {
            let p = phase.as_str();
            out.push((format!("{p}.performance"), r.performance));
            out.push((format!("{p}.mental_demand"), r.mental_demand));
            out.push((format!("{p}.physical_demand"), r.physical_demand));
        }
        out
    }
}

// Wide integer fields so out-of-range answers reach validation instead of
// failing inside serde.
#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOverall {
    time_pressure: i64,
    frustration: i64,
    in_task_feedback: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPhase {
    performance: i64,
    mental_demand: i64,
    physical_demand: i64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawForm {
    #[serde(default)]
    participant: Option<String>,
    overall: RawOverall,
    by_phase: BTreeMap<Phase, RawPhase>,
}

fn likert(field: String, v: i64) -> Result<u8, AssessmentError> {
    if (1..=5).contains(&v) {
        Ok(v as u8)
    } else {
        Err(AssessmentError::LikertRange { field, value: v })
    }
}

/// Validate a submitted form.
pub fn questionnaire_ingest(form: &serde_json::Value) -> Result<QuestionnaireResponse, AssessmentError> {
    let raw: RawForm =
        serde_json::from_value(form.clone()).map_err(|e| AssessmentError::Malformed(e.to_string()))?;
    let o = &raw.overall;
    let overall = OverallRatings {
        time_pressure: likert("overall.time_pressure".into(), o.time_pressure)?,
        frustration: likert("overall.frustration".into(), o.frustration)?,
        in_task_feedback: likert("overall.in_task_feedback".into(), o.in_task_feedback)?,
    };
    let mut by_phase = BTreeMap::new();
    for phase in Phase::ALL {
        let p = phase.as_str();
        let r = raw
            .by_phase
            .get(&phase)
            .ok_or_else(|| AssessmentError::Incomplete(format!("phase `{p}`")))?;
        by_phase.insert(
            phase,
            PhaseRatings {
                performance: likert(format!("{p}.performance"), r.performance)?,
                mental_demand: likert(format!("{p}.mental_demand"), r.mental_demand)?,
                physical_demand: likert(format!("{p}.physical_demand"), r.physical_demand)?,
            },
        );
    }
    Ok(QuestionnaireResponse {
        participant: raw.participant,
        overall,
        by_phase,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSummary {
    pub question: String,
    pub responses: usize,
    pub mean: f64,
    /// Lowest answer (closest to strongly agree).
    pub most_positive: u8,
    pub most_negative: u8,
}

/// Mean and extremes per question over all responses.
pub fn questionnaire_summary(responses: &[QuestionnaireResponse]) -> Vec<QuestionSummary> {
    let mut by_q: Vec<(String, Vec<u8>)> = Vec::new();
    for r in responses {
        for (q, v) in r.answers() {
            match by_q.iter_mut().find(|(name, _)| *name == q) {
                Some((_, vs)) => vs.push(v),
                None => by_q.push((q, vec![v])),
            }
        }
    }
    by_q.into_iter()
        .map(|(question, vs)| QuestionSummary {
            question,
            responses: vs.len(),
            mean: vs.iter().map(|&v| f64::from(v)).sum::<f64>() / vs.len() as f64,
            most_positive: *vs.iter().min().expect("non-empty"),
            most_negative: *vs.iter().max().expect("non-empty"),
        })
        .collect()
}
