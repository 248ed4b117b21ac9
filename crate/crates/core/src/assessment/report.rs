use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::charts::{
    accuracy_summary, conformity_waterfall, crash_by_task, improvement_series, kiviat_data, AccuracySummary,
    CrashStack, ImprovementPoint, KiviatAxis, Waterfall,
};
use super::group::GroupStats;
use super::questionnaire::{QuestionSummary, QuestionnaireResponse};
use super::scoring::ScoreCard;
use crate::error::AssessmentError;
use crate::telemetry::{CrashRecord, EventLedger, SnapshotRecord};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionEvents {
    pub crashes: Vec<CrashRecord>,
    pub snapshots: Vec<SnapshotRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub participant: String,
    pub session: u32,
    pub scenario: String,
    pub end_reason: String,
    pub scorecard: ScoreCard,
    pub kiviat: Vec<KiviatAxis>,
    pub waterfall: Waterfall,
    pub crashes: CrashStack,
    pub accuracy: AccuracySummary,
    pub events: SessionEvents,
    /// Present only when the participant filled in the questionnaire.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub self_assessment: Option<QuestionnaireResponse>,
    /// All sessions of this participant so far, oldest first.
    pub improvement: Vec<ImprovementPoint>,
}

pub struct ReportInput<'a> {
    pub participant: &'a str,
    pub session: u32,
    pub scenario: &'a str,
    pub end_reason: &'a str,
    pub card: &'a ScoreCard,
    pub ledger: &'a EventLedger,
    pub task_ids: &'a [u32],
    pub defects: u32,
    pub questionnaire: Option<&'a QuestionnaireResponse>,
    /// Score cards of every session including this one, oldest first.
    pub history: &'a [ScoreCard],
}

pub fn build_report(input: ReportInput<'_>) -> SessionReport {
    let card = input.card;
    let standardized: Vec<_> = input.history.iter().map(|c| c.standardized).collect();
    SessionReport {
        participant: input.participant.to_string(),
        session: input.session,
        scenario: input.scenario.to_string(),
        end_reason: input.end_reason.to_string(),
        scorecard: card.clone(),
        kiviat: kiviat_data(&card.standardized),
        waterfall: conformity_waterfall(card),
        crashes: crash_by_task(input.ledger, input.task_ids),
        accuracy: accuracy_summary(card, input.ledger, input.defects),
        events: SessionEvents {
            crashes: input.ledger.crash_records.clone(),
            snapshots: input.ledger.snapshots.clone(),
        },
        self_assessment: input.questionnaire.cloned(),
        improvement: improvement_series(&standardized),
    }
}

/// Flat score card row for spreadsheets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreCardRow {
    pub participant: String,
    pub session: u32,
    pub frames: u64,
    pub duration_s: f64,
    pub on_path: f64,
    pub speeding: f64,
    pub conformity: f64,
    pub efficiency: f64,
    pub safety: f64,
    pub accuracy: Option<f64>,
    pub recall: Option<f64>,
    pub precision: Option<f64>,
    pub f_beta: Option<f64>,
    pub conformity_pct: f64,
    pub efficiency_pct: f64,
    pub safety_pct: f64,
    pub accuracy_pct: Option<f64>,
}

impl ScoreCardRow {
    pub fn new(participant: &str, session: u32, c: &ScoreCard) -> Self {
        let a = c.accuracy.as_ref();
        Self {
            participant: participant.to_string(),
            session,
            frames: c.frames,
            duration_s: c.duration,
            on_path: c.conformity.p_p,
            speeding: c.conformity.p_s,
            conformity: c.conformity.p_c,
            efficiency: c.efficiency,
            safety: c.safety,
            accuracy: a.map(|a| a.p_a),
            recall: a.map(|a| a.recall),
            precision: a.map(|a| a.precision),
            f_beta: a.map(|a| a.f_beta),
            conformity_pct: c.standardized.conformity,
            efficiency_pct: c.standardized.efficiency,
            safety_pct: c.standardized.safety,
            accuracy_pct: c.standardized.accuracy,
        }
    }
}

pub fn write_scorecard_csv(path: &Path, rows: &[ScoreCardRow]) -> Result<(), AssessmentError> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|source| AssessmentError::Write { path: path.to_path_buf(), source })?;
    Ok(())
}

fn write_json<T: Serialize>(path: PathBuf, value: &T, written: &mut Vec<PathBuf>) -> Result<(), AssessmentError> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(&path, text + "\n").map_err(|source| AssessmentError::Write { path: path.clone(), source })?;
    written.push(path);
    Ok(())
}

fn make_dir(path: &Path) -> Result<(), AssessmentError> {
    fs::create_dir_all(path).map_err(|source| AssessmentError::Write { path: path.to_path_buf(), source })
}

/// Write `report.json`, chart payloads under `charts/` and
/// `scorecard.csv` (one row per session in `history`). Returns the paths
/// written.
pub fn emit_report(dir: &Path, report: &SessionReport, history: &[ScoreCard]) -> Result<Vec<PathBuf>, AssessmentError> {
    let charts = dir.join("charts");
    make_dir(&charts)?;
    let mut written = Vec::new();
    write_json(dir.join("report.json"), report, &mut written)?;
    write_json(charts.join("kiviat.json"), &report.kiviat, &mut written)?;
    write_json(charts.join("waterfall.json"), &report.waterfall, &mut written)?;
    write_json(charts.join("crashes.json"), &report.crashes, &mut written)?;
    write_json(charts.join("accuracy.json"), &report.accuracy, &mut written)?;
    write_json(charts.join("improvement.json"), &report.improvement, &mut written)?;
    let rows: Vec<_> = history
        .iter()
        .enumerate()
        .map(|(k, c)| ScoreCardRow::new(&report.participant, k as u32 + 1, c))
        .collect();
    let csv_path = dir.join("scorecard.csv");
    write_scorecard_csv(&csv_path, &rows)?;
    written.push(csv_path);
    Ok(written)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupReport {
    pub stats: GroupStats,
    pub crash_stacks: BTreeMap<String, CrashStack>,
    pub questionnaire: Vec<QuestionSummary>,
    pub scorecards: Vec<ScoreCardRow>,
}

/// Write `group.json`, `charts/boxplot.json`, `charts/crash_stacks.json`,
/// `charts/questionnaire.json` and `scorecards.csv`.
pub fn emit_group_report(dir: &Path, report: &GroupReport) -> Result<Vec<PathBuf>, AssessmentError> {
    let charts = dir.join("charts");
    make_dir(&charts)?;
    let mut written = Vec::new();
    write_json(dir.join("group.json"), report, &mut written)?;
    write_json(charts.join("boxplot.json"), &report.stats.dimensions, &mut written)?;
    write_json(charts.join("crash_stacks.json"), &report.crash_stacks, &mut written)?;
    write_json(charts.join("questionnaire.json"), &report.questionnaire, &mut written)?;
    let csv_path = dir.join("scorecards.csv");
    write_scorecard_csv(&csv_path, &report.scorecards)?;
    written.push(csv_path);
    Ok(written)
}
