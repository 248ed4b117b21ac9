//! Post-session scoring along four dimensions (conformity, efficiency,
//! safety, accuracy), chart payloads, group statistics and reports.

mod charts;
mod group;
mod questionnaire;
mod report;
mod scoring;

pub use charts::{
    accuracy_summary, conformity_waterfall, crash_by_task, improvement_series, kiviat_data, relative_change,
    task_bucket, AccuracySummary, CrashStack, ImprovementPoint, KiviatAxis, Waterfall, WaterfallStep, TRANSIT,
};
pub use group::{group_summary, quartiles, BoxStats, GroupStats, LabeledValue};
pub use questionnaire::{
    questionnaire_ingest, questionnaire_summary, OverallRatings, Phase, PhaseRatings, QuestionSummary,
    QuestionnaireResponse,
};
pub use report::{
    build_report, emit_group_report, emit_report, write_scorecard_csv, GroupReport, ReportInput, ScoreCardRow,
    SessionEvents, SessionReport,
};
pub use scoring::{
    accuracy_score, conformity_score, efficiency_score, f_beta, safety_score, score_session, standardize, Accuracy,
    Conformity, ScoreCard, Standardized, TaskBreakdown, DIMENSIONS, NO_SNAPSHOTS_NOTE,
};
