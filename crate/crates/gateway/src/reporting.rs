//! Report bundles for stored sessions and participant groups.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bridgesim::assessment::{
    build_report, crash_by_task, emit_group_report, emit_report, group_summary, questionnaire_summary, GroupReport,
    QuestionnaireResponse, ReportInput, ScoreCard, ScoreCardRow, SessionReport,
};
use bridgesim::session::{replay, Replay, SessionStore};

fn questionnaire_path(store: &SessionStore, participant: &str, repetition: u32) -> Result<PathBuf> {
    Ok(store.participant_dir(participant)?.join(format!("questionnaire-{repetition:03}.json")))
}

/// Keep a questionnaire next to the session it belongs to.
pub fn save_questionnaire(
    store: &SessionStore,
    participant: &str,
    repetition: u32,
    response: &QuestionnaireResponse,
) -> Result<PathBuf> {
    let path = questionnaire_path(store, participant, repetition)?;
    fs::create_dir_all(path.parent().expect("participant dir"))?;
    fs::write(&path, serde_json::to_vec_pretty(response)?).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn load_questionnaire(store: &SessionStore, participant: &str, repetition: u32) -> Result<Option<QuestionnaireResponse>> {
    let path = questionnaire_path(store, participant, repetition)?;
    if !path.is_file() {
        return Ok(None);
    }
    let text = fs::read_to_string(&path)?;
    Ok(Some(serde_json::from_str(&text).with_context(|| format!("reading {}", path.display()))?))
}

/// Build and write the report for one logged session.
///
/// The improvement series and CSV cover every recorded session up to this
/// one; an unrecorded (practice) session is appended to the end.
pub fn write_session_report(
    store: &SessionStore,
    participant: &str,
    repetition: u32,
    log: &Path,
    questionnaire: Option<&QuestionnaireResponse>,
    out: Option<&Path>,
) -> Result<(PathBuf, SessionReport)> {
    let Replay { outcome, log: parsed } = replay(log).with_context(|| format!("replaying {}", log.display()))?;
    let history = store.history(participant)?;
    let mut cards: Vec<ScoreCard> = history
        .iter()
        .filter(|e| e.repetition < repetition)
        .map(|e| e.scorecard.clone())
        .collect();
    cards.push(outcome.scorecard.clone());
    let stored = match questionnaire {
        Some(_) => None,
        None => load_questionnaire(store, participant, repetition)?,
    };
    let scenario = &parsed.header.scenario;
    let task_ids: Vec<u32> = scenario.tasks.iter().map(|t| t.id).collect();
    let report = build_report(ReportInput {
        participant,
        session: repetition,
        scenario: &scenario.name,
        end_reason: outcome.end.as_str(),
        card: &outcome.scorecard,
        ledger: &outcome.analysis.ledger,
        task_ids: &task_ids,
        defects: scenario.defects.len() as u32,
        questionnaire: questionnaire.or(stored.as_ref()),
        history: &cards,
    });
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => store.report_dir(participant, repetition)?,
    };
    emit_report(&dir, &report, &cards).with_context(|| format!("writing report to {}", dir.display()))?;
    Ok((dir, report))
}

/// Report for a participant's latest (or given) recorded session.
pub fn participant_report(
    store: &SessionStore,
    participant: &str,
    session: Option<u32>,
    questionnaire: Option<&QuestionnaireResponse>,
    out: Option<&Path>,
) -> Result<(PathBuf, SessionReport)> {
    let history = store.history(participant)?;
    let entry = match session {
        Some(n) => history.iter().find(|e| e.repetition == n),
        None => history.last(),
    };
    let Some(entry) = entry else {
        bail!("no recorded session for participant `{participant}`");
    };
    if let Some(q) = questionnaire {
        save_questionnaire(store, participant, entry.repetition, q)?;
    }
    write_session_report(store, participant, entry.repetition, &entry.log, questionnaire, out)
}

/// Group statistics over a directory that is either a session store (one
/// subdirectory per participant) or a folder of score card JSON files.
pub fn build_group_report(dir: &Path) -> Result<GroupReport> {
    let store = SessionStore::new(dir);
    let participants = store.participants()?;
    if participants.is_empty() {
        return cards_group_report(dir);
    }
    let mut cards = Vec::new();
    let mut crash_stacks = BTreeMap::new();
    let mut responses = Vec::new();
    let mut rows = Vec::new();
    for p in &participants {
        let history = store.history(p)?;
        for e in &history {
            rows.push(ScoreCardRow::new(p, e.repetition, &e.scorecard));
        }
        let Some(last) = history.last() else { continue };
        cards.push((p.clone(), last.scorecard.clone()));
        if let Ok(r) = replay(&last.log) {
            let ids: Vec<u32> = r.log.header.scenario.tasks.iter().map(|t| t.id).collect();
            crash_stacks.insert(p.clone(), crash_by_task(&r.outcome.analysis.ledger, &ids));
        }
        if let Some(q) = load_questionnaire(&store, p, last.repetition)? {
            responses.push(q);
        }
    }
    Ok(GroupReport {
        stats: group_summary(&cards)?,
        crash_stacks,
        questionnaire: questionnaire_summary(&responses),
        scorecards: rows,
    })
}

fn cards_group_report(dir: &Path) -> Result<GroupReport> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading {}", dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "json"))
        .collect();
    files.sort();
    let mut cards = Vec::new();
    for f in &files {
        let text = fs::read_to_string(f)?;
        let card: ScoreCard =
            serde_json::from_str(&text).with_context(|| format!("{} is not a score card", f.display()))?;
        let label = f.file_stem().unwrap_or_default().to_string_lossy().into_owned();
        cards.push((label, card));
    }
    let rows = cards.iter().map(|(p, c)| ScoreCardRow::new(p, 1, c)).collect();
    Ok(GroupReport {
        stats: group_summary(&cards)?,
        crash_stacks: BTreeMap::new(),
        questionnaire: Vec::new(),
        scorecards: rows,
    })
}

pub fn write_group_report(dir: &Path, out: &Path) -> Result<(PathBuf, GroupReport)> {
    let report = build_group_report(dir)?;
    emit_group_report(out, &report).with_context(|| format!("writing group report to {}", out.display()))?;
    Ok((out.to_path_buf(), report))
}
