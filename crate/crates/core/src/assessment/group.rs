use serde::{Deserialize, Serialize};

use super::scoring::{ScoreCard, DIMENSIONS};
use crate::error::AssessmentError;

/// Five-number summary with the individual values it was built from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStats {
    pub dimension: String,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub points: Vec<LabeledValue>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledValue {
    pub label: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub participants: usize,
    /// One entry per dimension with at least one applicable value.
    pub dimensions: Vec<BoxStats>,
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

/// Quartiles by the exclusive median-of-halves rule: for odd counts the
/// median is left out of both halves. A single value is its own quartiles.
pub fn quartiles(values: &[f64]) -> Option<[f64; 5]> {
    let mut v: Vec<f64> = values.to_vec();
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    let m = median(&v);
    if n == 1 {
        return Some([v[0]; 5]);
    }
    let lower = &v[..n / 2];
    let upper = &v[n.div_ceil(2)..];
    Some([v[0], median(lower), m, median(upper), v[n - 1]])
}

/// Distribution of standardized scores across participants.
pub fn group_summary(cards: &[(String, ScoreCard)]) -> Result<GroupStats, AssessmentError> {
    if cards.is_empty() {
        return Err(AssessmentError::EmptyGroup);
    }
    let mut dimensions = Vec::new();
    for (d, name) in DIMENSIONS.iter().enumerate() {
        let points: Vec<LabeledValue> = cards
            .iter()
            .filter_map(|(label, c)| {
                c.standardized.as_array()[d].map(|value| LabeledValue { label: label.clone(), value })
            })
            .collect();
        let values: Vec<f64> = points.iter().map(|p| p.value).collect();
        if let Some([min, q1, median, q3, max]) = quartiles(&values) {
            dimensions.push(BoxStats {
                dimension: name.to_string(),
                min,
                q1,
                median,
                q3,
                max,
                points,
            });
        }
    }
    Ok(GroupStats {
        participants: cards.len(),
        dimensions,
    })
}
