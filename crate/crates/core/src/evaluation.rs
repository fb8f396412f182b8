//! Scoring predictions against gold QA items.
//!
//! Text-like answers (choice, binary, text) score 1 on a case-insensitive
//! exact match after trimming and 0 otherwise. Numeric answers use mean
//! relative accuracy over ten tolerance levels: the prediction passes level
//! `k ∈ {5, 10, …, 50}` percent when its relative error is strictly below
//! `k/100`, and the score is the fraction of levels passed.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use serde::{Deserialize, Deserializer, Serialize};
use thiserror::Error;

use crate::io::{fixed6, read_jsonl, IoError};
use crate::qa::{Answer, AnswerType, QaItem, QuestionCategory};

/// Relative-error tolerances in percent, loosest last.
pub const TOLERANCE_LEVELS_PCT: [u32; 10] = [5, 10, 15, 20, 25, 30, 35, 40, 45, 50];

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("duplicate prediction for {0}")]
    DuplicatePrediction(String),
    #[error("duplicate gold item {0}")]
    DuplicateGold(String),
    #[error("prediction for unknown item {0}")]
    UnknownItem(String),
    #[error("{path}: {source}")]
    File {
        path: String,
        #[source]
        source: IoError,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub qa_id: String,
    /// Accepts a JSON string or number on input.
    #[serde(deserialize_with = "string_or_number")]
    pub value: String,
}

fn string_or_number<'de, D: Deserializer<'de>>(d: D) -> Result<String, D::Error> {
    match serde_json::Value::deserialize(d)? {
        serde_json::Value::String(s) => Ok(s),
        serde_json::Value::Number(n) => Ok(n.to_string()),
        other => Err(serde::de::Error::custom(format!("expected string or number, got {other}"))),
    }
}

/// Reads a leading number, optionally followed by a unit word such as
/// `m`, `meters` or `square meters`.
pub fn parse_numeric(text: &str) -> Option<f64> {
    let t = text.trim();
    let end = t
        .char_indices()
        .find(|(_, c)| !(c.is_ascii_digit() || matches!(c, '.' | '-' | '+' | 'e' | 'E')))
        .map(|(i, _)| i)
        .unwrap_or(t.len());
    let (num, unit) = t.split_at(end);
    let v: f64 = num.parse().ok()?;
    let unit = unit.trim().to_lowercase();
    let known = ["", "m", "meter", "meters", "m2", "m^2", "m²", "sq m", "square meter", "square meters"];
    (v.is_finite() && known.contains(&unit.as_str())).then_some(v)
}

/// Mean relative accuracy of `pred` against `gold`.
pub fn mean_relative_accuracy(gold: f64, pred: f64) -> f64 {
    if !pred.is_finite() {
        return 0.0;
    }
    let err = (pred - gold).abs();
    let denom = gold.max(1e-9);
    // compare 100·err < k·denom so that boundary cases like a 5% error
    // against a 5% tolerance are decided without rounding noise
    let passed = TOLERANCE_LEVELS_PCT
        .iter()
        .filter(|&&k| 100.0 * err < f64::from(k) * denom)
        .count();
    passed as f64 / TOLERANCE_LEVELS_PCT.len() as f64
}

fn normalize(s: &str) -> String {
    s.trim().to_lowercase()
}

/// Score in `[0, 1]`; an unparsable numeric prediction scores 0.
pub fn score_item(gold: &QaItem, pred: &Prediction) -> f64 {
    score_detailed(gold, pred).0
}

/// Score plus whether a numeric prediction failed to parse.
fn score_detailed(gold: &QaItem, pred: &Prediction) -> (f64, bool) {
    match (&gold.answer_type, &gold.answer) {
        (AnswerType::Number, Answer::Number(g)) => match parse_numeric(&pred.value) {
            Some(p) => (mean_relative_accuracy(*g, p), false),
            None => (0.0, true),
        },
        (_, answer) => {
            let hit = normalize(&answer.as_text()) == normalize(&pred.value);
            (if hit { 1.0 } else { 0.0 }, false)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryReport {
    pub category: QuestionCategory,
    #[serde(serialize_with = "fixed6")]
    pub accuracy: f64,
    pub items: usize,
    pub missing: usize,
    pub unparsable: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    /// Unweighted mean over the categories present in the gold set.
    #[serde(serialize_with = "fixed6")]
    pub overall: f64,
    pub items: usize,
    pub missing: usize,
    pub unparsable: usize,
    pub categories: Vec<CategoryReport>,
    /// Ids of unparsable numeric predictions, sorted.
    pub flagged: Vec<String>,
}

impl EvalReport {
    pub fn to_json_pretty(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    pub fn category(&self, c: QuestionCategory) -> Option<&CategoryReport> {
        self.categories.iter().find(|r| r.category == c)
    }
}

/// Scores every gold item; items without a prediction score 0.
pub fn evaluate(gold: &[QaItem], predictions: &[Prediction]) -> Result<EvalReport, EvalError> {
    let mut gold_ids = HashMap::with_capacity(gold.len());
    for g in gold {
        if gold_ids.insert(g.qa_id.as_str(), ()).is_some() {
            return Err(EvalError::DuplicateGold(g.qa_id.clone()));
        }
    }
    let mut by_id: HashMap<&str, &Prediction> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if !gold_ids.contains_key(p.qa_id.as_str()) {
            return Err(EvalError::UnknownItem(p.qa_id.clone()));
        }
        if by_id.insert(p.qa_id.as_str(), p).is_some() {
            return Err(EvalError::DuplicatePrediction(p.qa_id.clone()));
        }
    }

    #[derive(Default)]
    struct Acc {
        // every score is a whole number of tenths
        tenths: u64,
        items: usize,
        missing: usize,
        unparsable: usize,
    }
    let mut acc: BTreeMap<QuestionCategory, Acc> = BTreeMap::new();
    let mut flagged = Vec::new();
    for g in gold {
        let a = acc.entry(g.category).or_default();
        a.items += 1;
        match by_id.get(g.qa_id.as_str()) {
            None => a.missing += 1,
            Some(p) => {
                let (score, bad) = score_detailed(g, p);
                a.tenths += (score * 10.0).round() as u64;
                if bad {
                    a.unparsable += 1;
                    flagged.push(g.qa_id.clone());
                }
            }
        }
    }
    flagged.sort();

    let categories: Vec<CategoryReport> = QuestionCategory::ALL
        .iter()
        .filter_map(|c| {
            acc.get(c).map(|a| CategoryReport {
                category: *c,
                accuracy: a.tenths as f64 / (10 * a.items) as f64,
                items: a.items,
                missing: a.missing,
                unparsable: a.unparsable,
            })
        })
        .collect();
    let overall = if categories.is_empty() {
        0.0
    } else {
        categories.iter().map(|c| c.accuracy).sum::<f64>() / categories.len() as f64
    };
    Ok(EvalReport {
        overall,
        items: gold.len(),
        missing: categories.iter().map(|c| c.missing).sum(),
        unparsable: flagged.len(),
        categories,
        flagged,
    })
}

fn load<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, EvalError> {
    let wrap = |source: IoError| EvalError::File {
        path: path.display().to_string(),
        source,
    };
    let f = File::open(path).map_err(|e| wrap(e.into()))?;
    read_jsonl(BufReader::new(f)).map_err(wrap)
}

/// [`evaluate`] over a gold QA file and a prediction file, both JSONL.
pub fn evaluate_files(gold_path: &Path, pred_path: &Path) -> Result<EvalReport, EvalError> {
    let gold: Vec<QaItem> = load(gold_path)?;
    let preds: Vec<Prediction> = load(pred_path)?;
    evaluate(&gold, &preds)
}
