//! Top-1 accuracy by question type and hop, and a question-only baseline.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qa::QaPair;
use crate::records::{parse_jsonl, JsonlError};
use crate::template::QuestionType;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvalError {
    #[error("prediction for `{0}` appears more than once")]
    DuplicatePrediction(String),
    #[error("question `{0}` appears more than once in the ground truth")]
    DuplicateQuestion(String),
    #[error("unparseable file: {0}")]
    Parse(#[from] JsonlError),
    #[error("baseline needs at least one training question")]
    EmptyTraining,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Prediction {
    pub question_id: String,
    pub answer: String,
}

/// Trimmed, lowercased; integers in canonical decimal form.
pub fn canonical_answer(answer: &str) -> String {
    let text = answer.trim().to_lowercase();
    match text.parse::<i64>() {
        Ok(n) => n.to_string(),
        Err(_) => text,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum HopColumn {
    H0,
    H1,
    All,
}

impl HopColumn {
    pub const ALL: [HopColumn; 3] = [HopColumn::H0, HopColumn::H1, HopColumn::All];

    pub fn as_str(self) -> &'static str {
        match self {
            HopColumn::H0 => "H0",
            HopColumn::H1 => "H1",
            HopColumn::All => "All",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub correct: usize,
    pub total: usize,
}

impl Cell {
    /// Percentage, or `None` for an empty cell.
    pub fn accuracy(&self) -> Option<f64> {
        (self.total > 0).then(|| 100.0 * self.correct as f64 / self.total as f64)
    }

    fn add(&mut self, correct: bool) {
        self.total += 1;
        self.correct += usize::from(correct);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub overall: Cell,
    pub cells: BTreeMap<QuestionType, BTreeMap<HopColumn, Cell>>,
    /// Ground-truth questions without a prediction; scored as wrong.
    pub missing: Vec<String>,
    /// Predictions whose id is not in the ground truth; ignored.
    pub unknown: Vec<String>,
}

impl MetricsReport {
    pub fn cell(&self, qtype: QuestionType, hop: HopColumn) -> Cell {
        self.cells.get(&qtype).and_then(|c| c.get(&hop)).copied().unwrap_or_default()
    }

    pub fn overall_accuracy(&self) -> Option<f64> {
        self.overall.accuracy()
    }

    /// Header and one row: `Exist-H0 … Comparison-All` then `Acc`.
    pub fn to_tsv(&self) -> String {
        let fmt = |c: Cell| c.accuracy().map_or_else(|| "-".to_string(), |a| format!("{a:.1}"));
        let mut header = Vec::new();
        let mut row = Vec::new();
        for qtype in QuestionType::ALL {
            for hop in HopColumn::ALL {
                header.push(format!("{}-{}", qtype.label(), hop.as_str()));
                row.push(fmt(self.cell(qtype, hop)));
            }
        }
        header.push("Acc".into());
        row.push(fmt(self.overall));
        let mut out = String::new();
        let _ = writeln!(out, "{}", header.join("\t"));
        let _ = writeln!(out, "{}", row.join("\t"));
        out
    }
}

pub fn parse_predictions(text: &str) -> Result<Vec<Prediction>, EvalError> {
    Ok(parse_jsonl(text)?.1)
}

/// Scores `predictions` against `gt`. Missing predictions count as wrong.
pub fn evaluate(gt: &[QaPair], predictions: &[Prediction]) -> Result<MetricsReport, EvalError> {
    let mut predicted: HashMap<&str, String> = HashMap::with_capacity(predictions.len());
    for p in predictions {
        if predicted.insert(&p.question_id, canonical_answer(&p.answer)).is_some() {
            return Err(EvalError::DuplicatePrediction(p.question_id.clone()));
        }
    }
    let mut seen = HashSet::with_capacity(gt.len());
    let mut report = MetricsReport { overall: Cell::default(), cells: BTreeMap::new(), missing: Vec::new(), unknown: Vec::new() };
    for q in gt {
        if !seen.insert(q.question_id.as_str()) {
            return Err(EvalError::DuplicateQuestion(q.question_id.clone()));
        }
        let correct = match predicted.get(q.question_id.as_str()) {
            Some(answer) => *answer == canonical_answer(&q.answer),
            None => {
                report.missing.push(q.question_id.clone());
                false
            }
        };
        let hop = if q.hop == 0 { HopColumn::H0 } else { HopColumn::H1 };
        let row = report.cells.entry(q.qtype).or_default();
        row.entry(hop).or_default().add(correct);
        row.entry(HopColumn::All).or_default().add(correct);
        report.overall.add(correct);
    }
    report.unknown = predictions.iter().filter(|p| !seen.contains(p.question_id.as_str())).map(|p| p.question_id.clone()).collect();
    report.unknown.sort();
    report.missing.sort();
    Ok(report)
}

/// Majority answer per template, ignoring the scene entirely.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BlindBaseline {
    pub per_template: BTreeMap<String, String>,
    pub fallback: String,
}

fn majority(counts: &BTreeMap<String, usize>) -> String {
    // BTreeMap iterates answers in lexicographic order; keep the first maximum.
    let mut best: Option<(&String, usize)> = None;
    for (answer, &n) in counts {
        if best.is_none_or(|(_, m)| n > m) {
            best = Some((answer, n));
        }
    }
    best.map(|(a, _)| a.clone()).unwrap_or_default()
}

impl BlindBaseline {
    pub fn fit(train: &[QaPair]) -> Result<Self, EvalError> {
        if train.is_empty() {
            return Err(EvalError::EmptyTraining);
        }
        let mut global: BTreeMap<String, usize> = BTreeMap::new();
        let mut templates: BTreeMap<&str, BTreeMap<String, usize>> = BTreeMap::new();
        for q in train {
            let answer = canonical_answer(&q.answer);
            *templates.entry(&q.template_id).or_default().entry(answer.clone()).or_default() += 1;
            *global.entry(answer).or_default() += 1;
        }
        Ok(BlindBaseline {
            per_template: templates.into_iter().map(|(t, c)| (t.to_string(), majority(&c))).collect(),
            fallback: majority(&global),
        })
    }

    pub fn predict(&self, question: &QaPair) -> &str {
        self.per_template.get(&question.template_id).unwrap_or(&self.fallback)
    }

    pub fn predictions(&self, questions: &[QaPair]) -> Vec<Prediction> {
        questions
            .iter()
            .map(|q| Prediction { question_id: q.question_id.clone(), answer: self.predict(q).to_string() })
            .collect()
    }
}
