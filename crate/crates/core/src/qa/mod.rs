//! Question–answer pair generation over scene graphs.

mod balance;
mod config;
mod dataset;
mod exec;
mod instantiate;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::scene::{label_display, label_token, Taxonomy};
use crate::template::{AnswerType, Binding, QuestionType};

pub use balance::{balance, balance_with_report};
pub use config::{Blacklist, BlacklistError, GenerationConfig, RejectionPolicy};
pub use dataset::{
    generate_dataset, generate_dataset_with, generate_scene, split_of, Dataset, GenerateError, GenerationReport,
    SceneOutput, Split,
};
pub use exec::{execute_program, execute_traced, ExecError, Execution, NodeSet};
pub use instantiate::{instantiate, reject, Candidate, Instantiation, TemplateYield};

/// Typed ground-truth answer.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Answer {
    Bool(bool),
    Count(usize),
    /// Category token.
    Category(String),
    /// Status token.
    Status(String),
}

impl Answer {
    pub fn answer_type(&self) -> AnswerType {
        match self {
            Answer::Bool(_) => AnswerType::Boolean,
            Answer::Count(_) => AnswerType::Integer,
            Answer::Category(_) => AnswerType::Category,
            Answer::Status(_) => AnswerType::Status,
        }
    }

    /// Parses answer text back into the answer space of `answer_type`.
    pub fn parse(text: &str, answer_type: AnswerType, taxonomy: &Taxonomy, count_cap: usize) -> Option<Answer> {
        let text = text.trim().to_lowercase();
        match answer_type {
            AnswerType::Boolean => match text.as_str() {
                "yes" => Some(Answer::Bool(true)),
                "no" => Some(Answer::Bool(false)),
                _ => None,
            },
            AnswerType::Integer => text.parse::<usize>().ok().filter(|n| *n <= count_cap).map(Answer::Count),
            AnswerType::Category => {
                let token = label_token(&text);
                taxonomy.has_category(&token).then_some(Answer::Category(token))
            }
            AnswerType::Status => {
                let token = label_token(&text);
                taxonomy.has_status(&token).then_some(Answer::Status(token))
            }
        }
    }
}

impl fmt::Display for Answer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Answer::Bool(true) => f.write_str("yes"),
            Answer::Bool(false) => f.write_str("no"),
            Answer::Count(n) => write!(f, "{n}"),
            Answer::Category(c) | Answer::Status(c) => f.write_str(&label_display(c)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectReason {
    NonUniqueReference,
    EmptyReference,
    /// A status question or comparison touches an object without a status.
    MissingStatus,
    BlacklistedCombo,
    CountOverCap,
    TrivialDegenerate,
}

/// One generated question with its inferred answer and provenance.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QaPair {
    pub question_id: String,
    pub scene_id: String,
    pub question: String,
    pub answer: String,
    pub template_id: String,
    pub hop: u8,
    pub qtype: QuestionType,
    #[serde(rename = "variant")]
    pub variant_index: usize,
    pub binding: Binding,
}
