//! Line-delimited JSON with an optional provenance header line.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Key of the header object on the first line of a JSONL output.
pub const HEADER_KEY: &str = "_header";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Header {
    pub tool: String,
    pub seed: u64,
    pub config_hash: String,
}

#[derive(Serialize, Deserialize)]
struct HeaderLine {
    #[serde(rename = "_header")]
    header: Header,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct JsonlError {
    pub line: usize,
    pub message: String,
}

/// Serializes `records` one per line, preceded by `header` if given.
pub fn to_jsonl<T: Serialize>(header: Option<&Header>, records: &[T]) -> String {
    let mut out = String::new();
    if let Some(header) = header {
        out.push_str(&serde_json::to_string(&HeaderLine { header: header.clone() }).expect("header serializes"));
        out.push('\n');
    }
    for record in records {
        out.push_str(&serde_json::to_string(record).expect("record serializes"));
        out.push('\n');
    }
    out
}

/// Parses records, skipping blank lines and the header line.
pub fn parse_jsonl<T: DeserializeOwned>(text: &str) -> Result<(Option<Header>, Vec<T>), JsonlError> {
    let mut header = None;
    let mut records = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if records.is_empty() && header.is_none() && line.contains(HEADER_KEY) {
            if let Ok(h) = serde_json::from_str::<HeaderLine>(line) {
                header = Some(h.header);
                continue;
            }
        }
        let record = serde_json::from_str(line).map_err(|e| JsonlError { line: i + 1, message: e.to_string() })?;
        records.push(record);
    }
    Ok((header, records))
}
