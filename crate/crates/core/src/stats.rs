//! Descriptive statistics over a generated dataset.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qa::QaPair;
use crate::template::QuestionType;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum StatsError {
    #[error("dataset is empty")]
    Empty,
    #[error("prefix depth must be at least 1")]
    ZeroDepth,
}

/// Lowercases, strips `?.,;` and splits on whitespace.
pub fn tokenize(question: &str) -> Vec<String> {
    question
        .to_lowercase()
        .chars()
        .filter(|c| !matches!(c, '?' | '.' | ',' | ';'))
        .collect::<String>()
        .split_whitespace()
        .map(String::from)
        .collect()
}

/// Counts of question prefixes, one level per word.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrefixTrie {
    pub count: usize,
    pub children: BTreeMap<String, PrefixTrie>,
}

impl PrefixTrie {
    fn insert(&mut self, words: &[String]) {
        self.count += 1;
        if let Some((first, rest)) = words.split_first() {
            self.children.entry(first.clone()).or_default().insert(rest);
        }
    }

    fn merge(&mut self, other: PrefixTrie) {
        self.count += other.count;
        for (word, child) in other.children {
            self.children.entry(word).or_default().merge(child);
        }
    }

    /// Count of questions starting with `words`.
    pub fn count_of(&self, words: &[&str]) -> usize {
        match words.split_first() {
            None => self.count,
            Some((first, rest)) => self.children.get(*first).map_or(0, |c| c.count_of(rest)),
        }
    }

    fn walk<'a>(&'a self, prefix: &mut Vec<&'a str>, out: &mut Vec<(String, usize)>) {
        if self.children.is_empty() {
            out.push((prefix.join(" "), self.count));
            return;
        }
        for (word, child) in &self.children {
            prefix.push(word);
            child.walk(prefix, out);
            prefix.pop();
        }
    }

    /// Every leaf prefix with its count.
    pub fn leaves(&self) -> Vec<(String, usize)> {
        let mut out = Vec::new();
        self.walk(&mut Vec::new(), &mut out);
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsReport {
    pub total: usize,
    pub k: usize,
    pub length_histogram: BTreeMap<usize, usize>,
    pub answer_histograms: BTreeMap<QuestionType, BTreeMap<String, usize>>,
    pub qtype_histogram: BTreeMap<QuestionType, usize>,
    pub prefixes: PrefixTrie,
}

impl StatsReport {
    fn empty(k: usize) -> Self {
        StatsReport {
            total: 0,
            k,
            length_histogram: BTreeMap::new(),
            answer_histograms: BTreeMap::new(),
            qtype_histogram: BTreeMap::new(),
            prefixes: PrefixTrie::default(),
        }
    }

    fn add(&mut self, pair: &QaPair) {
        let words = tokenize(&pair.question);
        self.total += 1;
        *self.length_histogram.entry(words.len()).or_default() += 1;
        *self.answer_histograms.entry(pair.qtype).or_default().entry(pair.answer.clone()).or_default() += 1;
        *self.qtype_histogram.entry(pair.qtype).or_default() += 1;
        self.prefixes.insert(&words[..words.len().min(self.k)]);
    }

    /// Combines two reports over disjoint parts of a dataset.
    pub fn merge(mut self, other: StatsReport) -> StatsReport {
        debug_assert_eq!(self.k, other.k);
        self.total += other.total;
        for (len, n) in other.length_histogram {
            *self.length_histogram.entry(len).or_default() += n;
        }
        for (qtype, answers) in other.answer_histograms {
            let mine = self.answer_histograms.entry(qtype).or_default();
            for (answer, n) in answers {
                *mine.entry(answer).or_default() += n;
            }
        }
        for (qtype, n) in other.qtype_histogram {
            *self.qtype_histogram.entry(qtype).or_default() += n;
        }
        self.prefixes.merge(other.prefixes);
        self
    }

    pub fn min_length(&self) -> Option<usize> {
        self.length_histogram.keys().next().copied()
    }

    pub fn max_length(&self) -> Option<usize> {
        self.length_histogram.keys().next_back().copied()
    }

    pub fn length_table(&self) -> String {
        let mut out = String::from("words\tcount\n");
        for (len, n) in &self.length_histogram {
            let _ = writeln!(out, "{len}\t{n}");
        }
        out
    }

    pub fn answer_table(&self) -> String {
        let mut out = String::from("qtype\tanswer\tcount\n");
        for (qtype, answers) in &self.answer_histograms {
            for (answer, n) in answers {
                let _ = writeln!(out, "{qtype}\t{answer}\t{n}");
            }
        }
        out
    }

    pub fn prefix_table(&self) -> String {
        let mut out = String::from("prefix\tcount\n");
        for (prefix, n) in self.prefixes.leaves() {
            let _ = writeln!(out, "{prefix}\t{n}");
        }
        out
    }
}

/// Statistics over `pairs` with first-`k`-word prefixes.
pub fn compute_stats(pairs: &[QaPair], k: usize) -> Result<StatsReport, StatsError> {
    if k == 0 {
        return Err(StatsError::ZeroDepth);
    }
    if pairs.is_empty() {
        return Err(StatsError::Empty);
    }
    let mut report = StatsReport::empty(k);
    for pair in pairs {
        report.add(pair);
    }
    Ok(report)
}
