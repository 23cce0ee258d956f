use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::scene::{label_token, Taxonomy};
use crate::template::QuestionType;

#[derive(Debug, Error, Clone, PartialEq)]
#[error("blacklist line {line}: expected `status,category`, got `{text}`")]
pub struct BlacklistError {
    pub line: usize,
    pub text: String,
}

/// Forbidden (status, category) combinations, stored as label tokens.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Blacklist(BTreeSet<(String, String)>);

impl Blacklist {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Every status a category never carries in the default taxonomy.
    pub fn taxonomy_default(taxonomy: &Taxonomy) -> Self {
        let mut list = Blacklist::empty();
        for category in &taxonomy.categories {
            let valid = Taxonomy::default_valid_statuses(category);
            for status in &taxonomy.statuses {
                if !valid.contains(&status.as_str()) {
                    list.insert(status, category);
                }
            }
        }
        list
    }

    /// Parses `status,category` lines; `#` starts a comment.
    pub fn parse(text: &str) -> Result<Self, BlacklistError> {
        let mut list = Blacklist::empty();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            match line.split_once(',') {
                Some((status, category)) if !status.trim().is_empty() && !category.trim().is_empty() => {
                    list.insert(status, category)
                }
                _ => return Err(BlacklistError { line: i + 1, text: raw.to_string() }),
            }
        }
        Ok(list)
    }

    pub fn to_text(&self) -> String {
        self.0.iter().map(|(s, c)| format!("{s},{c}\n")).collect()
    }

    pub fn insert(&mut self, status: &str, category: &str) {
        self.0.insert((label_token(status), label_token(category)));
    }

    pub fn contains(&self, status: &str, category: &str) -> bool {
        self.0.contains(&(status.to_string(), category.to_string()))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.0.iter().map(|(s, c)| (s.as_str(), c.as_str()))
    }
}

impl Serialize for Blacklist {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.0.iter().map(|(s, c)| format!("{s},{c}")))
    }
}

impl<'de> Deserialize<'de> for Blacklist {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let lines = Vec::<String>::deserialize(deserializer)?;
        Blacklist::parse(&lines.join("\n")).map_err(serde::de::Error::custom)
    }
}

/// Which post-execution filters are active. Reference uniqueness is not
/// optional: a program cannot be answered without it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RejectionPolicy {
    pub blacklist: bool,
    pub count_cap: bool,
    pub trivial: bool,
}

impl Default for RejectionPolicy {
    fn default() -> Self {
        Self { blacklist: true, count_cap: true, trivial: true }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GenerationConfig {
    pub seed: u64,
    /// Upper bound on pairs kept per scene; 0 disables the cap.
    pub max_pairs_per_scene: usize,
    /// Pairs emitted per (scene, template) before the search moves on.
    pub max_candidates_per_template: usize,
    /// Valid bindings collected per (scene, template) before the search
    /// stops; emitted pairs are chosen from this pool.
    pub max_pool_per_template: usize,
    /// Complete bindings examined per (scene, template).
    pub max_leaves_per_template: usize,
    /// Chance that an unconstrained status is offered at a search node.
    pub empty_status_probability: f64,
    /// Largest admissible counting answer.
    pub count_cap: usize,
    /// Per-qtype ratio between the most and least frequent answer.
    pub balance_cap: f64,
    /// Largest share of a question type's pairs that balancing may discard
    /// by dropping its rarest answers entirely.
    pub balance_tail_fraction: f64,
    /// Yes/no ratio cap applied inside each binary template before the
    /// per-type pass; `inf` disables it.
    pub template_balance_cap: f64,
    /// Overrides of `balance_cap` for individual question types.
    pub answer_caps: BTreeMap<QuestionType, f64>,
    /// Fraction of scenes assigned to the train split.
    pub train_fraction: f64,
    pub blacklist: Blacklist,
    pub rejection: RejectionPolicy,
    pub taxonomy: Taxonomy,
}

impl Default for GenerationConfig {
    fn default() -> Self {
        let taxonomy = Taxonomy::default();
        Self {
            seed: 0,
            max_pairs_per_scene: 64,
            max_candidates_per_template: 32,
            max_pool_per_template: 256,
            max_leaves_per_template: 50_000,
            empty_status_probability: 0.3,
            count_cap: 10,
            balance_cap: 1.5,
            balance_tail_fraction: 0.05,
            template_balance_cap: 1.2,
            answer_caps: BTreeMap::new(),
            train_fraction: 0.82,
            blacklist: Blacklist::taxonomy_default(&taxonomy),
            rejection: RejectionPolicy::default(),
            taxonomy,
        }
    }
}

impl GenerationConfig {
    pub fn with_seed(seed: u64) -> Self {
        Self { seed, ..Self::default() }
    }

    pub fn cap_for(&self, qtype: QuestionType) -> f64 {
        self.answer_caps.get(&qtype).copied().unwrap_or(self.balance_cap)
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(0.0..=1.0).contains(&self.empty_status_probability) {
            return Err("empty_status_probability must lie in [0, 1]".into());
        }
        if !(0.0..1.0).contains(&self.balance_tail_fraction) {
            return Err("balance_tail_fraction must lie in [0, 1)".into());
        }
        if !(0.0..=1.0).contains(&self.train_fraction) {
            return Err("train_fraction must lie in [0, 1]".into());
        }
        let own = [("balance_cap".to_string(), self.balance_cap), ("template_balance_cap".to_string(), self.template_balance_cap)];
        for (what, cap) in own.into_iter()
            .chain(self.answer_caps.iter().map(|(q, c)| (format!("answer_caps.{q}"), *c)))
        {
            if cap.is_nan() || cap < 1.0 {
                return Err(format!("{what} must be >= 1"));
            }
        }
        if self.max_candidates_per_template == 0 || self.max_pool_per_template == 0 || self.max_leaves_per_template == 0
        {
            return Err("per-template budgets must be positive".into());
        }
        Ok(())
    }
}
