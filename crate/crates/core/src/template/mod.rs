//! Question templates: typed slots, variants, and program skeletons.

mod parse;
pub mod program;
mod render;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::relation::Relation;
use crate::scene::label_token;

pub use parse::{ParseError, Registry};
pub use program::{FunctionalProgram, Op, ProgramError, SlotRoles};
pub use render::RenderError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotKind {
    Attribute,
    Object,
    Relation,
}

impl SlotKind {
    fn letter(self) -> char {
        match self {
            SlotKind::Attribute => 'A',
            SlotKind::Object => 'O',
            SlotKind::Relation => 'R',
        }
    }
}

/// A template parameter such as `A`, `O2` or `R`. Index 1 prints without a
/// suffix.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Slot {
    pub kind: SlotKind,
    pub index: u8,
}

impl Slot {
    pub const fn new(kind: SlotKind, index: u8) -> Self {
        Slot { kind, index }
    }
}

impl fmt::Display for Slot {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.index == 1 {
            write!(f, "{}", self.kind.letter())
        } else {
            write!(f, "{}{}", self.kind.letter(), self.index)
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("not a slot name: `{0}`")]
pub struct BadSlot(pub String);

impl FromStr for Slot {
    type Err = BadSlot;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut chars = s.chars();
        let kind = match chars.next() {
            Some('A') => SlotKind::Attribute,
            Some('O') => SlotKind::Object,
            Some('R') => SlotKind::Relation,
            _ => return Err(BadSlot(s.to_string())),
        };
        let rest = chars.as_str();
        let index = if rest.is_empty() {
            1
        } else if rest.starts_with('0') || !rest.chars().all(|c| c.is_ascii_digit()) {
            return Err(BadSlot(s.to_string()));
        } else {
            rest.parse::<u8>().map_err(|_| BadSlot(s.to_string()))?
        };
        if index < 1 || (!rest.is_empty() && index == 1) {
            return Err(BadSlot(s.to_string()));
        }
        Ok(Slot { kind, index })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionType {
    Exist,
    Count,
    QueryObject,
    QueryStatus,
    Comparison,
}

impl QuestionType {
    pub const ALL: [QuestionType; 5] = [
        QuestionType::Exist,
        QuestionType::Count,
        QuestionType::QueryObject,
        QuestionType::QueryStatus,
        QuestionType::Comparison,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            QuestionType::Exist => "exist",
            QuestionType::Count => "count",
            QuestionType::QueryObject => "query_object",
            QuestionType::QueryStatus => "query_status",
            QuestionType::Comparison => "comparison",
        }
    }

    /// Column label in accuracy tables.
    pub fn label(self) -> &'static str {
        match self {
            QuestionType::Exist => "Exist",
            QuestionType::Count => "Count",
            QuestionType::QueryObject => "Object",
            QuestionType::QueryStatus => "Status",
            QuestionType::Comparison => "Comparison",
        }
    }

    pub fn answer_type(self) -> AnswerType {
        match self {
            QuestionType::Exist | QuestionType::Comparison => AnswerType::Boolean,
            QuestionType::Count => AnswerType::Integer,
            QuestionType::QueryObject => AnswerType::Category,
            QuestionType::QueryStatus => AnswerType::Status,
        }
    }
}

impl fmt::Display for QuestionType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for QuestionType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        QuestionType::ALL
            .into_iter()
            .find(|q| q.as_str() == s)
            .ok_or_else(|| format!("unknown question type `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AnswerType {
    Boolean,
    Integer,
    Category,
    Status,
}

/// Value bound to an object slot.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ObjectRef {
    Category(String),
    /// Generic noun matching any non-ego object.
    Thing,
    /// The ego vehicle.
    Me,
}

impl ObjectRef {
    pub fn token(&self) -> &str {
        match self {
            ObjectRef::Category(c) => c,
            ObjectRef::Thing => "thing",
            ObjectRef::Me => "me",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SlotValue {
    /// `None` leaves the status unconstrained.
    Status(Option<String>),
    Object(ObjectRef),
    Relation(Relation),
}

impl SlotValue {
    pub fn kind(&self) -> SlotKind {
        match self {
            SlotValue::Status(_) => SlotKind::Attribute,
            SlotValue::Object(_) => SlotKind::Object,
            SlotValue::Relation(_) => SlotKind::Relation,
        }
    }

    /// Token used in serialized bindings; empty for an unconstrained status.
    pub fn token(&self) -> &str {
        match self {
            SlotValue::Status(None) => "",
            SlotValue::Status(Some(s)) => s,
            SlotValue::Object(o) => o.token(),
            SlotValue::Relation(r) => r.as_str(),
        }
    }

    fn from_token(kind: SlotKind, token: &str) -> Result<Self, String> {
        Ok(match kind {
            SlotKind::Attribute if token.trim().is_empty() => SlotValue::Status(None),
            SlotKind::Attribute => SlotValue::Status(Some(label_token(token))),
            SlotKind::Object => SlotValue::Object(match label_token(token).as_str() {
                "thing" => ObjectRef::Thing,
                "me" => ObjectRef::Me,
                other => ObjectRef::Category(other.to_string()),
            }),
            SlotKind::Relation => SlotValue::Relation(token.parse().map_err(|e| format!("{e}"))?),
        })
    }
}

/// Assignment of values to a template's slots.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Binding(BTreeMap<Slot, SlotValue>);

impl Binding {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with(mut self, slot: &str, value: SlotValue) -> Self {
        self.insert(slot.parse().expect("valid slot name"), value);
        self
    }

    pub fn insert(&mut self, slot: Slot, value: SlotValue) {
        debug_assert_eq!(slot.kind, value.kind());
        self.0.insert(slot, value);
    }

    pub(crate) fn remove(&mut self, slot: Slot) {
        self.0.remove(&slot);
    }

    pub fn get(&self, slot: Slot) -> Option<&SlotValue> {
        self.0.get(&slot)
    }

    pub fn status(&self, slot: Slot) -> Option<&str> {
        match self.0.get(&slot) {
            Some(SlotValue::Status(s)) => s.as_deref(),
            _ => None,
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Slot, &SlotValue)> {
        self.0.iter()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `A=moving;O=bus;R=front` in slot order.
    pub fn canonical(&self) -> String {
        self.0.iter().map(|(s, v)| format!("{s}={}", v.token())).collect::<Vec<_>>().join(";")
    }

    /// (status, category) pairs that share a slot index, e.g. (`A2`, `O2`).
    pub fn status_category_pairs(&self) -> impl Iterator<Item = (&str, &str)> + '_ {
        self.0.iter().filter_map(move |(slot, value)| {
            let SlotValue::Status(Some(status)) = value else { return None };
            match self.0.get(&Slot::new(SlotKind::Object, slot.index)) {
                Some(SlotValue::Object(ObjectRef::Category(c))) => Some((status.as_str(), c.as_str())),
                _ => None,
            }
        })
    }
}

impl Serialize for Binding {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_map(self.0.iter().map(|(s, v)| (s.to_string(), v.token())))
    }
}

impl<'de> Deserialize<'de> for Binding {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = BTreeMap::<String, String>::deserialize(deserializer)?;
        let mut binding = Binding::new();
        for (name, token) in raw {
            let slot: Slot = name.parse().map_err(serde::de::Error::custom)?;
            let value = SlotValue::from_token(slot.kind, &token).map_err(serde::de::Error::custom)?;
            binding.insert(slot, value);
        }
        Ok(binding)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TemplateError {
    #[error("template `{template}`: unknown placeholder `<{placeholder}>`")]
    UnknownPlaceholder { template: String, placeholder: String },
    #[error("template `{template}`: dangling reference to undeclared slot {slot}")]
    DanglingReference { template: String, slot: Slot },
    #[error("template `{template}`: dangling slot {slot} is not used by variant {variant}")]
    DanglingSlot { template: String, slot: Slot, variant: usize },
    #[error("template `{template}`: slot {slot} declared twice")]
    DuplicateSlot { template: String, slot: Slot },
    #[error("template `{template}`: malformed variant {variant}: {reason}")]
    MalformedVariant { template: String, variant: usize, reason: String },
    #[error("template `{template}`: ill-typed program: {source}")]
    IllTypedProgram { template: String, source: ProgramError },
    #[error("template `{template}`: program uses slot {slot} inconsistently with the declaration")]
    ProgramSlotMismatch { template: String, slot: Slot },
    #[error("template `{template}`: hop {hop} does not match {relates} relate op(s)")]
    HopMismatch { template: String, hop: u8, relates: usize },
    #[error("template `{template}`: no variants")]
    NoVariants { template: String },
    #[error("duplicate template id `{0}`")]
    DuplicateId(String),
}

/// One piece of a parsed variant.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) enum Segment {
    Text(String),
    Placeholder { slot: Slot, plural: bool },
    Optional(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuestionTemplate {
    pub id: String,
    pub qtype: QuestionType,
    pub hop: u8,
    pub slots: Vec<Slot>,
    /// Status slots that may not be left empty.
    pub nonempty: Vec<Slot>,
    pub program: FunctionalProgram,
    pub variants: Vec<String>,
    roles: SlotRoles,
    segments: Vec<Vec<Segment>>,
}

impl QuestionTemplate {
    pub fn new(
        id: impl Into<String>,
        qtype: QuestionType,
        hop: u8,
        slots: Vec<Slot>,
        nonempty: Vec<Slot>,
        program: FunctionalProgram,
        variants: Vec<String>,
    ) -> Result<Self, TemplateError> {
        let id = id.into();
        let template = || id.clone();

        for (i, slot) in slots.iter().enumerate() {
            if slots[..i].contains(slot) {
                return Err(TemplateError::DuplicateSlot { template: template(), slot: *slot });
            }
        }
        if variants.is_empty() {
            return Err(TemplateError::NoVariants { template: template() });
        }

        let mut segments = Vec::with_capacity(variants.len());
        for (v, text) in variants.iter().enumerate() {
            let parsed = split_variant(text).map_err(|reason| match reason {
                VariantIssue::Unknown(placeholder) => {
                    TemplateError::UnknownPlaceholder { template: template(), placeholder }
                }
                VariantIssue::Malformed(reason) => {
                    TemplateError::MalformedVariant { template: template(), variant: v, reason }
                }
            })?;
            for segment in &parsed {
                if let Segment::Placeholder { slot, .. } = segment {
                    if !slots.contains(slot) {
                        return Err(TemplateError::DanglingReference { template: template(), slot: *slot });
                    }
                }
            }
            for slot in &slots {
                let used = parsed.iter().any(|s| matches!(s, Segment::Placeholder { slot: p, .. } if p == slot));
                if !used {
                    return Err(TemplateError::DanglingSlot { template: template(), slot: *slot, variant: v });
                }
            }
            segments.push(parsed);
        }

        let roles = program
            .check(qtype.answer_type())
            .map_err(|source| TemplateError::IllTypedProgram { template: template(), source })?;
        let used = program.slot_order();
        for slot in slots.iter().chain(used.iter()) {
            if !used.contains(slot) || !slots.contains(slot) {
                return Err(TemplateError::ProgramSlotMismatch { template: template(), slot: *slot });
            }
        }
        for slot in &nonempty {
            if slot.kind != SlotKind::Attribute || !slots.contains(slot) {
                return Err(TemplateError::ProgramSlotMismatch { template: template(), slot: *slot });
            }
        }
        let relates = program.relate_count();
        if hop != u8::from(relates > 0) {
            return Err(TemplateError::HopMismatch { template: template(), hop, relates });
        }

        Ok(QuestionTemplate { id, qtype, hop, slots, nonempty, program, variants, roles, segments })
    }

    pub fn answer_type(&self) -> AnswerType {
        self.qtype.answer_type()
    }

    pub fn roles(&self) -> &SlotRoles {
        &self.roles
    }

    /// Slots in the order the search binds them (program first-use order).
    pub fn search_order(&self) -> Vec<Slot> {
        self.program.slot_order()
    }
}

enum VariantIssue {
    Unknown(String),
    Malformed(String),
}

fn split_variant(text: &str) -> Result<Vec<Segment>, VariantIssue> {
    let mut out = Vec::new();
    let mut literal = String::new();
    let mut rest = text;
    while let Some(c) = rest.chars().next() {
        match c {
            '<' => {
                let close = rest.find('>').ok_or_else(|| VariantIssue::Malformed("unclosed `<`".into()))?;
                let name = &rest[1..close];
                let slot: Slot = name.parse().map_err(|_| VariantIssue::Unknown(name.to_string()))?;
                if slot.kind == SlotKind::Relation && rest[close + 1..].starts_with('s') {
                    return Err(VariantIssue::Malformed(format!("relation <{name}> cannot be pluralized")));
                }
                let after = &rest[close + 1..];
                let plural = after.starts_with('s') && !after[1..].starts_with(|ch: char| ch.is_alphanumeric());
                if !literal.is_empty() {
                    out.push(Segment::Text(std::mem::take(&mut literal)));
                }
                out.push(Segment::Placeholder { slot, plural });
                rest = if plural { &after[1..] } else { after };
            }
            '[' => {
                let close = rest.find(']').ok_or_else(|| VariantIssue::Malformed("unclosed `[`".into()))?;
                let inner = &rest[1..close];
                if inner.contains(['<', '[']) || inner.trim().is_empty() {
                    return Err(VariantIssue::Malformed(format!("bad optional segment `[{inner}]`")));
                }
                if !literal.is_empty() {
                    out.push(Segment::Text(std::mem::take(&mut literal)));
                }
                out.push(Segment::Optional(inner.to_string()));
                rest = &rest[close + 1..];
            }
            '>' | ']' => return Err(VariantIssue::Malformed(format!("stray `{c}`"))),
            _ => {
                literal.push(c);
                rest = &rest[c.len_utf8()..];
            }
        }
    }
    if !literal.is_empty() {
        out.push(Segment::Text(literal));
    }
    Ok(out)
}
