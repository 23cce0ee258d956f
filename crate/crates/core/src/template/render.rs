use std::sync::LazyLock;

use regex::Regex;
use thiserror::Error;

use super::{Binding, ObjectRef, QuestionTemplate, Segment, Slot, SlotValue};
use crate::scene::label_display;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("template `{template}` has no variant {index}")]
    NoSuchVariant { template: String, index: usize },
    #[error("binding does not cover slot {0}")]
    IncompleteBinding(Slot),
    #[error("slot {0} bound to a value of the wrong kind")]
    WrongKind(Slot),
}

static EGO_POSSESSIVE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(?:the |a |an )?me's\b").unwrap());
static EGO_DETERMINER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b(?:[Tt]he|[Aa]n?) me\b").unwrap());
static ARTICLE_A: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\b([Aa]) ([aeiouAEIOU])").unwrap());
static SPACE_BEFORE_PUNCT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r" +([?;,.])").unwrap());

pub(crate) fn pluralize(noun: &str) -> String {
    const IRREGULAR: [(&str, &str); 2] = [("person", "people"), ("child", "children")];
    if noun == "me" {
        return noun.to_string();
    }
    if let Some((singular, plural)) = IRREGULAR.iter().find(|(s, _)| noun.ends_with(s)) {
        return format!("{}{plural}", &noun[..noun.len() - singular.len()]);
    }
    if ["s", "x", "z", "ch", "sh"].iter().any(|end| noun.ends_with(end)) {
        format!("{noun}es")
    } else if noun.ends_with('y') && !["ay", "ey", "oy", "uy"].iter().any(|end| noun.ends_with(end)) {
        format!("{}ies", &noun[..noun.len() - 1])
    } else {
        format!("{noun}s")
    }
}

fn slot_text(slot: Slot, value: &SlotValue, plural: bool) -> Result<String, RenderError> {
    if value.kind() != slot.kind {
        return Err(RenderError::WrongKind(slot));
    }
    let text = match value {
        SlotValue::Status(None) => String::new(),
        SlotValue::Status(Some(s)) => label_display(s),
        SlotValue::Object(o) => {
            let noun = match o {
                ObjectRef::Category(c) => label_display(c),
                other => other.token().to_string(),
            };
            if plural {
                pluralize(&noun)
            } else {
                noun
            }
        }
        SlotValue::Relation(r) => r.phrase().to_string(),
    };
    Ok(text)
}

/// Fixes the surface form after substitution: whitespace, ego determiners,
/// a/an agreement, punctuation spacing, leading capital.
pub(crate) fn tidy(raw: &str) -> String {
    let collapsed = raw.split_whitespace().collect::<Vec<_>>().join(" ");
    let text = EGO_POSSESSIVE.replace_all(&collapsed, "my");
    let text = EGO_DETERMINER.replace_all(&text, "me");
    let text = ARTICLE_A.replace_all(&text, "${1}n $2");
    let text = SPACE_BEFORE_PUNCT.replace_all(&text, "$1");
    let mut chars = text.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

impl QuestionTemplate {
    /// Renders variant `index` under `binding`. Optional bracketed segments
    /// are kept.
    pub fn render(&self, index: usize, binding: &Binding) -> Result<String, RenderError> {
        let segments = self
            .segments
            .get(index)
            .ok_or_else(|| RenderError::NoSuchVariant { template: self.id.clone(), index })?;
        let mut raw = String::new();
        for segment in segments {
            match segment {
                Segment::Text(t) | Segment::Optional(t) => raw.push_str(t),
                Segment::Placeholder { slot, plural } => {
                    let value = binding.get(*slot).ok_or(RenderError::IncompleteBinding(*slot))?;
                    raw.push_str(&slot_text(*slot, value, *plural)?);
                }
            }
        }
        Ok(tidy(&raw))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::relation::Relation;
    use crate::template::Registry;

    fn status(s: &str) -> SlotValue {
        SlotValue::Status(if s.is_empty() { None } else { Some(s.into()) })
    }

    fn object(s: &str) -> SlotValue {
        SlotValue::Object(match s {
            "me" => ObjectRef::Me,
            "thing" => ObjectRef::Thing,
            c => ObjectRef::Category(c.into()),
        })
    }

    #[test]
    fn exist_one_hop_sentence() {
        let r = Registry::builtin();
        let t = r.get("exist_h1_relate").unwrap();
        let b = Binding::new()
            .with("A2", status("moving"))
            .with("O2", object("pedestrian"))
            .with("R", SlotValue::Relation(Relation::Front))
            .with("A", status("stopped"))
            .with("O", object("bus"));
        assert_eq!(t.render(0, &b).unwrap(), "Are there any moving pedestrians to the front of the stopped bus?");
        assert_eq!(
            t.render(1, &b).unwrap(),
            "There is a stopped bus; are there any moving pedestrians to the front of it?"
        );
    }

    #[test]
    fn ego_rewrites() {
        let r = Registry::builtin();
        let t = r.get("exist_h1_relate").unwrap();
        let b = Binding::new()
            .with("A2", status(""))
            .with("O2", object("bus"))
            .with("R", SlotValue::Relation(Relation::BackLeft))
            .with("A", status(""))
            .with("O", object("me"));
        assert_eq!(t.render(0, &b).unwrap(), "Are there any buses to the back left of me?");
        let second = t.render(1, &b).unwrap();
        assert!(!second.contains("a me") && !second.contains("the me"), "{second}");
        assert_eq!(tidy("what is the me's status?"), "What is my status?");
    }

    #[test]
    fn empty_status_collapses() {
        let r = Registry::builtin();
        let t = r.get("count_h0_plain").unwrap();
        let b = Binding::new().with("A", status("")).with("O", object("car"));
        assert_eq!(t.render(0, &b).unwrap(), "How many cars are there?");
    }

    #[test]
    fn multiword_labels_and_articles() {
        let r = Registry::builtin();
        let t = r.get("query_status_h0").unwrap();
        let b = Binding::new().with("A", status("")).with("O", object("construction_vehicle"));
        assert_eq!(t.render(3, &b).unwrap(), "There is a construction vehicle; what status is it?");
        assert_eq!(tidy("there is a  ambulance ;"), "There is an ambulance;");
    }

    #[test]
    fn missing_slot_or_variant() {
        let r = Registry::builtin();
        let t = r.get("count_h0_plain").unwrap();
        let b = Binding::new().with("O", object("car"));
        assert_eq!(t.render(0, &b), Err(RenderError::IncompleteBinding("A".parse().unwrap())));
        assert!(matches!(t.render(9, &b), Err(RenderError::NoSuchVariant { .. })));
    }

    #[test]
    fn plurals() {
        assert_eq!(pluralize("bus"), "buses");
        assert_eq!(pluralize("car"), "cars");
        assert_eq!(pluralize("traffic cone"), "traffic cones");
        assert_eq!(pluralize("thing"), "things");
        assert_eq!(pluralize("person"), "people");
        assert_eq!(pluralize("lorry"), "lorries");
        assert_eq!(pluralize("me"), "me");
    }
}
