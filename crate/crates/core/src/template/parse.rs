//! Line-structured template registry format.
//!
//! ```text
//! version 1
//!
//! template count_h0_plain
//! qtype count
//! hop 0
//! slots A O
//! program scene filter_status(A) filter_category(O) count
//! variant How many <A> <O>s are there?
//! end
//! ```
//!
//! An optional `nonempty <slots>` line follows `slots`. Blank lines and
//! lines starting with `#` are ignored by the parser; [`Registry::to_text`]
//! writes the canonical form.

use std::collections::{BTreeSet, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{QuestionTemplate, QuestionType, Slot, TemplateError};

const FORMAT_VERSION: u32 = 1;

const BUILTIN: &str = include_str!("../../data/templates.txt");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("line {line}: {source}")]
    Template { line: usize, source: TemplateError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Registry {
    pub templates: Vec<QuestionTemplate>,
}

#[derive(Default)]
struct Draft {
    line: usize,
    id: String,
    qtype: Option<QuestionType>,
    hop: Option<u8>,
    slots: Option<Vec<Slot>>,
    nonempty: Vec<Slot>,
    program: Option<String>,
    variants: Vec<String>,
}

fn syntax(line: usize, message: impl Into<String>) -> ParseError {
    ParseError::Syntax { line, message: message.into() }
}

fn parse_slots(line: usize, text: &str) -> Result<Vec<Slot>, ParseError> {
    text.split_whitespace()
        .map(|s| s.parse::<Slot>().map_err(|e| syntax(line, e.to_string())))
        .collect()
}

impl Draft {
    fn finish(self, end_line: usize) -> Result<QuestionTemplate, ParseError> {
        let missing = |field: &str| syntax(end_line, format!("template `{}` is missing `{field}`", self.id));
        let qtype = self.qtype.ok_or_else(|| missing("qtype"))?;
        let hop = self.hop.ok_or_else(|| missing("hop"))?;
        let slots = self.slots.clone().ok_or_else(|| missing("slots"))?;
        let program_text = self.program.as_deref().ok_or_else(|| missing("program"))?;
        let program = program_text.parse().map_err(|source| ParseError::Template {
            line: self.line,
            source: TemplateError::IllTypedProgram { template: self.id.clone(), source },
        })?;
        QuestionTemplate::new(self.id, qtype, hop, slots, self.nonempty, program, self.variants)
            .map_err(|source| ParseError::Template { line: self.line, source })
    }
}

impl Registry {
    /// The shipped registry.
    pub fn builtin() -> Registry {
        Registry::parse(BUILTIN).expect("shipped template registry is valid")
    }

    pub fn builtin_text() -> &'static str {
        BUILTIN
    }

    pub fn parse(text: &str) -> Result<Registry, ParseError> {
        let mut templates: Vec<QuestionTemplate> = Vec::new();
        let mut ids = HashSet::new();
        let mut draft: Option<Draft> = None;
        let mut version_seen = false;

        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = match trimmed.split_once(' ') {
                Some((k, v)) => (k, v.trim()),
                None => (trimmed, ""),
            };

            if !version_seen {
                if key != "version" {
                    return Err(syntax(line, "registry must start with `version`"));
                }
                let v: u32 = value.parse().map_err(|_| syntax(line, "bad version number"))?;
                if v != FORMAT_VERSION {
                    return Err(syntax(line, format!("unsupported registry version {v}")));
                }
                version_seen = true;
                continue;
            }

            match (key, draft.as_mut()) {
                ("template", None) => {
                    if value.is_empty() || value.contains(char::is_whitespace) {
                        return Err(syntax(line, "template id must be a single token"));
                    }
                    draft = Some(Draft { line, id: value.to_string(), ..Draft::default() });
                }
                ("template", Some(d)) => {
                    return Err(syntax(line, format!("template `{}` not closed with `end`", d.id)));
                }
                (_, None) => return Err(syntax(line, format!("`{key}` outside a template block"))),
                ("qtype", Some(d)) => d.qtype = Some(value.parse().map_err(|e: String| syntax(line, e))?),
                ("hop", Some(d)) => {
                    d.hop = Some(match value {
                        "0" => 0,
                        "1" => 1,
                        _ => return Err(syntax(line, format!("hop must be 0 or 1, got `{value}`"))),
                    })
                }
                ("slots", Some(d)) => d.slots = Some(parse_slots(line, value)?),
                ("nonempty", Some(d)) => d.nonempty = parse_slots(line, value)?,
                ("program", Some(d)) => d.program = Some(value.to_string()),
                ("variant", Some(d)) => {
                    if value.is_empty() {
                        return Err(syntax(line, "empty variant"));
                    }
                    d.variants.push(value.to_string());
                }
                ("end", Some(_)) => {
                    let finished = draft.take().expect("draft present").finish(line)?;
                    if !ids.insert(finished.id.clone()) {
                        return Err(ParseError::Template {
                            line,
                            source: TemplateError::DuplicateId(finished.id.clone()),
                        });
                    }
                    templates.push(finished);
                }
                (other, Some(_)) => return Err(syntax(line, format!("unknown key `{other}`"))),
            }
        }

        if let Some(d) = draft {
            return Err(syntax(text.lines().count(), format!("template `{}` not closed with `end`", d.id)));
        }
        if !version_seen {
            return Err(syntax(1, "empty registry"));
        }
        Ok(Registry { templates })
    }

    pub fn to_text(&self) -> String {
        let mut out = format!("version {FORMAT_VERSION}\n");
        for t in &self.templates {
            let slots = t.slots.iter().map(Slot::to_string).collect::<Vec<_>>().join(" ");
            out.push('\n');
            let _ = writeln!(out, "template {}", t.id);
            let _ = writeln!(out, "qtype {}", t.qtype);
            let _ = writeln!(out, "hop {}", t.hop);
            let _ = writeln!(out, "slots {slots}");
            if !t.nonempty.is_empty() {
                let nonempty = t.nonempty.iter().map(Slot::to_string).collect::<Vec<_>>().join(" ");
                let _ = writeln!(out, "nonempty {nonempty}");
            }
            let _ = writeln!(out, "program {}", t.program);
            for v in &t.variants {
                let _ = writeln!(out, "variant {v}");
            }
            out.push_str("end\n");
        }
        out
    }

    pub fn get(&self, id: &str) -> Option<&QuestionTemplate> {
        self.templates.iter().find(|t| t.id == id)
    }

    pub fn variant_count(&self) -> usize {
        self.templates.iter().map(|t| t.variants.len()).sum()
    }

    pub fn qtypes(&self) -> BTreeSet<QuestionType> {
        self.templates.iter().map(|t| t.qtype).collect()
    }

    pub fn hops(&self) -> BTreeSet<u8> {
        self.templates.iter().map(|t| t.hop).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::template::SlotKind;

    fn block(body: &str) -> String {
        format!("version 1\n\ntemplate t\n{body}\nend\n")
    }

    #[test]
    fn builtin_registry_shape() {
        let r = Registry::builtin();
        assert_eq!(r.variant_count(), 66);
        assert_eq!(r.qtypes().len(), 5);
        assert_eq!(r.hops().into_iter().collect::<Vec<_>>(), vec![0, 1]);
        assert_eq!(r.to_text(), Registry::builtin_text());
    }

    #[test]
    fn exist_one_hop_template() {
        let r = Registry::builtin();
        let t = r
            .templates
            .iter()
            .find(|t| t.variants.iter().any(|v| v == "Are there any <A2> <O2>s to the <R> of the <A> <O>?"))
            .unwrap();
        assert_eq!(t.qtype, QuestionType::Exist);
        assert_eq!(t.hop, 1);
        let mut slots: Vec<_> = t.slots.iter().map(|s| s.to_string()).collect();
        slots.sort();
        assert_eq!(slots, vec!["A", "A2", "O", "O2", "R"]);
    }

    #[test]
    fn count_zero_hop_template() {
        let r = Registry::builtin();
        let t = r.templates.iter().find(|t| t.variants.iter().any(|v| v == "How many <A> <O>s are there?")).unwrap();
        assert_eq!(t.qtype, QuestionType::Count);
        assert_eq!(t.hop, 0);
        assert_eq!(t.slots.len(), 2);
        assert!(t.slots.iter().any(|s| s.kind == SlotKind::Attribute));
    }

    #[test]
    fn undeclared_placeholder_is_dangling_reference() {
        let text = block(
            "qtype exist\nhop 1\nslots A O R\nprogram scene filter_status(A) filter_category(O) unique relate(R) exist\n\
             variant Is anything to the <R2> of the <A> <O>?\nvariant Is anything to the <R> of the <A> <O>?",
        );
        let err = Registry::parse(&text).unwrap_err();
        assert!(matches!(err, ParseError::Template { source: TemplateError::DanglingReference { .. }, .. }), "{err}");
    }

    #[test]
    fn unused_slot_is_dangling() {
        let text = block(
            "qtype count\nhop 0\nslots A O\nprogram scene filter_status(A) filter_category(O) count\nvariant How many <O>s?",
        );
        let err = Registry::parse(&text).unwrap_err();
        assert!(matches!(err, ParseError::Template { source: TemplateError::DanglingSlot { .. }, .. }), "{err}");
    }

    #[test]
    fn unknown_placeholder() {
        let text = block(
            "qtype count\nhop 0\nslots A O\nprogram scene filter_status(A) filter_category(O) count\nvariant How many <A> <O>s <X>?",
        );
        let err = Registry::parse(&text).unwrap_err();
        assert!(matches!(err, ParseError::Template { source: TemplateError::UnknownPlaceholder { .. }, .. }), "{err}");
    }

    #[test]
    fn ill_typed_program() {
        let text = block(
            "qtype count\nhop 0\nslots A O\nprogram scene filter_status(A) filter_category(O) exist\nvariant How many <A> <O>s?",
        );
        let err = Registry::parse(&text).unwrap_err();
        assert!(matches!(err, ParseError::Template { source: TemplateError::IllTypedProgram { .. }, .. }), "{err}");
    }

    #[test]
    fn hop_must_match_relations() {
        let text = block(
            "qtype count\nhop 1\nslots A O\nprogram scene filter_status(A) filter_category(O) count\nvariant How many <A> <O>s?",
        );
        assert!(matches!(
            Registry::parse(&text),
            Err(ParseError::Template { source: TemplateError::HopMismatch { .. }, .. })
        ));
    }

    #[test]
    fn duplicate_ids() {
        let one = "template t\nqtype count\nhop 0\nslots A O\nprogram scene filter_status(A) filter_category(O) count\n\
                   variant How many <A> <O>s?\nend\n";
        let text = format!("version 1\n{one}{one}");
        assert!(matches!(
            Registry::parse(&text),
            Err(ParseError::Template { source: TemplateError::DuplicateId(_), .. })
        ));
    }

    #[test]
    fn structural_errors_carry_lines() {
        assert!(matches!(Registry::parse(""), Err(ParseError::Syntax { .. })));
        assert!(matches!(Registry::parse("version 2\n"), Err(ParseError::Syntax { line: 1, .. })));
        assert!(matches!(Registry::parse("version 1\nhop 0\n"), Err(ParseError::Syntax { line: 2, .. })));
        assert!(matches!(Registry::parse("version 1\ntemplate t\nqtype count\n"), Err(ParseError::Syntax { .. })));
        let text = block("qtype count\nhop 0\nslots A O\nvariant How many <A> <O>s?");
        assert!(matches!(Registry::parse(&text), Err(ParseError::Syntax { .. })));
    }
}
