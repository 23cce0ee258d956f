//! Functional program skeletons and their static checks.
//!
//! A program is a postfix sequence of primitives evaluated on a value
//! stack. Set-producing ops push node sets; `unique` turns a set into a
//! single object; terminal ops (`exist`, `count`, `query_*`,
//! `compare_status_equal`) leave exactly one answer-typed value.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{AnswerType, Slot, SlotKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Op {
    Scene,
    FilterCategory(Slot),
    FilterStatus(Slot),
    Relate(Slot),
    Unique,
    Intersect,
    Count,
    Exist,
    QueryCategory,
    QueryStatus,
    SameStatusSet,
    CompareStatusEqual,
}

impl Op {
    pub fn slot(&self) -> Option<Slot> {
        match self {
            Op::FilterCategory(s) | Op::FilterStatus(s) | Op::Relate(s) => Some(*s),
            _ => None,
        }
    }
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Op::Scene => f.write_str("scene"),
            Op::FilterCategory(s) => write!(f, "filter_category({s})"),
            Op::FilterStatus(s) => write!(f, "filter_status({s})"),
            Op::Relate(s) => write!(f, "relate({s})"),
            Op::Unique => f.write_str("unique"),
            Op::Intersect => f.write_str("intersect"),
            Op::Count => f.write_str("count"),
            Op::Exist => f.write_str("exist"),
            Op::QueryCategory => f.write_str("query_category"),
            Op::QueryStatus => f.write_str("query_status"),
            Op::SameStatusSet => f.write_str("same_status_set"),
            Op::CompareStatusEqual => f.write_str("compare_status_equal"),
        }
    }
}

impl FromStr for Op {
    type Err = ProgramError;

    fn from_str(token: &str) -> Result<Self, Self::Err> {
        let (name, arg) = match token.find('(') {
            Some(open) if token.ends_with(')') => (&token[..open], Some(&token[open + 1..token.len() - 1])),
            Some(_) => return Err(ProgramError::UnknownOp(token.to_string())),
            None => (token, None),
        };
        let slot = |arg: Option<&str>| -> Result<Slot, ProgramError> {
            let text = arg.ok_or_else(|| ProgramError::MissingArgument(name.to_string()))?;
            text.parse().map_err(|_| ProgramError::BadArgument(token.to_string()))
        };
        let op = match name {
            "filter_category" => Op::FilterCategory(slot(arg)?),
            "filter_status" => Op::FilterStatus(slot(arg)?),
            "relate" => Op::Relate(slot(arg)?),
            _ if arg.is_some() => return Err(ProgramError::UnexpectedArgument(token.to_string())),
            "scene" => Op::Scene,
            "unique" => Op::Unique,
            "intersect" => Op::Intersect,
            "count" => Op::Count,
            "exist" => Op::Exist,
            "query_category" => Op::QueryCategory,
            "query_status" => Op::QueryStatus,
            "same_status_set" => Op::SameStatusSet,
            "compare_status_equal" => Op::CompareStatusEqual,
            _ => return Err(ProgramError::UnknownOp(token.to_string())),
        };
        Ok(op)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ValueType {
    Set,
    Object,
    Bool,
    Int,
    Category,
    Status,
}

impl ValueType {
    fn answer_type(self) -> Option<AnswerType> {
        match self {
            ValueType::Bool => Some(AnswerType::Boolean),
            ValueType::Int => Some(AnswerType::Integer),
            ValueType::Category => Some(AnswerType::Category),
            ValueType::Status => Some(AnswerType::Status),
            ValueType::Set | ValueType::Object => None,
        }
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ProgramError {
    #[error("unknown op `{0}`")]
    UnknownOp(String),
    #[error("op `{0}` needs a slot argument")]
    MissingArgument(String),
    #[error("bad slot argument in `{0}`")]
    BadArgument(String),
    #[error("op `{0}` takes no argument")]
    UnexpectedArgument(String),
    #[error("empty program")]
    Empty,
    #[error("op #{index} `{op}` pops from an empty stack")]
    StackUnderflow { index: usize, op: String },
    #[error("op #{index} `{op}` expects {expected:?}, found {found:?}")]
    TypeMismatch { index: usize, op: String, expected: ValueType, found: ValueType },
    #[error("op #{index} `{op}` needs a {expected:?} slot")]
    WrongSlotKind { index: usize, op: String, expected: SlotKind },
    #[error("program leaves {0} values on the stack")]
    Leftover(usize),
    #[error("program yields {found:?}, template declares {expected:?} answers")]
    AnswerMismatch { expected: AnswerType, found: ValueType },
}

/// Constraints on slot values implied by where a slot sits in the program.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SlotRoles {
    /// Object slots naming a relation anchor; only these may bind the ego.
    pub anchors: BTreeSet<Slot>,
    /// Object slots of a queried object; bound to the generic noun only.
    pub thing_only: BTreeSet<Slot>,
    /// Status slots whose value would give the answer away; bound empty.
    pub forced_empty: BTreeSet<Slot>,
    /// Status slots that must carry a value.
    pub required_status: BTreeSet<Slot>,
    /// Status slots of the two operands of each status comparison.
    pub compared: Vec<(Option<Slot>, Option<Slot>)>,
    /// Number of definite references (`unique` ops).
    pub uniques: usize,
}

#[derive(Debug, Clone, Copy)]
enum Abstract {
    Set { status: Option<Slot>, category: Option<Slot>, same_status: bool },
    Object { status: Option<Slot>, category: Option<Slot> },
    Scalar(ValueType),
}

impl Abstract {
    fn kind(&self) -> ValueType {
        match self {
            Abstract::Set { .. } => ValueType::Set,
            Abstract::Object { .. } => ValueType::Object,
            Abstract::Scalar(t) => *t,
        }
    }

    fn fresh_set() -> Self {
        Abstract::Set { status: None, category: None, same_status: false }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FunctionalProgram {
    pub ops: Vec<Op>,
}

impl fmt::Display for FunctionalProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, op) in self.ops.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{op}")?;
        }
        Ok(())
    }
}

impl FromStr for FunctionalProgram {
    type Err = ProgramError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ops = s.split_whitespace().map(str::parse).collect::<Result<Vec<Op>, _>>()?;
        if ops.is_empty() {
            return Err(ProgramError::Empty);
        }
        Ok(FunctionalProgram { ops })
    }
}

impl FunctionalProgram {
    /// Slots in order of first use.
    pub fn slot_order(&self) -> Vec<Slot> {
        let mut seen = Vec::new();
        for slot in self.ops.iter().filter_map(Op::slot) {
            if !seen.contains(&slot) {
                seen.push(slot);
            }
        }
        seen
    }

    pub fn relate_count(&self) -> usize {
        self.ops.iter().filter(|op| matches!(op, Op::Relate(_))).count()
    }

    /// Type-checks the program against the expected answer type and derives
    /// slot roles.
    pub fn check(&self, answer: AnswerType) -> Result<SlotRoles, ProgramError> {
        if self.ops.is_empty() {
            return Err(ProgramError::Empty);
        }
        let mut roles = SlotRoles::default();
        let mut stack: Vec<Abstract> = Vec::new();

        for (index, op) in self.ops.iter().enumerate() {
            let mut pop = |expected: ValueType| -> Result<Abstract, ProgramError> {
                let value = stack.pop().ok_or_else(|| ProgramError::StackUnderflow { index, op: op.to_string() })?;
                if value.kind() != expected {
                    return Err(ProgramError::TypeMismatch { index, op: op.to_string(), expected, found: value.kind() });
                }
                Ok(value)
            };
            let slot_kind = |slot: Slot, expected: SlotKind| -> Result<(), ProgramError> {
                if slot.kind != expected {
                    return Err(ProgramError::WrongSlotKind { index, op: op.to_string(), expected });
                }
                Ok(())
            };

            let pushed = match *op {
                Op::Scene => Abstract::fresh_set(),
                Op::FilterStatus(slot) => {
                    slot_kind(slot, SlotKind::Attribute)?;
                    let Abstract::Set { category, same_status, .. } = pop(ValueType::Set)? else { unreachable!() };
                    if same_status {
                        roles.forced_empty.insert(slot);
                    }
                    Abstract::Set { status: Some(slot), category, same_status }
                }
                Op::FilterCategory(slot) => {
                    slot_kind(slot, SlotKind::Object)?;
                    let Abstract::Set { status, same_status, .. } = pop(ValueType::Set)? else { unreachable!() };
                    Abstract::Set { status, category: Some(slot), same_status }
                }
                Op::Relate(slot) => {
                    slot_kind(slot, SlotKind::Relation)?;
                    let Abstract::Object { category, .. } = pop(ValueType::Object)? else { unreachable!() };
                    roles.anchors.extend(category);
                    Abstract::fresh_set()
                }
                Op::Unique => {
                    let Abstract::Set { status, category, .. } = pop(ValueType::Set)? else { unreachable!() };
                    roles.uniques += 1;
                    Abstract::Object { status, category }
                }
                Op::Intersect => {
                    pop(ValueType::Set)?;
                    pop(ValueType::Set)?;
                    Abstract::fresh_set()
                }
                Op::Count => {
                    pop(ValueType::Set)?;
                    Abstract::Scalar(ValueType::Int)
                }
                Op::Exist => {
                    pop(ValueType::Set)?;
                    Abstract::Scalar(ValueType::Bool)
                }
                Op::QueryCategory => {
                    let Abstract::Object { status, category } = pop(ValueType::Object)? else { unreachable!() };
                    roles.thing_only.extend(category);
                    roles.required_status.extend(status);
                    Abstract::Scalar(ValueType::Category)
                }
                Op::QueryStatus => {
                    let Abstract::Object { status, .. } = pop(ValueType::Object)? else { unreachable!() };
                    roles.forced_empty.extend(status);
                    Abstract::Scalar(ValueType::Status)
                }
                Op::SameStatusSet => {
                    pop(ValueType::Object)?;
                    Abstract::Set { status: None, category: None, same_status: true }
                }
                Op::CompareStatusEqual => {
                    let Abstract::Object { status: right, .. } = pop(ValueType::Object)? else { unreachable!() };
                    let Abstract::Object { status: left, .. } = pop(ValueType::Object)? else { unreachable!() };
                    roles.compared.push((left, right));
                    Abstract::Scalar(ValueType::Bool)
                }
            };
            stack.push(pushed);
        }

        if stack.len() != 1 {
            return Err(ProgramError::Leftover(stack.len()));
        }
        let found = stack[0].kind();
        if found.answer_type() != Some(answer) {
            return Err(ProgramError::AnswerMismatch { expected: answer, found });
        }
        Ok(roles)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn slot(s: &str) -> Slot {
        s.parse().unwrap()
    }

    #[test]
    fn parses_and_prints() {
        let text = "scene filter_status(A) filter_category(O) unique relate(R) filter_status(A2) filter_category(O2) exist";
        let p: FunctionalProgram = text.parse().unwrap();
        assert_eq!(p.to_string(), text);
        assert_eq!(p.relate_count(), 1);
        assert_eq!(p.slot_order(), vec![slot("A"), slot("O"), slot("R"), slot("A2"), slot("O2")]);
    }

    #[test]
    fn rejects_bad_tokens() {
        assert!("scene frobnicate".parse::<FunctionalProgram>().is_err());
        assert!("scene relate".parse::<FunctionalProgram>().is_err());
        assert!("scene(A)".parse::<FunctionalProgram>().is_err());
        assert!("".parse::<FunctionalProgram>().is_err());
    }

    #[test]
    fn type_errors_are_caught() {
        let p: FunctionalProgram = "scene count count".parse().unwrap();
        assert!(matches!(p.check(AnswerType::Integer), Err(ProgramError::TypeMismatch { .. })));
        let p: FunctionalProgram = "scene filter_status(O) exist".parse().unwrap();
        assert!(matches!(p.check(AnswerType::Boolean), Err(ProgramError::WrongSlotKind { .. })));
        let p: FunctionalProgram = "scene exist".parse().unwrap();
        assert!(matches!(p.check(AnswerType::Integer), Err(ProgramError::AnswerMismatch { .. })));
        let p: FunctionalProgram = "scene scene exist".parse().unwrap();
        assert!(matches!(p.check(AnswerType::Boolean), Err(ProgramError::Leftover(2))));
        let p: FunctionalProgram = "unique".parse().unwrap();
        assert!(matches!(p.check(AnswerType::Boolean), Err(ProgramError::StackUnderflow { .. })));
    }

    #[test]
    fn roles_follow_dataflow() {
        let p: FunctionalProgram = "scene filter_status(A) filter_category(O) unique relate(R) \
             filter_status(A2) filter_category(O2) unique query_category"
            .parse()
            .unwrap();
        let roles = p.check(AnswerType::Category).unwrap();
        assert!(roles.anchors.contains(&slot("O")));
        assert!(roles.thing_only.contains(&slot("O2")));
        assert!(roles.required_status.contains(&slot("A2")));
        assert_eq!(roles.uniques, 2);

        let p: FunctionalProgram = "scene filter_status(A) filter_category(O) unique same_status_set \
             filter_status(A2) filter_category(O2) exist"
            .parse()
            .unwrap();
        let roles = p.check(AnswerType::Boolean).unwrap();
        assert!(roles.forced_empty.contains(&slot("A2")));
        assert!(roles.anchors.is_empty());

        let p: FunctionalProgram = "scene filter_status(A) filter_category(O) unique \
             scene filter_status(A2) filter_category(O2) unique compare_status_equal"
            .parse()
            .unwrap();
        let roles = p.check(AnswerType::Boolean).unwrap();
        assert_eq!(roles.compared, vec![(Some(slot("A")), Some(slot("A2")))]);
    }
}
