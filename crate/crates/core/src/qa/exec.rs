//! Stack-machine execution of functional programs over a scene graph.

use thiserror::Error;

use super::Answer;
use crate::graph::{NodeId, SceneGraph};
use crate::template::{Binding, FunctionalProgram, ObjectRef, Op, Slot, SlotValue};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ExecError {
    #[error("definite reference matches {size} objects")]
    NonUniqueReference { size: usize },
    #[error("definite reference matches no object")]
    EmptyReference,
    #[error("node {0} has no status")]
    MissingStatus(NodeId),
    #[error("slot {0} is unbound")]
    UnboundSlot(Slot),
    #[error("slot {0} bound to a value of the wrong kind")]
    WrongKind(Slot),
    #[error("malformed program: {0}")]
    Malformed(String),
}

/// Sorted set of graph nodes.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct NodeSet(Vec<NodeId>);

impl NodeSet {
    pub fn from_sorted(nodes: Vec<NodeId>) -> Self {
        debug_assert!(nodes.windows(2).all(|w| w[0] < w[1]));
        NodeSet(nodes)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[NodeId] {
        &self.0
    }

    fn retain(mut self, keep: impl Fn(NodeId) -> bool) -> Self {
        self.0.retain(|n| keep(*n));
        self
    }

    fn intersect(&self, other: &NodeSet) -> NodeSet {
        let (mut i, mut j) = (0, 0);
        let mut out = Vec::new();
        while i < self.0.len() && j < other.0.len() {
            match self.0[i].cmp(&other.0[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    out.push(self.0[i]);
                    i += 1;
                    j += 1;
                }
            }
        }
        NodeSet(out)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Value {
    Set(NodeSet),
    Object(NodeId),
    Done(Answer),
}

/// Successful execution with the objects each `unique` resolved to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub answer: Answer,
    pub uniques: Vec<NodeId>,
}

#[derive(Debug, Clone)]
pub(crate) struct Machine<'g> {
    graph: &'g SceneGraph,
    stack: Vec<Value>,
    uniques: Vec<NodeId>,
}

impl<'g> Machine<'g> {
    pub(crate) fn new(graph: &'g SceneGraph) -> Self {
        Machine { graph, stack: Vec::with_capacity(4), uniques: Vec::new() }
    }

    fn pop(&mut self, op: &Op) -> Result<Value, ExecError> {
        self.stack.pop().ok_or_else(|| ExecError::Malformed(format!("`{op}` on empty stack")))
    }

    fn pop_set(&mut self, op: &Op) -> Result<NodeSet, ExecError> {
        match self.pop(op)? {
            Value::Set(s) => Ok(s),
            other => Err(ExecError::Malformed(format!("`{op}` expected a set, found {other:?}"))),
        }
    }

    fn pop_object(&mut self, op: &Op) -> Result<NodeId, ExecError> {
        match self.pop(op)? {
            Value::Object(n) => Ok(n),
            other => Err(ExecError::Malformed(format!("`{op}` expected an object, found {other:?}"))),
        }
    }

    fn status_of(&self, node: NodeId) -> Result<&'g str, ExecError> {
        self.graph.node(node).status().ok_or(ExecError::MissingStatus(node))
    }

    pub(crate) fn step(&mut self, op: &Op, binding: &Binding) -> Result<(), ExecError> {
        let graph = self.graph;
        let bound = |slot: Slot| binding.get(slot).ok_or(ExecError::UnboundSlot(slot));
        let value = match *op {
            Op::Scene => Value::Set(NodeSet((0..graph.len()).collect())),
            Op::FilterStatus(slot) => {
                let SlotValue::Status(wanted) = bound(slot)? else { return Err(ExecError::WrongKind(slot)) };
                let set = self.pop_set(op)?;
                match wanted {
                    None => Value::Set(set),
                    Some(s) => Value::Set(set.retain(|n| graph.node(n).status() == Some(s.as_str()))),
                }
            }
            Op::FilterCategory(slot) => {
                let SlotValue::Object(wanted) = bound(slot)? else { return Err(ExecError::WrongKind(slot)) };
                let set = self.pop_set(op)?;
                Value::Set(match wanted {
                    ObjectRef::Category(c) => set.retain(|n| graph.node(n).category() == Some(c.as_str())),
                    ObjectRef::Thing => set.retain(|n| !graph.node(n).is_ego()),
                    ObjectRef::Me => set.retain(|n| graph.node(n).is_ego()),
                })
            }
            Op::Relate(slot) => {
                let SlotValue::Relation(r) = bound(slot)? else { return Err(ExecError::WrongKind(slot)) };
                let anchor = self.pop_object(op)?;
                Value::Set(NodeSet(graph.related(anchor, *r).collect()))
            }
            Op::Unique => {
                let set = self.pop_set(op)?;
                match set.as_slice() {
                    [] => return Err(ExecError::EmptyReference),
                    [only] => {
                        self.uniques.push(*only);
                        Value::Object(*only)
                    }
                    many => return Err(ExecError::NonUniqueReference { size: many.len() }),
                }
            }
            Op::Intersect => {
                let right = self.pop_set(op)?;
                let left = self.pop_set(op)?;
                Value::Set(left.intersect(&right))
            }
            Op::Count => Value::Done(Answer::Count(self.pop_set(op)?.len())),
            Op::Exist => Value::Done(Answer::Bool(!self.pop_set(op)?.is_empty())),
            Op::QueryCategory => {
                let node = self.pop_object(op)?;
                let category = graph
                    .node(node)
                    .category()
                    .ok_or_else(|| ExecError::Malformed("category query on the ego node".into()))?;
                Value::Done(Answer::Category(category.to_string()))
            }
            Op::QueryStatus => {
                let node = self.pop_object(op)?;
                Value::Done(Answer::Status(self.status_of(node)?.to_string()))
            }
            Op::SameStatusSet => {
                let node = self.pop_object(op)?;
                let status = self.status_of(node)?;
                let others = (0..graph.len()).filter(|&n| n != node && graph.node(n).status() == Some(status));
                Value::Set(NodeSet(others.collect()))
            }
            Op::CompareStatusEqual => {
                let right = self.pop_object(op)?;
                let left = self.pop_object(op)?;
                Value::Done(Answer::Bool(self.status_of(left)? == self.status_of(right)?))
            }
        };
        self.stack.push(value);
        Ok(())
    }

    pub(crate) fn top_is_empty_set(&self) -> bool {
        matches!(self.stack.last(), Some(Value::Set(s)) if s.is_empty())
    }

    pub(crate) fn finish(mut self) -> Result<Execution, ExecError> {
        match (self.stack.pop(), self.stack.is_empty()) {
            (Some(Value::Done(answer)), true) => Ok(Execution { answer, uniques: self.uniques }),
            _ => Err(ExecError::Malformed("program did not end with a single answer".into())),
        }
    }
}

/// Runs `program` under `binding`, returning the answer and the objects
/// every definite reference resolved to.
pub fn execute_traced(
    program: &FunctionalProgram,
    binding: &Binding,
    graph: &SceneGraph,
) -> Result<Execution, ExecError> {
    let mut machine = Machine::new(graph);
    for op in &program.ops {
        machine.step(op, binding)?;
    }
    machine.finish()
}

pub fn execute_program(program: &FunctionalProgram, binding: &Binding, graph: &SceneGraph) -> Result<Answer, ExecError> {
    execute_traced(program, binding, graph).map(|e| e.answer)
}
