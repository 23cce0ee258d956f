//! Depth-first slot filling for one (scene, template) pair.
//!
//! Slots are bound in program order and the program is executed
//! incrementally, so a failed definite reference prunes the whole subtree
//! below it. Value order at every search node is a permutation keyed by
//! the path so far, which keeps results independent of thread scheduling
//! and of which other subtrees were pruned.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::exec::{ExecError, Execution, Machine};
use super::{Answer, GenerationConfig, QaPair, RejectReason};
use crate::graph::SceneGraph;
use crate::hash::{fnv64, mix64, stable_hex, stable_u64, unit_interval};
use crate::relation::Relation;
use crate::template::{Binding, ObjectRef, Op, QuestionTemplate, Slot, SlotKind, SlotValue};

const EMPTY_COIN_SALT: u64 = 0x5a17_0e3b_9d11_c4a7;

/// A fully bound template together with its execution outcome.
#[derive(Debug, Clone, Copy)]
pub struct Candidate<'a> {
    pub template: &'a QuestionTemplate,
    pub binding: &'a Binding,
    pub outcome: &'a Result<Execution, ExecError>,
}

/// Search statistics for one (scene, template) pair.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TemplateYield {
    /// Complete bindings reached.
    pub leaves: usize,
    /// Bindings that passed every rejection rule.
    pub valid: usize,
    pub emitted: usize,
    /// Pruned subtrees count once, under the reason that pruned them.
    pub rejections: BTreeMap<RejectReason, usize>,
    /// The leaf budget ran out before the search finished.
    pub truncated: bool,
    /// The search stopped early because the candidate pool was full.
    pub saturated: bool,
}

impl TemplateYield {
    pub(crate) fn absorb(&mut self, other: &TemplateYield) {
        self.leaves += other.leaves;
        self.valid += other.valid;
        self.emitted += other.emitted;
        self.truncated |= other.truncated;
        self.saturated |= other.saturated;
        for (reason, n) in &other.rejections {
            *self.rejections.entry(*reason).or_default() += n;
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct Instantiation {
    pub pairs: Vec<QaPair>,
    pub stats: TemplateYield,
}

fn exec_reason(error: &ExecError) -> RejectReason {
    match error {
        ExecError::NonUniqueReference { .. } => RejectReason::NonUniqueReference,
        ExecError::EmptyReference => RejectReason::EmptyReference,
        ExecError::MissingStatus(_) => RejectReason::MissingStatus,
        // Unbound or mistyped slots cannot arise from a checked template.
        ExecError::UnboundSlot(_) | ExecError::WrongKind(_) | ExecError::Malformed(_) => {
            RejectReason::EmptyReference
        }
    }
}

/// First rule a candidate violates, if any.
pub fn reject(candidate: &Candidate<'_>, config: &GenerationConfig) -> Option<RejectReason> {
    if config.rejection.blacklist
        && candidate.binding.status_category_pairs().any(|(s, c)| config.blacklist.contains(s, c))
    {
        return Some(RejectReason::BlacklistedCombo);
    }
    let execution = match candidate.outcome {
        Ok(execution) => execution,
        Err(error) => return Some(exec_reason(error)),
    };
    if config.rejection.count_cap {
        if let Answer::Count(n) = execution.answer {
            if n > config.count_cap {
                return Some(RejectReason::CountOverCap);
            }
        }
    }
    if config.rejection.trivial {
        let uniques = &execution.uniques;
        let repeated = uniques.iter().enumerate().any(|(i, a)| uniques[..i].contains(a));
        // Both comparison operands described by status make the answer
        // readable from the question itself.
        let given_away = candidate.template.roles().compared.iter().any(|(left, right)| {
            let bound = |slot: &Option<Slot>| slot.is_some_and(|s| candidate.binding.status(s).is_some());
            bound(left) && bound(right)
        });
        if repeated || given_away {
            return Some(RejectReason::TrivialDegenerate);
        }
    }
    None
}

fn value_key(value: &SlotValue) -> u64 {
    match value {
        SlotValue::Status(None) => 0,
        other => fnv64(other.token()),
    }
}

fn slot_key(slot: Slot) -> u64 {
    let kind = match slot.kind {
        SlotKind::Attribute => 1u64,
        SlotKind::Object => 2,
        SlotKind::Relation => 3,
    };
    (kind << 8) | u64::from(slot.index)
}

struct Search<'a> {
    template: &'a QuestionTemplate,
    config: &'a GenerationConfig,
    stats: TemplateYield,
    found: Vec<(Binding, Answer)>,
    exhausted: bool,
    /// `doomed[pc]`: an empty set on top of the stack after op `pc` can
    /// only reach a failing `unique`, since filters never grow a set.
    doomed: Vec<bool>,
}

fn doomed_positions(ops: &[Op]) -> Vec<bool> {
    let mut doomed = vec![false; ops.len()];
    for pc in (0..ops.len().saturating_sub(1)).rev() {
        doomed[pc] = match ops[pc + 1] {
            Op::Unique => true,
            Op::FilterStatus(_) | Op::FilterCategory(_) | Op::Intersect => doomed[pc + 1],
            _ => false,
        };
    }
    doomed
}

impl<'a> Search<'a> {
    fn domain(&self, slot: Slot, key: u64) -> Vec<SlotValue> {
        let roles = self.template.roles();
        let taxonomy = &self.config.taxonomy;
        let mut values = match slot.kind {
            SlotKind::Attribute => {
                if roles.forced_empty.contains(&slot) {
                    return vec![SlotValue::Status(None)];
                }
                let mut v: Vec<_> = taxonomy.statuses.iter().map(|s| SlotValue::Status(Some(s.clone()))).collect();
                let required = roles.required_status.contains(&slot) || self.template.nonempty.contains(&slot);
                if !required && unit_interval(key ^ EMPTY_COIN_SALT) < self.config.empty_status_probability {
                    v.push(SlotValue::Status(None));
                }
                v
            }
            SlotKind::Object => {
                if roles.thing_only.contains(&slot) {
                    return vec![SlotValue::Object(ObjectRef::Thing)];
                }
                let mut v: Vec<_> =
                    taxonomy.categories.iter().map(|c| SlotValue::Object(ObjectRef::Category(c.clone()))).collect();
                v.push(SlotValue::Object(ObjectRef::Thing));
                if roles.anchors.contains(&slot) {
                    v.push(SlotValue::Object(ObjectRef::Me));
                }
                v
            }
            SlotKind::Relation => Relation::ALL.iter().map(|r| SlotValue::Relation(*r)).collect(),
        };
        values.sort_by_cached_key(|v| mix64(key ^ value_key(v)));
        values
    }

    fn prune(&mut self, error: &ExecError) {
        *self.stats.rejections.entry(exec_reason(error)).or_default() += 1;
    }

    fn advance(&mut self, pc: usize, machine: &Machine<'a>) -> bool {
        if self.doomed[pc] && machine.top_is_empty_set() {
            *self.stats.rejections.entry(RejectReason::EmptyReference).or_default() += 1;
            return false;
        }
        true
    }

    fn descend(&mut self, mut pc: usize, mut machine: Machine<'a>, binding: &mut Binding, key: u64) {
        let template = self.template;
        let ops = &template.program.ops;
        while pc < ops.len() {
            let op = ops[pc];
            if let Some(slot) = op.slot().filter(|s| binding.get(*s).is_none()) {
                let branch_key = mix64(key ^ slot_key(slot));
                for value in self.domain(slot, branch_key) {
                    if self.exhausted {
                        break;
                    }
                    let child_key = mix64(branch_key ^ value_key(&value));
                    binding.insert(slot, value);
                    let mut next = machine.clone();
                    match next.step(&op, binding) {
                        Ok(()) if self.advance(pc, &next) => self.descend(pc + 1, next, binding, child_key),
                        Ok(()) => {}
                        Err(error) => self.prune(&error),
                    }
                }
                binding.remove(slot);
                return;
            }
            if let Err(error) = machine.step(&op, binding) {
                self.prune(&error);
                return;
            }
            if !self.advance(pc, &machine) {
                return;
            }
            pc += 1;
        }
        self.leaf(machine, binding.clone());
    }

    fn leaf(&mut self, machine: Machine<'a>, binding: Binding) {
        if self.stats.leaves >= self.config.max_leaves_per_template {
            self.exhausted = true;
            self.stats.truncated = true;
            return;
        }
        self.stats.leaves += 1;
        let outcome = machine.finish();
        let candidate = Candidate { template: self.template, binding: &binding, outcome: &outcome };
        match reject(&candidate, self.config) {
            Some(reason) => *self.stats.rejections.entry(reason).or_default() += 1,
            None => {
                self.stats.valid += 1;
                let answer = outcome.expect("accepted candidates executed").answer;
                self.found.push((binding, answer));
                if self.found.len() >= self.config.max_pool_per_template {
                    self.exhausted = true;
                    self.stats.saturated = true;
                }
            }
        }
    }
}

/// Round-robin over answers, starting at a seeded answer and taking each
/// answer's bindings in seeded order, until `limit` picks. Returns indices
/// in pick order, so any prefix is as balanced as possible.
fn select(found: &[(Binding, Answer)], limit: usize, seed: u64) -> Vec<usize> {
    let mut groups: BTreeMap<&Answer, Vec<usize>> = BTreeMap::new();
    for (i, (_, answer)) in found.iter().enumerate() {
        groups.entry(answer).or_default().push(i);
    }
    let mut queues: Vec<std::vec::IntoIter<usize>> = groups
        .into_iter()
        .map(|(answer, mut members)| {
            let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ fnv64(&answer.to_string())));
            members.shuffle(&mut rng);
            members.into_iter()
        })
        .collect();
    if !queues.is_empty() {
        let start = (mix64(seed) % queues.len() as u64) as usize;
        queues.rotate_left(start);
    }
    let mut picked = Vec::with_capacity(limit.min(found.len()));
    while picked.len() < limit {
        let before = picked.len();
        for queue in &mut queues {
            if picked.len() == limit {
                break;
            }
            picked.extend(queue.next());
        }
        if picked.len() == before {
            break;
        }
    }
    picked
}

pub(crate) fn pair_seed(config: &GenerationConfig, scene_id: &str, template_id: &str) -> u64 {
    mix64(config.seed ^ stable_u64(scene_id)) ^ mix64(stable_u64(template_id))
}

/// Instantiates `template` against `graph`. Rejections are counted in the
/// returned statistics, never raised.
pub fn instantiate(graph: &SceneGraph, template: &QuestionTemplate, config: &GenerationConfig, seed: u64) -> Instantiation {
    let mut search = Search {
        template,
        config,
        stats: TemplateYield::default(),
        found: Vec::new(),
        exhausted: false,
        doomed: doomed_positions(&template.program.ops),
    };
    search.descend(0, Machine::new(graph), &mut Binding::new(), seed);
    let Search { mut stats, found, .. } = search;

    let chosen = select(&found, config.max_candidates_per_template, seed);
    let variants = template.variants.len() as u64;
    let pairs: Vec<QaPair> = chosen
        .into_iter()
        .map(|i| {
            let (binding, answer) = &found[i];
            let canonical = binding.canonical();
            let variant_index = (mix64(seed ^ stable_u64(&canonical)) % variants) as usize;
            let question = template.render(variant_index, binding).expect("search binds every slot with the right kind");
            QaPair {
                question_id: stable_hex(
                    &format!("{}|{}|{}|{}", graph.scene_id, template.id, variant_index, canonical),
                    16,
                ),
                scene_id: graph.scene_id.clone(),
                question,
                answer: answer.to_string(),
                template_id: template.id.clone(),
                hop: template.hop,
                qtype: template.qtype,
                variant_index,
                binding: binding.clone(),
            }
        })
        .collect();
    stats.emitted = pairs.len();
    Instantiation { pairs, stats }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::build_scene_graph;
    use crate::qa::execute_program;
    use crate::scene::{Box3D, EgoState, Scene, SceneObject};
    use crate::template::Registry;

    fn obj(id: &str, category: &str, status: Option<&str>, x: f64, y: f64) -> SceneObject {
        SceneObject {
            id: id.into(),
            category: category.into(),
            status: status.map(String::from),
            bbox: Box3D::from_array([x, y, 0.0, 1.0, 1.0, 1.0, 0.0]),
        }
    }

    fn graph(objects: Vec<SceneObject>) -> SceneGraph {
        build_scene_graph(&Scene { scene_id: "s".into(), objects, ego: EgoState::new([0.0; 3], 0.0) }).unwrap()
    }

    fn run(g: &SceneGraph, id: &str, config: &GenerationConfig) -> Instantiation {
        let r = Registry::builtin();
        instantiate(g, r.get(id).unwrap(), config, 7)
    }

    #[test]
    fn bus_and_pedestrian_yield_a_yes() {
        let g = graph(vec![
            obj("b", "bus", Some("stopped"), 10.0, 0.0),
            obj("p", "pedestrian", Some("moving"), 20.0, 0.5),
        ]);
        let config = GenerationConfig { max_candidates_per_template: 10_000, ..GenerationConfig::default() };
        let out = run(&g, "exist_h1_relate", &config);
        let hit = out.pairs.iter().find(|p| {
            p.binding.canonical() == "A=stopped;A2=moving;O=bus;O2=pedestrian;R=front"
        });
        assert_eq!(hit.map(|p| p.answer.as_str()), Some("yes"));
    }

    #[test]
    fn absent_reference_is_never_emitted() {
        let g = graph(vec![obj("c", "car", Some("parked"), 10.0, 0.0)]);
        let config = GenerationConfig { max_candidates_per_template: 10_000, ..GenerationConfig::default() };
        let out = run(&g, "query_status_h0", &config);
        assert!(out.pairs.iter().all(|p| p.binding.canonical().contains("O=car") || p.binding.canonical().contains("O=thing")));
        assert!(out.stats.rejections[&RejectReason::EmptyReference] > 0);
    }

    #[test]
    fn twelve_objects_count_is_dropped() {
        let objects = (0..12).map(|i| obj(&format!("c{i}"), "car", Some("parked"), 5.0 + i as f64, 3.0)).collect();
        let g = graph(objects);
        let config = GenerationConfig { max_candidates_per_template: 10_000, ..GenerationConfig::default() };
        let out = run(&g, "count_h0_plain", &config);
        assert!(out.pairs.iter().all(|p| p.answer.parse::<usize>().unwrap() <= 10));
        assert!(out.stats.rejections[&RejectReason::CountOverCap] > 0);
    }

    #[test]
    fn emitted_answers_reexecute() {
        let g = graph(vec![
            obj("a", "car", Some("parked"), 10.0, 2.0),
            obj("b", "pedestrian", Some("moving"), -4.0, 6.0),
            obj("c", "truck", Some("stopped"), 3.0, -9.0),
            obj("d", "barrier", None, 15.0, -1.0),
        ]);
        let r = Registry::builtin();
        let config = GenerationConfig::default();
        for t in &r.templates {
            for p in instantiate(&g, t, &config, 3).pairs {
                let answer = execute_program(&t.program, &p.binding, &g).unwrap();
                assert_eq!(answer.to_string(), p.answer, "{}", p.question);
                assert!(p.answer.parse::<usize>().map_or(true, |n| n <= 10));
                assert!(!p.question.contains('<'), "{}", p.question);
            }
        }
    }

    #[test]
    fn search_is_deterministic_and_seed_sensitive() {
        let g = graph(vec![
            obj("a", "car", Some("parked"), 10.0, 2.0),
            obj("b", "car", Some("moving"), -4.0, 6.0),
            obj("c", "truck", Some("stopped"), 3.0, -9.0),
        ]);
        let r = Registry::builtin();
        let t = r.get("count_h1_relate").unwrap();
        let config = GenerationConfig { max_candidates_per_template: 4, ..GenerationConfig::default() };
        let a = instantiate(&g, t, &config, 11);
        let b = instantiate(&g, t, &config, 11);
        assert_eq!(a.pairs, b.pairs);
        assert_eq!(a.pairs.len(), 4);
    }

    #[test]
    fn leaf_budget_truncates() {
        let g = graph(vec![obj("a", "car", Some("parked"), 10.0, 2.0), obj("b", "car", Some("moving"), -4.0, 6.0)]);
        let config = GenerationConfig { max_leaves_per_template: 5, ..GenerationConfig::default() };
        let out = run(&g, "count_h0_plain", &config);
        assert_eq!(out.stats.leaves, 5);
        assert!(out.stats.truncated);
    }

    #[test]
    fn reject_rules() {
        let g = graph(vec![obj("a", "pedestrian", Some("moving"), 10.0, 2.0)]);
        let r = Registry::builtin();
        let config = GenerationConfig::default();
        let t = r.get("exist_h0_any").unwrap();
        let parked = Binding::new()
            .with("A", SlotValue::Status(Some("parked".into())))
            .with("O", SlotValue::Object(ObjectRef::Category("pedestrian".into())));
        let outcome = crate::qa::execute_traced(&t.program, &parked, &g);
        let c = Candidate { template: t, binding: &parked, outcome: &outcome };
        assert_eq!(reject(&c, &config), Some(RejectReason::BlacklistedCombo));
        let moving = parked.clone().with("A", SlotValue::Status(Some("moving".into())));
        let outcome = crate::qa::execute_traced(&t.program, &moving, &g);
        let c = Candidate { template: t, binding: &moving, outcome: &outcome };
        assert_eq!(reject(&c, &config), None);
    }

    #[test]
    fn selection_round_robins_answers() {
        let b = Binding::new();
        let found: Vec<_> = (0..10)
            .map(|i| (b.clone(), if i < 8 { Answer::Bool(true) } else { Answer::Bool(false) }))
            .collect();
        let picked = select(&found, 4, 1);
        let no = picked.iter().filter(|i| **i >= 8).count();
        assert_eq!(no, 2);
        for seed in 0..8 {
            let first = select(&found, 2, seed);
            assert_eq!(first.iter().filter(|i| **i >= 8).count(), 1);
        }
        assert_eq!(select(&found, 100, 1).len(), 10);
    }
}
