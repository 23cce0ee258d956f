use std::collections::BTreeMap;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{split_of, GenerationConfig, QaPair};
use crate::hash::{mix64, stable_u64};
use crate::template::{AnswerType, QuestionType};

const BALANCE_SALT: u64 = 0xb41a_6ce0_77d3_2f19;

/// Chooses, for one question type, the rarest answer frequency to balance
/// against. Answers rarer than that are dropped outright, but only while
/// their combined mass stays within `tail` of the type's pairs; among the
/// admissible choices the one retaining the most pairs wins.
fn balance_floor(counts: &[usize], cap: f64, tail: f64) -> usize {
    let mut sorted = counts.to_vec();
    sorted.sort_unstable();
    let total: usize = sorted.iter().sum();
    let budget = tail * total as f64;
    let mut best = (0usize, sorted[0]);
    let mut dropped = 0usize;
    for (j, &floor) in sorted.iter().enumerate() {
        if j > 0 {
            dropped += sorted[j - 1];
            if floor == sorted[j - 1] {
                continue;
            }
        }
        if dropped as f64 > budget {
            break;
        }
        let limit = (cap * floor as f64).floor() as usize;
        let retained: usize = sorted[j..].iter().map(|&c| c.min(limit)).sum();
        if retained > best.0 {
            best = (retained, floor);
        }
    }
    best.1
}

/// Down-samples so that, within each question type, no answer occurs more
/// than `cap` times as often as the rarest answer kept. Yes/no templates
/// are first balanced individually within each split, so the template alone
/// does not give the answer away. Survivors keep their input order.
pub fn balance(pairs: Vec<QaPair>, config: &GenerationConfig) -> Vec<QaPair> {
    balance_with_report(pairs, config).0
}

/// Seeded down-sampling of every group to `limit(group, size)` members.
fn downsample<K: Ord + Clone + std::fmt::Display>(
    groups: &BTreeMap<K, Vec<usize>>,
    limit: impl Fn(&K, usize) -> usize,
    keep: &mut [bool],
    seed: u64,
) -> BTreeMap<K, usize> {
    let mut dropped = BTreeMap::new();
    for (key, members) in groups {
        let limit = limit(key, members.len());
        if members.len() <= limit {
            continue;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(mix64(seed ^ BALANCE_SALT) ^ stable_u64(&key.to_string()));
        let mut survivors = vec![false; members.len()];
        for j in sample(&mut rng, members.len(), limit) {
            survivors[j] = true;
        }
        for (j, &i) in members.iter().enumerate() {
            keep[i] = survivors[j];
        }
        dropped.insert(key.clone(), members.len() - limit);
    }
    dropped
}

/// (template or question type, answer)
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord)]
struct Group<'a, T>(T, &'a str);

impl<T: std::fmt::Display> std::fmt::Display for Group<'_, T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}|{}", self.0, self.1)
    }
}

/// As [`balance`], also returning the number of pairs dropped per type.
pub fn balance_with_report(
    pairs: Vec<QaPair>,
    config: &GenerationConfig,
) -> (Vec<QaPair>, BTreeMap<QuestionType, usize>) {
    let mut keep = vec![true; pairs.len()];
    let mut dropped: BTreeMap<QuestionType, usize> = BTreeMap::new();
    let qtype_of: BTreeMap<&str, QuestionType> = pairs.iter().map(|p| (p.template_id.as_str(), p.qtype)).collect();

    // Pass 1: yes/no balance inside each binary template, separately per
    // split so that no split can be answered from the template alone.
    let mut by_template: BTreeMap<Group<'_, String>, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate() {
        if p.qtype.answer_type() == AnswerType::Boolean {
            let split = split_of(&p.scene_id, config.train_fraction);
            by_template.entry(Group(format!("{}|{split:?}", p.template_id), &p.answer)).or_default().push(i);
        }
    }
    // A template that only ever says "yes" (or "no") in a split is dropped there.
    let mut cell_floor: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for (Group(cell, _), members) in &by_template {
        let (answers, floor) = cell_floor.entry(cell).or_insert((0, usize::MAX));
        *answers += 1;
        *floor = (*floor).min(members.len());
    }
    let cell_floor: BTreeMap<&str, usize> =
        cell_floor.into_iter().map(|(t, (answers, floor))| (t, if answers < 2 { 0 } else { floor })).collect();
    let cap = config.template_balance_cap;
    let limit = |g: &Group<'_, String>, _: usize| capped(cap, cell_floor[g.0.as_str()]);
    let dropped_cells = downsample(&by_template, limit, &mut keep, config.seed ^ 1);
    for (group, n) in dropped_cells {
        let template = group.0.rsplit_once('|').map_or(group.0.as_str(), |(t, _)| t);
        *dropped.entry(qtype_of[template]).or_default() += n;
    }

    // Pass 2: per question type, over the survivors.
    let mut by_answer: BTreeMap<Group<'_, QuestionType>, Vec<usize>> = BTreeMap::new();
    for (i, p) in pairs.iter().enumerate().filter(|(i, _)| keep[*i]) {
        by_answer.entry(Group(p.qtype, &p.answer)).or_default().push(i);
    }
    let mut counts: BTreeMap<QuestionType, Vec<usize>> = BTreeMap::new();
    for (Group(qtype, _), members) in &by_answer {
        counts.entry(*qtype).or_default().push(members.len());
    }
    let floors: BTreeMap<QuestionType, (f64, usize)> = counts
        .into_iter()
        .map(|(q, c)| {
            let cap = config.cap_for(q);
            (q, (cap, balance_floor(&c, cap, config.balance_tail_fraction)))
        })
        .collect();
    let limit = |g: &Group<'_, QuestionType>, n: usize| {
        let (cap, floor) = floors[&g.0];
        if n < floor {
            0
        } else {
            capped(cap, floor)
        }
    };
    for (group, n) in downsample(&by_answer, limit, &mut keep, config.seed) {
        *dropped.entry(group.0).or_default() += n;
    }

    let kept = pairs.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect();
    (kept, dropped)
}

fn capped(cap: f64, floor: usize) -> usize {
    if cap.is_infinite() {
        usize::MAX
    } else {
        (cap * floor as f64).floor() as usize
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qa::Split;
    use crate::template::Binding;

    fn pair(i: usize, answer: &str) -> QaPair {
        QaPair {
            question_id: format!("{i:016x}"),
            scene_id: format!("s{}", i % 7),
            question: "How many cars are there?".into(),
            answer: answer.into(),
            template_id: "count_h0_plain".into(),
            hop: 0,
            qtype: QuestionType::Count,
            variant_index: 0,
            binding: Binding::new(),
        }
    }

    fn histogram(pairs: &[QaPair]) -> BTreeMap<String, usize> {
        let mut h = BTreeMap::new();
        for p in pairs {
            *h.entry(p.answer.clone()).or_default() += 1;
        }
        h
    }

    #[test]
    fn uniform_input_is_unchanged() {
        let pairs: Vec<_> = (0..1100).map(|i| pair(i, &(i % 11).to_string())).collect();
        assert_eq!(balance(pairs.clone(), &GenerationConfig::default()), pairs);
    }

    #[test]
    fn dominant_answer_is_capped() {
        let mut pairs: Vec<_> = (0..1000).map(|i| pair(i, "0")).collect();
        pairs.extend((0..1000).map(|i| pair(1000 + i, &(1 + i % 10).to_string())));
        let (out, dropped) = balance_with_report(pairs.clone(), &GenerationConfig::default());
        let h = histogram(&out);
        assert_eq!(h["0"], 150);
        assert!(h.iter().filter(|(k, _)| *k != "0").all(|(_, v)| *v == 100));
        assert_eq!(dropped[&QuestionType::Count], 850);
        let positions: Vec<_> = out.iter().map(|p| pairs.iter().position(|q| q == p).unwrap()).collect();
        assert!(positions.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn rare_tail_is_dropped_within_budget() {
        // 1000 pairs, answer "9" seen twice: balancing against it would keep 33.
        let mut pairs: Vec<_> = (0..998).map(|i| pair(i, &(i % 4).to_string())).collect();
        pairs.extend((0..2).map(|i| pair(998 + i, "9")));
        let h = histogram(&balance(pairs, &GenerationConfig::default()));
        assert!(!h.contains_key("9"));
        assert_eq!(h.values().sum::<usize>(), 998);
    }

    #[test]
    fn binary_minority_is_never_dropped() {
        let pairs: Vec<_> = (0..1000).map(|i| pair(i, if i < 900 { "yes" } else { "no" })).collect();
        let h = histogram(&balance(pairs, &GenerationConfig::default()));
        assert_eq!((h["yes"], h["no"]), (150, 100));
    }

    #[test]
    fn floor_choice() {
        assert_eq!(balance_floor(&[100; 11], 1.5, 0.05), 100);
        assert_eq!(balance_floor(&[1000, 100, 100], 1.5, 0.05), 100);
        assert_eq!(balance_floor(&[1, 300, 300, 400], 1.5, 0.05), 300);
        assert_eq!(balance_floor(&[1, 300, 300, 400], 1.5, 0.0), 1);
    }

    #[test]
    fn binary_templates_are_balanced_individually() {
        let mk = |i: usize, template: &str, answer: &str| QaPair {
            template_id: template.into(),
            qtype: QuestionType::Exist,
            ..pair(i, answer)
        };
        // Globally even, but each template is 80/20.
        let mut pairs: Vec<_> = (0..500).map(|i| mk(i, "a", if i < 400 { "yes" } else { "no" })).collect();
        pairs.extend((0..500).map(|i| mk(500 + i, "b", if i < 400 { "no" } else { "yes" })));
        let config = GenerationConfig::default();
        let out = balance(pairs, &config);
        for t in ["a", "b"] {
            for split in [Split::Train, Split::Test] {
                let cell = |a: &str| {
                    out.iter()
                        .filter(|p| p.template_id == t && p.answer == a)
                        .filter(|p| split_of(&p.scene_id, config.train_fraction) == split)
                        .count()
                };
                let (yes, no) = (cell("yes"), cell("no"));
                assert!(yes.max(no) as f64 <= 1.2 * yes.min(no) as f64, "{t} {split:?}: {yes}/{no}");
            }
        }
    }

    #[test]
    fn one_sided_binary_template_is_dropped() {
        let pairs: Vec<_> = (0..50)
            .map(|i| QaPair { template_id: "t".into(), qtype: QuestionType::Exist, ..pair(i, "no") })
            .collect();
        assert!(balance(pairs, &GenerationConfig::default()).is_empty());
    }

    #[test]
    fn empty_input() {
        assert!(balance(Vec::new(), &GenerationConfig::default()).is_empty());
    }

    #[test]
    fn seeded() {
        let pairs: Vec<_> = (0..300).map(|i| pair(i, if i % 3 == 0 { "1" } else { "2" })).collect();
        let a = balance(pairs.clone(), &GenerationConfig::with_seed(1));
        assert_eq!(a, balance(pairs.clone(), &GenerationConfig::with_seed(1)));
        assert_ne!(a, balance(pairs, &GenerationConfig::with_seed(2)));
    }
}
