use std::collections::BTreeMap;

use sgqa_core::{QaPair, Relation, Scene};

use crate::relation::{forward_oracle, sector_oracle};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum OracleError {
    /// A definite reference matched `size` entities instead of one.
    NotUnique { slot: &'static str, size: usize },
    MissingStatus,
    UnknownTemplate(String),
    BadBinding(String),
}

#[derive(Debug, Clone)]
struct Entity {
    ego: bool,
    category: String,
    status: Option<String>,
    position: [f64; 2],
}

/// Brute-force question answering straight from the scene description.
/// Each template is answered from its reading as an English question, not
/// from its program.
pub struct Oracle {
    entities: Vec<Entity>,
    forward: [f64; 2],
    slots: BTreeMap<String, String>,
}

type Set = Vec<usize>;

impl Oracle {
    pub fn new(scene: &Scene, pair: &QaPair) -> Result<Self, OracleError> {
        let value = serde_json::to_value(&pair.binding).map_err(|e| OracleError::BadBinding(e.to_string()))?;
        let slots: BTreeMap<String, String> =
            serde_json::from_value(value).map_err(|e| OracleError::BadBinding(e.to_string()))?;
        let mut entities = vec![Entity { ego: true, category: "me".into(), status: None, position: [0.0, 0.0] }];
        entities.extend(scene.objects.iter().map(|o| Entity {
            ego: false,
            category: o.category.clone(),
            status: o.status.clone(),
            position: [o.bbox.x, o.bbox.y],
        }));
        Ok(Self { entities, forward: forward_oracle(&scene.ego), slots })
    }

    fn slot(&self, name: &str) -> Result<&str, OracleError> {
        self.slots.get(name).map(String::as_str).ok_or_else(|| OracleError::BadBinding(format!("missing slot {name}")))
    }

    fn matches(&self, e: &Entity, status: &str, noun: &str) -> bool {
        let noun_ok = match noun {
            "thing" => !e.ego,
            "me" => e.ego,
            category => !e.ego && e.category == category,
        };
        noun_ok && (status.is_empty() || e.status.as_deref() == Some(status))
    }

    /// Entities of `universe` described by status slot `a` and noun slot `o`.
    fn described(&self, universe: &[usize], a: &str, o: &str) -> Result<Set, OracleError> {
        let (status, noun) = (self.slot(a)?, self.slot(o)?);
        Ok(universe.iter().copied().filter(|&i| self.matches(&self.entities[i], status, noun)).collect())
    }

    fn all(&self) -> Set {
        (0..self.entities.len()).collect()
    }

    fn the(&self, set: Set, slot: &'static str) -> Result<usize, OracleError> {
        match set.as_slice() {
            [only] => Ok(*only),
            _ => Err(OracleError::NotUnique { slot, size: set.len() }),
        }
    }

    /// "The <a> <o>" among all entities.
    fn the_described(&self, a: &str, o: &str, slot: &'static str) -> Result<usize, OracleError> {
        self.the(self.described(&self.all(), a, o)?, slot)
    }

    /// Everything to the `r` of `anchor`.
    fn around(&self, anchor: usize, r: &str) -> Result<Set, OracleError> {
        let wanted: Relation = r.parse().map_err(|_| OracleError::BadBinding(format!("relation {r}")))?;
        let from = self.entities[anchor].position;
        Ok((0..self.entities.len())
            .filter(|&i| i != anchor && sector_oracle(from, self.entities[i].position, self.forward) == wanted)
            .collect())
    }

    fn status_of(&self, i: usize) -> Result<&str, OracleError> {
        self.entities[i].status.as_deref().ok_or(OracleError::MissingStatus)
    }

    /// Entities other than `i` sharing its status.
    fn same_status(&self, i: usize) -> Result<Set, OracleError> {
        let status = self.status_of(i)?;
        Ok((0..self.entities.len()).filter(|&j| j != i && self.entities[j].status.as_deref() == Some(status)).collect())
    }

    /// "the <A2> <O2> to the <R> of the <A> <O>"
    fn the_related(&self, a: &str, o: &str, r: &str, a2: &str, o2: &str) -> Result<usize, OracleError> {
        let anchor = self.the_described(a, o, "anchor")?;
        self.the(self.described(&self.around(anchor, self.slot(r)?)?, a2, o2)?, "related")
    }

    /// Answer text for `template_id`.
    pub fn answer(&self, template_id: &str) -> Result<String, OracleError> {
        let yes_no = |b: bool| if b { "yes" } else { "no" }.to_string();
        let display = |s: &str| s.replace('_', " ");
        let all = self.all();
        Ok(match template_id {
            "exist_h0_any" => yes_no(!self.described(&all, "A", "O")?.is_empty()),
            "count_h0_plain" => self.described(&all, "A", "O")?.len().to_string(),
            "exist_h0_same_status" | "count_h0_same_status" => {
                let it = self.the_described("A", "O", "anchor")?;
                let peers = self.same_status(it)?;
                if template_id.starts_with("count") {
                    peers.len().to_string()
                } else {
                    yes_no(!self.described(&peers, "A2", "O2")?.is_empty())
                }
            }
            "exist_h1_relate" | "count_h1_relate" => {
                let anchor = self.the_described("A", "O", "anchor")?;
                let found = self.described(&self.around(anchor, self.slot("R")?)?, "A2", "O2")?;
                if template_id.starts_with("count") {
                    found.len().to_string()
                } else {
                    yes_no(!found.is_empty())
                }
            }
            "exist_h1_same_status" | "count_h1_same_status" => {
                let it = self.the_related("A", "O", "R", "A2", "O2")?;
                let found = self.described(&self.same_status(it)?, "A3", "O3")?;
                if template_id.starts_with("count") {
                    found.len().to_string()
                } else {
                    yes_no(!found.is_empty())
                }
            }
            "query_object_h0" => display(&self.entities[self.the_described("A", "O", "anchor")?].category),
            "query_status_h0" => display(self.status_of(self.the_described("A", "O", "anchor")?)?),
            "query_object_h1_relate" => display(&self.entities[self.the_related("A", "O", "R", "A2", "O2")?].category),
            "query_status_h1" => display(self.status_of(self.the_related("A", "O", "R", "A2", "O2")?)?),
            "query_object_h1_both" => {
                let first = self.the_described("A", "O", "anchor")?;
                let second = self.the_described("A2", "O2", "second anchor")?;
                let near_first = self.around(first, self.slot("R")?)?;
                let near_second = self.around(second, self.slot("R2")?)?;
                let both: Set = near_first.into_iter().filter(|i| near_second.contains(i)).collect();
                display(&self.entities[self.the(self.described(&both, "A3", "O3")?, "target")?].category)
            }
            "comparison_h0" => {
                let x = self.the_described("A", "O", "left")?;
                let y = self.the_described("A2", "O2", "right")?;
                yes_no(self.status_of(x)? == self.status_of(y)?)
            }
            "comparison_h1_left" => {
                let x = self.the_related("A", "O", "R", "A2", "O2")?;
                let y = self.the_described("A3", "O3", "right")?;
                yes_no(self.status_of(x)? == self.status_of(y)?)
            }
            "comparison_h1_right" => {
                let x = self.the_described("A", "O", "left")?;
                let y = self.the_related("A2", "O2", "R", "A3", "O3")?;
                yes_no(self.status_of(x)? == self.status_of(y)?)
            }
            "comparison_h1_both" => {
                let x = self.the_related("A", "O", "R", "A2", "O2")?;
                let y = self.the_related("A3", "O3", "R2", "A4", "O4")?;
                yes_no(self.status_of(x)? == self.status_of(y)?)
            }
            other => return Err(OracleError::UnknownTemplate(other.to_string())),
        })
    }
}

/// Oracle answer for a generated pair.
pub fn brute_force_answer(scene: &Scene, pair: &QaPair) -> Result<String, OracleError> {
    Oracle::new(scene, pair)?.answer(&pair.template_id)
}
