use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::instantiate::pair_seed;
use super::{balance_with_report, instantiate, GenerationConfig, QaPair, RejectReason, TemplateYield};
use crate::graph::build_scene_graph;
use crate::hash::{mix64, stable_u64, unit_interval};
use crate::par::map_ordered;
use crate::relation::RelationError;
use crate::scene::Scene;
use crate::template::{QuestionType, Registry};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenerateError {
    #[error("scene `{scene}`: {source}")]
    Graph { scene: String, source: RelationError },
    #[error("scene id `{0}` appears more than once")]
    DuplicateScene(String),
    #[error("invalid generation config: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Test,
}

/// Split assignment from a hash of the scene id alone.
pub fn split_of(scene_id: &str, train_fraction: f64) -> Split {
    if unit_interval(stable_u64(&format!("split|{scene_id}"))) < train_fraction {
        Split::Train
    } else {
        Split::Test
    }
}

/// Pairs generated for one scene, before balancing.
#[derive(Debug, Clone, Default)]
pub struct SceneOutput {
    pub scene_id: String,
    pub pairs: Vec<QaPair>,
    pub templates: BTreeMap<String, TemplateYield>,
    /// Pairs removed by the per-scene cap.
    pub capped: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GenerationReport {
    pub scenes: usize,
    pub templates: BTreeMap<String, TemplateYield>,
    pub rejections: BTreeMap<RejectReason, usize>,
    /// Pairs surviving rejection and the per-(scene, template) budget.
    pub emitted: usize,
    pub scene_cap_dropped: usize,
    pub balance_dropped: BTreeMap<QuestionType, usize>,
    pub total: usize,
    pub train: usize,
    pub test: usize,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<QaPair>,
    pub test: Vec<QaPair>,
    pub report: GenerationReport,
}

impl Dataset {
    pub fn pairs(&self) -> impl Iterator<Item = &QaPair> {
        self.train.iter().chain(self.test.iter())
    }

    pub fn len(&self) -> usize {
        self.train.len() + self.test.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Keeps at most `cap` pairs, visiting templates round-robin in a
/// scene-seeded order. Kept pairs stay in registry order.
fn cap_scene(per_template: Vec<Vec<QaPair>>, cap: usize, seed: u64) -> (Vec<QaPair>, usize) {
    let total: usize = per_template.iter().map(Vec::len).sum();
    if cap == 0 || total <= cap {
        return (per_template.into_iter().flatten().collect(), 0);
    }
    let mut order: Vec<usize> = (0..per_template.len()).collect();
    order.sort_by_key(|&t| mix64(seed ^ t as u64));
    let mut quota = vec![0usize; per_template.len()];
    let mut taken = 0;
    let mut round = 0;
    while taken < cap {
        for &t in &order {
            if taken == cap {
                break;
            }
            if per_template[t].len() > round {
                quota[t] += 1;
                taken += 1;
            }
        }
        round += 1;
    }
    let kept = per_template.into_iter().zip(quota).flat_map(|(pairs, q)| pairs.into_iter().take(q)).collect();
    (kept, total - cap)
}

pub fn generate_scene(
    scene: &Scene,
    registry: &Registry,
    config: &GenerationConfig,
) -> Result<SceneOutput, GenerateError> {
    let graph = build_scene_graph(scene)
        .map_err(|source| GenerateError::Graph { scene: scene.scene_id.clone(), source })?;
    let mut templates = BTreeMap::new();
    // A scene without objects has nothing to ask about.
    if scene.objects.is_empty() {
        return Ok(SceneOutput { scene_id: scene.scene_id.clone(), pairs: Vec::new(), templates, capped: 0 });
    }
    let mut per_template = Vec::with_capacity(registry.templates.len());
    for template in &registry.templates {
        let run = instantiate(&graph, template, config, pair_seed(config, &scene.scene_id, &template.id));
        templates.insert(template.id.clone(), run.stats);
        per_template.push(run.pairs);
    }
    let scene_seed = mix64(config.seed ^ stable_u64(&scene.scene_id));
    let (pairs, capped) = cap_scene(per_template, config.max_pairs_per_scene, scene_seed);
    Ok(SceneOutput { scene_id: scene.scene_id.clone(), pairs, templates, capped })
}

/// Generates, balances and splits a dataset using every available core.
pub fn generate_dataset(
    scenes: &[Scene],
    registry: &Registry,
    config: &GenerationConfig,
) -> Result<Dataset, GenerateError> {
    generate_dataset_with(scenes, registry, config, 0)
}

/// As [`generate_dataset`] with an explicit worker count. Output does not
/// depend on `workers`.
pub fn generate_dataset_with(
    scenes: &[Scene],
    registry: &Registry,
    config: &GenerationConfig,
    workers: usize,
) -> Result<Dataset, GenerateError> {
    config.validate().map_err(GenerateError::Config)?;
    let mut seen = BTreeSet::new();
    for scene in scenes {
        if !seen.insert(scene.scene_id.as_str()) {
            return Err(GenerateError::DuplicateScene(scene.scene_id.clone()));
        }
    }

    let outputs = map_ordered(scenes, workers, |scene| generate_scene(scene, registry, config));

    let mut report = GenerationReport { scenes: scenes.len(), ..GenerationReport::default() };
    let mut pairs = Vec::new();
    for output in outputs {
        let output = output?;
        for (id, stats) in &output.templates {
            report.templates.entry(id.clone()).or_default().absorb(stats);
            for (reason, n) in &stats.rejections {
                *report.rejections.entry(*reason).or_default() += n;
            }
            report.emitted += stats.emitted;
        }
        report.scene_cap_dropped += output.capped;
        pairs.extend(output.pairs);
    }

    let (pairs, dropped) = balance_with_report(pairs, config);
    report.balance_dropped = dropped;
    report.total = pairs.len();

    let (train, test): (Vec<_>, Vec<_>) =
        pairs.into_iter().partition(|p| split_of(&p.scene_id, config.train_fraction) == Split::Train);
    report.train = train.len();
    report.test = test.len();
    Ok(Dataset { train, test, report })
}
