use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use sgqa_core::bev::crop_pool_batch;
use sgqa_core::qa::GenerateError;
use sgqa_core::records::{parse_jsonl, to_jsonl, Header};
use sgqa_core::scene::parse_scene_document;
use sgqa_core::synth::synthetic_scenes;
use sgqa_core::{
    build_scene_graph, compute_stats, evaluate, generate_dataset_with, load_scene, project_box_to_bev, BevGrid,
    Blacklist, BlindBaseline, Box3D, CropVariant, GenerationConfig, GenerationReport, PoolStrategy, QaPair, Registry,
    Scene, Taxonomy, TOOL_VERSION,
};

use crate::{CliError, RunConfig};

/// Short digest of everything that determines a run's output. Worker
/// count and paths are deliberately left out.
pub fn config_hash(generation: &GenerationConfig, registry_text: &str, extra: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(serde_json::to_string(generation).expect("config serializes").as_bytes());
    hasher.update([0]);
    hasher.update(registry_text.as_bytes());
    hasher.update([0]);
    hasher.update(extra.as_bytes());
    hasher.finalize().iter().take(8).map(|b| format!("{b:02x}")).collect()
}

fn header(seed: u64, config_hash: String) -> Header {
    Header { tool: TOOL_VERSION.to_string(), seed, config_hash }
}

fn write(path: &Path, contents: &str) -> anyhow::Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn read(path: &Path) -> anyhow::Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn file_name(scene_id: &str) -> String {
    scene_id.chars().map(|c| if c.is_ascii_alphanumeric() || "._-".contains(c) { c } else { '_' }).collect()
}

/// Scenes loaded from a directory, with one diagnostic per bad file.
#[derive(Debug, Default)]
pub struct SceneDir {
    pub scenes: Vec<Scene>,
    pub errors: Vec<String>,
}

/// Loads every `*.json` file in `dir`, in file-name order. A file with any
/// invalid record contributes no scenes.
pub fn load_scene_dir(dir: &Path, taxonomy: &Taxonomy) -> anyhow::Result<SceneDir> {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .with_context(|| format!("reading scene directory {}", dir.display()))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|e| e == "json"))
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("no scenes: {} holds no .json files", dir.display());
    }
    let mut out = SceneDir::default();
    for file in files {
        let loaded = read(&file).map_err(|e| format!("{e:#}")).and_then(|text| {
            let records = parse_scene_document(&text).map_err(|e| format!("{}: {e}", file.display()))?;
            records
                .iter()
                .enumerate()
                .map(|(i, r)| load_scene(r, taxonomy).map_err(|e| format!("{} record {i}: {e}", file.display())))
                .collect::<Result<Vec<_>, _>>()
        });
        match loaded {
            Ok(scenes) => out.scenes.extend(scenes),
            Err(e) => out.errors.push(e),
        }
    }
    Ok(out)
}

#[derive(Debug, Serialize)]
struct GraphFile<'a> {
    #[serde(rename = "_header")]
    header: &'a Header,
    graph: sgqa_core::graph::GraphDocument,
}

#[derive(Debug, Default)]
pub struct BuildSummary {
    pub written: Vec<PathBuf>,
    pub errors: Vec<String>,
}

/// Writes `<out>/<scene_id>.graph.json` for every valid scene. Invalid
/// files are reported, not fatal, so one bad file does not hide the rest.
pub fn cmd_build_graphs(scenes: &Path, out: &Path, config: &RunConfig) -> Result<BuildSummary, CliError> {
    let generation = config.effective_generation();
    let dir = load_scene_dir(scenes, &generation.taxonomy)?;
    let head = header(generation.seed, config_hash(&generation, "", "graphs"));
    let mut summary = BuildSummary { errors: dir.errors, ..BuildSummary::default() };
    for scene in &dir.scenes {
        let graph = match build_scene_graph(scene) {
            Ok(g) => g,
            Err(e) => {
                summary.errors.push(format!("scene `{}`: {e}", scene.scene_id));
                continue;
            }
        };
        let doc = GraphFile { header: &head, graph: graph.to_document() };
        let path = out.join(format!("{}.graph.json", file_name(&scene.scene_id)));
        let text = serde_json::to_string_pretty(&doc).map_err(anyhow::Error::from)? + "\n";
        write(&path, &text)?;
        summary.written.push(path);
    }
    Ok(summary)
}

/// Locations for a generation run.
#[derive(Debug, Clone)]
pub struct Inputs {
    pub scenes: PathBuf,
    pub out: PathBuf,
}

#[derive(Debug, Serialize)]
struct ReportFile<'a> {
    #[serde(rename = "_header")]
    header: &'a Header,
    report: &'a GenerationReport,
}

#[derive(Debug, Clone)]
pub struct GenerateSummary {
    pub header: Header,
    pub report: GenerationReport,
    pub files: Vec<PathBuf>,
}

impl fmt::Display for GenerateSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let r = &self.report;
        writeln!(f, "scenes: {}", r.scenes)?;
        writeln!(f, "emitted before balancing: {}", r.emitted - r.scene_cap_dropped)?;
        writeln!(f, "pairs: {} (train {}, test {})", r.total, r.train, r.test)?;
        for (reason, n) in &r.rejections {
            writeln!(f, "rejected {}: {n}", serde_json::to_string(reason).unwrap_or_default().trim_matches('"'))?;
        }
        writeln!(f, "config hash: {}", self.header.config_hash)?;
        for file in &self.files {
            writeln!(f, "wrote {}", file.display())?;
        }
        Ok(())
    }
}

/// Full pipeline: load scenes, generate, balance, split and write
/// `train.jsonl`, `test.jsonl` and `report.json` under `inputs.out`.
pub fn cmd_generate(inputs: &Inputs, config: &RunConfig) -> Result<GenerateSummary, CliError> {
    let mut generation = config.effective_generation();
    generation.validate().map_err(|e| CliError::Usage(format!("generation config: {e}")))?;
    let registry_text = match &config.paths.registry {
        Some(p) => read(p)?,
        None => Registry::builtin_text().to_string(),
    };
    let registry = Registry::parse(&registry_text).map_err(|e| {
        let source = config.paths.registry.as_ref().map_or("shipped registry".into(), |p| p.display().to_string());
        CliError::Data(anyhow::anyhow!("{source}: {e}"))
    })?;
    if let Some(p) = &config.paths.blacklist {
        generation.blacklist =
            Blacklist::parse(&read(p)?).map_err(|e| CliError::Data(anyhow::anyhow!("{}: {e}", p.display())))?;
    }

    let dir = load_scene_dir(&inputs.scenes, &generation.taxonomy)?;
    if !dir.errors.is_empty() {
        return Err(CliError::Data(anyhow::anyhow!("invalid scene input:\n{}", dir.errors.join("\n"))));
    }
    let dataset = generate_dataset_with(&dir.scenes, &registry, &generation, config.workers()).map_err(|e| match e {
        GenerateError::Config(m) => CliError::Usage(m),
        other => CliError::Data(other.into()),
    })?;

    let head = header(generation.seed, config_hash(&generation, &registry_text, ""));
    let files = vec![inputs.out.join("train.jsonl"), inputs.out.join("test.jsonl"), inputs.out.join("report.json")];
    write(&files[0], &to_jsonl(Some(&head), &dataset.train))?;
    write(&files[1], &to_jsonl(Some(&head), &dataset.test))?;
    let report = ReportFile { header: &head, report: &dataset.report };
    write(&files[2], &(serde_json::to_string_pretty(&report).map_err(anyhow::Error::from)? + "\n"))?;
    Ok(GenerateSummary { header: head, report: dataset.report, files })
}

fn read_dataset(path: &Path) -> anyhow::Result<Vec<QaPair>> {
    let text = read(path)?;
    Ok(parse_jsonl::<QaPair>(&text).with_context(|| path.display().to_string())?.1)
}

/// Statistics tables over the union of `datasets`.
pub fn cmd_stats(datasets: &[PathBuf], k: usize, out: Option<&Path>) -> Result<String, CliError> {
    let mut pairs = Vec::new();
    for path in datasets {
        pairs.extend(read_dataset(path)?);
    }
    let stats = compute_stats(&pairs, k).map_err(|e| CliError::Data(e.into()))?;
    let mut text = format!("questions: {}\n", stats.total);
    if let (Some(lo), Some(hi)) = (stats.min_length(), stats.max_length()) {
        text.push_str(&format!("length range: {lo}..{hi} words\n"));
    }
    text.push_str("\n# question length\n");
    text.push_str(&stats.length_table());
    text.push_str("\n# question type\n");
    for (qtype, n) in &stats.qtype_histogram {
        text.push_str(&format!("{}\t{n}\n", qtype.as_str()));
    }
    text.push_str("\n# answers\n");
    text.push_str(&stats.answer_table());
    text.push_str(&format!("\n# first {k} words\n"));
    text.push_str(&stats.prefix_table());
    if let Some(path) = out {
        write(path, &(serde_json::to_string_pretty(&stats).map_err(anyhow::Error::from)? + "\n"))?;
    }
    Ok(text)
}

/// Accuracy report; the metrics table is also written to `out` if given.
pub fn cmd_evaluate(gt: &Path, preds: &Path, out: Option<&Path>) -> Result<String, CliError> {
    let questions = read_dataset(gt)?;
    let predictions = sgqa_core::eval::parse_predictions(&read(preds)?)
        .with_context(|| preds.display().to_string())
        .map_err(CliError::Data)?;
    let report = evaluate(&questions, &predictions).map_err(|e| CliError::Data(e.into()))?;
    let tsv = report.to_tsv();
    let mut text = match report.overall_accuracy() {
        Some(acc) => format!("overall: {acc:.1}% ({}/{})\n", report.overall.correct, report.overall.total),
        None => "overall: no questions\n".to_string(),
    };
    text.push_str(&format!("missing predictions (counted wrong): {}\n", report.missing.len()));
    text.push_str(&format!("predictions for unknown questions: {}\n\n", report.unknown.len()));
    text.push_str(&tsv);
    if let Some(path) = out {
        write(path, &tsv)?;
    }
    Ok(text)
}

#[derive(Debug, Serialize)]
struct PredictionLine<'a> {
    question_id: &'a str,
    answer: &'a str,
}

/// Writes question-only majority predictions for `questions`.
pub fn cmd_baseline(train: &Path, questions: &Path, out: &Path) -> Result<String, CliError> {
    let train_text = read(train)?;
    let train_pairs = parse_jsonl::<QaPair>(&train_text).with_context(|| train.display().to_string())?.1;
    let model = BlindBaseline::fit(&train_pairs).map_err(|e| CliError::Data(e.into()))?;
    let targets = read_dataset(questions)?;
    let lines: Vec<PredictionLine<'_>> =
        targets.iter().map(|q| PredictionLine { question_id: &q.question_id, answer: model.predict(q) }).collect();
    let digest = config_hash(&GenerationConfig::default(), &train_text, "baseline");
    write(out, &to_jsonl(Some(&header(0, digest)), &lines))?;
    Ok(format!("wrote {} predictions to {}\n", lines.len(), out.display()))
}

#[derive(Debug, Deserialize)]
struct BoxRecord {
    id: String,
    #[serde(rename = "box")]
    bbox: [f64; 7],
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum BoxesFile {
    List(Vec<BoxRecord>),
    Scene { objects: Vec<BoxRecord> },
}

#[derive(Debug, Serialize)]
struct EmbeddingLine<'a> {
    id: &'a str,
    embedding: &'a [f64],
}

/// Projects each box into the grid and pools its cells; writes one
/// embedding per box as JSON lines.
pub fn cmd_pool_demo(
    grid: &Path,
    boxes: &Path,
    strategy: PoolStrategy,
    crop: CropVariant,
    out: &Path,
    config: &RunConfig,
) -> Result<String, CliError> {
    let bytes = fs::read(grid).with_context(|| format!("reading {}", grid.display()))?;
    let grid_data = BevGrid::from_bytes(&bytes).with_context(|| grid.display().to_string())?;
    let records = match serde_json::from_str::<BoxesFile>(&read(boxes)?) {
        Ok(BoxesFile::List(r) | BoxesFile::Scene { objects: r }) => r,
        Err(e) => return Err(CliError::Data(anyhow::anyhow!("{}: {e}", boxes.display()))),
    };
    let mut rects = Vec::with_capacity(records.len());
    for r in &records {
        let rect = project_box_to_bev(&Box3D::from_array(r.bbox), &config.bev)
            .with_context(|| format!("{}: box `{}`", boxes.display(), r.id))?;
        rects.push(rect);
    }
    let pooled = crop_pool_batch(&grid_data, &rects, strategy, crop, config.workers());
    let mut embeddings = Vec::with_capacity(pooled.len());
    for (r, result) in records.iter().zip(pooled) {
        let e = result.with_context(|| format!("box `{}`", r.id))?;
        embeddings.push(e.0);
    }
    let lines: Vec<EmbeddingLine<'_>> =
        records.iter().zip(&embeddings).map(|(r, e)| EmbeddingLine { id: &r.id, embedding: e }).collect();
    let extra = format!("{}|{strategy}|{crop}", serde_json::to_string(&config.bev).map_err(anyhow::Error::from)?);
    let generation = config.effective_generation();
    write(out, &to_jsonl(Some(&header(generation.seed, config_hash(&generation, "", &extra))), &lines))?;
    Ok(format!("wrote {} embeddings ({strategy}, {crop}) to {}\n", lines.len(), out.display()))
}

/// Writes `count` seeded synthetic scenes as `<out>/<scene_id>.json`.
pub fn cmd_synth_scenes(count: usize, seed: u64, out: &Path) -> Result<String, CliError> {
    for scene in synthetic_scenes(count, seed) {
        let text = serde_json::to_string_pretty(&scene.to_record()).map_err(anyhow::Error::from)? + "\n";
        write(&out.join(format!("{}.json", file_name(&scene.scene_id))), &text)?;
    }
    Ok(format!("wrote {count} scenes to {}\n", out.display()))
}
