//! Scene domain types and annotation ingestion.
//!
//! A scene is a single annotated keyframe: a set of oriented 3D boxes with
//! category/status labels plus the ego vehicle's motion state. Annotations
//! are read from a flat record format:
//!
//! ```json
//! {"scene_id": "s0",
//!  "ego": {"velocity": [vx, vy, vz], "heading_yaw": 0.0},
//!  "objects": [{"id": "a", "category": "car", "status": "parked",
//!               "box": [x, y, z, x_size, y_size, z_size, yaw]}]}
//! ```
//!
//! A document may hold one such record or an array of them.

use std::collections::HashSet;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("schema violation: {0}")]
    Schema(String),
    #[error("duplicate id `{0}`")]
    DuplicateId(String),
    #[error("degenerate box for object `{id}`: {axis} = {value}")]
    DegenerateBox { id: String, axis: &'static str, value: f64 },
    #[error("non-finite {field} in {owner}")]
    NonFinite { owner: String, field: &'static str },
    #[error("unknown category `{category}` for object `{id}`")]
    UnknownCategory { id: String, category: String },
    #[error("unknown status `{status}` for object `{id}`")]
    UnknownStatus { id: String, status: String },
}

/// Wraps `yaw` into `[-π, π)`.
pub fn normalize_yaw(yaw: f64) -> f64 {
    if (-PI..PI).contains(&yaw) {
        return yaw;
    }
    let wrapped = (yaw + PI).rem_euclid(2.0 * PI) - PI;
    if wrapped >= PI {
        wrapped - 2.0 * PI
    } else {
        wrapped
    }
}

/// Canonical token form of a label: lowercase, words joined by `_`.
pub fn label_token(label: &str) -> String {
    label
        .trim()
        .to_lowercase()
        .split(|c: char| c.is_whitespace() || c == '_' || c == '-')
        .filter(|w| !w.is_empty())
        .collect::<Vec<_>>()
        .join("_")
}

/// Human-readable form of a label token (`traffic_cone` -> `traffic cone`).
pub fn label_display(token: &str) -> String {
    token.replace('_', " ")
}

/// Category and status vocabularies accepted at ingestion.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Taxonomy {
    pub categories: Vec<String>,
    pub statuses: Vec<String>,
}

impl Default for Taxonomy {
    fn default() -> Self {
        let categories = [
            "car",
            "truck",
            "bus",
            "trailer",
            "construction_vehicle",
            "pedestrian",
            "motorcycle",
            "bicycle",
            "traffic_cone",
            "barrier",
        ];
        let statuses = ["moving", "stopped", "parked", "standing", "sitting", "with_rider", "without_rider"];
        Self {
            categories: categories.iter().map(|s| s.to_string()).collect(),
            statuses: statuses.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl Taxonomy {
    pub fn has_category(&self, token: &str) -> bool {
        self.categories.iter().any(|c| c == token)
    }

    pub fn has_status(&self, token: &str) -> bool {
        self.statuses.iter().any(|s| s == token)
    }

    /// Status vocabulary each default category can carry. Categories absent
    /// from the map carry no status.
    pub fn default_valid_statuses(category: &str) -> &'static [&'static str] {
        match category {
            "car" | "truck" | "bus" | "trailer" | "construction_vehicle" => &["moving", "stopped", "parked"],
            "pedestrian" => &["moving", "standing", "sitting"],
            "motorcycle" | "bicycle" => &["with_rider", "without_rider"],
            _ => &[],
        }
    }
}

/// Oriented 3D box in the annotation frame (meters, radians).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub x_size: f64,
    pub y_size: f64,
    pub z_size: f64,
    pub yaw: f64,
}

impl Box3D {
    pub fn from_array(values: [f64; 7]) -> Self {
        let [x, y, z, x_size, y_size, z_size, yaw] = values;
        Self { x, y, z, x_size, y_size, z_size, yaw }
    }

    pub fn to_array(&self) -> [f64; 7] {
        [self.x, self.y, self.z, self.x_size, self.y_size, self.z_size, self.yaw]
    }

    pub fn center_xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    fn validate(mut self, id: &str) -> Result<Self, SceneError> {
        const FIELDS: [&str; 7] = ["x", "y", "z", "x_size", "y_size", "z_size", "yaw"];
        for (field, value) in FIELDS.iter().zip(self.to_array()) {
            if !value.is_finite() {
                return Err(SceneError::NonFinite { owner: format!("object `{id}`"), field });
            }
        }
        for (axis, value) in [("x_size", self.x_size), ("y_size", self.y_size), ("z_size", self.z_size)] {
            if value <= 0.0 {
                return Err(SceneError::DegenerateBox { id: id.to_string(), axis, value });
            }
        }
        self.yaw = normalize_yaw(self.yaw);
        Ok(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneObject {
    pub id: String,
    /// Category token from the taxonomy.
    pub category: String,
    /// Status token from the taxonomy, if the object carries one.
    pub status: Option<String>,
    pub bbox: Box3D,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoState {
    pub velocity: [f64; 3],
    pub heading_yaw: f64,
}

impl EgoState {
    pub fn new(velocity: [f64; 3], heading_yaw: f64) -> Self {
        Self { velocity, heading_yaw: normalize_yaw(heading_yaw) }
    }
}

/// One annotated keyframe. The ego vehicle sits at the origin of the
/// annotation frame.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scene_id: String,
    pub objects: Vec<SceneObject>,
    pub ego: EgoState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EgoRecord {
    pub velocity: [f64; 3],
    pub heading_yaw: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ObjectRecord {
    pub id: String,
    pub category: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
    #[serde(rename = "box")]
    pub bbox: [f64; 7],
}

/// Raw annotation record as it appears on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneRecord {
    pub scene_id: String,
    pub ego: EgoRecord,
    pub objects: Vec<ObjectRecord>,
}

/// Parses an annotation document holding one scene record or an array.
pub fn parse_scene_document(text: &str) -> Result<Vec<SceneRecord>, SceneError> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| SceneError::Schema(e.to_string()))?;
    let parsed = if value.is_array() {
        serde_json::from_value::<Vec<SceneRecord>>(value)
    } else {
        serde_json::from_value::<SceneRecord>(value).map(|r| vec![r])
    };
    parsed.map_err(|e| SceneError::Schema(e.to_string()))
}

/// Validates a raw record into a [`Scene`].
pub fn load_scene(record: &SceneRecord, taxonomy: &Taxonomy) -> Result<Scene, SceneError> {
    if record.scene_id.trim().is_empty() {
        return Err(SceneError::Schema("empty scene_id".into()));
    }
    let owner = format!("ego of scene `{}`", record.scene_id);
    if record.ego.velocity.iter().any(|v| !v.is_finite()) {
        return Err(SceneError::NonFinite { owner, field: "velocity" });
    }
    if !record.ego.heading_yaw.is_finite() {
        return Err(SceneError::NonFinite { owner, field: "heading_yaw" });
    }

    let mut seen = HashSet::new();
    let mut objects = Vec::with_capacity(record.objects.len());
    for raw in &record.objects {
        if raw.id.is_empty() {
            return Err(SceneError::Schema("object with empty id".into()));
        }
        if !seen.insert(raw.id.as_str()) {
            return Err(SceneError::DuplicateId(raw.id.clone()));
        }
        let category = label_token(&raw.category);
        if !taxonomy.has_category(&category) {
            return Err(SceneError::UnknownCategory { id: raw.id.clone(), category: raw.category.clone() });
        }
        let status = match &raw.status {
            None => None,
            Some(s) => {
                let token = label_token(s);
                if !taxonomy.has_status(&token) {
                    return Err(SceneError::UnknownStatus { id: raw.id.clone(), status: s.clone() });
                }
                Some(token)
            }
        };
        let bbox = Box3D::from_array(raw.bbox).validate(&raw.id)?;
        objects.push(SceneObject { id: raw.id.clone(), category, status, bbox });
    }

    Ok(Scene {
        scene_id: record.scene_id.clone(),
        objects,
        ego: EgoState::new(record.ego.velocity, record.ego.heading_yaw),
    })
}

impl Scene {
    pub fn to_record(&self) -> SceneRecord {
        SceneRecord {
            scene_id: self.scene_id.clone(),
            ego: EgoRecord { velocity: self.ego.velocity, heading_yaw: self.ego.heading_yaw },
            objects: self
                .objects
                .iter()
                .map(|o| ObjectRecord {
                    id: o.id.clone(),
                    category: o.category.clone(),
                    status: o.status.clone(),
                    bbox: o.bbox.to_array(),
                })
                .collect(),
        }
    }
}
