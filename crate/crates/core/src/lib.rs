//! Scene-graph question answering toolkit for annotated driving scenes.
//!
//! The pipeline turns keyframe annotations into complete spatial scene
//! graphs, instantiates a registry of question templates against them,
//! infers answers by executing small functional programs, filters and
//! balances the result, and scores prediction files. A separate geometry
//! kernel projects 3D boxes into a bird's-eye-view grid and crops/pools
//! features inside the rotated footprints.

pub mod bev;
pub mod eval;
pub mod graph;
pub mod par;
pub mod qa;
pub mod records;
pub mod relation;
pub mod scene;
pub mod stats;
pub mod synth;
pub mod template;

mod hash;

pub use bev::{
    crop_pool, project_box_to_bev, BevConfig, BevError, BevGrid, CropVariant, ObjectEmbedding, PoolStrategy,
    RotatedRect,
};
pub use eval::{evaluate, BlindBaseline, EvalError, HopColumn, MetricsReport, Prediction};
pub use graph::{build_scene_graph, Node, NodeId, SceneGraph};
pub use qa::{
    balance, execute_program, generate_dataset, generate_dataset_with, instantiate, reject, Answer, Blacklist, Dataset, ExecError,
    GenerationConfig, GenerationReport, QaPair, RejectReason,
};
pub use relation::{bin_relation, forward_direction, relation_between, signed_angle, Relation, SignedAngle};
pub use scene::{load_scene, Box3D, EgoState, Scene, SceneError, SceneObject, SceneRecord, Taxonomy};
pub use stats::{compute_stats, StatsError, StatsReport};
pub use template::{Binding, ObjectRef, QuestionTemplate, QuestionType, Registry, Slot, SlotKind, SlotValue};

/// Tool identifier written into output headers.
pub const TOOL_VERSION: &str = concat!("sgqa ", env!("CARGO_PKG_VERSION"));
