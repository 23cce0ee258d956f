//! Complete labeled scene graphs over the ego vehicle and annotated objects.

use serde::Serialize;

use crate::relation::{forward_direction, relation_from_centers, Relation, RelationError};
use crate::scene::{Scene, SceneObject};

/// Index of a node inside a [`SceneGraph`]. The ego vehicle is always node 0.
pub type NodeId = usize;

pub const EGO: NodeId = 0;

/// Surface form of the ego vehicle in question text.
pub const EGO_LABEL: &str = "me";

#[derive(Debug, Clone, PartialEq)]
pub enum Node {
    Ego,
    Object(SceneObject),
}

impl Node {
    /// Ego sits at the annotation-frame origin.
    pub fn center(&self) -> [f64; 2] {
        match self {
            Node::Ego => [0.0, 0.0],
            Node::Object(o) => o.bbox.center_xy(),
        }
    }

    pub fn category(&self) -> Option<&str> {
        match self {
            Node::Ego => None,
            Node::Object(o) => Some(&o.category),
        }
    }

    pub fn status(&self) -> Option<&str> {
        match self {
            Node::Ego => None,
            Node::Object(o) => o.status.as_deref(),
        }
    }

    pub fn is_ego(&self) -> bool {
        matches!(self, Node::Ego)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneGraph {
    pub scene_id: String,
    nodes: Vec<Node>,
    /// Row-major `n × n` relation matrix; `None` on the diagonal only.
    edges: Vec<Option<Relation>>,
}

impl SceneGraph {
    pub fn nodes(&self) -> &[Node] {
        &self.nodes
    }

    pub fn node(&self, id: NodeId) -> &Node {
        &self.nodes[id]
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of non-ego object nodes.
    pub fn object_count(&self) -> usize {
        self.nodes.len() - 1
    }

    /// Relation of `target` as seen from `reference`.
    pub fn edge(&self, reference: NodeId, target: NodeId) -> Option<Relation> {
        self.edges[reference * self.nodes.len() + target]
    }

    pub fn edge_count(&self) -> usize {
        self.edges.iter().filter(|e| e.is_some()).count()
    }

    /// Nodes lying at `relation` from `reference`, ascending.
    pub fn related(&self, reference: NodeId, relation: Relation) -> impl Iterator<Item = NodeId> + '_ {
        let n = self.nodes.len();
        self.edges[reference * n..(reference + 1) * n]
            .iter()
            .enumerate()
            .filter(move |(_, e)| **e == Some(relation))
            .map(|(i, _)| i)
    }

    pub fn to_document(&self) -> GraphDocument {
        let nodes = self
            .nodes
            .iter()
            .enumerate()
            .map(|(index, node)| match node {
                Node::Ego => GraphNodeRecord {
                    index,
                    id: None,
                    category: EGO_LABEL.to_string(),
                    status: None,
                },
                Node::Object(o) => GraphNodeRecord {
                    index,
                    id: Some(o.id.clone()),
                    category: o.category.clone(),
                    status: o.status.clone(),
                },
            })
            .collect();
        let n = self.nodes.len();
        let edges = (0..n)
            .flat_map(|r| (0..n).map(move |t| (r, t)))
            .filter_map(|(r, t)| self.edge(r, t).map(|relation| GraphEdgeRecord { reference: r, target: t, relation }))
            .collect();
        GraphDocument { scene_id: self.scene_id.clone(), nodes, edges }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphNodeRecord {
    pub index: NodeId,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub category: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub status: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct GraphEdgeRecord {
    pub reference: NodeId,
    pub target: NodeId,
    pub relation: Relation,
}

/// Serializable form of a scene graph.
#[derive(Debug, Clone, Serialize)]
pub struct GraphDocument {
    pub scene_id: String,
    pub nodes: Vec<GraphNodeRecord>,
    pub edges: Vec<GraphEdgeRecord>,
}

/// Builds the complete directed graph: ego plus every object, one labeled
/// edge per ordered pair of distinct nodes.
pub fn build_scene_graph(scene: &Scene) -> Result<SceneGraph, RelationError> {
    let mut nodes = Vec::with_capacity(scene.objects.len() + 1);
    nodes.push(Node::Ego);
    nodes.extend(scene.objects.iter().cloned().map(Node::Object));

    let forward = forward_direction(&scene.ego);
    let n = nodes.len();
    let mut edges = vec![None; n * n];
    for r in 0..n {
        for t in 0..n {
            if r != t {
                edges[r * n + t] = Some(relation_from_centers(nodes[r].center(), nodes[t].center(), forward)?);
            }
        }
    }
    Ok(SceneGraph { scene_id: scene.scene_id.clone(), nodes, edges })
}
