//! Versioned JSON map files. Floats round-trip bit-exactly.

use std::collections::{BTreeMap, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Edge, EdgeMode, NodeId, ObjectNode, SceneGraph};
use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, Pose};
use crate::mask::Mask;
use crate::world::{CameraParams, InstanceId};

pub const MAP_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    camera: CameraParams,
    edge_mode: EdgeMode,
    focal_length: f64,
    seed: u64,
}

#[derive(Serialize, Deserialize)]
struct NodeRecord {
    id: NodeId,
    frame: usize,
    instance: InstanceId,
    category: String,
    anchor: Point3,
    mask: Mask,
    pixel_center: Point2,
}

#[derive(Serialize, Deserialize)]
struct FramePose {
    frame: usize,
    pose: Pose,
}

#[derive(Serialize, Deserialize)]
struct MapFile {
    version: u32,
    header: Header,
    frames: Vec<FramePose>,
    nodes: Vec<NodeRecord>,
    /// `[u, v, weight]`
    intra_edges: Vec<(NodeId, NodeId, f64)>,
    inter_edges: Vec<(NodeId, NodeId)>,
}

impl SceneGraph {
    pub fn to_json(&self) -> Result<String> {
        let file = MapFile {
            version: MAP_FORMAT_VERSION,
            header: Header {
                camera: self.camera,
                edge_mode: self.edge_mode,
                focal_length: self.camera.focal_length(),
                seed: self.seed,
            },
            frames: self
                .frame_poses
                .iter()
                .map(|(&frame, &pose)| FramePose { frame, pose })
                .collect(),
            nodes: self
                .nodes
                .values()
                .map(|n| NodeRecord {
                    id: n.node_id,
                    frame: n.frame_index,
                    instance: n.instance_id,
                    category: n.category.clone(),
                    anchor: n.anchor,
                    mask: n.mask.clone(),
                    pixel_center: n.pixel_center,
                })
                .collect(),
            intra_edges: self.intra_edges.iter().map(|e| (e.u, e.v, e.weight)).collect(),
            inter_edges: self.inter_edges.iter().map(|e| (e.u, e.v)).collect(),
        };
        Ok(serde_json::to_string(&file)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let file: MapFile = serde_json::from_str(s)?;
        if file.version != MAP_FORMAT_VERSION {
            return Err(Error::Version(file.version));
        }
        file.header.camera.validate()?;
        let mut g = SceneGraph::new(file.header.edge_mode, file.header.camera, file.header.seed);
        g.frame_poses = file.frames.into_iter().map(|f| (f.frame, f.pose)).collect();
        for r in file.nodes {
            if r.mask.is_empty() {
                return Err(Error::EmptyMask);
            }
            g.by_frame.entry(r.frame).or_default().push(r.id);
            g.next_id = g.next_id.max(r.id + 1);
            g.nodes.insert(
                r.id,
                ObjectNode {
                    node_id: r.id,
                    frame_index: r.frame,
                    instance_id: r.instance,
                    mask: r.mask,
                    anchor: r.anchor,
                    pixel_center: r.pixel_center,
                    category: r.category,
                },
            );
        }
        for ids in g.by_frame.values_mut() {
            ids.sort_unstable();
        }
        let known = |n: NodeId, nodes: &BTreeMap<NodeId, ObjectNode>| -> Result<()> {
            nodes.contains_key(&n).then_some(()).ok_or(Error::UnknownNode(n))
        };
        for (u, v, weight) in file.intra_edges {
            known(u, &g.nodes)?;
            known(v, &g.nodes)?;
            g.intra_edges.push(Edge { u, v, weight });
        }
        let mut seen = HashSet::new();
        for (u, v) in file.inter_edges {
            known(u, &g.nodes)?;
            known(v, &g.nodes)?;
            seen.insert((u.min(v), u.max(v)));
            g.inter_edges.push(Edge { u, v, weight: 0.0 });
        }
        g.inter_set = seen;
        Ok(g)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_json()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}
