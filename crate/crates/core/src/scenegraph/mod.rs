//! Relative 3D scene graph.
//!
//! Every segment of every map frame is a node carrying its mask and a 3D
//! anchor in that frame's camera coordinates. Nodes of one frame are joined by
//! intra edges weighted with anchor distances; sightings of the same object in
//! different frames are joined by zero-weight inter edges, which merges them
//! for planning without collapsing node identity.

mod delaunay;
mod mapfile;
mod matching;

use std::collections::{BTreeMap, BTreeSet, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point2, Point3, Pose};
use crate::mask::Mask;
use crate::world::{render_indexed, CameraParams, Frame, InstanceId, World};

pub use delaunay::delaunay_edges;
pub use mapfile::MAP_FORMAT_VERSION;
pub(crate) use matching::{draw_fate, Fate};
pub use matching::{match_frames_gt, PerceptionNoise};

pub type NodeId = usize;

pub const DEFAULT_LINK_HORIZON: usize = 3;
pub const DEFAULT_FILTER: [&str; 2] = ["floor", "ceiling"];

pub fn default_filter() -> BTreeSet<String> {
    DEFAULT_FILTER.iter().map(|s| s.to_string()).collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeMode {
    #[default]
    #[serde(rename = "ALL_PAIRS_3D")]
    AllPairs3d,
    #[serde(rename = "DELAUNAY_2D")]
    Delaunay2d,
}

impl std::str::FromStr for EdgeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "all_pairs_3d" | "3d" | "all_pairs" => Ok(Self::AllPairs3d),
            "delaunay_2d" | "2d" | "delaunay" => Ok(Self::Delaunay2d),
            _ => Err(Error::InvalidInput(format!("unknown edge mode {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ObjectNode {
    pub node_id: NodeId,
    pub frame_index: usize,
    pub instance_id: InstanceId,
    pub mask: Mask,
    /// Camera-local anchor: x right, y down, z forward.
    pub anchor: Point3,
    /// Mask centroid in pixel coordinates.
    pub pixel_center: Point2,
    pub category: String,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Edge {
    pub u: NodeId,
    pub v: NodeId,
    pub weight: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SceneGraph {
    edge_mode: EdgeMode,
    camera: CameraParams,
    seed: u64,
    nodes: BTreeMap<NodeId, ObjectNode>,
    intra_edges: Vec<Edge>,
    inter_edges: Vec<Edge>,
    inter_set: HashSet<(NodeId, NodeId)>,
    by_frame: BTreeMap<usize, Vec<NodeId>>,
    frame_poses: BTreeMap<usize, Pose>,
    next_id: NodeId,
}

/// Camera-local 3D position of the mask pixel with the greatest depth. Ties
/// go to the first pixel in row-major order.
pub fn farthest_point(mask: &Mask, depth: &[f64], cam: &CameraParams) -> Result<Point3> {
    let w = mask.width();
    let mut best: Option<(usize, usize, f64)> = None;
    for (r, c) in mask.pixels() {
        let d = depth[r * w + c];
        if !d.is_finite() {
            return Err(Error::InfiniteDepth { row: r, col: c });
        }
        if best.is_none_or(|b| d > b.2) {
            best = Some((r, c, d));
        }
    }
    let (r, c, z) = best.ok_or(Error::EmptyMask)?;
    let f = cam.focal_length();
    Ok(Point3::new(
        (c as f64 + 0.5 - cam.cx()) / f * z,
        (r as f64 + 0.5 - cam.cy()) / f * z,
        z,
    ))
}

impl SceneGraph {
    pub fn new(edge_mode: EdgeMode, camera: CameraParams, seed: u64) -> Self {
        Self {
            edge_mode,
            camera,
            seed,
            nodes: BTreeMap::new(),
            intra_edges: Vec::new(),
            inter_edges: Vec::new(),
            inter_set: HashSet::new(),
            by_frame: BTreeMap::new(),
            frame_poses: BTreeMap::new(),
            next_id: 0,
        }
    }

    pub fn edge_mode(&self) -> EdgeMode {
        self.edge_mode
    }

    pub fn camera(&self) -> &CameraParams {
        &self.camera
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ObjectNode> {
        self.nodes.values()
    }

    pub fn node(&self, id: NodeId) -> Option<&ObjectNode> {
        self.nodes.get(&id)
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn intra_edges(&self) -> &[Edge] {
        &self.intra_edges
    }

    pub fn inter_edges(&self) -> &[Edge] {
        &self.inter_edges
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.intra_edges.iter().chain(&self.inter_edges)
    }

    /// Node ids of one frame, ascending.
    pub fn nodes_in_frame(&self, frame_index: usize) -> &[NodeId] {
        self.by_frame.get(&frame_index).map_or(&[], |v| v.as_slice())
    }

    /// Pose each map frame was taken from.
    pub fn frame_poses(&self) -> &BTreeMap<usize, Pose> {
        &self.frame_poses
    }

    pub fn frame_count(&self) -> usize {
        self.frame_poses.len()
    }

    /// Adds one node per visible instance plus the intra edges among them.
    pub fn add_frame(&mut self, frame: &Frame) -> Result<Vec<NodeId>> {
        let mut ids = Vec::new();
        for (inst, mask) in frame.masks() {
            let anchor = farthest_point(&mask, &frame.depth, &frame.camera)?;
            let pixel_center = mask.centroid().ok_or(Error::EmptyMask)?;
            let id = self.next_id;
            self.next_id += 1;
            self.nodes.insert(
                id,
                ObjectNode {
                    node_id: id,
                    frame_index: frame.frame_index,
                    instance_id: inst,
                    mask,
                    anchor,
                    pixel_center,
                    category: frame.category(inst).to_string(),
                },
            );
            ids.push(id);
        }
        self.frame_poses.insert(frame.frame_index, frame.pose);
        self.by_frame.entry(frame.frame_index).or_default().extend(&ids);

        let pairs: Vec<(usize, usize)> = match self.edge_mode {
            EdgeMode::AllPairs3d => (0..ids.len())
                .flat_map(|i| (i + 1..ids.len()).map(move |j| (i, j)))
                .collect(),
            EdgeMode::Delaunay2d => {
                let centers: Vec<Point2> = ids.iter().map(|i| self.nodes[i].pixel_center).collect();
                delaunay_edges(&centers)
            }
        };
        for (i, j) in pairs {
            let (u, v) = (ids[i], ids[j]);
            let weight = self.nodes[&u].anchor.distance(self.nodes[&v].anchor);
            self.intra_edges.push(Edge { u, v, weight });
        }
        Ok(ids)
    }

    /// Adds zero-weight edges between sightings in different frames. Already
    /// present pairs are skipped; returns how many were new.
    pub fn link_frames(&mut self, matches: &[(NodeId, NodeId)]) -> Result<usize> {
        for &(a, b) in matches {
            let fa = self.node(a).ok_or(Error::UnknownNode(a))?.frame_index;
            let fb = self.node(b).ok_or(Error::UnknownNode(b))?.frame_index;
            if fa == fb {
                return Err(Error::SameFrame(a, b));
            }
        }
        let mut added = 0;
        for &(a, b) in matches {
            let key = (a.min(b), a.max(b));
            if self.inter_set.insert(key) {
                self.inter_edges.push(Edge {
                    u: key.0,
                    v: key.1,
                    weight: 0.0,
                });
                added += 1;
            }
        }
        Ok(added)
    }

    /// Removes nodes of the given categories with their incident edges.
    pub fn filter_nodes(&mut self, categories: &BTreeSet<String>) -> usize {
        let gone: HashSet<NodeId> = self
            .nodes
            .values()
            .filter(|n| categories.contains(&n.category))
            .map(|n| n.node_id)
            .collect();
        if gone.is_empty() {
            return 0;
        }
        self.nodes.retain(|id, _| !gone.contains(id));
        self.intra_edges
            .retain(|e| !gone.contains(&e.u) && !gone.contains(&e.v));
        self.inter_edges
            .retain(|e| !gone.contains(&e.u) && !gone.contains(&e.v));
        self.inter_set.retain(|(u, v)| !gone.contains(u) && !gone.contains(v));
        for ids in self.by_frame.values_mut() {
            ids.retain(|id| !gone.contains(id));
        }
        gone.len()
    }

    /// Undirected adjacency over intra and inter edges, indexed by node id.
    pub fn adjacency(&self) -> BTreeMap<NodeId, Vec<(NodeId, f64)>> {
        let mut adj: BTreeMap<NodeId, Vec<(NodeId, f64)>> = self.nodes.keys().map(|&k| (k, Vec::new())).collect();
        for e in self.edges() {
            adj.entry(e.u).or_default().push((e.v, e.weight));
            adj.entry(e.v).or_default().push((e.u, e.weight));
        }
        adj
    }
}

/// Renders the trajectory, adds every frame, links each frame with the
/// previous `link_horizon` frames through the ground-truth matcher, and drops
/// floor and ceiling nodes.
pub fn build_map(
    world: &World,
    trajectory: &[Pose],
    cam: &CameraParams,
    edge_mode: EdgeMode,
    noise: &PerceptionNoise,
    link_horizon: usize,
) -> Result<SceneGraph> {
    if trajectory.is_empty() {
        return Err(Error::InvalidInput("empty map trajectory".into()));
    }
    let mut graph = SceneGraph::new(edge_mode, *cam, noise.seed);
    let mut recent: Vec<(Frame, BTreeMap<InstanceId, NodeId>)> = Vec::new();
    for (k, pose) in trajectory.iter().enumerate() {
        let frame = render_indexed(world, pose, cam, k)?;
        let ids = graph.add_frame(&frame)?;
        let lookup: BTreeMap<InstanceId, NodeId> = ids.iter().map(|&id| (graph.nodes[&id].instance_id, id)).collect();
        let start = recent.len().saturating_sub(link_horizon);
        let mut links = Vec::new();
        for (prev, prev_lookup) in &recent[start..] {
            for (a, b) in match_frames_gt(prev, &frame, noise) {
                links.push((prev_lookup[&a], lookup[&b]));
            }
        }
        graph.link_frames(&links)?;
        recent.push((frame, lookup));
        if recent.len() > link_horizon {
            recent.remove(0);
        }
    }
    graph.filter_nodes(&default_filter());
    Ok(graph)
}
