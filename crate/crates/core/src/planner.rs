//! Global planning over the scene graph and per-observation cost assignment.
//!
//! A path-length field is computed once per goal. Each query observation is
//! matched against a window of map frames around a reference frame; a matched
//! segment takes the smallest field value over its matched nodes. Segments
//! left without a value borrow the median of their recent costs, and the rest
//! become outliers.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scenegraph::{NodeId, PerceptionNoise, SceneGraph};
use crate::seed::rng_for;
use crate::world::{Frame, InstanceId};

#[derive(Clone, Debug, PartialEq)]
pub struct PathLengthField {
    pub goal_node: NodeId,
    pub dist: BTreeMap<NodeId, f64>,
}

impl PathLengthField {
    /// Field value of a node; unknown nodes are unreachable.
    pub fn get(&self, node: NodeId) -> f64 {
        self.dist.get(&node).copied().unwrap_or(f64::INFINITY)
    }
}

#[derive(Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Single-source Dijkstra from the goal node over all edges, undirected.
pub fn compute_field(graph: &SceneGraph, goal_node: NodeId) -> Result<PathLengthField> {
    if graph.node(goal_node).is_none() {
        return Err(Error::UnknownNode(goal_node));
    }
    let adj = graph.adjacency();
    let mut dist: BTreeMap<NodeId, f64> = adj.keys().map(|&k| (k, f64::INFINITY)).collect();
    dist.insert(goal_node, 0.0);
    let mut heap = BinaryHeap::new();
    heap.push(Reverse((Key(0.0), goal_node)));
    while let Some(Reverse((Key(d), u))) = heap.pop() {
        if d > dist[&u] {
            continue;
        }
        for &(v, w) in &adj[&u] {
            let nd = d + w;
            if nd < dist[&v] {
                dist.insert(v, nd);
                heap.push(Reverse((Key(nd), v)));
            }
        }
    }
    Ok(PathLengthField { goal_node, dist })
}

/// The sighting of the goal instance with the largest mask; ties go to the
/// earliest frame.
pub fn select_goal_node(graph: &SceneGraph, goal_instance: InstanceId) -> Result<NodeId> {
    graph
        .nodes()
        .filter(|n| n.instance_id == goal_instance)
        .max_by(|a, b| {
            a.mask
                .area()
                .cmp(&b.mask.area())
                .then(b.frame_index.cmp(&a.frame_index))
                .then(b.node_id.cmp(&a.node_id))
        })
        .map(|n| n.node_id)
        .ok_or(Error::GoalNotInMap(goal_instance))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LocalizerConfig {
    /// Half-width of the map frame window, in frames.
    pub submap_radius: usize,
    pub subsample: usize,
    /// Number of past observations used for tracking.
    pub history: usize,
    pub noise: PerceptionNoise,
}

impl Default for LocalizerConfig {
    fn default() -> Self {
        Self {
            submap_radius: 16,
            subsample: 2,
            history: 8,
            noise: PerceptionNoise::off(),
        }
    }
}

impl LocalizerConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subsample == 0 {
            return Err(Error::InvalidInput("subsample must be >= 1".into()));
        }
        self.noise.validate()
    }
}

/// Map frames `ref ± k * subsample` with `|offset| <= radius`, clipped to the
/// trajectory, ascending.
pub fn candidate_frames(ref_frame: usize, cfg: &LocalizerConfig, frame_count: usize) -> Vec<usize> {
    let step = cfg.subsample.max(1);
    let reach = cfg.submap_radius / step;
    let mut out = Vec::new();
    for k in (1..=reach).rev() {
        if let Some(f) = ref_frame.checked_sub(k * step) {
            out.push(f);
        }
    }
    out.push(ref_frame);
    for k in 1..=reach {
        let f = ref_frame + k * step;
        if f < frame_count {
            out.push(f);
        }
    }
    out
}

/// Query instance to the set of map nodes it matched. Every query instance
/// has an entry, possibly empty.
pub type Matches = BTreeMap<InstanceId, BTreeSet<NodeId>>;

/// Matches query segments to map nodes in the submap around `ref_frame` by
/// instance id, then applies the noise model. The random stream depends on
/// the noise seed and the query frame index only.
pub fn localize(query: &Frame, graph: &SceneGraph, ref_frame: usize, cfg: &LocalizerConfig) -> Result<Matches> {
    if !graph.frame_poses().contains_key(&ref_frame) {
        return Err(Error::InvalidInput(format!("reference frame {ref_frame} not in map")));
    }
    let mut sightings: BTreeMap<InstanceId, BTreeSet<NodeId>> = BTreeMap::new();
    for f in candidate_frames(ref_frame, cfg, graph.frame_count()) {
        for &id in graph.nodes_in_frame(f) {
            let inst = graph.node(id).expect("indexed node").instance_id;
            sightings.entry(inst).or_default().insert(id);
        }
    }
    let mut rng = rng_for(&[cfg.noise.seed, 2, query.frame_index as u64]);
    let mut out = Matches::new();
    for inst in query.instances() {
        let wrong: Vec<InstanceId> = sightings.keys().copied().filter(|&o| o != inst).collect();
        let fate = crate::scenegraph::draw_fate(&mut rng, &cfg.noise, wrong.len());
        let set = match fate {
            crate::scenegraph::Fate::Keep => sightings.get(&inst).cloned().unwrap_or_default(),
            crate::scenegraph::Fate::Drop => BTreeSet::new(),
            crate::scenegraph::Fate::Rewire(k) => sightings[&wrong[k]].clone(),
        };
        out.insert(inst, set);
    }
    Ok(out)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Provenance {
    Localized,
    Tracked,
    Outlier,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QueryCost {
    pub instance_id: InstanceId,
    /// Path length in meters; `None` for an outlier.
    pub cost: Option<f64>,
    pub provenance: Provenance,
}

/// Per-segment costs of one query observation, ascending by instance id.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QueryCosts {
    pub frame_index: usize,
    pub entries: Vec<QueryCost>,
}

impl QueryCosts {
    pub fn get(&self, instance: InstanceId) -> Option<&QueryCost> {
        self.entries
            .binary_search_by_key(&instance, |e| e.instance_id)
            .ok()
            .map(|i| &self.entries[i])
    }
}

/// Least field value over each segment's matches. Segments without a finite
/// value are outliers until tracking says otherwise.
pub fn assign_costs(frame_index: usize, matches: &Matches, field: &PathLengthField) -> QueryCosts {
    let entries = matches
        .iter()
        .map(|(&inst, nodes)| {
            let best = nodes.iter().map(|&n| field.get(n)).fold(f64::INFINITY, f64::min);
            if best.is_finite() {
                QueryCost {
                    instance_id: inst,
                    cost: Some(best),
                    provenance: Provenance::Localized,
                }
            } else {
                QueryCost {
                    instance_id: inst,
                    cost: None,
                    provenance: Provenance::Outlier,
                }
            }
        })
        .collect();
    QueryCosts { frame_index, entries }
}

/// Lower median of a nonempty list.
fn lower_median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}

/// Fills outlier segments with the lower median of the finite costs the same
/// instance had over `history` (oldest first).
pub fn track_unlocalized(costs: &QueryCosts, history: &[QueryCosts]) -> QueryCosts {
    let mut past: HashMap<InstanceId, Vec<f64>> = HashMap::new();
    for h in history {
        for e in &h.entries {
            if let Some(c) = e.cost {
                past.entry(e.instance_id).or_default().push(c);
            }
        }
    }
    let entries = costs
        .entries
        .iter()
        .map(|e| match (e.provenance, past.remove(&e.instance_id)) {
            (Provenance::Outlier, Some(v)) if !v.is_empty() => QueryCost {
                instance_id: e.instance_id,
                cost: Some(lower_median(v)),
                provenance: Provenance::Tracked,
            },
            _ => *e,
        })
        .collect();
    QueryCosts {
        frame_index: costs.frame_index,
        entries,
    }
}

/// Bounded buffer of recent query costs, oldest first.
#[derive(Clone, Debug, Default)]
pub struct CostHistory {
    cap: usize,
    buf: VecDeque<QueryCosts>,
}

impl CostHistory {
    pub fn new(cap: usize) -> Self {
        Self {
            cap,
            buf: VecDeque::with_capacity(cap + 1),
        }
    }

    pub fn push(&mut self, costs: QueryCosts) {
        if self.cap == 0 {
            return;
        }
        self.buf.push_back(costs);
        while self.buf.len() > self.cap {
            self.buf.pop_front();
        }
    }

    pub fn entries(&mut self) -> &[QueryCosts] {
        self.buf.make_contiguous()
    }

    pub fn len(&self) -> usize {
        self.buf.len()
    }

    pub fn is_empty(&self) -> bool {
        self.buf.is_empty()
    }
}

/// Localize, assign and track for a stream of observations of one episode.
#[derive(Clone, Debug)]
pub struct Localizer {
    cfg: LocalizerConfig,
    history: CostHistory,
}

impl Localizer {
    pub fn new(cfg: LocalizerConfig) -> Self {
        Self {
            history: CostHistory::new(cfg.history),
            cfg,
        }
    }

    pub fn step(
        &mut self,
        query: &Frame,
        graph: &SceneGraph,
        ref_frame: usize,
        field: &PathLengthField,
    ) -> Result<QueryCosts> {
        let matches = localize(query, graph, ref_frame, &self.cfg)?;
        let costs = assign_costs(query.frame_index, &matches, field);
        let costs = track_unlocalized(&costs, self.history.entries());
        self.history.push(costs.clone());
        Ok(costs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Footprint, Point2, Pose, Rect};
    use crate::scenegraph::{build_map, EdgeMode};
    use crate::world::{render, CameraParams, ObjectInstance, World};

    fn row_world() -> World {
        let obs = (1..=5)
            .map(|i| ObjectInstance {
                id: i,
                category: "crate".into(),
                footprint: Footprint::disc(Point2::new(2.0 + 2.0 * i as f64, 8.0), 0.3),
                z_min: 0.0,
                z_max: 1.0,
            })
            .collect();
        World::new(Rect::new(Point2::new(0.0, 0.0), Point2::new(14.0, 10.0)), 0.05, obs).unwrap()
    }

    fn corridor_map() -> (World, SceneGraph) {
        let w = row_world();
        let traj: Vec<Pose> = (0..40)
            .map(|k| Pose::new(1.0 + 0.3 * k as f64, 5.0, std::f64::consts::FRAC_PI_2))
            .collect();
        let g = build_map(
            &w,
            &traj,
            &CameraParams::default(),
            EdgeMode::AllPairs3d,
            &PerceptionNoise::off(),
            3,
        )
        .unwrap();
        (w, g)
    }

    #[test]
    fn goal_selection() {
        let (_, g) = corridor_map();
        let n = select_goal_node(&g, 3).unwrap();
        let best = g
            .nodes()
            .filter(|x| x.instance_id == 3)
            .map(|x| x.mask.area())
            .max()
            .unwrap();
        assert_eq!(g.node(n).unwrap().mask.area(), best);
        assert!(matches!(select_goal_node(&g, 77), Err(Error::GoalNotInMap(77))));
    }

    #[test]
    fn field_goal_zero_and_merged_equal() {
        let (_, g) = corridor_map();
        let goal = select_goal_node(&g, 5).unwrap();
        let f = compute_field(&g, goal).unwrap();
        assert_eq!(f.get(goal), 0.0);
        for e in g.inter_edges() {
            assert_eq!(f.get(e.u), f.get(e.v));
        }
        for e in g.edges() {
            assert!(f.get(e.u) <= f.get(e.v) + e.weight);
        }
        assert!(matches!(compute_field(&g, 10_000), Err(Error::UnknownNode(_))));
    }

    #[test]
    fn window_shape() {
        let cfg = LocalizerConfig::default();
        let c = candidate_frames(20, &cfg, 100);
        assert_eq!(c.len(), 17);
        assert_eq!((c[0], c[16]), (4, 36));
        assert_eq!(candidate_frames(1, &cfg, 5), vec![1, 3]);
        let one = LocalizerConfig {
            submap_radius: 0,
            ..cfg
        };
        assert_eq!(candidate_frames(7, &one, 10), vec![7]);
    }

    #[test]
    fn localize_respects_window() {
        let (w, g) = corridor_map();
        let q = render(
            &w,
            &Pose::new(1.0, 5.0, std::f64::consts::FRAC_PI_2),
            &CameraParams::default(),
        )
        .unwrap();
        let cfg = LocalizerConfig::default();
        let m = localize(&q, &g, 0, &cfg).unwrap();
        let window: BTreeSet<usize> = candidate_frames(0, &cfg, g.frame_count()).into_iter().collect();
        for (inst, nodes) in &m {
            for n in nodes {
                let node = g.node(*n).unwrap();
                assert_eq!(node.instance_id, *inst);
                assert!(window.contains(&node.frame_index));
            }
            let expected: BTreeSet<NodeId> = g
                .nodes()
                .filter(|n| n.instance_id == *inst && window.contains(&n.frame_index))
                .map(|n| n.node_id)
                .collect();
            assert_eq!(nodes, &expected);
        }
        assert!(localize(&q, &g, 999, &cfg).is_err());
    }

    #[test]
    fn assign_examples() {
        let field = PathLengthField {
            goal_node: 0,
            dist: [(0, 0.0), (1, 7.0), (2, 3.5), (3, 9.1), (4, 4.2), (5, f64::INFINITY)].into(),
        };
        let m: Matches = [
            (10, [4].into()),
            (11, [1, 2, 3].into()),
            (12, [5].into()),
            (13, BTreeSet::new()),
        ]
        .into();
        let c = assign_costs(0, &m, &field);
        assert_eq!(c.get(10).unwrap().cost, Some(4.2));
        assert_eq!(c.get(11).unwrap().cost, Some(3.5));
        assert_eq!(c.get(12).unwrap().provenance, Provenance::Outlier);
        assert_eq!(c.get(13).unwrap().cost, None);
    }

    fn costs(frame: usize, v: &[(InstanceId, Option<f64>)]) -> QueryCosts {
        QueryCosts {
            frame_index: frame,
            entries: v
                .iter()
                .map(|&(i, c)| QueryCost {
                    instance_id: i,
                    cost: c,
                    provenance: if c.is_some() {
                        Provenance::Localized
                    } else {
                        Provenance::Outlier
                    },
                })
                .collect(),
        }
    }

    #[test]
    fn tracking_medians() {
        let hist = vec![
            costs(0, &[(1, Some(10.0)), (2, Some(3.3))]),
            costs(1, &[(1, Some(2.0))]),
            costs(2, &[(1, Some(4.0)), (3, None)]),
        ];
        let now = costs(3, &[(1, None), (2, None), (3, None), (4, Some(1.0))]);
        let t = track_unlocalized(&now, &hist);
        assert_eq!(t.get(1).unwrap().cost, Some(4.0));
        assert_eq!(t.get(1).unwrap().provenance, Provenance::Tracked);
        assert_eq!(t.get(2).unwrap().cost, Some(3.3));
        assert_eq!(t.get(3).unwrap().provenance, Provenance::Outlier);
        assert_eq!(t.get(4).unwrap().provenance, Provenance::Localized);
        // even count: lower middle
        let hist = vec![costs(0, &[(1, Some(1.0)), (1, Some(5.0))])];
        assert_eq!(
            track_unlocalized(&costs(1, &[(1, None)]), &hist).get(1).unwrap().cost,
            Some(1.0)
        );
    }

    #[test]
    fn history_is_bounded() {
        let mut h = CostHistory::new(8);
        for k in 0..20 {
            h.push(costs(k, &[]));
        }
        assert_eq!(h.len(), 8);
        assert_eq!(h.entries()[0].frame_index, 12);
        let mut none = CostHistory::new(0);
        none.push(costs(0, &[]));
        assert!(none.is_empty());
    }
}
