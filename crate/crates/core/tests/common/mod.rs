//! Fixtures and independent oracles shared by the integration tests and the
//! acceptance harness. Nothing here calls the code paths it is used to check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use objnav_core::eval::{build_episode_map, make_episode, EpisodeConfig, Task, TaskParams};
use objnav_core::geometry::{Footprint, Point2, Pose, Rect};
use objnav_core::scenegraph::{EdgeMode, SceneGraph};
use objnav_core::world::{generate_world, CameraParams, ObjectInstance, World, WorldGenParams};
use rand::Rng;
use serde_json::json;

pub fn obstacle(id: u32, category: &str, footprint: Footprint, z_max: f64) -> ObjectInstance {
    ObjectInstance {
        id,
        category: category.into(),
        footprint,
        z_min: 0.0,
        z_max,
    }
}

fn rect(x0: f64, y0: f64, x1: f64, y1: f64) -> Footprint {
    Footprint::rect(Point2::new(x0, y0), Point2::new(x1, y1))
}

/// A random map with `n` nodes spread over a few frames. Same-frame pairs get
/// intra edges with random weights (some exactly zero), cross-frame pairs get
/// zero-weight inter edges. Returns the graph and its edge list.
pub fn random_graph(rng: &mut impl Rng, n: usize) -> (SceneGraph, Vec<(usize, usize, f64)>) {
    let frames = rng.random_range(1..=n.clamp(1, 4));
    let frame_of: Vec<usize> = (0..n).map(|_| rng.random_range(0..frames)).collect();
    let mut intra = Vec::new();
    let mut inter = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if frame_of[u] == frame_of[v] {
                if rng.random_bool(0.6) {
                    let w = if rng.random_bool(0.15) {
                        0.0
                    } else {
                        rng.random_range(0.0..5.0)
                    };
                    intra.push((u, v, w));
                }
            } else if rng.random_bool(0.25) {
                inter.push((u, v));
            }
        }
    }
    let nodes: Vec<_> = (0..n)
        .map(|k| {
            json!({
                "id": k, "frame": frame_of[k], "instance": k + 1, "category": "thing",
                "anchor": [0.0, 0.0, 1.0],
                "mask": {"height": 1, "width": 1, "runs": [0, 1]},
                "pixel_center": [0.5, 0.5],
            })
        })
        .collect();
    let file = json!({
        "version": 1,
        "header": {"camera": CameraParams::default(), "edge_mode": "ALL_PAIRS_3D", "focal_length": 1.0, "seed": 0},
        "frames": (0..frames).map(|f| json!({"frame": f, "pose": {"x": 0.0, "y": 0.0, "yaw": 0.0}})).collect::<Vec<_>>(),
        "nodes": nodes,
        "intra_edges": intra.iter().map(|&(u, v, w)| json!([u, v, w])).collect::<Vec<_>>(),
        "inter_edges": inter.iter().map(|&(u, v)| json!([u, v])).collect::<Vec<_>>(),
    });
    let graph = SceneGraph::from_json(&file.to_string()).unwrap();
    let mut edges = intra;
    edges.extend(inter.into_iter().map(|(u, v)| (u, v, 0.0)));
    (graph, edges)
}

/// Episode maps over generated worlds, cycling through the tasks and
/// alternating the edge mode.
pub fn sample_maps(count: usize) -> Vec<SceneGraph> {
    let cfg = EpisodeConfig::default();
    let params = TaskParams::default();
    let mut maps = Vec::new();
    let mut seed = 0;
    while maps.len() < count {
        let world = generate_world(&WorldGenParams {
            seed: seed / 4,
            ..Default::default()
        })
        .unwrap();
        let task = Task::ALL[(seed % 4) as usize];
        if let Ok(ep) = make_episode(&world, task, seed, &params) {
            let mut c = cfg.clone();
            if seed % 2 == 1 {
                c.edge_mode = EdgeMode::Delaunay2d;
            }
            maps.push(build_episode_map(&world, &ep, &c).unwrap());
        }
        seed += 1;
    }
    maps
}

/// Least total weight over every simple path from `src`, by exhaustive
/// depth-first enumeration. Unreached nodes stay at infinity.
pub fn enumerate_shortest(n: usize, edges: &[(usize, usize, f64)], src: usize) -> Vec<f64> {
    let mut adj = vec![Vec::new(); n];
    for &(u, v, w) in edges {
        adj[u].push((v, w));
        adj[v].push((u, w));
    }
    let mut best = vec![f64::INFINITY; n];
    let mut on_path = vec![false; n];
    fn dfs(u: usize, len: f64, adj: &[Vec<(usize, f64)>], on_path: &mut [bool], best: &mut [f64]) {
        best[u] = best[u].min(len);
        on_path[u] = true;
        for &(v, w) in &adj[u] {
            if !on_path[v] {
                dfs(v, len + w, adj, on_path, best);
            }
        }
        on_path[u] = false;
    }
    dfs(src, 0.0, &adj, &mut on_path, &mut best);
    best
}

/// 8-connected grid geodesic by Bellman-Ford relaxation over cells whose
/// center clears every blocking obstacle by `radius`. Cells are indexed
/// `(i, j)` from the world's lower-left corner.
pub fn grid_bellman_ford(world: &World, radius: f64, from: (usize, usize)) -> BTreeMap<(usize, usize), f64> {
    let b = world.bounds();
    let res = world.resolution();
    let nx = (b.width() / res).ceil() as usize;
    let ny = (b.height() / res).ceil() as usize;
    let center = |i: usize, j: usize| Point2::new(b.min.x + (i as f64 + 0.5) * res, b.min.y + (j as f64 + 0.5) * res);
    let free = |i: usize, j: usize| world.clearance(center(i, j)) >= radius;
    let mut dist: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for j in 0..ny {
        for i in 0..nx {
            if free(i, j) {
                dist.insert((i, j), f64::INFINITY);
            }
        }
    }
    dist.insert(from, 0.0);
    loop {
        let mut changed = false;
        let keys: Vec<(usize, usize)> = dist.keys().copied().collect();
        for (i, j) in keys {
            let d = dist[&(i, j)];
            if !d.is_finite() {
                continue;
            }
            for di in -1i64..=1 {
                for dj in -1i64..=1 {
                    if di == 0 && dj == 0 {
                        continue;
                    }
                    let (ni, nj) = (i as i64 + di, j as i64 + dj);
                    if ni < 0 || nj < 0 {
                        continue;
                    }
                    let key = (ni as usize, nj as usize);
                    let step = if di != 0 && dj != 0 {
                        std::f64::consts::SQRT_2 * res
                    } else {
                        res
                    };
                    if let Some(cur) = dist.get_mut(&key) {
                        if d + step < *cur {
                            *cur = d + step;
                            changed = true;
                        }
                    }
                }
            }
        }
        if !changed {
            return dist;
        }
    }
}

/// Deep doorway scene. The camera looks down +x at a wall with a doorway.
/// A near object stands left of the doorway and the goal stands right of it,
/// both about 3 m ahead and 2.4 m apart. A far object sits 13 m ahead,
/// seen through the doorway between them in the image.
pub struct DeepDoorway {
    pub world: World,
    pub pose: Pose,
    pub near: u32,
    pub goal: u32,
    pub far: u32,
}

pub fn deep_doorway() -> DeepDoorway {
    // objects 2.6 m tall straddle the 1.3 m camera height symmetrically, so
    // their mask centroids share the image's middle row
    let h = 2.6;
    let obstacles = vec![
        obstacle(1, "wall", rect(6.0, 0.0, 6.15, 4.3), 2.5),
        obstacle(2, "wall", rect(6.0, 5.7, 6.15, 10.0), 2.5),
        obstacle(3, "cabinet", Footprint::disc(Point2::new(4.0, 6.2), 0.3), h),
        obstacle(4, "cabinet", Footprint::disc(Point2::new(4.0, 3.8), 0.3), h),
        obstacle(5, "bookshelf", Footprint::disc(Point2::new(14.0, 5.0), 0.5), h),
    ];
    let world = World::new(
        Rect::new(Point2::new(0.0, 0.0), Point2::new(16.0, 10.0)),
        0.05,
        obstacles,
    )
    .unwrap();
    DeepDoorway {
        world,
        pose: Pose::new(1.0, 5.0, 0.0),
        near: 3,
        goal: 4,
        far: 5,
    }
}

/// Straight corridor along +x, `length` long and 4 m wide between wall faces,
/// with goalable objects at both ends and a few along the walls.
pub fn corridor(length: f64) -> World {
    let t = 0.15;
    let mut obs = Vec::new();
    let mut id = 0;
    let mut push = |cat: &str, fp: Footprint, z: f64| {
        id += 1;
        obs.push(obstacle(id, cat, fp, z));
    };
    let (y0, y1) = (t, t + 4.0);
    let mut x = 0.0;
    while x < length {
        let x2 = (x + 2.0).min(length);
        push("wall", rect(x, 0.0, x2, y0), 2.5);
        push("wall", rect(x, y1, x2, y1 + t), 2.5);
        x = x2;
    }
    push("wall", rect(0.0, y0, t, y1), 2.5);
    push("wall", rect(length - t, y0, length, y1), 2.5);
    let mid = 0.5 * (y0 + y1);
    push("cabinet", rect(t, mid - 0.45, t + 0.45, mid + 0.45), 1.6);
    push(
        "bookshelf",
        rect(length - t - 0.4, mid - 0.5, length - t, mid + 0.5),
        1.9,
    );
    let mut k = 3.0;
    while k < length - 3.0 {
        push("plant", Footprint::disc(Point2::new(k, y0 + 0.3), 0.25), 1.2);
        push("lamp", Footprint::disc(Point2::new(k + 1.5, y1 - 0.25), 0.2), 1.5);
        k += 3.0;
    }
    World::new(Rect::new(Point2::new(0.0, 0.0), Point2::new(length, y1 + t)), 0.05, obs).unwrap()
}

/// Circumcenter and squared radius of a triangle, or `None` when degenerate.
pub fn circumcircle(a: Point2, b: Point2, c: Point2) -> Option<(Point2, f64)> {
    let d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if d.abs() < 1e-12 {
        return None;
    }
    let (a2, b2, c2) = (a.x * a.x + a.y * a.y, b.x * b.x + b.y * b.y, c.x * c.x + c.y * c.y);
    let ux = (a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d;
    let uy = (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d;
    let u = Point2::new(ux, uy);
    let r2 = (a.x - ux).powi(2) + (a.y - uy).powi(2);
    Some((u, r2))
}

/// Summed translation length of a pose sequence.
pub fn travelled(poses: &[Pose]) -> f64 {
    poses
        .windows(2)
        .map(|w| w[0].position().distance(w[1].position()))
        .sum()
}
