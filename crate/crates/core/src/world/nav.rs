//! Geodesic distances on an inflated 8-connected occupancy grid and
//! conversion of grid paths into rotate/translate pose sequences.

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::f64::consts::SQRT_2;
use std::sync::Arc;

use super::World;
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Point2, Pose};

/// Length of one pure translation in a discretized trajectory, meters.
pub const TRANSLATION_STEP: f64 = 0.2;
/// Size of one pure rotation in a discretized trajectory, radians (15 degrees).
pub const ROTATION_STEP: f64 = std::f64::consts::PI / 12.0;

/// Search radius (in cells) when a query point falls in an inflated cell.
const SNAP_CELLS: i64 = 3;

#[derive(Clone, Copy, PartialEq)]
struct Queued(f64, usize);

impl Eq for Queued {}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Occupancy grid whose blocked cells are those whose center lies within
/// `radius` of a blocking footprint (disc dilation by the agent radius).
#[derive(Clone, Debug)]
pub struct NavGrid {
    origin: Point2,
    resolution: f64,
    nx: usize,
    ny: usize,
    radius: f64,
    free: Arc<Vec<bool>>,
}

impl NavGrid {
    pub fn new(world: &World, radius: f64) -> Self {
        let b = world.bounds();
        let res = world.resolution();
        let nx = (b.width() / res).ceil().max(1.0) as usize;
        let ny = (b.height() / res).ceil().max(1.0) as usize;
        let mut free = vec![true; nx * ny];
        for o in world.blocking() {
            let bb = o.footprint.bbox().expand(radius + res);
            let i0 = (((bb.min.x - b.min.x) / res).floor().max(0.0)) as usize;
            let j0 = (((bb.min.y - b.min.y) / res).floor().max(0.0)) as usize;
            let i1 = ((((bb.max.x - b.min.x) / res).ceil()) as usize).min(nx);
            let j1 = ((((bb.max.y - b.min.y) / res).ceil()) as usize).min(ny);
            for j in j0..j1 {
                for i in i0..i1 {
                    let idx = j * nx + i;
                    if !free[idx] {
                        continue;
                    }
                    let c = Point2::new(b.min.x + (i as f64 + 0.5) * res, b.min.y + (j as f64 + 0.5) * res);
                    if o.footprint.distance(c) < radius {
                        free[idx] = false;
                    }
                }
            }
        }
        Self {
            origin: b.min,
            resolution: res,
            nx,
            ny,
            radius,
            free: Arc::new(free),
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.nx, self.ny)
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn is_free_cell(&self, i: usize, j: usize) -> bool {
        i < self.nx && j < self.ny && self.free[j * self.nx + i]
    }

    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        let fi = ((p.x - self.origin.x) / self.resolution).floor();
        let fj = ((p.y - self.origin.y) / self.resolution).floor();
        if fi < 0.0 || fj < 0.0 || fi >= self.nx as f64 || fj >= self.ny as f64 {
            return None;
        }
        Some((fi as usize, fj as usize))
    }

    pub fn cell_center(&self, i: usize, j: usize) -> Point2 {
        Point2::new(
            self.origin.x + (i as f64 + 0.5) * self.resolution,
            self.origin.y + (j as f64 + 0.5) * self.resolution,
        )
    }

    /// All free cell centers, row-major.
    pub fn free_cells(&self) -> impl Iterator<Item = Point2> + '_ {
        (0..self.ny).flat_map(move |j| {
            (0..self.nx)
                .filter(move |&i| self.free[j * self.nx + i])
                .map(move |i| self.cell_center(i, j))
        })
    }

    /// The cell holding `p`, or the nearest free cell within a few cells when
    /// `p` sits just inside the inflated band.
    fn snap(&self, p: Point2) -> Option<usize> {
        let fi = ((p.x - self.origin.x) / self.resolution).floor() as i64;
        let fj = ((p.y - self.origin.y) / self.resolution).floor() as i64;
        let mut best: Option<(f64, usize)> = None;
        for dj in -SNAP_CELLS..=SNAP_CELLS {
            for di in -SNAP_CELLS..=SNAP_CELLS {
                let (i, j) = (fi + di, fj + dj);
                if i < 0 || j < 0 || i >= self.nx as i64 || j >= self.ny as i64 {
                    continue;
                }
                let idx = j as usize * self.nx + i as usize;
                if !self.free[idx] {
                    continue;
                }
                let d = self.cell_center(i as usize, j as usize).distance(p);
                if best.is_none_or(|(bd, bi)| d < bd || (d == bd && idx < bi)) {
                    best = Some((d, idx));
                }
            }
        }
        best.map(|(_, idx)| idx)
    }

    fn neighbors(&self, idx: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (i, j) = ((idx % self.nx) as i64, (idx / self.nx) as i64);
        const OFFS: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        OFFS.iter().filter_map(move |&(di, dj)| {
            let (ni, nj) = (i + di, j + dj);
            if ni < 0 || nj < 0 || ni >= self.nx as i64 || nj >= self.ny as i64 {
                return None;
            }
            let n = nj as usize * self.nx + ni as usize;
            if !self.free[n] {
                return None;
            }
            let step = if di != 0 && dj != 0 {
                SQRT_2 * self.resolution
            } else {
                self.resolution
            };
            Some((n, step))
        })
    }

    /// Dijkstra from `sources` over free cells; stops early once `target` is settled.
    fn dijkstra(&self, sources: &[usize], target: Option<usize>) -> (Vec<f64>, Vec<usize>) {
        let n = self.nx * self.ny;
        let mut dist = vec![f64::INFINITY; n];
        let mut parent = vec![usize::MAX; n];
        let mut heap = BinaryHeap::new();
        for &source in sources {
            dist[source] = 0.0;
            heap.push(Queued(0.0, source));
        }
        while let Some(Queued(d, u)) = heap.pop() {
            if d > dist[u] {
                continue;
            }
            if Some(u) == target {
                break;
            }
            for (v, w) in self.neighbors(u) {
                let nd = d + w;
                if nd < dist[v] {
                    dist[v] = nd;
                    parent[v] = u;
                    heap.push(Queued(nd, v));
                }
            }
        }
        (dist, parent)
    }

    /// Geodesic distance between two points: the grid path length between
    /// their cells, never below the straight-line distance.
    pub fn distance(&self, a: Point2, b: Point2) -> f64 {
        let (Some(sa), Some(sb)) = (self.snap(a), self.snap(b)) else {
            return f64::INFINITY;
        };
        let euclid = a.distance(b);
        if sa == sb {
            return euclid;
        }
        // search from the lower cell index so d(a, b) and d(b, a) sum the
        // same steps in the same order
        let (s, t) = (sa.min(sb), sa.max(sb));
        let (dist, _) = self.dijkstra(&[s], Some(t));
        dist[t].max(euclid)
    }

    /// Distance field from `goal` to every cell.
    pub fn field_from(&self, goal: Point2) -> DistanceField {
        self.field_from_set(&[goal])
    }

    /// Distance field to the nearest of several goal points. Goals off the
    /// grid are ignored.
    pub fn field_from_set(&self, goals: &[Point2]) -> DistanceField {
        let goals: Vec<Point2> = goals.iter().copied().filter(|&g| self.snap(g).is_some()).collect();
        let sources: Vec<usize> = goals.iter().filter_map(|&g| self.snap(g)).collect();
        DistanceField {
            grid: self.clone(),
            dist: self.dijkstra(&sources, None).0,
            goals,
        }
    }

    fn grid_path(&self, a: Point2, b: Point2) -> Option<Vec<usize>> {
        let (sa, sb) = (self.snap(a)?, self.snap(b)?);
        let (dist, parent) = self.dijkstra(&[sa], Some(sb));
        if !dist[sb].is_finite() {
            return None;
        }
        let mut cells = vec![sb];
        let mut cur = sb;
        while cur != sa {
            cur = parent[cur];
            cells.push(cur);
        }
        cells.reverse();
        Some(cells)
    }

    /// Whether the straight segment `a`-`b` stays in free cells.
    pub fn line_of_sight(&self, a: Point2, b: Point2) -> bool {
        let len = a.distance(b);
        let steps = ((len / (self.resolution * 0.25)).ceil() as usize).max(1);
        (0..=steps).all(|k| {
            let p = a + (b - a) * (k as f64 / steps as f64);
            self.cell_of(p).is_some_and(|(i, j)| self.is_free_cell(i, j))
        })
    }

    /// Shortest grid path from `a` to `b`, simplified by greedy
    /// line-of-sight shortcutting. Endpoints are `a` and `b` exactly.
    pub fn path(&self, a: Point2, b: Point2) -> Option<Vec<Point2>> {
        let cells = self.grid_path(a, b)?;
        let mut pts = Vec::with_capacity(cells.len() + 2);
        pts.push(a);
        for &c in cells.iter().skip(1).take(cells.len().saturating_sub(2)) {
            pts.push(self.cell_center(c % self.nx, c / self.nx));
        }
        pts.push(b);

        let mut out = vec![a];
        let mut i = 0;
        while i + 1 < pts.len() {
            let mut j = i + 1;
            while j + 1 < pts.len() && self.line_of_sight(pts[i], pts[j + 1]) {
                j += 1;
            }
            out.push(pts[j]);
            i = j;
        }
        out.dedup_by(|x, y| x.distance(*y) < 1e-12);
        Some(out)
    }
}

/// Geodesic distance from every grid cell to the nearest of a set of goal
/// points.
#[derive(Clone, Debug)]
pub struct DistanceField {
    grid: NavGrid,
    goals: Vec<Point2>,
    dist: Vec<f64>,
}

impl DistanceField {
    pub fn goals(&self) -> &[Point2] {
        &self.goals
    }

    pub fn distance_from(&self, p: Point2) -> f64 {
        let Some(idx) = self.grid.snap(p) else {
            return f64::INFINITY;
        };
        let euclid = self.goals.iter().map(|g| p.distance(*g)).fold(f64::INFINITY, f64::min);
        self.dist[idx].max(euclid)
    }
}

fn check_free(world: &World, p: Point2, radius: f64) -> Result<()> {
    if !world.bounds().contains(p) {
        return Err(Error::OutOfBounds { x: p.x, y: p.y });
    }
    if !world.is_free(p, radius) {
        return Err(Error::InCollision { x: p.x, y: p.y });
    }
    Ok(())
}

/// Length of the shortest obstacle-avoiding path for a disc of `agent_radius`;
/// `+inf` when `a` and `b` are disconnected.
pub fn geodesic_distance(world: &World, a: Point2, b: Point2, agent_radius: f64) -> Result<f64> {
    check_free(world, a, agent_radius)?;
    check_free(world, b, agent_radius)?;
    if a == b {
        return Ok(0.0);
    }
    Ok(NavGrid::new(world, agent_radius).distance(a, b))
}

/// Poses along the shortest path from `start` to `goal`, as alternating pure
/// rotations of 15 degrees and pure translations of 0.2 m. The start pose
/// itself is not included.
pub fn shortest_path_trajectory(world: &World, start: Pose, goal: Point2, agent_radius: f64) -> Result<Vec<Pose>> {
    check_free(world, start.position(), agent_radius)?;
    check_free(world, goal, agent_radius)?;
    if start.position() == goal {
        return Ok(Vec::new());
    }
    let grid = NavGrid::new(world, agent_radius);
    let path = grid.path(start.position(), goal).ok_or(Error::Disconnected)?;
    Ok(discretize_path(start, &path))
}

/// Turns a polyline into pure rotations and pure translations. Turn angles
/// round to the nearest multiple of 15 degrees; translations follow the exact
/// segment, the last step of a segment may be shorter than 0.2 m.
pub fn discretize_path(start: Pose, waypoints: &[Point2]) -> Vec<Pose> {
    let mut out = Vec::new();
    let mut cur = start;
    for &q in waypoints {
        let from = cur.position();
        let len = from.distance(q);
        if len < 1e-9 {
            continue;
        }
        out.extend(rotation_poses(cur, from.heading_to(q)));
        if let Some(last) = out.last() {
            cur = *last;
        }
        let dir = (q - from) * (1.0 / len);
        let n = ((len / TRANSLATION_STEP) - 1e-9).ceil().max(1.0) as usize;
        for s in 1..=n {
            let p = if s == n {
                q
            } else {
                from + dir * (s as f64 * TRANSLATION_STEP)
            };
            cur = cur.with_position(p);
            out.push(cur);
        }
    }
    out
}

/// In-place rotation poses from `pose` toward `target_yaw` in 15 degree steps,
/// the turn rounded to the nearest multiple. Excludes `pose` itself.
pub fn rotation_poses(pose: Pose, target_yaw: f64) -> Vec<Pose> {
    let turn = normalize_angle(target_yaw - pose.yaw);
    let k = (turn.abs() / ROTATION_STEP).round() as usize;
    let sign = turn.signum();
    let mut cur = pose;
    (0..k)
        .map(|_| {
            cur = cur.with_yaw(cur.yaw + sign * ROTATION_STEP);
            cur
        })
        .collect()
}
