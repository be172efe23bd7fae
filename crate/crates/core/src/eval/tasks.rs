//! Procedural episode construction for the four tasks.

use std::collections::BTreeSet;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Episode, Task, DEFAULT_AGENT_RADIUS, MAP_SENSOR_HEIGHT, MIN_START_DISTANCE};
use crate::error::{Error, Result};
use crate::geometry::{point_segment_distance, Point2, Pose};
use crate::seed::rng_for;
use crate::world::{discretize_path, render_indexed, rotation_poses, CameraParams, InstanceId, NavGrid, World};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TaskParams {
    pub agent_radius: f64,
    /// Extra clearance kept by map trajectories beyond the agent radius.
    pub path_margin: f64,
    /// Geodesic start-to-goal distance range.
    pub min_distance: f64,
    pub max_distance: f64,
    /// How far an alternative goal must lie from the map path.
    pub off_path_margin: f64,
    /// Map length over direct geodesic for shortcut episodes, lower and upper.
    pub detour_factor: f64,
    pub max_detour_factor: f64,
    pub attempts: usize,
    pub map_camera: CameraParams,
    pub exec_camera: CameraParams,
}

impl Default for TaskParams {
    fn default() -> Self {
        let cam = CameraParams::default().with_height(MAP_SENSOR_HEIGHT);
        Self {
            agent_radius: DEFAULT_AGENT_RADIUS,
            path_margin: 0.3,
            min_distance: MIN_START_DISTANCE,
            max_distance: 8.0,
            off_path_margin: 1.5,
            detour_factor: 1.5,
            max_detour_factor: 2.2,
            attempts: 60,
            map_camera: cam,
            exec_camera: cam,
        }
    }
}

/// The free grid point nearest to an object's footprint. Among points
/// within one grid step of the nearest, the most open one wins: farthest
/// from every other obstacle, then closest to the object's centroid.
pub fn goal_position(world: &World, grid: &NavGrid, instance: InstanceId) -> Option<Point2> {
    approach_ring(world, grid.free_cells(), instance).map(|r| r.0)
}

/// The free points within one grid step of the nearest free distance to an
/// object, with the most open of them first.
fn approach_ring(
    world: &World,
    cells: impl Iterator<Item = Point2>,
    instance: InstanceId,
) -> Option<(Point2, Vec<Point2>)> {
    let fp = &world.instance(instance)?.footprint;
    let c = fp.centroid();
    let scored: Vec<(f64, Point2)> = cells.map(|p| (fp.distance(p), p)).collect();
    let best = scored.iter().map(|t| t.0).fold(f64::INFINITY, f64::min);
    let ring: Vec<Point2> = scored
        .into_iter()
        .filter(|t| t.0 <= best + world.resolution())
        .map(|t| t.1)
        .collect();
    let openness = |p: Point2| {
        world
            .blocking()
            .filter(|o| o.id != instance)
            .map(|o| o.footprint.distance(p))
            .fold(f64::INFINITY, f64::min)
    };
    let front = ring
        .iter()
        .map(|&p| (openness(p), p.distance(c), p))
        .min_by(|a, b| b.0.total_cmp(&a.0).then(a.1.total_cmp(&b.1)))?
        .2;
    Some((front, ring))
}

struct Goal {
    id: InstanceId,
    /// The most open point touching the object on the agent's own grid.
    position: Point2,
    /// Every point touching the object; success is measured against these.
    viewpoints: Vec<Point2>,
    /// Where map trajectories end, on the wider grid.
    approach: Point2,
    centroid: Point2,
}

struct Ctx<'a> {
    world: &'a World,
    grid: NavGrid,
    /// Grid with the extra margin, used for map trajectories only.
    wide: NavGrid,
    free: Vec<Point2>,
    goals: Vec<Goal>,
    p: &'a TaskParams,
}

impl<'a> Ctx<'a> {
    fn new(world: &'a World, p: &'a TaskParams) -> Self {
        let grid = NavGrid::new(world, p.agent_radius);
        let wide = NavGrid::new(world, p.agent_radius + p.path_margin);
        let free: Vec<Point2> = wide.free_cells().collect();
        let goals = world
            .goalable()
            .filter_map(|o| {
                let (position, viewpoints) = approach_ring(world, grid.free_cells(), o.id)?;
                Some(Goal {
                    id: o.id,
                    position,
                    viewpoints,
                    approach: approach_ring(world, free.iter().copied(), o.id)?.0,
                    centroid: o.footprint.centroid(),
                })
            })
            .collect();
        Self {
            world,
            grid,
            wide,
            free,
            goals,
            p,
        }
    }

    fn random_goal(&self, rng: &mut impl Rng) -> &Goal {
        &self.goals[rng.random_range(0..self.goals.len())]
    }

    /// A free point whose geodesic distance to the goal lies in `[lo, hi]`.
    fn point_at_distance(&self, rng: &mut impl Rng, to: &Goal, lo: f64, hi: f64) -> Option<Point2> {
        let field = self.grid.field_from_set(&to.viewpoints);
        (0..400).find_map(|_| {
            let q = self.free[rng.random_range(0..self.free.len())];
            let d = field.distance_from(q);
            (d >= lo && d <= hi).then_some(q)
        })
    }

    /// Pose sequence from `start` through `via`, the first heading aligned
    /// with the first leg, ending turned toward `face`.
    fn route(&self, start: Point2, via: &[Point2], face: Point2) -> Option<Vec<Pose>> {
        let mut pts = vec![start];
        for &v in via {
            let leg = self.wide.path(*pts.last()?, v)?;
            pts.extend(leg.into_iter().skip(1));
        }
        pts.dedup_by(|a, b| a.distance(*b) < 1e-9);
        let first = *pts.get(1)?;
        let head = Pose::new(start.x, start.y, start.heading_to(first));
        let mut out = vec![head];
        out.extend(discretize_path(head, &pts[1..]));
        let last = *out.last()?;
        out.extend(rotation_poses(last, last.position().heading_to(face)));
        Some(out)
    }

    /// Instances rendered in any frame of the trajectory.
    fn seen(&self, traj: &[Pose]) -> Result<BTreeSet<InstanceId>> {
        let mut out = BTreeSet::new();
        for (k, pose) in traj.iter().enumerate() {
            out.extend(render_indexed(self.world, pose, &self.p.map_camera, k)?.instances());
        }
        Ok(out)
    }

    fn episode(&self, task: Task, seed: u64, traj: Vec<Pose>, start: Pose, goal: &Goal) -> Episode {
        Episode {
            task,
            seed,
            map_trajectory: traj,
            start_pose: start,
            goal_instance: goal.id,
            goal_position: goal.position,
            goal_viewpoints: goal.viewpoints.clone(),
            map_camera: self.p.map_camera,
            exec_camera: self.p.exec_camera,
        }
    }
}

fn path_length(traj: &[Pose]) -> f64 {
    traj.windows(2).map(|w| w[0].position().distance(w[1].position())).sum()
}

fn off_path(traj: &[Pose], q: Point2) -> f64 {
    if traj.len() == 1 {
        return traj[0].position().distance(q);
    }
    traj.windows(2)
        .map(|w| point_segment_distance(q, w[0].position(), w[1].position()))
        .fold(f64::INFINITY, f64::min)
}

fn task_code(task: Task) -> u64 {
    match task {
        Task::Imitate => 1,
        Task::AltGoal => 2,
        Task::Shortcut => 3,
        Task::Reverse => 4,
    }
}

/// Builds a random episode satisfying the task's construction predicate, or
/// reports the task infeasible for this world and seed.
pub fn make_episode(world: &World, task: Task, seed: u64, params: &TaskParams) -> Result<Episode> {
    let ctx = Ctx::new(world, params);
    if ctx.goals.is_empty() {
        return Err(Error::TaskInfeasible("world has no goalable objects".into()));
    }
    let mut rng = rng_for(&[seed, task_code(task)]);
    let (lo, hi) = (params.min_distance, params.max_distance);
    for _ in 0..params.attempts {
        let made = match task {
            Task::Imitate => {
                let g = ctx.random_goal(&mut rng);
                let Some(s) = ctx.point_at_distance(&mut rng, g, lo, hi) else {
                    continue;
                };
                let Some(traj) = ctx.route(s, &[g.approach], g.centroid) else {
                    continue;
                };
                if !ctx.seen(&traj)?.contains(&g.id) {
                    continue;
                }
                let start = traj[0];
                Some(ctx.episode(task, seed, traj, start, g))
            }
            Task::AltGoal => {
                let end = ctx.random_goal(&mut rng);
                let Some(s) = ctx.point_at_distance(&mut rng, end, lo, hi) else {
                    continue;
                };
                let Some(traj) = ctx.route(s, &[end.approach], end.centroid) else {
                    continue;
                };
                let seen = ctx.seen(&traj)?;
                let from_start = ctx.grid.field_from(s);
                let from_start = |g: &Goal| {
                    g.viewpoints
                        .iter()
                        .map(|&v| from_start.distance_from(v))
                        .fold(f64::INFINITY, f64::min)
                };
                let options: Vec<&Goal> = ctx
                    .goals
                    .iter()
                    .filter(|g| g.id != end.id && seen.contains(&g.id))
                    .filter(|g| off_path(&traj, g.position) >= params.off_path_margin)
                    .filter(|g| {
                        let d = from_start(g);
                        d >= lo && d <= hi
                    })
                    .collect();
                if options.is_empty() {
                    continue;
                }
                let g = options[rng.random_range(0..options.len())];
                let start = traj[0];
                Some(ctx.episode(task, seed, traj, start, g))
            }
            Task::Shortcut => {
                let g = ctx.random_goal(&mut rng);
                let Some(s) = ctx.point_at_distance(&mut rng, g, lo, hi) else {
                    continue;
                };
                let to_g = ctx.grid.field_from_set(&g.viewpoints);
                let direct = to_g.distance_from(s);
                let from_s = ctx.grid.field_from(s);
                let via = (0..400).find_map(|_| {
                    let w = ctx.free[rng.random_range(0..ctx.free.len())];
                    let total = from_s.distance_from(w) + to_g.distance_from(w);
                    (total >= params.detour_factor * direct && total <= params.max_detour_factor * direct).then_some(w)
                });
                let Some(w) = via else {
                    continue;
                };
                let Some(traj) = ctx.route(s, &[w, g.approach], g.centroid) else {
                    continue;
                };
                if path_length(&traj) < params.detour_factor * direct || !ctx.seen(&traj)?.contains(&g.id) {
                    continue;
                }
                let start = traj[0];
                Some(ctx.episode(task, seed, traj, start, g))
            }
            Task::Reverse => {
                let g = ctx.random_goal(&mut rng);
                let Some(e) = ctx.point_at_distance(&mut rng, g, lo, hi) else {
                    continue;
                };
                let Some(pts) = ctx.wide.path(g.approach, e) else {
                    continue;
                };
                // the teach run starts at the goal looking at it, then leaves
                let facing = Pose::new(g.approach.x, g.approach.y, g.approach.heading_to(g.centroid));
                let mut traj = vec![facing];
                traj.extend(rotation_poses(facing, g.approach.heading_to(pts[1])));
                let turned = *traj.last().expect("nonempty");
                traj.extend(discretize_path(turned, &pts[1..]));
                if !ctx.seen(&traj)?.contains(&g.id) {
                    continue;
                }
                let n = traj.len();
                let back = traj[n - 2].position();
                let end = traj[n - 1].position();
                let start = Pose::new(end.x, end.y, end.heading_to(back));
                Some(ctx.episode(task, seed, traj, start, g))
            }
        };
        if let Some(ep) = made {
            return Ok(ep);
        }
    }
    Err(Error::TaskInfeasible(format!(
        "no {task} episode after {} attempts",
        params.attempts
    )))
}
