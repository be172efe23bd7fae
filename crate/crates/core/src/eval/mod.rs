//! Episodes, the closed control loop, and path-efficiency metrics.

mod suite;
mod tasks;
mod trace;

use serde::{Deserialize, Serialize};

use crate::controller::{control_step, CommandLimits, CommandSmoother, ControlCommand, ControllerParams};
use crate::costmap::{assemble, build_segments, CostmapConfig, WayObjectCostmap};
use crate::error::{Error, Result};
use crate::geometry::{normalize_angle, Point2, Pose};
use crate::planner::{compute_field, select_goal_node, Localizer, LocalizerConfig, QueryCosts};
use crate::scenegraph::{build_map, EdgeMode, SceneGraph, DEFAULT_LINK_HORIZON};
use crate::world::{render_indexed, step_agent_with, CameraParams, ContactModel, Frame, InstanceId, NavGrid, World};

pub use suite::{
    results_csv, run_suite, summary_csv, write_report, Exclusion, Report, RunRecord, SuiteConfig, SummaryRow,
};
pub use tasks::{goal_position, make_episode, TaskParams};
pub use trace::{command_csv, trajectory_csv, trajectory_svg};

pub const DEFAULT_AGENT_RADIUS: f64 = 0.75;
pub const SUCCESS_RADIUS: f64 = 1.0;
pub const MAX_STEPS: usize = 300;
pub const MIN_START_DISTANCE: f64 = 5.0;
pub const MAP_SENSOR_HEIGHT: f64 = 1.3;
pub const EXEC_HEIGHTS: [f64; 2] = [0.4, 1.3];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Task {
    Imitate,
    AltGoal,
    Shortcut,
    Reverse,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Imitate, Task::AltGoal, Task::Shortcut, Task::Reverse];

    pub fn name(self) -> &'static str {
        match self {
            Task::Imitate => "imitate",
            Task::AltGoal => "alt_goal",
            Task::Shortcut => "shortcut",
            Task::Reverse => "reverse",
        }
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "imitate" => Ok(Task::Imitate),
            "alt_goal" | "altgoal" => Ok(Task::AltGoal),
            "shortcut" => Ok(Task::Shortcut),
            "reverse" => Ok(Task::Reverse),
            _ => Err(Error::InvalidInput(format!("unknown task {s:?}"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Episode {
    pub task: Task,
    pub seed: u64,
    pub map_trajectory: Vec<Pose>,
    pub start_pose: Pose,
    pub goal_instance: InstanceId,
    pub goal_position: Point2,
    /// Free points touching the goal object; distances to the goal are taken
    /// to the nearest of them. Empty means `goal_position` alone.
    #[serde(default)]
    pub goal_viewpoints: Vec<Point2>,
    pub map_camera: CameraParams,
    pub exec_camera: CameraParams,
}

impl Episode {
    pub fn goal_points(&self) -> Vec<Point2> {
        if self.goal_viewpoints.is_empty() {
            vec![self.goal_position]
        } else {
            self.goal_viewpoints.clone()
        }
    }

    pub fn with_exec_height(&self, h: f64) -> Episode {
        Episode {
            exec_camera: self.exec_camera.with_height(h),
            ..self.clone()
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeResult {
    pub success: bool,
    pub steps: usize,
    /// Executed path length `p`.
    pub path_length: f64,
    /// Geodesic shortest path length `l_geo`.
    pub geodesic: f64,
    pub d_init: f64,
    pub d_final: f64,
    pub collisions: usize,
    /// The goal had no node in the map; the episode fails without moving.
    pub goal_missing: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepLog {
    pub step: usize,
    pub pose: Pose,
    pub ref_frame: usize,
    pub delta_phi: Option<f64>,
    pub raw: ControlCommand,
    pub command: ControlCommand,
    pub d_goal: f64,
    pub collided: bool,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EpisodeRun {
    pub result: EpisodeResult,
    pub log: Vec<StepLog>,
    /// Executed poses, starting with the start pose.
    pub poses: Vec<Pose>,
}

/// Everything the closed loop needs besides the episode and the map.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EpisodeConfig {
    pub agent_radius: f64,
    pub success_radius: f64,
    pub max_steps: usize,
    pub contact: ContactModel,
    pub controller: ControllerParams,
    pub limits: CommandLimits,
    pub costmap: CostmapConfig,
    pub localizer: LocalizerConfig,
    pub edge_mode: EdgeMode,
    pub link_horizon: usize,
}

impl Default for EpisodeConfig {
    fn default() -> Self {
        Self {
            agent_radius: DEFAULT_AGENT_RADIUS,
            success_radius: SUCCESS_RADIUS,
            max_steps: MAX_STEPS,
            contact: ContactModel::Slide,
            controller: ControllerParams::for_width(CameraParams::default().width),
            limits: CommandLimits::default(),
            costmap: CostmapConfig::default(),
            localizer: LocalizerConfig::default(),
            edge_mode: EdgeMode::AllPairs3d,
            link_horizon: DEFAULT_LINK_HORIZON,
        }
    }
}

/// Builds the episode's map with the configured edge mode and noise.
pub fn build_episode_map(world: &World, ep: &Episode, cfg: &EpisodeConfig) -> Result<SceneGraph> {
    build_map(
        world,
        &ep.map_trajectory,
        &ep.map_camera,
        cfg.edge_mode,
        &cfg.localizer.noise,
        cfg.link_horizon,
    )
}

/// Map frame closest to `pose`: nearest position, then smallest heading
/// difference, then lowest index.
pub fn nearest_map_frame(graph: &SceneGraph, pose: &Pose) -> Option<usize> {
    graph
        .frame_poses()
        .iter()
        .map(|(&k, p)| {
            let d = p.position().distance(pose.position());
            let a = normalize_angle(p.yaw - pose.yaw).abs();
            (d, a, k)
        })
        .min_by(|x, y| x.0.total_cmp(&y.0).then(x.1.total_cmp(&y.1)).then(x.2.cmp(&y.2)))
        .map(|t| t.2)
}

/// Runs one episode with a fresh navigation grid.
pub fn run_episode(ep: &Episode, world: &World, graph: &SceneGraph, cfg: &EpisodeConfig) -> Result<EpisodeRun> {
    let grid = NavGrid::new(world, cfg.agent_radius);
    run_episode_on(ep, world, &grid, graph, cfg)
}

/// WayObject costmap of one observation from its per-segment costs.
pub fn frame_costmap(frame: &Frame, costs: &QueryCosts, cfg: &CostmapConfig) -> Result<WayObjectCostmap> {
    let masks = frame.masks();
    let entries = costs
        .entries
        .iter()
        .filter_map(|e| Some((e.instance_id, masks.get(&e.instance_id)?.clone(), e.cost)))
        .collect();
    let segments = build_segments(entries, cfg)?;
    assemble(&segments, cfg, frame.height(), frame.width())
}

/// Closed loop: observe, localize, cost, steer, move, until the agent is
/// within the success radius of the goal (checked before every motion) or the
/// step budget runs out.
pub fn run_episode_on(
    ep: &Episode,
    world: &World,
    grid: &NavGrid,
    graph: &SceneGraph,
    cfg: &EpisodeConfig,
) -> Result<EpisodeRun> {
    cfg.localizer.validate()?;
    let field_geo = grid.field_from_set(&ep.goal_points());
    let d_init = field_geo.distance_from(ep.start_pose.position());
    if !d_init.is_finite() {
        return Err(Error::TaskInfeasible("goal unreachable from start".into()));
    }
    let mut result = EpisodeResult {
        success: false,
        steps: 0,
        path_length: 0.0,
        geodesic: d_init,
        d_init,
        d_final: d_init,
        collisions: 0,
        goal_missing: false,
    };
    let mut run = EpisodeRun {
        result,
        log: Vec::new(),
        poses: vec![ep.start_pose],
    };

    let goal_node = match select_goal_node(graph, ep.goal_instance) {
        Ok(n) => n,
        Err(Error::GoalNotInMap(_)) => {
            run.result.goal_missing = true;
            return Ok(run);
        }
        Err(e) => return Err(e),
    };
    let field = compute_field(graph, goal_node)?;
    let mut params = cfg.controller;
    params.width = ep.exec_camera.width as f64;
    params.center = ep.exec_camera.width as f64 / 2.0;
    let limits = cfg.limits;
    let mut smoother = CommandSmoother::new(params.window);
    let mut localizer = Localizer::new(cfg.localizer);

    let mut pose = ep.start_pose;
    let mut step = 0;
    loop {
        let d_goal = field_geo.distance_from(pose.position());
        result.d_final = d_goal;
        if d_goal <= cfg.success_radius {
            result.success = true;
            break;
        }
        if step >= cfg.max_steps {
            break;
        }
        let frame = render_indexed(world, &pose, &ep.exec_camera, step)?;
        let ref_frame = nearest_map_frame(graph, &pose).ok_or(Error::InvalidInput("empty map".into()))?;
        let costs = localizer.step(&frame, graph, ref_frame, &field)?;
        let costmap = frame_costmap(&frame, &costs, &cfg.costmap)?;
        let ctl = control_step(&costmap, &params, &limits, &mut smoother)?;
        let (next, collided) = step_agent_with(world, &pose, &ctl.command, limits.dt, cfg.agent_radius, cfg.contact);
        result.path_length += pose.position().distance(next.position());
        if collided {
            result.collisions += 1;
        }
        run.log.push(StepLog {
            step,
            pose,
            ref_frame,
            delta_phi: ctl.delta_phi,
            raw: ctl.raw,
            command: ctl.command,
            d_goal,
            collided,
        });
        pose = next;
        run.poses.push(pose);
        step += 1;
    }
    result.steps = step;
    run.result = result;
    Ok(run)
}

/// Mean of `S * l_geo / max(p, l_geo)`. An empty batch scores 0.
pub fn spl(results: &[EpisodeResult]) -> Result<f64> {
    let mut sum = 0.0;
    for r in results {
        if !(r.geodesic > 0.0) {
            return Err(Error::InvalidInput("geodesic length must be positive".into()));
        }
        if r.success {
            sum += r.geodesic / r.path_length.max(r.geodesic);
        }
    }
    Ok(if results.is_empty() {
        0.0
    } else {
        sum / results.len() as f64
    })
}

/// Mean of `max(0, 1 - d_T / d_init) * l_geo / max(p, l_geo)`. An empty batch
/// scores 0.
pub fn sspl(results: &[EpisodeResult]) -> Result<f64> {
    let mut sum = 0.0;
    for r in results {
        if !(r.d_init > 0.0) {
            return Err(Error::InvalidInput("initial goal distance must be positive".into()));
        }
        let progress = (1.0 - r.d_final / r.d_init).max(0.0);
        sum += progress * r.geodesic / r.path_length.max(r.geodesic);
    }
    Ok(if results.is_empty() {
        0.0
    } else {
        sum / results.len() as f64
    })
}

pub fn success_rate(results: &[EpisodeResult]) -> f64 {
    if results.is_empty() {
        return 0.0;
    }
    results.iter().filter(|r| r.success).count() as f64 / results.len() as f64
}
