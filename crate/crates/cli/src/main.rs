//! `objnav`: world generation, mapping, planning, single episodes, batch
//! evaluation and artifact inspection.
//!
//! Exit codes: 0 success, 1 usage or runtime error, 2 infeasible episode.

mod config;

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use objnav_core::costmap::{decode_segments, ledger_groups, load_dump, save_dump, to_ppm};
use objnav_core::eval::{
    build_episode_map, command_csv, frame_costmap, make_episode, nearest_map_frame, run_episode, run_suite, spl,
    summary_csv, trajectory_csv, trajectory_svg, write_report, Episode, EpisodeResult, SuiteConfig, Task,
};
use objnav_core::geometry::{Point2, Pose};
use objnav_core::planner::{compute_field, select_goal_node, Localizer};
use objnav_core::scenegraph::{build_map, EdgeMode, SceneGraph};
use objnav_core::world::{
    generate_world, render_indexed, shortest_path_trajectory, CameraParams, ContactModel, InstanceId, World,
};
use serde::Serialize;

use config::{RunConfig, WorldSource};

/// Bad arguments or configuration.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(
    name = "objnav",
    version,
    about = "Object-relative topological navigation in synthetic worlds"
)]
struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a multi-room world from a seed.
    GenWorld(GenWorldArgs),
    /// Render a trajectory through a world and build its object map.
    Map(MapArgs),
    /// Print the path-length field of a map toward a goal object as CSV.
    Plan(PlanArgs),
    /// Dump per-step localization costs for a pose sequence as JSON lines.
    Localize(LocalizeArgs),
    /// Build the costmap of one observation; writes .bin, .json and .ppm.
    Costmap(CostmapArgs),
    /// Summarize a world, map or costmap file.
    Inspect(InspectArgs),
    /// Run one episode and write its trajectory and command logs.
    Run(RunArgs),
    /// Run a batch of episodes and write results, summary and manifest.
    RunSuite(SuiteArgs),
}

#[derive(Args, Debug)]
struct GenWorldArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Number of rooms (at least 1).
    #[arg(long)]
    rooms: Option<usize>,
    #[arg(long)]
    objects_per_room: Option<usize>,
    /// Doorway width in meters.
    #[arg(long)]
    door_width: Option<f64>,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug, Default)]
struct CameraArgs {
    /// Horizontal field of view in degrees.
    #[arg(long)]
    fov: Option<f64>,
    /// Image width in pixels.
    #[arg(long)]
    image_width: Option<usize>,
    /// Image height in pixels.
    #[arg(long)]
    image_height: Option<usize>,
    /// Camera height above the floor in meters.
    #[arg(long)]
    sensor_height: Option<f64>,
}

impl CameraArgs {
    fn apply(&self, cam: &mut CameraParams) {
        set(&mut cam.fov_deg, self.fov);
        set(&mut cam.width, self.image_width);
        set(&mut cam.height, self.image_height);
        set(&mut cam.sensor_height, self.sensor_height);
    }
}

#[derive(Args, Debug, Default)]
struct NoiseArgs {
    /// Probability of dropping a true segment match.
    #[arg(long)]
    p_drop: Option<f64>,
    /// Probability of replacing a match with a wrong one.
    #[arg(long)]
    p_mismatch: Option<f64>,
    #[arg(long)]
    noise_seed: Option<u64>,
}

#[derive(Args, Debug, Default)]
struct GraphArgs {
    /// ALL_PAIRS_3D (3d) or DELAUNAY_2D (2d).
    #[arg(long)]
    edge_mode: Option<EdgeMode>,
    /// Number of previous frames each map frame is matched against.
    #[arg(long)]
    link_horizon: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct LocalizerArgs {
    /// Half-width of the localization window, in map frames.
    #[arg(long)]
    submap_radius: Option<usize>,
    #[arg(long)]
    subsample: Option<usize>,
    /// Past observations kept for tracking.
    #[arg(long)]
    history: Option<usize>,
}

#[derive(Args, Debug, Default)]
struct ControlArgs {
    /// Steering gain g.
    #[arg(long)]
    gain: Option<f64>,
    /// Softmax temperature beta.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    v_nominal: Option<f64>,
    /// Drive at the nominal speed regardless of the yaw error.
    #[arg(long)]
    fixed_v: bool,
    /// Attract to the segment farthest from the goal, i.e. weight by the
    /// normalized level as written rather than its goal-inverted form.
    #[arg(long)]
    literal_weighting: bool,
    /// Command smoothing window.
    #[arg(long)]
    window: Option<usize>,
    /// What a blocked translation does: clamp or slide.
    #[arg(long)]
    contact: Option<ContactModel>,
    #[arg(long)]
    max_steps: Option<usize>,
}

#[derive(Args, Debug)]
struct MapArgs {
    #[arg(long)]
    world: Option<PathBuf>,
    /// JSON array of poses `{"x", "y", "yaw"}`.
    #[arg(long, conflicts_with_all = ["from", "task"])]
    trajectory: Option<PathBuf>,
    /// Start pose `x,y,yaw` of a shortest-path trajectory.
    #[arg(long, value_parser = parse_pose, requires = "to", allow_hyphen_values = true)]
    from: Option<Pose>,
    /// End point `x,y` of a shortest-path trajectory.
    #[arg(long, value_parser = parse_point, allow_hyphen_values = true)]
    to: Option<Point2>,
    /// Use the map trajectory of this task's episode.
    #[arg(long, conflicts_with = "from")]
    task: Option<Task>,
    /// Episode seed for --task.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Keep only the first N frames.
    #[arg(long)]
    frames: Option<usize>,
    #[command(flatten)]
    camera: CameraArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct PlanArgs {
    #[arg(long)]
    map: Option<PathBuf>,
    /// Goal object instance id.
    #[arg(long)]
    goal_instance: InstanceId,
    /// Write the CSV here instead of stdout.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct QueryArgs {
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long)]
    map: Option<PathBuf>,
    #[arg(long)]
    goal_instance: InstanceId,
    /// Camera height of the query observations.
    #[arg(long)]
    exec_height: Option<f64>,
    #[command(flatten)]
    localizer: LocalizerArgs,
    #[command(flatten)]
    noise: NoiseArgs,
}

#[derive(Args, Debug)]
struct LocalizeArgs {
    #[command(flatten)]
    query: QueryArgs,
    /// Query pose `x,y,yaw`; repeatable.
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    pose: Vec<Pose>,
    /// JSON array of query poses.
    #[arg(long)]
    poses: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CostmapArgs {
    #[command(flatten)]
    query: QueryArgs,
    #[arg(long, value_parser = parse_pose, allow_hyphen_values = true)]
    pose: Pose,
    /// Output stem; `.bin`, `.json` and `.ppm` are appended.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct InspectArgs {
    /// World JSON, map JSON or costmap `.bin` dump.
    path: PathBuf,
}

#[derive(Args, Debug)]
struct RunArgs {
    /// World file; without it a world is generated from --world-seed.
    #[arg(long)]
    world: Option<PathBuf>,
    #[arg(long, conflicts_with = "world")]
    world_seed: Option<u64>,
    #[arg(long, default_value = "imitate")]
    task: Task,
    /// Episode seed.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    exec_height: Option<f64>,
    #[command(flatten)]
    control: ControlArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    localizer: LocalizerArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    /// Output directory for trajectory, command log, SVG and result.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct SuiteArgs {
    /// A count of generated worlds (seeds 0..N) or comma-separated world files.
    #[arg(long)]
    worlds: Option<WorldSource>,
    /// Comma-separated tasks.
    #[arg(long, value_delimiter = ',')]
    tasks: Option<Vec<Task>>,
    /// Comma-separated execution camera heights.
    #[arg(long, value_delimiter = ',')]
    heights: Option<Vec<f64>>,
    /// Comma-separated episode seeds.
    #[arg(long, value_delimiter = ',')]
    seeds: Option<Vec<u64>>,
    /// Worker threads; 0 uses every core.
    #[arg(long)]
    jobs: Option<usize>,
    /// Also write per-run trajectory CSV, command CSV and SVG files.
    #[arg(long)]
    traces: bool,
    #[command(flatten)]
    control: ControlArgs,
    #[command(flatten)]
    graph: GraphArgs,
    #[command(flatten)]
    localizer: LocalizerArgs,
    #[command(flatten)]
    noise: NoiseArgs,
    #[arg(long, short)]
    out: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let xs: Vec<f64> = s
        .split(',')
        .map(|t| t.trim().parse::<f64>().map_err(|e| format!("{t:?}: {e}")))
        .collect::<Result<_, _>>()?;
    if xs.len() != n {
        return Err(format!("expected {n} comma-separated numbers, got {}", xs.len()));
    }
    Ok(xs)
}

fn parse_pose(s: &str) -> Result<Pose, String> {
    let v = parse_floats(s, 3)?;
    Ok(Pose::new(v[0], v[1], v[2]))
}

fn parse_point(s: &str) -> Result<Point2, String> {
    let v = parse_floats(s, 2)?;
    Ok(Point2::new(v[0], v[1]))
}

impl NoiseArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let n = &mut cfg.episode.localizer.noise;
        set(&mut n.p_drop, self.p_drop);
        set(&mut n.p_mismatch, self.p_mismatch);
        set(&mut n.seed, self.noise_seed);
    }
}

impl GraphArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        set(&mut cfg.episode.edge_mode, self.edge_mode);
        set(&mut cfg.episode.link_horizon, self.link_horizon);
    }
}

impl LocalizerArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let l = &mut cfg.episode.localizer;
        set(&mut l.submap_radius, self.submap_radius);
        set(&mut l.subsample, self.subsample);
        set(&mut l.history, self.history);
    }
}

impl ControlArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        let c = &mut cfg.episode.controller;
        set(&mut c.gain, self.gain);
        set(&mut c.beta, self.beta);
        set(&mut c.v_nominal, self.v_nominal);
        set(&mut c.window, self.window);
        if self.fixed_v {
            c.fixed_v = true;
        }
        if self.literal_weighting {
            c.literal_weighting = true;
        }
        set(&mut cfg.episode.contact, self.contact);
        set(&mut cfg.episode.max_steps, self.max_steps);
    }
}

fn validate(cfg: &RunConfig) -> Result<()> {
    let e = &cfg.episode;
    e.controller.validate().map_err(|x| usage(x.to_string()))?;
    e.localizer.validate().map_err(|x| usage(x.to_string()))?;
    e.costmap.validate().map_err(|x| usage(x.to_string()))?;
    cfg.task.map_camera.validate().map_err(|x| usage(x.to_string()))?;
    cfg.task.exec_camera.validate().map_err(|x| usage(x.to_string()))?;
    if cfg.world.rooms == 0 {
        return Err(usage("rooms must be at least 1"));
    }
    cfg.check_paths().map_err(|x| usage(x.to_string()))
}

fn required<'a>(flag: Option<&'a PathBuf>, fallback: Option<&'a PathBuf>, name: &str) -> Result<&'a Path> {
    flag.or(fallback)
        .map(PathBuf::as_path)
        .ok_or_else(|| usage(format!("--{name} is required (or set paths.{name} in the config)")))
}

fn load_world(path: &Path) -> Result<World> {
    World::load(path).with_context(|| format!("loading world {}", path.display()))
}

fn load_map(path: &Path) -> Result<SceneGraph> {
    SceneGraph::load(path).with_context(|| format!("loading map {}", path.display()))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    std::fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            match e.downcast_ref::<objnav_core::Error>() {
                Some(objnav_core::Error::TaskInfeasible(_)) => ExitCode::from(2),
                _ => ExitCode::from(1),
            }
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p).map_err(|e| usage(format!("{e:#}")))?,
        None => RunConfig::default(),
    };
    match cli.command {
        Command::GenWorld(a) => cmd_gen_world(cfg, a),
        Command::Map(a) => {
            a.camera.apply(&mut cfg.task.map_camera);
            a.graph.apply(&mut cfg);
            a.noise.apply(&mut cfg);
            validate(&cfg)?;
            cmd_map(cfg, a)
        }
        Command::Plan(a) => cmd_plan(cfg, a),
        Command::Localize(a) => {
            a.query.apply(&mut cfg);
            validate(&cfg)?;
            cmd_localize(cfg, a)
        }
        Command::Costmap(a) => {
            a.query.apply(&mut cfg);
            validate(&cfg)?;
            cmd_costmap(cfg, a)
        }
        Command::Inspect(a) => cmd_inspect(&a.path),
        Command::Run(a) => {
            a.control.apply(&mut cfg);
            a.graph.apply(&mut cfg);
            a.localizer.apply(&mut cfg);
            a.noise.apply(&mut cfg);
            set(&mut cfg.world.seed, a.world_seed);
            validate(&cfg)?;
            cmd_run(cfg, a)
        }
        Command::RunSuite(a) => {
            a.control.apply(&mut cfg);
            a.graph.apply(&mut cfg);
            a.localizer.apply(&mut cfg);
            a.noise.apply(&mut cfg);
            set(&mut cfg.suite.worlds, a.worlds.clone());
            set(&mut cfg.suite.tasks, a.tasks.clone());
            set(&mut cfg.suite.heights, a.heights.clone());
            set(&mut cfg.suite.seeds, a.seeds.clone());
            set(&mut cfg.suite.jobs, a.jobs);
            validate(&cfg)?;
            cmd_suite(cfg, a)
        }
    }
}

impl QueryArgs {
    fn apply(&self, cfg: &mut RunConfig) {
        self.localizer.apply(cfg);
        self.noise.apply(cfg);
    }

    fn load(&self, cfg: &RunConfig) -> Result<(World, SceneGraph)> {
        let world = load_world(required(self.world.as_ref(), cfg.paths.world.as_ref(), "world")?)?;
        let graph = load_map(required(self.map.as_ref(), cfg.paths.map.as_ref(), "map")?)?;
        Ok((world, graph))
    }

    /// Query camera: the map's camera at the execution height.
    fn camera(&self, graph: &SceneGraph) -> CameraParams {
        let cam = *graph.camera();
        cam.with_height(self.exec_height.unwrap_or(cam.sensor_height))
    }
}

fn cmd_gen_world(mut cfg: RunConfig, a: GenWorldArgs) -> Result<()> {
    set(&mut cfg.world.seed, a.seed);
    set(&mut cfg.world.rooms, a.rooms);
    set(&mut cfg.world.objects_per_room, a.objects_per_room);
    set(&mut cfg.world.door_width, a.door_width);
    if cfg.world.rooms == 0 {
        return Err(usage("rooms must be at least 1"));
    }
    let out = required(a.out.as_ref(), cfg.paths.out.as_ref(), "out")?;
    let world = generate_world(&cfg.world)?;
    world.save(out).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "world seed {} rooms {} obstacles {} -> {}",
        cfg.world.seed,
        cfg.world.rooms,
        world.obstacles().len(),
        out.display()
    );
    Ok(())
}

fn cmd_map(cfg: RunConfig, a: MapArgs) -> Result<()> {
    let world = load_world(required(a.world.as_ref(), cfg.paths.world.as_ref(), "world")?)?;
    let out = required(a.out.as_ref(), cfg.paths.out.as_ref(), "out")?;
    let mut cam = cfg.task.map_camera;
    let mut poses: Vec<Pose> = if let Some(p) = &a.trajectory {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        serde_json::from_str(&text).with_context(|| format!("parsing trajectory {}", p.display()))?
    } else if let (Some(from), Some(to)) = (a.from, a.to) {
        let mut v = vec![from];
        v.extend(shortest_path_trajectory(&world, from, to, cfg.task.agent_radius)?);
        v
    } else if let Some(task) = a.task {
        let mut params = cfg.task.clone();
        params.map_camera = cam;
        let ep = make_episode(&world, task, a.seed, &params)?;
        cam = ep.map_camera;
        ep.map_trajectory
    } else {
        return Err(usage("a trajectory is required: --trajectory, --from/--to or --task"));
    };
    if let Some(n) = a.frames {
        poses.truncate(n);
    }
    if poses.is_empty() {
        return Err(usage("the trajectory has no poses"));
    }
    let e = &cfg.episode;
    let t0 = Instant::now();
    let graph = build_map(&world, &poses, &cam, e.edge_mode, &e.localizer.noise, e.link_horizon)?;
    let secs = t0.elapsed().as_secs_f64();
    graph.save(out).with_context(|| format!("writing {}", out.display()))?;
    println!(
        "frames {} nodes {} intra_edges {} inter_edges {} edge_mode {} time_s {:.4} -> {}",
        poses.len(),
        graph.node_count(),
        graph.intra_edges().len(),
        graph.inter_edges().len(),
        edge_mode_name(graph.edge_mode()),
        secs,
        out.display()
    );
    Ok(())
}

fn edge_mode_name(m: EdgeMode) -> &'static str {
    match m {
        EdgeMode::AllPairs3d => "ALL_PAIRS_3D",
        EdgeMode::Delaunay2d => "DELAUNAY_2D",
    }
}

fn cmd_plan(cfg: RunConfig, a: PlanArgs) -> Result<()> {
    let graph = load_map(required(a.map.as_ref(), cfg.paths.map.as_ref(), "map")?)?;
    let goal = select_goal_node(&graph, a.goal_instance)?;
    let field = compute_field(&graph, goal)?;
    let mut s = String::from("node_id,frame,instance,dist\n");
    for n in graph.nodes() {
        s.push_str(&format!(
            "{},{},{},{}\n",
            n.node_id,
            n.frame_index,
            n.instance_id,
            field.get(n.node_id)
        ));
    }
    match &a.out {
        Some(p) => std::fs::write(p, s).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().write_all(s.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct LocalizeLine<'a> {
    step: usize,
    ref_frame: usize,
    #[serde(flatten)]
    costs: &'a objnav_core::planner::QueryCosts,
}

fn cmd_localize(cfg: RunConfig, a: LocalizeArgs) -> Result<()> {
    let (world, graph) = a.query.load(&cfg)?;
    let mut poses = a.pose.clone();
    if let Some(p) = &a.poses {
        let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
        let more: Vec<Pose> = serde_json::from_str(&text).with_context(|| format!("parsing poses {}", p.display()))?;
        poses.extend(more);
    }
    if poses.is_empty() {
        return Err(usage("no query poses: use --pose or --poses"));
    }
    let field = compute_field(&graph, select_goal_node(&graph, a.query.goal_instance)?)?;
    let cam = a.query.camera(&graph);
    let mut localizer = Localizer::new(cfg.episode.localizer);
    let mut stdout = std::io::stdout().lock();
    for (step, pose) in poses.iter().enumerate() {
        let frame = render_indexed(&world, pose, &cam, step)?;
        let ref_frame = nearest_map_frame(&graph, pose).ok_or_else(|| anyhow!("map has no frames"))?;
        let costs = localizer.step(&frame, &graph, ref_frame, &field)?;
        let line = LocalizeLine {
            step,
            ref_frame,
            costs: &costs,
        };
        writeln!(stdout, "{}", serde_json::to_string(&line)?)?;
    }
    Ok(())
}

fn cmd_costmap(cfg: RunConfig, a: CostmapArgs) -> Result<()> {
    let (world, graph) = a.query.load(&cfg)?;
    let out = required(a.out.as_ref(), cfg.paths.out.as_ref(), "out")?;
    let field = compute_field(&graph, select_goal_node(&graph, a.query.goal_instance)?)?;
    let frame = render_indexed(&world, &a.pose, &a.query.camera(&graph), 0)?;
    let ref_frame = nearest_map_frame(&graph, &a.pose).ok_or_else(|| anyhow!("map has no frames"))?;
    let costs = Localizer::new(cfg.episode.localizer).step(&frame, &graph, ref_frame, &field)?;
    let map = frame_costmap(&frame, &costs, &cfg.episode.costmap)?;
    save_dump(&map, out)?;
    let ppm = out.with_extension("ppm");
    std::fs::write(&ppm, to_ppm(&map)?).with_context(|| format!("writing {}", ppm.display()))?;
    println!(
        "costmap {}x{}x{} segments {} ref_frame {} -> {}",
        map.height,
        map.width,
        map.config.dim,
        map.ledger.len(),
        ref_frame,
        out.with_extension("bin").display()
    );
    Ok(())
}

fn cmd_inspect(path: &Path) -> Result<()> {
    if path.extension().is_some_and(|e| e == "bin") {
        return inspect_costmap(path);
    }
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
    if value.get("obstacles").is_some() {
        let world = World::from_json(&text)?;
        let b = world.bounds();
        println!(
            "world bounds [{}, {}] x [{}, {}] resolution {} obstacles {} goalable {}",
            b.min.x,
            b.max.x,
            b.min.y,
            b.max.y,
            world.resolution(),
            world.obstacles().len(),
            world.goalable().count()
        );
        let mut counts = std::collections::BTreeMap::<&str, usize>::new();
        for o in world.obstacles() {
            *counts.entry(o.category.as_str()).or_default() += 1;
        }
        for (c, n) in counts {
            println!("  {c} {n}");
        }
    } else if value.get("nodes").is_some() {
        let graph = SceneGraph::from_json(&text)?;
        println!(
            "map edge_mode {} frames {} nodes {} intra_edges {} inter_edges {}",
            edge_mode_name(graph.edge_mode()),
            graph.frame_count(),
            graph.node_count(),
            graph.intra_edges().len(),
            graph.inter_edges().len()
        );
    } else {
        bail!("{} is neither a world nor a map file", path.display());
    }
    Ok(())
}

#[derive(Serialize)]
struct DecodedSegment {
    level: u32,
    pixels: usize,
    instances: Vec<InstanceId>,
}

fn inspect_costmap(path: &Path) -> Result<()> {
    let map = load_dump(path).with_context(|| format!("loading costmap {}", path.display()))?;
    let mut decoded = decode_segments(&map)?;
    decoded.sort_by_key(|g| g.1);
    println!(
        "costmap {}x{} dim {} base {} levels {} segments {}",
        map.height,
        map.width,
        map.config.dim,
        map.config.base,
        map.config.levels,
        decoded.len()
    );
    for (mask, level) in &decoded {
        let instances = map
            .ledger
            .iter()
            .filter(|s| s.level == *level && s.mask.intersects(mask))
            .map(|s| s.instance_id)
            .collect();
        let row = DecodedSegment {
            level: *level,
            pixels: mask.area(),
            instances,
        };
        println!("{}", serde_json::to_string(&row)?);
    }
    if map.ledger.is_empty() {
        println!("ledger: no sidecar");
    } else if decoded == ledger_groups(&map) {
        println!("ledger: reproduced ({} entries)", map.ledger.len());
    } else {
        bail!("decoded segments do not match the ledger");
    }
    Ok(())
}

#[derive(Serialize)]
struct RunSummary<'a> {
    task: Task,
    seed: u64,
    world: String,
    exec_height: f64,
    goal_instance: InstanceId,
    #[serde(flatten)]
    result: &'a EpisodeResult,
    /// This episode's SPL term `S * l_geo / max(p, l_geo)`.
    spl: f64,
}

fn cmd_run(cfg: RunConfig, a: RunArgs) -> Result<()> {
    let (world, world_name) = match a.world.as_ref().or(cfg.paths.world.as_ref()) {
        Some(p) => (load_world(p)?, p.display().to_string()),
        None => (generate_world(&cfg.world)?, format!("seed:{}", cfg.world.seed)),
    };
    let ep: Episode = make_episode(&world, a.task, a.seed, &cfg.task)?;
    let ep = match a.exec_height {
        Some(h) => ep.with_exec_height(h),
        None => ep,
    };
    let graph = build_episode_map(&world, &ep, &cfg.episode)?;
    let run = run_episode(&ep, &world, &graph, &cfg.episode)?;
    let r = &run.result;
    let summary = RunSummary {
        task: a.task,
        seed: a.seed,
        world: world_name,
        exec_height: ep.exec_camera.sensor_height,
        goal_instance: ep.goal_instance,
        result: r,
        spl: spl(std::slice::from_ref(r))?,
    };
    println!(
        "task {} seed {} success {} p {:.4} l_geo {:.4} d_init {:.4} d_final {:.4} steps {} collisions {} spl {:.4}",
        a.task,
        a.seed,
        r.success as u8,
        r.path_length,
        r.geodesic,
        r.d_init,
        r.d_final,
        r.steps,
        r.collisions,
        summary.spl
    );
    if let Some(dir) = a.out.as_ref().or(cfg.paths.out.as_ref()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        std::fs::write(dir.join("trajectory.csv"), trajectory_csv(&run))?;
        std::fs::write(dir.join("commands.csv"), command_csv(&run))?;
        std::fs::write(dir.join("trajectory.svg"), trajectory_svg(&world, &ep, &run))?;
        write_json(&dir.join("result.json"), &summary)?;
        write_json(&dir.join("episode.json"), &ep)?;
        write_json(&dir.join("config.json"), &cfg)?;
        println!("wrote {}", dir.display());
    }
    Ok(())
}

fn suite_worlds(cfg: &RunConfig) -> Result<Vec<(String, World)>> {
    match &cfg.suite.worlds {
        WorldSource::Count(0) => Err(usage("--worlds must be at least 1")),
        WorldSource::Count(n) => (0..*n as u64)
            .map(|s| {
                let mut p = cfg.world.clone();
                p.seed = cfg.world.seed + s;
                Ok((format!("w{:03}", p.seed), generate_world(&p)?))
            })
            .collect(),
        WorldSource::Files(fs) => fs
            .iter()
            .map(|p| {
                let name = p
                    .file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_default();
                Ok((name, load_world(p)?))
            })
            .collect(),
    }
}

fn cmd_suite(cfg: RunConfig, a: SuiteArgs) -> Result<()> {
    let out = required(a.out.as_ref(), cfg.paths.out.as_ref(), "out")?.to_path_buf();
    let worlds = suite_worlds(&cfg)?;
    let scfg = SuiteConfig {
        tasks: cfg.suite.tasks.clone(),
        heights: cfg.suite.heights.clone(),
        seeds: cfg.suite.seeds.clone(),
        task_params: cfg.task.clone(),
        episode: cfg.episode.clone(),
        jobs: cfg.suite.jobs,
    };
    let t0 = Instant::now();
    let report = run_suite(&worlds, &scfg)?;
    write_report(&report, &worlds, &scfg, &out, a.traces)?;
    print!("{}", summary_csv(&report));
    println!(
        "runs {} excluded {} time_s {:.1} -> {}",
        report.records.len(),
        report.exclusions.len(),
        t0.elapsed().as_secs_f64(),
        out.display()
    );
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn poses_and_points_parse() {
        assert_eq!(parse_pose("1,-2.5,0.3").unwrap(), Pose::new(1.0, -2.5, 0.3));
        assert_eq!(parse_point("1, 2").unwrap(), Point2::new(1.0, 2.0));
        assert!(parse_pose("1,2").is_err());
        assert!(parse_point("a,b").is_err());
    }

    #[test]
    fn flags_override_config() {
        let mut cfg: RunConfig = toml::from_str("[episode.controller]\ngain = 0.8\nbeta = 2.0").unwrap();
        let args = ControlArgs {
            gain: Some(0.3),
            ..Default::default()
        };
        args.apply(&mut cfg);
        assert_eq!(cfg.episode.controller.gain, 0.3);
        assert_eq!(cfg.episode.controller.beta, 2.0);
    }
}
