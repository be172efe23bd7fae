//! Closed-loop episodes on hand-built worlds.

mod common;

use objnav_core::eval::{
    build_episode_map, goal_position, make_episode, run_episode, spl, sspl, Episode, EpisodeConfig, Task, TaskParams,
};
use objnav_core::geometry::{normalize_angle, Pose};
use objnav_core::world::{geodesic_distance, render, shortest_path_trajectory, NavGrid, World};

const RADIUS: f64 = 0.75;

fn instance_of(world: &World, category: &str) -> u32 {
    world.obstacles().iter().find(|o| o.category == category).unwrap().id
}

/// Teach-and-repeat along a corridor: the map path runs from `start` to the
/// bookshelf at the far end, and the run starts from the same pose.
fn corridor_episode(world: &World, start: Pose) -> Episode {
    let params = TaskParams::default();
    let goal = instance_of(world, "bookshelf");
    let grid = NavGrid::new(world, RADIUS);
    let target = goal_position(world, &grid, goal).unwrap();
    let mut traj = vec![start];
    traj.extend(shortest_path_trajectory(world, start, target, RADIUS).unwrap());
    Episode {
        task: Task::Imitate,
        seed: 0,
        map_trajectory: traj,
        start_pose: start,
        goal_instance: goal,
        goal_position: target,
        goal_viewpoints: Vec::new(),
        map_camera: params.map_camera,
        exec_camera: params.exec_camera,
    }
}

#[test]
fn straight_corridor_costs_little_over_the_geodesic() {
    let world = common::corridor(10.0);
    let ep = corridor_episode(&world, Pose::new(1.6, 2.15, 0.0));
    let cfg = EpisodeConfig::default();
    let map = build_episode_map(&world, &ep, &cfg).unwrap();
    let r = run_episode(&ep, &world, &map, &cfg).unwrap().result;
    assert!(r.success, "{r:?}");
    assert!((r.path_length - r.geodesic).abs() <= 0.2 * r.geodesic, "{r:?}");
    assert!(r.d_final <= 1.0);
}

#[test]
fn spawning_inside_the_goal_radius_succeeds_without_moving() {
    let world = common::corridor(10.0);
    let mut ep = corridor_episode(&world, Pose::new(1.6, 2.15, 0.0));
    let g = ep.goal_position;
    ep.start_pose = Pose::new(g.x - 0.9, g.y, 0.0);
    let d = geodesic_distance(&world, ep.start_pose.position(), g, RADIUS).unwrap();
    assert!((d - 0.9).abs() < 0.06, "{d}");
    let cfg = EpisodeConfig::default();
    let map = build_episode_map(&world, &ep, &cfg).unwrap();
    let r = run_episode(&ep, &world, &map, &cfg).unwrap().result;
    assert!(r.success);
    assert_eq!(r.steps, 0);
    assert_eq!(r.path_length, 0.0);
    assert_eq!(spl(&[r]).unwrap(), 1.0);
}

#[test]
fn unreachable_in_budget_fails_after_300_steps() {
    // 15 m of travel at most, the goal is twice as far
    let world = common::corridor(32.0);
    let ep = corridor_episode(&world, Pose::new(1.6, 2.15, 0.0));
    let cfg = EpisodeConfig::default();
    let map = build_episode_map(&world, &ep, &cfg).unwrap();
    let run = run_episode(&ep, &world, &map, &cfg).unwrap();
    assert!(!run.result.success);
    assert_eq!(run.result.steps, 300);
    assert_eq!(run.log.len(), 300);
    assert_eq!(spl(&[run.result]).unwrap(), 0.0);
    // it still made progress toward the goal
    assert!(sspl(&[run.result]).unwrap() > 0.0);
}

#[test]
fn goal_absent_from_the_map_fails_in_place() {
    let world = common::corridor(10.0);
    let mut ep = corridor_episode(&world, Pose::new(1.6, 2.15, 0.0));
    // a one-frame map looking back at the start wall never sees the bookshelf
    let back = Pose::new(1.6, 2.15, std::f64::consts::PI);
    assert!(!render(&world, &back, &ep.map_camera)
        .unwrap()
        .contains(ep.goal_instance));
    ep.map_trajectory = vec![back];
    let cfg = EpisodeConfig::default();
    let map = build_episode_map(&world, &ep, &cfg).unwrap();
    let r = run_episode(&ep, &world, &map, &cfg).unwrap().result;
    assert!(r.goal_missing && !r.success);
    assert_eq!((r.steps, r.path_length), (0, 0.0));
    assert_eq!(r.d_final, r.d_init);
}

#[test]
fn reverse_in_a_symmetric_corridor_is_feasible() {
    let world = common::corridor(12.0);
    let params = TaskParams::default();
    let ep = make_episode(&world, Task::Reverse, 0, &params).unwrap();
    let traj = &ep.map_trajectory;
    let (first, last) = (traj[0].position(), traj[traj.len() - 1].position());

    // start at the map path's end, the goal at its beginning
    assert!(ep.start_pose.position().distance(last) < 1e-9);
    let goal_fp = &world.instance(ep.goal_instance).unwrap().footprint;
    let to_first = goal_fp.distance(first);
    // the map path keeps its clearance margin, plus one grid cell
    let touching = params.agent_radius + params.path_margin + world.resolution();
    assert!(to_first <= touching, "goal {to_first} m from the map start");
    let to_last = goal_fp.distance(last);
    assert!(to_last > to_first + 4.0, "goal {to_last} m from the map end");

    // the map path is the goal's approach walked outward, so its start faces
    // the goal object and the run starts facing back along the path
    assert!(render(&world, &traj[0], &ep.map_camera)
        .unwrap()
        .contains(ep.goal_instance));
    let back = traj[traj.len() - 2].position();
    let yaw = ep.start_pose.position().heading_to(back);
    assert!(normalize_angle(ep.start_pose.yaw - yaw).abs() < 1e-9);
    let d = geodesic_distance(&world, ep.start_pose.position(), ep.goal_position, RADIUS).unwrap();
    assert!(d >= 5.0, "{d}");
}

#[test]
fn identical_inputs_give_identical_results() {
    let world = common::corridor(10.0);
    let ep = corridor_episode(&world, Pose::new(1.6, 2.15, 0.0));
    let cfg = EpisodeConfig::default();
    let map = build_episode_map(&world, &ep, &cfg).unwrap();
    let a = run_episode(&ep, &world, &map, &cfg).unwrap();
    let b = run_episode(&ep, &world, &map, &cfg).unwrap();
    assert_eq!(a, b);
}

#[test]
fn low_camera_still_reaches_the_corridor_goal() {
    let world = common::corridor(10.0);
    let ep = corridor_episode(&world, Pose::new(1.6, 2.15, 0.0)).with_exec_height(0.4);
    let cfg = EpisodeConfig::default();
    let map = build_episode_map(&world, &ep, &cfg).unwrap();
    let r = run_episode(&ep, &world, &map, &cfg).unwrap().result;
    assert!(r.success, "{r:?}");
}
