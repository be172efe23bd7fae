use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn objnav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_objnav"))
        .args(args)
        .output()
        .expect("spawn objnav")
}

fn ok(args: &[&str]) -> String {
    let out = objnav(args);
    assert!(
        out.status.success(),
        "objnav {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn schema(name: &str) -> jsonschema::Validator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs").join(name);
    let value: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    jsonschema::validator_for(&value).unwrap()
}

fn assert_valid(schema_name: &str, file: &Path) {
    let v: Value = serde_json::from_str(&std::fs::read_to_string(file).unwrap()).unwrap();
    let errors: Vec<String> = schema(schema_name).iter_errors(&v).map(|e| e.to_string()).collect();
    assert!(errors.is_empty(), "{} vs {schema_name}: {errors:?}", file.display());
}

/// A world and its IMITATE map, plus an instance that appears in the map.
fn fixture(dir: &Path) -> (PathBuf, PathBuf, String) {
    let world = dir.join("world.json");
    let map = dir.join("map.json");
    ok(&["gen-world", "--seed", "1", "--rooms", "3", "--out", p(&world)]);
    ok(&["map", "--world", p(&world), "--task", "imitate", "--out", p(&map)]);
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&map).unwrap()).unwrap();
    let nodes = m["nodes"].as_array().unwrap();
    let goal = nodes.last().unwrap()["instance"].to_string();
    (world, map, goal)
}

#[test]
fn gen_world_output_matches_schema() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.json");
    ok(&["gen-world", "--seed", "1", "--rooms", "3", "--out", p(&out)]);
    assert_valid("world.schema.json", &out);
}

#[test]
fn gen_world_is_deterministic_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b, c) = (dir.path().join("a"), dir.path().join("b"), dir.path().join("c"));
    ok(&["gen-world", "--seed", "4", "--out", p(&a)]);
    ok(&["gen-world", "--seed", "4", "--out", p(&b)]);
    ok(&["gen-world", "--seed", "5", "--out", p(&c)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn zero_rooms_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("w.json");
    let r = objnav(&["gen-world", "--rooms", "0", "--out", p(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(!out.exists());
}

#[test]
fn bad_flags_exit_1_and_help_lists_controller_flags() {
    assert_eq!(objnav(&["run", "--no-such-flag"]).status.code(), Some(1));
    assert_eq!(objnav(&["frobnicate"]).status.code(), Some(1));
    let help = ok(&["run", "--help"]);
    for flag in [
        "--gain",
        "--beta",
        "--v-nominal",
        "--fixed-v",
        "--literal-weighting",
        "--window",
        "--edge-mode",
        "--p-drop",
        "--contact",
    ] {
        assert!(help.contains(flag), "missing {flag}");
    }
    let help = ok(&["run-suite", "--help"]);
    for flag in ["--worlds", "--tasks", "--heights", "--seeds", "--out", "--jobs"] {
        assert!(help.contains(flag), "missing {flag}");
    }
}

#[test]
fn config_values_yield_to_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[world]\nseed = 9\nrooms = 2\n").unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    ok(&["--config", p(&cfg), "gen-world", "--seed", "3", "--out", p(&a)]);
    ok(&["gen-world", "--seed", "3", "--rooms", "2", "--out", p(&b)]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn config_with_missing_input_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    std::fs::write(&cfg, "[paths]\nworld = \"/definitely/not/here.json\"\n").unwrap();
    let r = objnav(&["--config", p(&cfg), "run"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn single_frame_map_has_no_inter_edges() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("w.json");
    let map = dir.path().join("m.json");
    ok(&["gen-world", "--seed", "1", "--out", p(&world)]);
    let stdout = ok(&[
        "map",
        "--world",
        p(&world),
        "--task",
        "imitate",
        "--frames",
        "1",
        "--out",
        p(&map),
    ]);
    assert!(stdout.contains("inter_edges 0"), "{stdout}");
    assert!(stdout.contains("time_s"), "{stdout}");
    assert_valid("map.schema.json", &map);
}

#[test]
fn edge_mode_flag_selects_the_graph() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("w.json");
    ok(&["gen-world", "--seed", "2", "--out", p(&world)]);
    for (flag, name) in [("3d", "ALL_PAIRS_3D"), ("DELAUNAY_2D", "DELAUNAY_2D")] {
        let map = dir.path().join(format!("{flag}.json"));
        ok(&[
            "map",
            "--world",
            p(&world),
            "--task",
            "imitate",
            "--edge-mode",
            flag,
            "--out",
            p(&map),
        ]);
        let m: Value = serde_json::from_str(&std::fs::read_to_string(&map).unwrap()).unwrap();
        assert_eq!(m["header"]["edge_mode"], name);
        assert!(ok(&["inspect", p(&map)]).contains(name));
    }
}

#[test]
fn plan_prints_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let (_, map, goal) = fixture(dir.path());
    let csv = ok(&["plan", "--map", p(&map), "--goal-instance", &goal]);
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("node_id,frame,instance,dist"));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert!(!rows.is_empty());
    // the goal node itself sits at distance 0
    assert!(rows.iter().any(|r| r[2] == goal && r[3] == "0"));
    assert!(rows
        .iter()
        .all(|r| r[3] == "inf" || r[3].parse::<f64>().unwrap() >= 0.0));
}

#[test]
fn localize_emits_one_json_line_per_pose() {
    let dir = tempfile::tempdir().unwrap();
    let (world, map, goal) = fixture(dir.path());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&map).unwrap()).unwrap();
    let pose = &m["frames"][0]["pose"];
    let arg = format!("{},{},{}", pose["x"], pose["y"], pose["yaw"]);
    let out = ok(&[
        "localize",
        "--world",
        p(&world),
        "--map",
        p(&map),
        "--goal-instance",
        &goal,
        "--pose",
        &arg,
        "--pose",
        &arg,
        "--exec-height",
        "0.4",
    ]);
    let lines: Vec<Value> = out.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(lines.len(), 2);
    for (k, l) in lines.iter().enumerate() {
        assert_eq!(l["step"], k);
        assert_eq!(l["ref_frame"], 0);
        assert!(!l["entries"].as_array().unwrap().is_empty());
    }
}

#[test]
fn inspect_reproduces_the_costmap_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let (world, map, goal) = fixture(dir.path());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&map).unwrap()).unwrap();
    let pose = &m["frames"][0]["pose"];
    let arg = format!("{},{},{}", pose["x"], pose["y"], pose["yaw"]);
    let stem = dir.path().join("cm");
    ok(&[
        "costmap",
        "--world",
        p(&world),
        "--map",
        p(&map),
        "--goal-instance",
        &goal,
        "--pose",
        &arg,
        "--out",
        p(&stem),
    ]);
    assert_valid("costmap-ledger.schema.json", &stem.with_extension("json"));
    let ppm = std::fs::read(stem.with_extension("ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n85 64\n255\n"));
    assert_eq!(ppm.len(), "P6\n85 64\n255\n".len() + 85 * 64 * 3);
    let out = ok(&["inspect", p(&stem.with_extension("bin"))]);
    assert!(out.contains("ledger: reproduced"), "{out}");
}

#[test]
fn inspect_rejects_a_tampered_ledger() {
    let dir = tempfile::tempdir().unwrap();
    let (world, map, goal) = fixture(dir.path());
    let m: Value = serde_json::from_str(&std::fs::read_to_string(&map).unwrap()).unwrap();
    let pose = &m["frames"][0]["pose"];
    let arg = format!("{},{},{}", pose["x"], pose["y"], pose["yaw"]);
    let stem = dir.path().join("cm");
    ok(&[
        "costmap",
        "--world",
        p(&world),
        "--map",
        p(&map),
        "--goal-instance",
        &goal,
        "--pose",
        &arg,
        "--out",
        p(&stem),
    ]);
    let side = stem.with_extension("json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(&side).unwrap()).unwrap();
    let entry = v["ledger"]
        .as_array_mut()
        .unwrap()
        .iter_mut()
        .find(|e| e["level"].as_u64().unwrap() > 1)
        .unwrap();
    entry["level"] = Value::from(entry["level"].as_u64().unwrap() - 1);
    std::fs::write(&side, serde_json::to_string(&v).unwrap()).unwrap();
    assert_eq!(
        objnav(&["inspect", p(&stem.with_extension("bin"))]).status.code(),
        Some(1)
    );
}

#[test]
fn run_reports_spl_inputs_and_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let stdout = ok(&[
        "run",
        "--world-seed",
        "0",
        "--task",
        "imitate",
        "--seed",
        "0",
        "--out",
        p(&out),
    ]);
    for key in ["success", " p ", "l_geo", "d_init", "d_final", "spl"] {
        assert!(stdout.contains(key), "missing {key}: {stdout}");
    }
    let traj = std::fs::read_to_string(out.join("trajectory.csv")).unwrap();
    assert!(traj.starts_with("step,x,y,yaw,v,omega,d_goal\n"));
    let cmds = std::fs::read_to_string(out.join("commands.csv")).unwrap();
    assert!(cmds.starts_with("step,delta_phi,v_raw,omega_raw,v,omega\n"));
    assert_eq!(traj.lines().count(), cmds.lines().count() + 1);
    let result: Value = serde_json::from_str(&std::fs::read_to_string(out.join("result.json")).unwrap()).unwrap();
    for key in ["success", "path_length", "geodesic", "spl"] {
        assert!(result.get(key).is_some(), "result.json lacks {key}");
    }
    assert!(std::fs::read_to_string(out.join("trajectory.svg"))
        .unwrap()
        .starts_with("<svg"));
}

#[test]
fn infeasible_episode_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let world = dir.path().join("empty.json");
    ok(&[
        "gen-world",
        "--rooms",
        "1",
        "--objects-per-room",
        "0",
        "--out",
        p(&world),
    ]);
    let r = objnav(&["run", "--world", p(&world), "--task", "imitate"]);
    assert_eq!(r.status.code(), Some(2), "{}", String::from_utf8_lossy(&r.stderr));
}

#[test]
fn suite_emits_the_task_by_height_table() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("suite");
    ok(&[
        "run-suite",
        "--worlds",
        "1",
        "--tasks",
        "imitate,reverse",
        "--heights",
        "0.4,1.3",
        "--jobs",
        "2",
        "--out",
        p(&out),
    ]);
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    let keys: Vec<String> = summary
        .lines()
        .skip(1)
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(","))
        .collect();
    assert_eq!(keys, ["imitate,0.4", "imitate,1.3", "reverse,0.4", "reverse,1.3"]);
    let results = std::fs::read_to_string(out.join("results.csv")).unwrap();
    assert_eq!(results.lines().count(), 1 + 4);
    let manifest: Value = serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["version"], 1);
    assert_eq!(manifest["config"]["heights"], serde_json::json!([0.4, 1.3]));
}
