//! Batch evaluation over worlds, tasks, seeds and execution heights.

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    build_episode_map, command_csv, make_episode, run_episode_on, spl, sspl, success_rate, trajectory_csv,
    trajectory_svg, Episode, EpisodeConfig, EpisodeResult, EpisodeRun, Task, TaskParams, EXEC_HEIGHTS,
};
use crate::error::{Error, Result};
use crate::world::{NavGrid, World};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SuiteConfig {
    pub tasks: Vec<Task>,
    pub heights: Vec<f64>,
    pub seeds: Vec<u64>,
    pub task_params: TaskParams,
    pub episode: EpisodeConfig,
    /// Worker threads; 0 lets the pool decide.
    pub jobs: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            tasks: Task::ALL.to_vec(),
            heights: EXEC_HEIGHTS.to_vec(),
            seeds: vec![0],
            task_params: TaskParams::default(),
            episode: EpisodeConfig::default(),
            jobs: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunRecord {
    pub world: String,
    pub task: Task,
    pub seed: u64,
    pub height: f64,
    pub episode: Episode,
    pub run: EpisodeRun,
}

impl RunRecord {
    pub fn result(&self) -> &EpisodeResult {
        &self.run.result
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub world: String,
    pub task: Task,
    pub seed: u64,
    pub reason: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub task: Task,
    pub height: f64,
    pub runs: usize,
    pub success_rate: f64,
    pub spl: f64,
    pub sspl: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct Report {
    pub records: Vec<RunRecord>,
    pub exclusions: Vec<Exclusion>,
    pub summary: Vec<SummaryRow>,
}

impl Report {
    pub fn results(&self, task: Task, height: f64) -> Vec<EpisodeResult> {
        self.records
            .iter()
            .filter(|r| r.task == task && r.height == height)
            .map(|r| r.run.result)
            .collect()
    }
}

type Unit = (usize, Task, u64);

enum Outcome {
    Ran(Vec<RunRecord>),
    Excluded(Exclusion),
}

/// Every (world, task, seed) episode runs once per height over one shared
/// map. An infeasible episode is excluded for all heights and recorded.
pub fn run_suite(worlds: &[(String, World)], cfg: &SuiteConfig) -> Result<Report> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.jobs)
        .build()
        .map_err(|e| Error::InvalidInput(e.to_string()))?;
    let units: Vec<Unit> = (0..worlds.len())
        .flat_map(|w| {
            cfg.tasks
                .iter()
                .flat_map(move |&t| cfg.seeds.iter().map(move |&s| (w, t, s)))
        })
        .collect();
    let outcomes: Vec<Result<Outcome>> = pool.install(|| {
        let grids: Vec<NavGrid> = worlds
            .par_iter()
            .map(|(_, w)| NavGrid::new(w, cfg.episode.agent_radius))
            .collect();
        units
            .par_iter()
            .map(|&(wi, task, seed)| run_unit(&worlds[wi], &grids[wi], task, seed, cfg))
            .collect()
    });

    let mut report = Report::default();
    for o in outcomes {
        match o? {
            Outcome::Ran(recs) => report.records.extend(recs),
            Outcome::Excluded(x) => report.exclusions.push(x),
        }
    }
    for &task in &cfg.tasks {
        for &height in &cfg.heights {
            let rs = report.results(task, height);
            report.summary.push(SummaryRow {
                task,
                height,
                runs: rs.len(),
                success_rate: success_rate(&rs),
                spl: spl(&rs)?,
                sspl: sspl(&rs)?,
            });
        }
    }
    Ok(report)
}

fn run_unit(world: &(String, World), grid: &NavGrid, task: Task, seed: u64, cfg: &SuiteConfig) -> Result<Outcome> {
    let (name, w) = world;
    let ep = match make_episode(w, task, seed, &cfg.task_params) {
        Ok(ep) => ep,
        Err(Error::TaskInfeasible(reason)) => {
            return Ok(Outcome::Excluded(Exclusion {
                world: name.clone(),
                task,
                seed,
                reason,
            }))
        }
        Err(e) => return Err(e),
    };
    let graph = build_episode_map(w, &ep, &cfg.episode)?;
    let mut out = Vec::new();
    for &height in &cfg.heights {
        let e = ep.with_exec_height(height);
        let run = run_episode_on(&e, w, grid, &graph, &cfg.episode)?;
        out.push(RunRecord {
            world: name.clone(),
            task,
            seed,
            height,
            episode: e,
            run,
        });
    }
    Ok(Outcome::Ran(out))
}

pub fn results_csv(report: &Report) -> String {
    let mut s = String::from(
        "world,task,seed,height,success,steps,path_length,geodesic,d_init,d_final,collisions,goal_missing\n",
    );
    for r in &report.records {
        let x = &r.run.result;
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{},{},{}",
            r.world,
            r.task,
            r.seed,
            r.height,
            x.success as u8,
            x.steps,
            x.path_length,
            x.geodesic,
            x.d_init,
            x.d_final,
            x.collisions,
            x.goal_missing as u8
        );
    }
    s
}

pub fn summary_csv(report: &Report) -> String {
    let mut s = String::from("task,height,runs,success_rate,spl,sspl\n");
    for r in &report.summary {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.task, r.height, r.runs, r.success_rate, r.spl, r.sspl
        );
    }
    s
}

#[derive(Serialize)]
struct Manifest<'a> {
    version: u32,
    generator: String,
    worlds: Vec<&'a str>,
    config: &'a SuiteConfig,
    episodes: usize,
    runs: usize,
    excluded: usize,
    exclusions: &'a [Exclusion],
    summary: &'a [SummaryRow],
}

/// Writes `results.csv`, `summary.csv`, `manifest.json` and, when `traces`
/// is set, per-run trajectory CSV, command CSV and SVG files under
/// `trajectories/`.
pub fn write_report(
    report: &Report,
    worlds: &[(String, World)],
    cfg: &SuiteConfig,
    out: &Path,
    traces: bool,
) -> Result<()> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("results.csv"), results_csv(report))?;
    std::fs::write(out.join("summary.csv"), summary_csv(report))?;
    let heights = cfg.heights.len().max(1);
    let manifest = Manifest {
        version: 1,
        generator: format!("objnav {}", env!("CARGO_PKG_VERSION")),
        worlds: worlds.iter().map(|w| w.0.as_str()).collect(),
        config: cfg,
        episodes: report.records.len() / heights,
        runs: report.records.len(),
        excluded: report.exclusions.len(),
        exclusions: &report.exclusions,
        summary: &report.summary,
    };
    std::fs::write(out.join("manifest.json"), serde_json::to_string_pretty(&manifest)?)?;
    if traces {
        let dir = out.join("trajectories");
        std::fs::create_dir_all(&dir)?;
        for r in &report.records {
            let stem = format!("{}_{}_s{}_h{}", r.world, r.task, r.seed, r.height);
            std::fs::write(dir.join(format!("{stem}.csv")), trajectory_csv(&r.run))?;
            std::fs::write(dir.join(format!("{stem}_commands.csv")), command_csv(&r.run))?;
            if let Some((_, w)) = worlds.iter().find(|(n, _)| *n == r.world) {
                std::fs::write(dir.join(format!("{stem}.svg")), trajectory_svg(w, &r.episode, &r.run))?;
            }
        }
    }
    Ok(())
}
