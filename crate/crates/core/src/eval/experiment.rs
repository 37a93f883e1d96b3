use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{median, run_method, Method, RunConfig, RunReport};
use crate::error::{Error, Result};
use crate::model::Checkpoint;
use crate::sim::{RandomWorldConfig, World};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorldEntry {
    File { id: String, path: PathBuf },
    Generated { id: String, config: RandomWorldConfig, seed: u64 },
}

impl WorldEntry {
    pub fn id(&self) -> &str {
        match self {
            WorldEntry::File { id, .. } | WorldEntry::Generated { id, .. } => id,
        }
    }

    pub fn build(&self, base: &Path) -> Result<World> {
        match self {
            WorldEntry::File { path, .. } => World::load(base.join(path)),
            WorldEntry::Generated { config, seed, .. } => config.generate(*seed),
        }
    }
}

/// Cross product of methods, worlds and seeds sharing one [`RunConfig`].
/// Relative paths are resolved against the directory holding the config file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub worlds: Vec<WorldEntry>,
    pub seeds: Vec<u64>,
    pub checkpoint: PathBuf,
    /// Model trained without the KL term, needed by `vanilla`.
    #[serde(default)]
    pub vanilla_checkpoint: Option<PathBuf>,
    #[serde(default)]
    pub run: RunConfig,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
    }
}

/// One row of the aggregate table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub method: Method,
    pub runs: usize,
    pub discovered: usize,
    pub navigated: usize,
    /// Over all runs; failed explorations count their whole budget.
    pub median_exploration_steps: f64,
    /// Over runs that navigated successfully.
    pub median_navigation_steps: Option<f64>,
    /// Over all runs, failures scoring zero.
    pub mean_sct: f64,
}

fn run_file_name(r: &RunReport) -> String {
    format!("{}__{}__{}.json", r.method, r.world, r.seed)
}

/// Runs every (method, world, seed) combination and writes per-run JSON plus
/// the aggregate tables under the configured output directory.
pub fn run_experiment(cfg: &ExperimentConfig, base: &Path) -> Result<Vec<RunReport>> {
    if cfg.methods.is_empty() || cfg.worlds.is_empty() || cfg.seeds.is_empty() {
        return Err(Error::Invalid("experiment needs at least one method, world and seed".into()));
    }
    let model = Checkpoint::load(base.join(&cfg.checkpoint))?.model()?;
    let vanilla = match (&cfg.vanilla_checkpoint, cfg.methods.contains(&Method::Vanilla)) {
        (Some(p), _) => Some(Checkpoint::load(base.join(p))?.model()?),
        (None, true) => return Err(Error::Invalid("vanilla runs need `vanilla_checkpoint`".into())),
        (None, false) => None,
    };
    let worlds = cfg
        .worlds
        .iter()
        .map(|w| Ok((w.id().to_string(), w.build(base)?)))
        .collect::<Result<Vec<_>>>()?;

    let out = base.join(&cfg.output_dir);
    let runs_dir = out.join("runs");
    std::fs::create_dir_all(&runs_dir).map_err(|e| Error::io(&runs_dir, e))?;
    let mut reports = Vec::new();
    for &method in &cfg.methods {
        let m = if method.needs_unregularized_model() {
            vanilla.as_ref().unwrap()
        } else {
            &model
        };
        for (id, world) in &worlds {
            for &seed in &cfg.seeds {
                let report = run_method(method, world, id, m, &cfg.run, seed)?;
                let path = runs_dir.join(run_file_name(&report));
                let text = serde_json::to_string_pretty(&report).map_err(|e| Error::json("run report", e))?;
                std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
                reports.push(report);
            }
        }
    }
    sort_runs(&mut reports);
    write_report(&out, &reports)?;
    Ok(reports)
}

fn sort_runs(runs: &mut [RunReport]) {
    runs.sort_by(|a, b| (a.method, &a.world, a.seed).cmp(&(b.method, &b.world, b.seed)));
}

pub fn load_runs(paths: &[PathBuf]) -> Result<Vec<RunReport>> {
    let mut runs = paths
        .iter()
        .map(|p| {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text).map_err(|e| Error::json(p.display().to_string(), e))
        })
        .collect::<Result<Vec<RunReport>>>()?;
    sort_runs(&mut runs);
    Ok(runs)
}

/// Loads every `*.json` run report in `dir` (or `dir/runs`).
pub fn read_runs_dir(dir: &Path) -> Result<Vec<RunReport>> {
    let dir = if dir.join("runs").is_dir() { dir.join("runs") } else { dir.to_path_buf() };
    let entries = std::fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))?;
    let mut paths = Vec::new();
    for entry in entries {
        let p = entry.map_err(|e| Error::io(&dir, e))?.path();
        if p.extension().is_some_and(|e| e == "json") {
            paths.push(p);
        }
    }
    if paths.is_empty() {
        return Err(Error::Invalid(format!("no run reports in {}", dir.display())));
    }
    load_runs(&paths)
}

pub fn aggregate(runs: &[RunReport]) -> Vec<AggregateRow> {
    let mut by_method: BTreeMap<Method, Vec<&RunReport>> = BTreeMap::new();
    for r in runs {
        by_method.entry(r.method).or_default().push(r);
    }
    by_method
        .into_iter()
        .map(|(method, rs)| {
            let expl: Vec<f64> = rs.iter().map(|r| r.exploration_steps as f64).collect();
            let nav: Vec<f64> = rs
                .iter()
                .filter(|r| r.navigated)
                .filter_map(|r| r.navigation_steps.map(|s| s as f64))
                .collect();
            AggregateRow {
                method,
                runs: rs.len(),
                discovered: rs.iter().filter(|r| r.discovered).count(),
                navigated: rs.iter().filter(|r| r.navigated).count(),
                median_exploration_steps: median(&expl).unwrap_or(f64::NAN),
                median_navigation_steps: median(&nav),
                mean_sct: rs.iter().map(|r| r.sct).sum::<f64>() / rs.len() as f64,
            }
        })
        .collect()
}

fn aggregate_csv(rows: &[AggregateRow]) -> String {
    let mut s = String::from(
        "method,runs,discovered,navigated,median_exploration_steps,median_navigation_steps,mean_sct\n",
    );
    for r in rows {
        let nav = r.median_navigation_steps.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{}",
            r.method, r.runs, r.discovered, r.navigated, r.median_exploration_steps, nav, r.mean_sct
        );
    }
    s
}

fn coverage_csv(runs: &[RunReport]) -> String {
    let mut s = String::from("method,world,seed,step,coverage\n");
    for r in runs {
        for (step, c) in &r.coverage {
            let _ = writeln!(s, "{},{},{},{},{}", r.method, r.world, r.seed, step, c);
        }
    }
    s
}

/// Median coverage per method at each sampled step; shorter runs hold their
/// last value.
fn coverage_by_method_csv(runs: &[RunReport]) -> String {
    let mut by_method: BTreeMap<Method, Vec<&RunReport>> = BTreeMap::new();
    for r in runs {
        by_method.entry(r.method).or_default().push(r);
    }
    let mut s = String::from("method,step,median_coverage\n");
    for (method, rs) in by_method {
        let mut steps: Vec<usize> = rs.iter().flat_map(|r| r.coverage.iter().map(|c| c.0)).collect();
        steps.sort_unstable();
        steps.dedup();
        for step in steps {
            let vals: Vec<f64> = rs
                .iter()
                .map(|r| {
                    r.coverage
                        .iter()
                        .take_while(|c| c.0 <= step)
                        .last()
                        .map_or(0.0, |c| c.1)
                })
                .collect();
            let _ = writeln!(s, "{},{},{}", method, step, median(&vals).unwrap());
        }
    }
    s
}

/// Writes `aggregate.csv`, `coverage.csv` and `coverage_by_method.csv` to `dir`.
/// A pure function of `runs`.
pub fn write_report(dir: &Path, runs: &[RunReport]) -> Result<Vec<AggregateRow>> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let rows = aggregate(runs);
    for (name, text) in [
        ("aggregate.csv", aggregate_csv(&rows)),
        ("coverage.csv", coverage_csv(runs)),
        ("coverage_by_method.csv", coverage_by_method_csv(runs)),
    ] {
        let p = dir.join(name);
        std::fs::write(&p, text).map_err(|e| Error::io(&p, e))?;
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(method: Method, seed: u64, expl: usize, nav: Option<usize>) -> RunReport {
        RunReport {
            method,
            seed,
            world: "w".into(),
            discovered: nav.is_some(),
            exploration_steps: expl,
            navigated: nav.is_some(),
            navigation_steps: nav,
            optimal_steps: 10,
            sct: super::super::sct(nav.is_some(), nav.unwrap_or(0), 10),
            coverage: vec![(0, 0.1), (10, 0.2 + seed as f64 * 0.1)],
            branches: BTreeMap::new(),
            graph_vertices: 3,
            replans: 0,
            config: RunConfig::default(),
        }
    }

    #[test]
    fn single_run_aggregate_equals_the_run() {
        let rows = aggregate(&[report(Method::Recon, 0, 120, Some(40))]);
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].median_exploration_steps, 120.0);
        assert_eq!(rows[0].median_navigation_steps, Some(40.0));
        assert_eq!(rows[0].mean_sct, 0.25);
    }

    #[test]
    fn rows_are_per_method_and_failures_are_excluded_from_navigation() {
        let runs = vec![
            report(Method::Recon, 0, 100, Some(30)),
            report(Method::Recon, 1, 300, None),
            report(Method::Recon, 2, 200, Some(50)),
            report(Method::RandomActions, 0, 500, None),
        ];
        let rows = aggregate(&runs);
        assert_eq!(rows.iter().map(|r| r.method).collect::<Vec<_>>(), vec![Method::Recon, Method::RandomActions]);
        assert_eq!(rows[0].median_exploration_steps, 200.0);
        assert_eq!(rows[0].median_navigation_steps, Some(40.0));
        assert_eq!(rows[1].median_navigation_steps, None);
        assert_eq!(rows[1].mean_sct, 0.0);
    }

    #[test]
    fn curves_hold_the_last_value() {
        let mut short = report(Method::Recon, 0, 10, None);
        short.coverage = vec![(0, 0.1)];
        let long = report(Method::Recon, 1, 10, None);
        let csv = coverage_by_method_csv(&[short, long]);
        assert_eq!(csv, "method,step,median_coverage\nrecon,0,0.1\nrecon,10,0.2\n");
    }
}
