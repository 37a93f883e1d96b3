//! Command-line front end. Each subcommand writes its artifacts plus a
//! manifest recording inputs, seeds and output hashes.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::agent::{explore, goal_navigate, ExploreConfig, NavigateConfig, Session};
use crate::data::{collect, CollectConfig, Dataset, Trajectory};
use crate::error::{Error, Result};
use crate::eval::{self, ExperimentConfig, Method};
use crate::model::{train, Checkpoint, ModelConfig, ModelParams, TrainConfig};
use crate::sim::{Point, Pose, RandomWorldConfig, World};
use crate::topo::TopoGraph;

#[derive(Debug, Parser, Serialize)]
#[command(name = "recon", version, about = "Latent goal model and topological memory for exploration")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
pub enum Command {
    /// Generate a seeded random world and save its spec.
    MakeWorld(MakeWorldArgs),
    /// Random-walk data collection and relabeling.
    Collect(CollectArgs),
    /// Train a model on a dataset.
    Train(TrainArgs),
    /// Explore a world looking for a goal.
    Explore(ExploreArgs),
    /// Reach a goal again using a graph built during exploration.
    Navigate(NavigateArgs),
    /// Run an ablation experiment from a JSON config.
    Experiment {
        #[arg(long)]
        config: PathBuf,
    },
    /// Inspect topological graph files.
    Graph {
        #[command(subcommand)]
        action: GraphCommand,
    },
    /// Rebuild aggregate tables from a directory of run files.
    Report {
        #[arg(long)]
        runs: PathBuf,
        /// Where to write the tables; defaults to the runs directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Subcommand, Serialize)]
pub enum GraphCommand {
    /// Print summary statistics.
    Inspect { path: PathBuf },
}

#[derive(Debug, Args, Serialize)]
pub struct MakeWorldArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Generator recipe as JSON; overrides the size flags.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value_t = 20.0)]
    pub width: f64,
    #[arg(long, default_value_t = 20.0)]
    pub height: f64,
    #[arg(long, default_value_t = 12)]
    pub obstacles: usize,
    #[arg(long, value_parser = parse_point)]
    pub start: Option<Point>,
    #[arg(long, value_parser = parse_point)]
    pub goal: Option<Point>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct CollectArgs {
    /// World spec file, or an integer seed for a standard 20 × 20 m world.
    #[arg(long)]
    pub world: String,
    #[arg(long)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 30)]
    pub t_max: usize,
    /// Keep a uniform subsample of this many quadruples.
    #[arg(long)]
    pub limit: Option<usize>,
    /// Also write the raw trajectories here.
    #[arg(long)]
    pub trajectories: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long, default_value_t = 20)]
    pub epochs: usize,
    #[arg(long, default_value_t = crate::model::DEFAULT_BETA)]
    pub beta: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 1e-3)]
    pub lr: f64,
    #[arg(long, default_value_t = 128)]
    pub batch_size: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ExploreArgs {
    #[arg(long)]
    pub world: String,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long, value_parser = parse_point)]
    pub goal_pose: Point,
    /// Defaults to the world's designated start.
    #[arg(long, value_parser = parse_pose)]
    pub start_pose: Option<Pose>,
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Ablation variant to run.
    #[arg(long, default_value = "recon")]
    pub method: String,
    /// Full exploration settings as JSON; flags above take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct NavigateArgs {
    #[arg(long)]
    pub world: String,
    #[arg(long)]
    pub ckpt: PathBuf,
    #[arg(long)]
    pub graph: PathBuf,
    #[arg(long, value_parser = parse_point)]
    pub goal_pose: Point,
    #[arg(long, value_parser = parse_pose)]
    pub start_pose: Option<Pose>,
    #[arg(long, default_value_t = 1000)]
    pub budget: usize,
    /// Extra obstacles dropped into the world before navigating.
    #[arg(long, default_value_t = 0)]
    pub perturb: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Directory for the result and manifest; nothing is written without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn parse_floats(s: &str, n: &[usize]) -> std::result::Result<Vec<f64>, String> {
    let v: Vec<f64> = s
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<std::result::Result<_, _>>()?;
    if !n.contains(&v.len()) || v.iter().any(|x| !x.is_finite()) {
        return Err(format!("expected {} finite comma-separated numbers", n[0]));
    }
    Ok(v)
}

fn parse_point(s: &str) -> std::result::Result<Point, String> {
    let v = parse_floats(s, &[2])?;
    Ok(Point { x: v[0], y: v[1] })
}

/// `x,y` or `x,y,theta`.
fn parse_pose(s: &str) -> std::result::Result<Pose, String> {
    let v = parse_floats(s, &[2, 3])?;
    Ok(Pose::new(v[0], v[1], v.get(2).copied().unwrap_or(0.0)))
}

/// Run record written next to every artifact.
#[derive(Debug, Serialize)]
struct Manifest<'a> {
    command: &'a str,
    version: &'static str,
    seed: Option<u64>,
    config_hash: String,
    args: &'a Command,
    inputs: Vec<FileHash>,
    outputs: Vec<FileHash>,
}

#[derive(Debug, Serialize)]
struct FileHash {
    path: PathBuf,
    sha256: String,
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(bytes)))
}

fn hashes(paths: &[PathBuf]) -> Result<Vec<FileHash>> {
    paths
        .iter()
        .filter(|p| p.is_file())
        .map(|p| {
            Ok(FileHash {
                path: p.clone(),
                sha256: sha256_file(p)?,
            })
        })
        .collect()
}

/// Manifest path for a file output (`x.json` → `x.json.manifest.json`) or a
/// directory output (`dir/manifest.json`).
pub fn manifest_path(out: &Path) -> PathBuf {
    if out.is_dir() {
        out.join("manifest.json")
    } else {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}

fn write_manifest(
    cmd: &Command,
    seed: Option<u64>,
    inputs: &[PathBuf],
    outputs: &[PathBuf],
    at: &Path,
) -> Result<()> {
    let args = serde_json::to_vec(cmd).map_err(|e| Error::json("arguments", e))?;
    let m = Manifest {
        command: cmd.name(),
        version: env!("CARGO_PKG_VERSION"),
        seed,
        config_hash: hex::encode(Sha256::digest(args)),
        args: cmd,
        inputs: hashes(inputs)?,
        outputs: hashes(outputs)?,
    };
    let path = manifest_path(at);
    let text = serde_json::to_string_pretty(&m).map_err(|e| Error::json("manifest", e))?;
    std::fs::write(&path, text).map_err(|e| Error::io(&path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

/// A spec file path, or an integer seed for the standard 20 × 20 m world.
fn load_world(arg: &str) -> Result<(World, Option<PathBuf>)> {
    match arg.parse::<u64>() {
        Ok(seed) if !Path::new(arg).exists() => Ok((RandomWorldConfig::square(20.0, 12).generate(seed)?, None)),
        _ => Ok((World::load(arg)?, Some(PathBuf::from(arg)))),
    }
}

fn start_pose(world: &World, flag: Option<Pose>) -> Result<Pose> {
    flag.or_else(|| world.start().map(|p| Pose::new(p.x, p.y, 0.0)))
        .ok_or_else(|| Error::Invalid("world has no start; pass --start-pose".into()))
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::MakeWorld(_) => "make-world",
            Command::Collect(_) => "collect",
            Command::Train(_) => "train",
            Command::Explore(_) => "explore",
            Command::Navigate(_) => "navigate",
            Command::Experiment { .. } => "experiment",
            Command::Graph { .. } => "graph inspect",
            Command::Report { .. } => "report",
        }
    }
}

/// Executes one parsed command, printing a short summary on stdout.
pub fn execute(cmd: &Command) -> Result<()> {
    match cmd {
        Command::MakeWorld(a) => {
            let mut cfg = match &a.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    serde_json::from_str(&text).map_err(|e| Error::json(p.display().to_string(), e))?
                }
                None => RandomWorldConfig::rect(a.width, a.height, a.obstacles),
            };
            cfg.start = a.start.or(cfg.start);
            cfg.goal = a.goal.or(cfg.goal);
            let world = cfg.generate(a.seed)?;
            world.save(&a.out)?;
            println!("world {} x {} m, {} obstacles -> {}", cfg.width, cfg.height, world.obstacles().len(), a.out.display());
            let inputs: Vec<PathBuf> = a.config.iter().cloned().collect();
            write_manifest(cmd, Some(a.seed), &inputs, &[a.out.clone()], &a.out)
        }
        Command::Collect(a) => {
            let (world, world_path) = load_world(&a.world)?;
            let trajs = collect(&world, None, a.steps, a.seed, &CollectConfig::default())?;
            let mut data = Dataset::from_trajectories(&trajs, a.t_max, a.limit, a.seed);
            data.provenance.collection_seeds = vec![a.seed];
            data.provenance.steps_per_world = a.steps;
            data.save(&a.out)?;
            let mut outputs = vec![a.out.clone()];
            if let Some(p) = &a.trajectories {
                Trajectory::save_all(p, &trajs)?;
                outputs.push(p.clone());
            }
            println!("{} trajectories, {} quadruples -> {}", trajs.len(), data.len(), a.out.display());
            write_manifest(cmd, Some(a.seed), &world_path.into_iter().collect::<Vec<_>>(), &outputs, &a.out)
        }
        Command::Train(a) => {
            let data = Dataset::load(&a.data)?;
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mc = ModelConfig::new(data.rays()?).with_beta(a.beta);
            let mut model = ModelParams::new(&mc, &mut rng);
            let tc = TrainConfig {
                epochs: a.epochs,
                batch_size: a.batch_size,
                learning_rate: a.lr,
                seed: a.seed,
                kl_warmup_epochs: 0,
            };
            let report = train(&mut model, &data, &tc)?;
            Checkpoint::new(&model, a.seed, report.steps)
                .with_loss_trace(report.epoch_losses.clone())
                .save(&a.out)?;
            println!(
                "{} epochs, final loss {:.4} -> {}",
                a.epochs,
                report.epoch_losses.last().copied().unwrap_or(f64::NAN),
                a.out.display()
            );
            write_manifest(cmd, Some(a.seed), &[a.data.clone()], &[a.out.clone()], &a.out)
        }
        Command::Explore(a) => {
            let (world, world_path) = load_world(&a.world)?;
            let model = Checkpoint::load(&a.ckpt)?.model()?;
            let method: Method = a.method.parse()?;
            let base = match &a.config {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
                    serde_json::from_str(&text).map_err(|e| Error::json(p.display().to_string(), e))?
                }
                None => ExploreConfig::default(),
            };
            let mut cfg = method.explore_config(&base);
            cfg.budget = a.budget;
            cfg.seed = a.seed;
            let goal_obs = world.observe(Pose::new(a.goal_pose.x, a.goal_pose.y, 0.0));
            let mut session = Session::new(&world, start_pose(&world, a.start_pose)?, a.budget)?;
            let result = explore(&mut session, &model, &goal_obs, a.goal_pose, &cfg)?;

            create_dir(&a.out)?;
            let files = [
                a.out.join("result.json"),
                a.out.join("graph.json"),
                a.out.join("model.json"),
                a.out.join("trace.log"),
            ];
            write_json(&files[0], &result.summary())?;
            result.graph.save(&files[1])?;
            Checkpoint::new(&result.model, a.seed, 0).save(&files[2])?;
            let log: String = result.decisions.iter().map(|d| format!("{d}\n")).collect();
            std::fs::write(&files[3], log).map_err(|e| Error::io(&files[3], e))?;
            println!(
                "discovered={} steps={} vertices={} -> {}",
                result.discovered,
                result.steps,
                result.graph.len(),
                a.out.display()
            );
            let mut inputs = vec![a.ckpt.clone()];
            inputs.extend(world_path);
            inputs.extend(a.config.clone());
            write_manifest(cmd, Some(a.seed), &inputs, &files, &a.out)
        }
        Command::Navigate(a) => {
            let (world, world_path) = load_world(&a.world)?;
            let model = Checkpoint::load(&a.ckpt)?.model()?;
            let graph = TopoGraph::load(&a.graph)?;
            let start = start_pose(&world, a.start_pose)?;
            let world = eval::perturb_world(&world, a.perturb, a.seed, start.position(), a.goal_pose, 1.0)?;
            let goal_obs = world.observe(Pose::new(a.goal_pose.x, a.goal_pose.y, 0.0));
            let cfg = NavigateConfig {
                budget: a.budget,
                seed: a.seed,
                ..NavigateConfig::default()
            };
            let mut session = Session::new(&world, start, a.budget)?;
            let r = goal_navigate(&mut session, &model, &graph, &goal_obs, a.goal_pose, &cfg)?;
            println!("success={} steps={} legs={} replans={}", r.success, r.steps, r.legs, r.replans);
            if let Some(dir) = &a.out {
                create_dir(dir)?;
                let file = dir.join("navigate.json");
                write_json(&file, &r)?;
                let mut inputs = vec![a.ckpt.clone(), a.graph.clone()];
                inputs.extend(world_path);
                write_manifest(cmd, Some(a.seed), &inputs, &[file], dir)?;
            }
            Ok(())
        }
        Command::Experiment { config } => {
            let cfg = ExperimentConfig::load(config)?;
            let base = config.parent().unwrap_or(Path::new("."));
            let runs = eval::run_experiment(&cfg, base)?;
            for row in eval::aggregate(&runs) {
                println!(
                    "{:<15} runs={} discovered={} navigated={} median_explore={} mean_sct={:.3}",
                    row.method.as_str(),
                    row.runs,
                    row.discovered,
                    row.navigated,
                    row.median_exploration_steps,
                    row.mean_sct
                );
            }
            let out = base.join(&cfg.output_dir);
            let outputs: Vec<PathBuf> = ["aggregate.csv", "coverage.csv", "coverage_by_method.csv"]
                .iter()
                .map(|f| out.join(f))
                .collect();
            write_manifest(cmd, None, &[config.clone()], &outputs, &out)
        }
        Command::Graph {
            action: GraphCommand::Inspect { path },
        } => {
            let g = TopoGraph::load(path)?;
            let text = serde_json::to_string_pretty(&g.summary()).map_err(|e| Error::json("summary", e))?;
            println!("{text}");
            Ok(())
        }
        Command::Report { runs, out } => {
            let reports = eval::read_runs_dir(runs)?;
            let out = out.clone().unwrap_or_else(|| runs.clone());
            create_dir(&out)?;
            eval::write_report(&out, &reports)?;
            println!("{} runs -> {}", reports.len(), out.join("aggregate.csv").display());
            Ok(())
        }
    }
}

/// Parses `argv` and runs it. Returns the process exit status: 0 on
/// success, 1 for runtime or data errors, 2 for usage errors.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    match execute(&cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}
