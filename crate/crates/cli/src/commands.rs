use std::fs;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Args, ValueEnum};
use serde::Serialize;
use splatsched::partition::{build_bipartite_graph, hierarchical_partition, QualityReport};
use splatsched::placement::{hierarchical_place, objective, CostCoefficients, HierarchicalConfig, SearchBudget};
use splatsched::scene::{
    generate_aerial_scene, generate_street_scene, generate_temporal_scene, load_dataset, save_dataset, AerialParams,
    StreetParams, TemporalParams, WorkloadProfile,
};
use splatsched::simulator::{comm_reduction, run_training_sim, EpochReport, Simulation};
use splatsched::visibility::{zorder_group, AccessMatrix};
use splatsched::{Error, PlacementSolution};

use crate::config::{CoefficientSetting, RunConfig, RunFlags, StrategyName};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum SceneKind {
    Aerial,
    Street,
    Temporal,
}

#[derive(Debug, Clone, Serialize, Args)]
pub struct GenSceneArgs {
    /// Scene family (also accepted as --kind).
    #[arg(value_enum, required_unless_present = "kind_flag", conflicts_with = "kind_flag")]
    kind: Option<SceneKind>,
    #[arg(long = "kind", value_enum, id = "kind_flag")]
    #[serde(skip)]
    kind_flag: Option<SceneKind>,
    #[arg(long)]
    points: usize,
    #[arg(long)]
    views: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Camera height above the ground plane (aerial and temporal).
    #[arg(long, default_value_t = 100.0)]
    altitude: f64,
    /// Scene duration in seconds (temporal).
    #[arg(long, default_value_t = 10.0)]
    duration: f64,
    /// Workload profile: 3dgs, 2dgs or 3dcx.
    #[arg(long, default_value = "3dgs")]
    profile: String,
    #[arg(long)]
    #[serde(skip)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct PlaceArgs {
    #[command(flatten)]
    run: RunFlags,
    /// Replay a saved access matrix instead of building one from the dataset.
    #[arg(long)]
    matrix: Option<PathBuf>,
    /// Epoch of the scheduled batch to place.
    #[arg(long, default_value_t = 0)]
    epoch: usize,
    /// Iteration within the epoch.
    #[arg(long, default_value_t = 0)]
    iteration: usize,
}

fn prepare_out(out: &Path) -> anyhow::Result<()> {
    fs::create_dir_all(out).map_err(|e| Error::Io {
        path: out.to_owned(),
        source: e,
    })?;
    Ok(())
}

fn out_dir(flags: &RunFlags) -> anyhow::Result<&Path> {
    flags.out.as_deref().ok_or_else(|| {
        Error::Parameter {
            field: "out",
            reason: "give --out".into(),
        }
        .into()
    })
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> anyhow::Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").with_context(|| format!("writing {}", path.display()))
}

pub fn gen_scene(args: &GenSceneArgs) -> anyhow::Result<()> {
    let kind = args.kind.or(args.kind_flag).expect("clap requires one of the two");
    let profile = WorkloadProfile::by_name(&args.profile).ok_or_else(|| Error::Parameter {
        field: "profile",
        reason: format!("unknown profile `{}` (expected 3dgs, 2dgs or 3dcx)", args.profile),
    })?;
    let mut aerial = AerialParams::new(
        args.seed,
        args.points,
        AerialParams::default_grid(args.views),
        args.views,
        args.altitude,
    );
    aerial.profile = profile.clone();
    let dataset = match kind {
        SceneKind::Aerial => generate_aerial_scene(&aerial)?,
        SceneKind::Temporal => generate_temporal_scene(&TemporalParams {
            aerial,
            duration: args.duration,
        })?,
        SceneKind::Street => {
            let mut p = StreetParams::new(args.seed, args.points, StreetParams::default_waypoints(), args.views);
            p.profile = profile;
            generate_street_scene(&p)?
        }
    };
    prepare_out(&args.out)?;
    save_dataset(&dataset, &args.out.join("dataset.json"))?;
    let mut echo = serde_json::to_value(args)?;
    echo["kind"] = serde_json::to_value(kind)?;
    write_json(&args.out.join("config.json"), &echo)
}

pub fn partition(flags: &RunFlags) -> anyhow::Result<()> {
    let cfg = RunConfig::load(flags)?;
    let out = out_dir(flags)?;
    let dataset = load_dataset(cfg.dataset_path()?)?;
    let grouped = zorder_group(&dataset.cloud, cfg.group_size)?;
    let graph = build_bipartite_graph(&grouped, &dataset)?;
    let assignment = hierarchical_partition(&graph, cfg.machines, cfg.gpus_per_machine, &cfg.partition_config())?;
    prepare_out(out)?;
    assignment.save_csv(&out.join("partition.csv"))?;
    write_json(&out.join("quality.json"), &QualityReport::new(&assignment, &graph, cfg.epsilon))?;
    cfg.echo(out)
}

/// Coefficients for a one-off placement: fixed ones as given, otherwise the balanced default.
fn replay_coefficients(cfg: &RunConfig) -> anyhow::Result<CostCoefficients> {
    let c = match cfg.coefficients {
        CoefficientSetting::Fixed(c) => c,
        CoefficientSetting::Named(_) => CostCoefficients::balanced().with_p(cfg.p),
    };
    c.validate()?;
    Ok(c)
}

pub fn place(args: &PlaceArgs) -> anyhow::Result<()> {
    let cfg = RunConfig::load(&args.run)?;
    let out = out_dir(&args.run)?;
    let inter = replay_coefficients(&cfg)?;
    let (matrix, solution) = match &args.matrix {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| Error::Io {
                path: path.clone(),
                source: e,
            })?;
            let matrix: AccessMatrix = serde_json::from_str(&text).map_err(|source| Error::Json {
                path: path.clone(),
                source,
            })?;
            let solution = hierarchical_place(
                &matrix,
                &HierarchicalConfig {
                    machines: cfg.machines,
                    gpus_per_machine: cfg.gpus_per_machine,
                    inter,
                    intra: cfg.intra_coefficients,
                    budget: SearchBudget {
                        max_sweeps: cfg.max_sweeps,
                        wall_time: None,
                    },
                },
            )?;
            (matrix, solution)
        }
        None => {
            let dataset = load_dataset(cfg.dataset_path()?)?;
            let mut sim_cfg = cfg.sim_config();
            sim_cfg.epochs = sim_cfg.epochs.max(args.epoch + 1);
            let sim = Simulation::new(&dataset, sim_cfg, cfg.strategy_of(cfg.strategy))?;
            let schedule = sim.schedule();
            let batch = schedule
                .get(args.epoch)
                .and_then(|e| e.get(args.iteration))
                .ok_or_else(|| Error::Parameter {
                    field: "iteration",
                    reason: format!(
                        "epoch {} has only {} batches",
                        args.epoch,
                        schedule.first().map_or(0, Vec::len)
                    ),
                })?;
            let trace = sim.run_iteration(args.epoch, args.iteration, batch, None, &inter)?;
            let n_gpus = cfg.machines * cfg.gpus_per_machine;
            (sim.access_matrix(batch)?, PlacementSolution::new(trace.assignment, n_gpus)?)
        }
    };
    prepare_out(out)?;
    solution.save_csv(&out.join("placement.csv"))?;
    objective(&matrix, &solution, &inter)?.save_json(&out.join("objective.json"))?;
    write_json(&out.join("access.json"), &matrix)?;
    cfg.echo(out)
}

fn save_report(report: &EpochReport, dir: &Path) -> anyhow::Result<()> {
    prepare_out(dir)?;
    report.save_json(&dir.join("report.json"))?;
    report.save_iterations_csv(&dir.join("iterations.csv"))?;
    Ok(())
}

pub fn simulate(flags: &RunFlags) -> anyhow::Result<()> {
    let cfg = RunConfig::load(flags)?;
    let out = out_dir(flags)?;
    let dataset = load_dataset(cfg.dataset_path()?)?;
    let report = run_training_sim(&dataset, cfg.sim_config(), cfg.strategy_of(cfg.strategy))?;
    save_report(&report, out)?;
    cfg.echo(out)
}

#[derive(Debug, Serialize)]
struct Reduction {
    /// Percent fewer forward inter-machine points than the random baseline.
    reduction_percent: f64,
    random_inter_points_forward: u64,
    locality_aware_inter_points_forward: u64,
    random_inter_points: u64,
    locality_aware_inter_points: u64,
    random_est_time: f64,
    locality_aware_est_time: f64,
}

pub fn compare(flags: &RunFlags) -> anyhow::Result<()> {
    let cfg = RunConfig::load(flags)?;
    let out = out_dir(flags)?;
    let dataset = load_dataset(cfg.dataset_path()?)?;
    let random = run_training_sim(&dataset, cfg.sim_config(), cfg.strategy_of(StrategyName::Random))?;
    let ours = run_training_sim(&dataset, cfg.sim_config(), cfg.strategy_of(StrategyName::LocalityAware))?;
    let reduction = Reduction {
        reduction_percent: comm_reduction(&random, &ours)?,
        random_inter_points_forward: random.summary.total_inter_points_forward,
        locality_aware_inter_points_forward: ours.summary.total_inter_points_forward,
        random_inter_points: random.summary.total_inter_points,
        locality_aware_inter_points: ours.summary.total_inter_points,
        random_est_time: random.summary.total_est_time,
        locality_aware_est_time: ours.summary.total_est_time,
    };
    save_report(&random, &out.join("random"))?;
    save_report(&ours, &out.join("locality_aware"))?;
    write_json(&out.join("reduction.json"), &reduction)?;
    cfg.echo(out)
}
