use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::Args;
use serde::{Deserialize, Serialize};
use splatsched::partition::PartitionConfig;
use splatsched::placement::{CostCoefficients, SearchBudget};
use splatsched::simulator::{ClusterTopology, CoefficientMode, LocalityConfig, SimConfig, Staleness, Strategy};
use splatsched::visibility::Granularity;
use splatsched::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum StrategyName {
    Random,
    #[value(alias = "locality_aware")]
    LocalityAware,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", untagged)]
pub enum CoefficientSetting {
    Named(AutoTag),
    Fixed(CostCoefficients),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AutoTag {
    Auto,
}

/// Everything a partition, simulate or compare run depends on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub dataset: Option<PathBuf>,
    pub machines: usize,
    pub gpus_per_machine: usize,
    pub inter_bandwidth: f64,
    pub intra_bandwidth: f64,
    pub compute_cost: f64,
    pub strategy: StrategyName,
    pub coefficients: CoefficientSetting,
    pub intra_coefficients: CostCoefficients,
    pub p: f64,
    pub patch_factor: u32,
    pub group_size: usize,
    pub epsilon: f64,
    pub partition_runs: usize,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub stale_from_epoch: Option<usize>,
    pub max_sweeps: usize,
    pub granularity: Granularity,
    pub point_radius: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        let topo = ClusterTopology::new(4, 4);
        RunConfig {
            dataset: None,
            machines: topo.machines,
            gpus_per_machine: topo.gpus_per_machine,
            inter_bandwidth: topo.inter_bandwidth,
            intra_bandwidth: topo.intra_bandwidth,
            compute_cost: topo.compute_cost,
            strategy: StrategyName::LocalityAware,
            coefficients: CoefficientSetting::Named(AutoTag::Auto),
            intra_coefficients: CostCoefficients::intra_default(),
            p: 2.0,
            patch_factor: 2,
            group_size: 2048,
            epsilon: 0.05,
            partition_runs: 4,
            epochs: 1,
            batch_size: 16,
            seed: 0,
            stale_from_epoch: None,
            max_sweeps: SearchBudget::default().max_sweeps,
            granularity: Granularity::Exact,
            point_radius: 0.0,
        }
    }
}

/// Flags shared by the commands that take a run configuration; each overrides the file value.
#[derive(Debug, Clone, Args)]
pub struct RunFlags {
    /// JSON run configuration; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Dataset header written by gen-scene.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    #[arg(long)]
    pub machines: Option<usize>,
    #[arg(long)]
    pub gpus_per_machine: Option<usize>,
    /// Bytes per second between machines.
    #[arg(long)]
    pub inter_bandwidth: Option<f64>,
    /// Bytes per second within a machine.
    #[arg(long)]
    pub intra_bandwidth: Option<f64>,
    /// Seconds per rendered point.
    #[arg(long)]
    pub compute_cost: Option<f64>,
    #[arg(long, value_enum)]
    pub strategy: Option<StrategyName>,
    /// Norm order of the relaxed objective (`inf` for max).
    #[arg(long)]
    pub p: Option<f64>,
    #[arg(long)]
    pub patch_factor: Option<u32>,
    #[arg(long)]
    pub group_size: Option<usize>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Place with access data recorded in this epoch.
    #[arg(long)]
    pub stale_from_epoch: Option<usize>,
    #[arg(long)]
    pub max_sweeps: Option<usize>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

macro_rules! override_fields {
    ($cfg:ident, $flags:ident, $($field:ident),*) => {
        $(if let Some(v) = $flags.$field.clone() { $cfg.$field = v; })*
    };
}

impl RunConfig {
    pub fn load(flags: &RunFlags) -> anyhow::Result<Self> {
        let mut cfg = match &flags.config {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
                    path: path.clone(),
                    source: e,
                })?;
                let mut cfg: RunConfig = serde_json::from_str(&text).map_err(|source| Error::Json {
                    path: path.clone(),
                    source,
                })?;
                // a relative dataset path is relative to the config file
                if let (Some(ds), Some(dir)) = (&cfg.dataset, path.parent()) {
                    if ds.is_relative() {
                        cfg.dataset = Some(dir.join(ds));
                    }
                }
                cfg
            }
            None => RunConfig::default(),
        };
        if flags.dataset.is_some() {
            cfg.dataset = flags.dataset.clone();
        }
        override_fields!(
            cfg, flags, machines, gpus_per_machine, inter_bandwidth, intra_bandwidth, compute_cost, strategy, p,
            patch_factor, group_size, epsilon, epochs, batch_size, seed, max_sweeps
        );
        if flags.stale_from_epoch.is_some() {
            cfg.stale_from_epoch = flags.stale_from_epoch;
        }
        Ok(cfg)
    }

    pub fn dataset_path(&self) -> anyhow::Result<&Path> {
        self.dataset.as_deref().ok_or_else(|| {
            Error::Parameter {
                field: "dataset",
                reason: "give --dataset or set it in the config file".into(),
            }
            .into()
        })
    }

    pub fn topology(&self) -> ClusterTopology {
        ClusterTopology {
            machines: self.machines,
            gpus_per_machine: self.gpus_per_machine,
            inter_bandwidth: self.inter_bandwidth,
            intra_bandwidth: self.intra_bandwidth,
            compute_cost: self.compute_cost,
        }
    }

    pub fn partition_config(&self) -> PartitionConfig {
        PartitionConfig {
            epsilon: self.epsilon,
            seed: self.seed,
            runs: self.partition_runs,
            ..PartitionConfig::default()
        }
    }

    pub fn sim_config(&self) -> SimConfig {
        SimConfig {
            topology: self.topology(),
            epochs: self.epochs,
            batch_size: self.batch_size,
            patch_factor: self.patch_factor,
            group_size: self.group_size,
            seed: self.seed,
            staleness: self.stale_from_epoch.map_or(Staleness::Fresh, Staleness::StaleFromEpoch),
            granularity: self.granularity,
            point_radius: self.point_radius,
        }
    }

    pub fn locality(&self) -> LocalityConfig {
        LocalityConfig {
            coefficients: match self.coefficients {
                CoefficientSetting::Named(AutoTag::Auto) => CoefficientMode::Auto,
                CoefficientSetting::Fixed(c) => CoefficientMode::Fixed(c),
            },
            p: self.p,
            intra: self.intra_coefficients,
            budget: SearchBudget {
                max_sweeps: self.max_sweeps,
                wall_time: None,
            },
            partition: self.partition_config(),
        }
    }

    pub fn strategy_of(&self, name: StrategyName) -> Strategy {
        match name {
            StrategyName::Random => Strategy::Random,
            StrategyName::LocalityAware => Strategy::LocalityAware(self.locality()),
        }
    }

    /// Writes the effective configuration next to the outputs.
    pub fn echo(&self, out: &Path) -> anyhow::Result<()> {
        let path = out.join("config.json");
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(&path, text + "\n").with_context(|| format!("writing {}", path.display()))
    }
}
