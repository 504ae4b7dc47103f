//! Per-iteration communication and compute accounting over whole training epochs.

mod report;
mod run;
mod trace;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::partition::PartitionConfig;
use crate::placement::{CostCoefficients, SearchBudget};
use crate::visibility::{Granularity, DEFAULT_GROUP_SIZE};

pub use report::{comm_reduction, EpochReport, ReportSummary, ITERATIONS_CSV_HEADER};
pub use run::{run_training_sim, Simulation};
pub use trace::{account, estimate_step_time, IterationTrace, LegTrace};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClusterTopology {
    pub machines: usize,
    pub gpus_per_machine: usize,
    /// Bytes per second between machines.
    pub inter_bandwidth: f64,
    /// Bytes per second between GPUs of one machine.
    pub intra_bandwidth: f64,
    /// Seconds of rendering work per processed point.
    pub compute_cost: f64,
}

impl ClusterTopology {
    /// 100 Gb/s between machines, 300 GB/s inside one.
    pub fn new(machines: usize, gpus_per_machine: usize) -> Self {
        ClusterTopology {
            machines,
            gpus_per_machine,
            inter_bandwidth: 12.5e9,
            intra_bandwidth: 300e9,
            compute_cost: 1e-9,
        }
    }

    pub fn n_gpus(&self) -> usize {
        self.machines * self.gpus_per_machine
    }

    pub fn machine_of(&self, gpu: usize) -> usize {
        gpu / self.gpus_per_machine
    }

    pub fn validate(&self) -> Result<()> {
        if self.machines == 0 || self.gpus_per_machine == 0 {
            return Err(Error::param("machines", "need at least one machine and one gpu per machine"));
        }
        if !(self.inter_bandwidth > 0.0 && self.inter_bandwidth.is_finite()) {
            return Err(Error::param("inter_bandwidth", "must be positive"));
        }
        if !(self.intra_bandwidth >= self.inter_bandwidth && self.intra_bandwidth.is_finite()) {
            return Err(Error::param("intra_bandwidth", "must be finite and at least the inter-machine bandwidth"));
        }
        if !(self.compute_cost >= 0.0 && self.compute_cost.is_finite()) {
            return Err(Error::param("compute_cost", "must be finite and non-negative"));
        }
        Ok(())
    }
}

/// How the across-machine objective weights are chosen each iteration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CoefficientMode {
    /// Tuned from the previous iteration's simulated timings and peak loads.
    Auto,
    Fixed(CostCoefficients),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalityConfig {
    pub coefficients: CoefficientMode,
    /// Norm order for the relaxed objective in auto mode.
    #[serde(default = "default_p")]
    pub p: f64,
    pub intra: CostCoefficients,
    pub budget: SearchBudget,
    pub partition: PartitionConfig,
}

fn default_p() -> f64 {
    2.0
}

impl Default for LocalityConfig {
    fn default() -> Self {
        LocalityConfig {
            coefficients: CoefficientMode::Auto,
            p: 2.0,
            intra: CostCoefficients::intra_default(),
            budget: SearchBudget::default(),
            partition: PartitionConfig::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    /// Points in random equal chunks, patches dealt round-robin after a shuffle.
    Random,
    LocalityAware(LocalityConfig),
}

impl Strategy {
    pub fn name(&self) -> &'static str {
        match self {
            Strategy::Random => "random",
            Strategy::LocalityAware(_) => "locality_aware",
        }
    }
}

/// Which access matrix drives placement; accounting always uses the fresh one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Staleness {
    Fresh,
    /// Reuse each view's rows as recorded during this epoch.
    StaleFromEpoch(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub topology: ClusterTopology,
    pub epochs: usize,
    pub batch_size: usize,
    pub patch_factor: u32,
    pub group_size: usize,
    pub seed: u64,
    pub staleness: Staleness,
    pub granularity: Granularity,
    pub point_radius: f64,
}

impl SimConfig {
    pub fn new(topology: ClusterTopology, batch_size: usize, patch_factor: u32, seed: u64) -> Self {
        SimConfig {
            topology,
            epochs: 1,
            batch_size,
            patch_factor,
            group_size: DEFAULT_GROUP_SIZE,
            seed,
            staleness: Staleness::Fresh,
            granularity: Granularity::Exact,
            point_radius: 0.0,
        }
    }

    pub fn validate(&self, n_views: usize) -> Result<()> {
        self.topology.validate()?;
        if self.epochs == 0 {
            return Err(Error::param("epochs", "must be at least 1"));
        }
        if self.batch_size == 0 || self.batch_size > n_views {
            return Err(Error::param(
                "batch_size",
                format!("must be between 1 and the {n_views} views of the dataset"),
            ));
        }
        if self.patch_factor == 0 {
            return Err(Error::param("patch_factor", "must be at least 1"));
        }
        if self.group_size == 0 {
            return Err(Error::param("group_size", "must be at least 1"));
        }
        let n = self.topology.n_gpus();
        let patches = self.batch_size * (self.patch_factor as usize).pow(2);
        if patches % n != 0 {
            let hint = (1..=64u32)
                .find(|&p| (self.batch_size * (p as usize).pow(2)) % n == 0)
                .map_or(String::new(), |p| format!("; patch factor {p} would work"));
            return Err(Error::Constraint(format!(
                "batch of {} views with patch factor {} gives {patches} patches, not divisible by {n} gpus{hint}",
                self.batch_size, self.patch_factor
            )));
        }
        if let Staleness::StaleFromEpoch(e) = self.staleness {
            if e >= self.epochs {
                return Err(Error::param("staleness", format!("epoch {e} is never simulated")));
            }
        }
        Ok(())
    }
}
