//! Shared fixtures for the criterion benches.

use splatsched::scene::{generate_aerial_scene, AerialParams};
use splatsched::simulator::{LocalityConfig, Simulation};
use splatsched::{AccessMatrix, ClusterTopology, SceneDataset, SimConfig, Strategy};

pub const MACHINES: usize = 2;
pub const GPUS_PER_MACHINE: usize = 4;
pub const BATCH: usize = 16;

pub fn aerial(points: usize, views: usize) -> SceneDataset {
    generate_aerial_scene(&AerialParams::new(11, points, AerialParams::default_grid(views), views, 100.0))
        .expect("aerial fixture")
}

pub fn sim_config() -> SimConfig {
    let mut cfg = SimConfig::new(ClusterTopology::new(MACHINES, GPUS_PER_MACHINE), BATCH, 2, 3);
    cfg.group_size = 1024;
    cfg
}

/// Access matrix of the first scheduled batch under a locality-aware partition.
pub fn access_matrix(dataset: &SceneDataset) -> AccessMatrix {
    let sim = Simulation::new(dataset, sim_config(), Strategy::LocalityAware(LocalityConfig::default()))
        .expect("simulation fixture");
    let batch = sim.schedule()[0][0].clone();
    sim.access_matrix(&batch).expect("access matrix")
}
