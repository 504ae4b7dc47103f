//! Locality-aware placement for distributed point-based differentiable rendering.
//!
//! The pipeline: generate or load a [`scene::SceneDataset`], sort and group its points along a
//! Z-order curve ([`visibility`]), partition the group/image visibility graph across machines
//! and GPUs ([`partition`]), assign image patches to GPUs every iteration ([`placement`]), and
//! account the resulting all-to-all traffic against a random baseline ([`simulator`]).

pub mod error;
pub mod geometry;
pub mod partition;
pub mod placement;
pub mod scene;
pub mod simulator;
pub mod visibility;

pub use error::{Error, ErrorKind, Result};
pub use geometry::{Aabb, Point3, Rotation};
pub use scene::{CameraView, CullingMode, PointCloud, Presence, SceneDataset, WorkloadProfile};
pub use visibility::{AccessMatrix, GroupedCloud, Ownership};
pub use partition::{BipartiteGraph, PartitionAssignment, PartitionConfig};
pub use placement::{CostCoefficients, ObjectiveBreakdown, PlacementSolution};
pub use simulator::{ClusterTopology, EpochReport, SimConfig, Strategy};
