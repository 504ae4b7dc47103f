//! Two-level partitioning of the group/image visibility graph.

mod graph;
mod hierarchy;
mod multilevel;

pub use graph::{build_bipartite_graph, BipartiteGraph};
pub use hierarchy::{hierarchical_partition, image_ownership, PartitionAssignment, QualityReport};
pub use multilevel::{
    balance_cap, balance_ratio, partition_graph, GraphPartition, PartitionConfig, PartitionQuality,
};
