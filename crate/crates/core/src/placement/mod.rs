//! Per-iteration assignment of image patches to GPUs.

mod brute;
mod coefficients;
mod hierarchy;
mod io;
mod lsa;
mod objective;
mod search;

pub use brute::{brute_force_optimal, feasible_assignment_count, BRUTE_FORCE_LIMIT};
pub use coefficients::{auto_coefficients, CostCoefficients, ProfilerStats};
pub use hierarchy::{hierarchical_place, HierarchicalConfig};
pub use lsa::{hungarian, lsa_assign};
pub use objective::{objective, p_norm, slots_per_gpu, ObjectiveBreakdown, PlacementSolution};
pub use search::{local_search, SearchBudget, SearchOutcome, StopReason};
