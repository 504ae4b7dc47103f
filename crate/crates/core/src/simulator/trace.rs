use serde::{Deserialize, Serialize};

use super::ClusterTopology;
use crate::placement::{CostCoefficients, PlacementSolution};
use crate::visibility::AccessMatrix;

/// Per-GPU point counts for one direction of the all-to-all exchange.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegTrace {
    pub send_intra: Vec<u64>,
    pub send_inter: Vec<u64>,
    pub recv_intra: Vec<u64>,
    pub recv_inter: Vec<u64>,
    pub comp: Vec<u64>,
}

impl LegTrace {
    fn zeros(n: usize) -> Self {
        LegTrace {
            send_intra: vec![0; n],
            send_inter: vec![0; n],
            recv_intra: vec![0; n],
            recv_inter: vec![0; n],
            comp: vec![0; n],
        }
    }

    /// Counts implied by a `pairs[src][dst]` transfer matrix.
    fn from_pairs(pairs: &[Vec<u64>], comp: Vec<u64>, topology: &ClusterTopology) -> Self {
        let mut leg = LegTrace::zeros(pairs.len());
        for (src, row) in pairs.iter().enumerate() {
            for (dst, &x) in row.iter().enumerate() {
                if src == dst || x == 0 {
                    continue;
                }
                if topology.machine_of(src) == topology.machine_of(dst) {
                    leg.send_intra[src] += x;
                    leg.recv_intra[dst] += x;
                } else {
                    leg.send_inter[src] += x;
                    leg.recv_inter[dst] += x;
                }
            }
        }
        leg.comp = comp;
        leg
    }

    pub fn n_gpus(&self) -> usize {
        self.comp.len()
    }

    pub fn inter_points(&self) -> u64 {
        self.send_inter.iter().sum()
    }

    pub fn intra_points(&self) -> u64 {
        self.send_intra.iter().sum()
    }

    pub fn max_comp(&self) -> u64 {
        self.comp.iter().copied().max().unwrap_or(0)
    }

    /// Max over mean of per-GPU compute; 1 when nothing is rendered.
    pub fn comp_imbalance(&self) -> f64 {
        let total: u64 = self.comp.iter().sum();
        if total == 0 {
            return 1.0;
        }
        self.max_comp() as f64 * self.n_gpus() as f64 / total as f64
    }

    /// Slowest GPU's compute plus transfer time for this leg.
    fn time(&self, topology: &ClusterTopology, bytes_per_point: u64) -> f64 {
        (0..self.n_gpus())
            .map(|k| {
                let inter = (self.send_inter[k] + self.recv_inter[k]) * bytes_per_point;
                let intra = (self.send_intra[k] + self.recv_intra[k]) * bytes_per_point;
                self.comp[k] as f64 * topology.compute_cost
                    + inter as f64 / topology.inter_bandwidth
                    + intra as f64 / topology.intra_bandwidth
            })
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IterationTrace {
    pub epoch: usize,
    pub iteration: usize,
    pub views: Vec<u32>,
    /// GPU rendering each patch.
    pub assignment: Vec<u32>,
    /// Across-machine coefficients the placement used, if any.
    pub coefficients: Option<CostCoefficients>,
    pub bytes_per_point: u64,
    pub forward: LegTrace,
    pub backward: LegTrace,
    /// Accessed points already on the rendering GPU.
    pub local_points: u64,
    /// Sum of the access matrix.
    pub total_access: u64,
    /// Patches rendered on the machine that owns their image.
    pub image_hits: u64,
    pub patches: u64,
    pub est_time: f64,
}

impl IterationTrace {
    pub fn inter_bytes_forward(&self) -> u64 {
        self.forward.inter_points() * self.bytes_per_point
    }

    pub fn transferred_forward(&self) -> u64 {
        self.forward.inter_points() + self.forward.intra_points()
    }
}

/// Forward `pairs[src][dst]`: points GPU `src` holds for patches rendered on `dst`.
pub fn forward_pairs(matrix: &AccessMatrix, w: &PlacementSolution) -> Vec<Vec<u64>> {
    let n = matrix.cols();
    let mut pairs = vec![vec![0u64; n]; n];
    for j in 0..matrix.rows() {
        let dst = w.gpu_of(j);
        for (src, &a) in matrix.row(j).iter().enumerate() {
            pairs[src][dst] += a;
        }
    }
    pairs
}

/// Gradients flowing back from each renderer to the owners: `pairs[src][dst]`.
pub fn backward_pairs(matrix: &AccessMatrix, w: &PlacementSolution) -> Vec<Vec<u64>> {
    let n = matrix.cols();
    let mut pairs = vec![vec![0u64; n]; n];
    for j in 0..matrix.rows() {
        let src = w.gpu_of(j);
        for (dst, &a) in matrix.row(j).iter().enumerate() {
            pairs[src][dst] += a;
        }
    }
    pairs
}

/// Both legs of one iteration plus the points that never move.
pub fn account(matrix: &AccessMatrix, w: &PlacementSolution, topology: &ClusterTopology) -> (LegTrace, LegTrace, u64) {
    let n = matrix.cols();
    let mut comp = vec![0u64; n];
    let mut local = 0;
    for j in 0..matrix.rows() {
        let k = w.gpu_of(j);
        comp[k] += matrix.row_sum(j);
        local += matrix.get(j, k);
    }
    let forward = LegTrace::from_pairs(&forward_pairs(matrix, w), comp.clone(), topology);
    let backward = LegTrace::from_pairs(&backward_pairs(matrix, w), comp, topology);
    (forward, backward, local)
}

/// Proxy step time: per leg, the slowest GPU's compute plus transfer time, summed over legs.
pub fn estimate_step_time(trace: &IterationTrace, topology: &ClusterTopology) -> f64 {
    trace.forward.time(topology, trace.bytes_per_point) + trace.backward.time(topology, trace.bytes_per_point)
}
