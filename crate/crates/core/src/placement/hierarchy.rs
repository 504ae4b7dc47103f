use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::coefficients::CostCoefficients;
use super::lsa::lsa_assign;
use super::objective::{slots_per_gpu, PlacementSolution, Problem};
use super::search::{search_problem, SearchBudget};
use crate::error::{Error, Result};
use crate::visibility::AccessMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HierarchicalConfig {
    pub machines: usize,
    pub gpus_per_machine: usize,
    /// Used across machines.
    pub inter: CostCoefficients,
    /// Used among one machine's GPUs.
    pub intra: CostCoefficients,
    pub budget: SearchBudget,
}

impl HierarchicalConfig {
    pub fn new(machines: usize, gpus_per_machine: usize, inter: CostCoefficients) -> Self {
        HierarchicalConfig {
            machines,
            gpus_per_machine,
            inter,
            intra: CostCoefficients::intra_default(),
            budget: SearchBudget::default(),
        }
    }
}

/// Patches go to machines first (columns summed per machine), then to GPUs within each machine.
///
/// `matrix` is patch x GPU with GPU `m * gpus_per_machine + g` being GPU `g` of machine `m`.
pub fn hierarchical_place(matrix: &AccessMatrix, cfg: &HierarchicalConfig) -> Result<PlacementSolution> {
    let (m, gm) = (cfg.machines, cfg.gpus_per_machine);
    if m == 0 || gm == 0 {
        return Err(Error::param("machines", "need at least one machine and one gpu per machine"));
    }
    cfg.inter.validate()?;
    cfg.intra.validate()?;
    let n = m * gm;
    if matrix.cols() != n {
        return Err(Error::Consistency(format!(
            "access matrix has {} gpu columns, topology has {m}x{gm}",
            matrix.cols()
        )));
    }
    let b = matrix.rows();
    slots_per_gpu(b, m)?;
    let slots = slots_per_gpu(b, n)?;

    let per_machine = matrix.aggregate_columns(m, |k| k / gm);
    let level1 = lsa_assign(&per_machine)?;
    let level1 = search_problem(
        &Problem::flat(&per_machine),
        level1.assignment().to_vec(),
        &cfg.inter,
        &cfg.budget,
    )
    .solution;
    if gm == 1 {
        return Ok(level1);
    }

    let totals = matrix.row_sums();
    let local: Vec<(Vec<usize>, Vec<u32>)> = (0..m)
        .into_par_iter()
        .map(|machine| {
            let rows: Vec<usize> = (0..b).filter(|&j| level1.gpu_of(j) == machine).collect();
            let cols: Vec<usize> = (machine * gm..(machine + 1) * gm).collect();
            let sub = matrix.select(&rows, &cols);
            // what these GPUs send to patches rendered on other machines
            let base_send = cols
                .iter()
                .map(|&k| (0..b).filter(|&j| level1.gpu_of(j) != machine).map(|j| matrix.get(j, k)).sum())
                .collect();
            let problem = Problem {
                matrix: &sub,
                row_totals: rows.iter().map(|&j| totals[j]).collect(),
                base_send,
            };
            debug_assert_eq!(rows.len(), slots * gm);
            let init = lsa_assign(&sub).expect("level one leaves b/m patches per machine");
            let out = search_problem(&problem, init.assignment().to_vec(), &cfg.intra, &cfg.budget);
            (rows, out.solution.assignment().to_vec())
        })
        .collect();

    let mut gpu = vec![0u32; b];
    for (machine, (rows, assign)) in local.into_iter().enumerate() {
        for (j, g) in rows.into_iter().zip(assign) {
            gpu[j] = (machine * gm) as u32 + g;
        }
    }
    PlacementSolution::new(gpu, n)
}
