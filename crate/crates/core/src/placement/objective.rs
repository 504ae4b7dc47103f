use serde::{Deserialize, Serialize};

use super::coefficients::CostCoefficients;
use crate::error::{Error, Result};
use crate::visibility::AccessMatrix;

/// Patch-to-GPU map where every GPU renders the same number of patches.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PlacementSolution {
    gpu: Vec<u32>,
    n_gpus: usize,
}

impl PlacementSolution {
    pub fn new(gpu: Vec<u32>, n_gpus: usize) -> Result<Self> {
        if n_gpus == 0 {
            return Err(Error::param("n_gpus", "must be at least 1"));
        }
        if let Some(j) = gpu.iter().position(|&k| k as usize >= n_gpus) {
            return Err(Error::Consistency(format!(
                "patch {j} assigned to gpu {} but only {n_gpus} gpus exist",
                gpu[j]
            )));
        }
        let sol = PlacementSolution { gpu, n_gpus };
        let counts = sol.counts();
        if gpu_count_violation(sol.gpu.len(), n_gpus, &counts) {
            return Err(Error::Constraint(format!(
                "each gpu must render {}/{} patches, per-gpu counts are {counts:?}",
                sol.gpu.len(),
                n_gpus
            )));
        }
        Ok(sol)
    }

    pub(crate) fn new_unchecked(gpu: Vec<u32>, n_gpus: usize) -> Self {
        debug_assert!(PlacementSolution::new(gpu.clone(), n_gpus).is_ok());
        PlacementSolution { gpu, n_gpus }
    }

    pub fn gpu_of(&self, patch: usize) -> usize {
        self.gpu[patch] as usize
    }

    pub fn assignment(&self) -> &[u32] {
        &self.gpu
    }

    pub fn n_gpus(&self) -> usize {
        self.n_gpus
    }

    pub fn n_patches(&self) -> usize {
        self.gpu.len()
    }

    pub fn counts(&self) -> Vec<usize> {
        let mut c = vec![0; self.n_gpus];
        for &k in &self.gpu {
            c[k as usize] += 1;
        }
        c
    }
}

fn gpu_count_violation(patches: usize, n_gpus: usize, counts: &[usize]) -> bool {
    patches % n_gpus != 0 || counts.iter().any(|&c| c != patches / n_gpus)
}

/// Patches each GPU must take; errors when the batch does not split evenly.
pub fn slots_per_gpu(patches: usize, n_gpus: usize) -> Result<usize> {
    if n_gpus == 0 {
        return Err(Error::param("n_gpus", "must be at least 1"));
    }
    if patches % n_gpus != 0 {
        return Err(Error::Constraint(format!(
            "{patches} patches cannot be split evenly over {n_gpus} gpus"
        )));
    }
    Ok(patches / n_gpus)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveBreakdown {
    pub total_local: u64,
    pub send: Vec<u64>,
    pub recv: Vec<u64>,
    pub comp: Vec<u64>,
    pub max_send: u64,
    pub max_recv: u64,
    pub max_comp: u64,
    pub exact: f64,
    pub relaxed: f64,
}

/// `‖x‖_p`, with `p = inf` the max norm.
pub fn p_norm(x: &[u64], p: f64) -> f64 {
    if p.is_infinite() {
        return x.iter().copied().max().unwrap_or(0) as f64;
    }
    if p == 1.0 {
        return x.iter().map(|&v| v as f64).sum();
    }
    x.iter().map(|&v| (v as f64).powf(p)).sum::<f64>().powf(1.0 / p)
}

/// A placement instance. Row totals can exceed the visible columns' sum and `base_send` adds
/// fixed outgoing traffic, which lets one machine's GPUs be placed with the rest of the
/// cluster's traffic accounted for.
#[derive(Debug, Clone)]
pub(crate) struct Problem<'a> {
    pub matrix: &'a AccessMatrix,
    pub row_totals: Vec<u64>,
    pub base_send: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Loads {
    pub send: Vec<u64>,
    pub recv: Vec<u64>,
    pub comp: Vec<u64>,
    pub local: u64,
}

impl<'a> Problem<'a> {
    pub fn flat(matrix: &'a AccessMatrix) -> Self {
        Problem {
            matrix,
            row_totals: matrix.row_sums(),
            base_send: vec![0; matrix.cols()],
        }
    }

    pub fn loads(&self, w: &[u32]) -> Loads {
        let n = self.matrix.cols();
        let mut send = self.base_send.clone();
        let mut recv = vec![0u64; n];
        let mut comp = vec![0u64; n];
        let mut local = 0;
        for (j, &k) in w.iter().enumerate() {
            let k = k as usize;
            let row = self.matrix.row(j);
            for (c, &a) in row.iter().enumerate() {
                if c != k {
                    send[c] += a;
                }
            }
            recv[k] += self.row_totals[j] - row[k];
            comp[k] += self.row_totals[j];
            local += row[k];
        }
        Loads {
            send,
            recv,
            comp,
            local,
        }
    }
}

impl Loads {
    pub fn relaxed(&self, c: &CostCoefficients) -> f64 {
        c.beta * p_norm(&self.send, c.p) + c.gamma * p_norm(&self.recv, c.p) + c.delta * p_norm(&self.comp, c.p)
    }

    pub fn breakdown(self, c: &CostCoefficients) -> ObjectiveBreakdown {
        let max = |v: &[u64]| v.iter().copied().max().unwrap_or(0);
        let (max_send, max_recv, max_comp) = (max(&self.send), max(&self.recv), max(&self.comp));
        let exact = c.alpha * -(self.local as f64)
            + c.beta * max_send as f64
            + c.gamma * max_recv as f64
            + c.delta * max_comp as f64;
        let relaxed = self.relaxed(c);
        ObjectiveBreakdown {
            total_local: self.local,
            send: self.send,
            recv: self.recv,
            comp: self.comp,
            max_send,
            max_recv,
            max_comp,
            exact,
            relaxed,
        }
    }
}

pub(crate) fn check_shape(matrix: &AccessMatrix, w: &PlacementSolution) -> Result<()> {
    if w.n_patches() != matrix.rows() || w.n_gpus() != matrix.cols() {
        return Err(Error::Consistency(format!(
            "solution covers {} patches on {} gpus, matrix is {}x{}",
            w.n_patches(),
            w.n_gpus(),
            matrix.rows(),
            matrix.cols()
        )));
    }
    Ok(())
}

pub fn objective(matrix: &AccessMatrix, w: &PlacementSolution, c: &CostCoefficients) -> Result<ObjectiveBreakdown> {
    c.validate()?;
    check_shape(matrix, w)?;
    Ok(Problem::flat(matrix).loads(w.assignment()).breakdown(c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coeffs(alpha: f64, beta: f64, gamma: f64, delta: f64, p: f64) -> CostCoefficients {
        CostCoefficients::new(alpha, beta, gamma, delta, p).unwrap()
    }

    #[test]
    fn diagonal_two_by_two() {
        let a = AccessMatrix::from_rows(vec![vec![5, 0], vec![0, 7]]).unwrap();
        let w = PlacementSolution::new(vec![0, 1], 2).unwrap();
        let b = objective(&a, &w, &coeffs(1.0, 0.0, 0.0, 0.0, 2.0)).unwrap();
        assert_eq!(b.exact, -12.0);
        assert_eq!(b.send, vec![0, 0]);
        assert_eq!(b.comp, vec![5, 7]);
    }

    #[test]
    fn single_gpu() {
        let a = AccessMatrix::from_rows(vec![vec![3], vec![4], vec![9]]).unwrap();
        let w = PlacementSolution::new(vec![0; 3], 1).unwrap();
        let b = objective(&a, &w, &coeffs(2.0, 1.0, 1.0, 0.5, 2.0)).unwrap();
        assert_eq!((b.max_send, b.max_recv), (0, 0));
        assert_eq!(b.exact, -2.0 * 16.0 + 0.5 * 16.0);
    }

    #[test]
    fn hand_computed_loads() {
        let a = AccessMatrix::from_rows(vec![vec![4, 1, 2], vec![0, 3, 5], vec![6, 0, 0]]).unwrap();
        let w = PlacementSolution::new(vec![1, 0, 2], 3).unwrap();
        let b = objective(&a, &w, &coeffs(0.0, 1.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!(b.send, vec![4 + 6, 3, 2 + 5]);
        assert_eq!(b.recv, vec![8, 7 - 1, 6]);
        assert_eq!(b.comp, vec![8, 7, 6]);
        assert_eq!(b.total_local, 1);
        assert_eq!(b.send.iter().sum::<u64>(), b.recv.iter().sum::<u64>());
        assert_eq!(b.relaxed, 20.0);
    }

    #[test]
    fn norms() {
        let x = [3, 4, 0];
        assert_eq!(p_norm(&x, 1.0), 7.0);
        assert!((p_norm(&x, 2.0) - 5.0).abs() < 1e-12);
        assert_eq!(p_norm(&x, f64::INFINITY), 4.0);
        assert_eq!(p_norm(&[], 2.0), 0.0);
        let a = AccessMatrix::from_rows(vec![vec![2, 1], vec![1, 5]]).unwrap();
        let w = PlacementSolution::new(vec![1, 0], 2).unwrap();
        let c = coeffs(0.0, 1.0, 2.0, 3.0, f64::INFINITY);
        let b = objective(&a, &w, &c).unwrap();
        assert_eq!(b.relaxed, b.exact);
    }

    #[test]
    fn cardinality_errors_list_counts() {
        let err = PlacementSolution::new(vec![0, 0, 1, 0], 2).unwrap_err();
        assert!(matches!(err, Error::Constraint(ref m) if m.contains("[3, 1]")), "{err}");
        assert!(PlacementSolution::new(vec![0, 1, 2], 2).is_err());
        assert!(slots_per_gpu(6, 4).is_err());
        assert_eq!(slots_per_gpu(8, 4).unwrap(), 2);
    }
}
