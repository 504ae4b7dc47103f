use super::coefficients::CostCoefficients;
use super::objective::{slots_per_gpu, PlacementSolution, Problem};
use crate::error::{Error, Result};
use crate::visibility::AccessMatrix;

pub const BRUTE_FORCE_LIMIT: u128 = 1_000_000;

/// Number of balanced assignments of `patches` patches to `n_gpus` GPUs, saturating at `u128::MAX`.
pub fn feasible_assignment_count(patches: usize, n_gpus: usize) -> Result<u128> {
    let slots = slots_per_gpu(patches, n_gpus)?;
    let mut count: u128 = 1;
    let mut left = patches as u128;
    for _ in 0..n_gpus {
        // multiply by C(left, slots)
        let mut binom: u128 = 1;
        for i in 0..slots as u128 {
            binom = match binom.checked_mul(left - i) {
                Some(v) => v / (i + 1),
                None => return Ok(u128::MAX),
            };
        }
        count = match count.checked_mul(binom) {
            Some(v) => v,
            None => return Ok(u128::MAX),
        };
        left -= slots as u128;
    }
    Ok(count)
}

/// Exact-objective minimizer over every balanced assignment; the lexicographically smallest on ties.
pub fn brute_force_optimal(matrix: &AccessMatrix, c: &CostCoefficients) -> Result<PlacementSolution> {
    c.validate()?;
    let (b, n) = (matrix.rows(), matrix.cols());
    let count = feasible_assignment_count(b, n)?;
    if count > BRUTE_FORCE_LIMIT {
        return Err(Error::TooLarge {
            count,
            limit: BRUTE_FORCE_LIMIT,
        });
    }
    let slots = slots_per_gpu(b, n)?;
    let problem = Problem::flat(matrix);
    let mut search = Enumeration {
        problem: &problem,
        c,
        slots,
        w: vec![0; b],
        free: vec![slots; n],
        best: None,
    };
    search.visit(0);
    let best = search.best.expect("at least one balanced assignment").1;
    Ok(PlacementSolution::new_unchecked(best, n))
}

struct Enumeration<'a, 'p> {
    problem: &'p Problem<'a>,
    c: &'p CostCoefficients,
    slots: usize,
    w: Vec<u32>,
    free: Vec<usize>,
    best: Option<(f64, Vec<u32>)>,
}

impl Enumeration<'_, '_> {
    fn visit(&mut self, j: usize) {
        if j == self.w.len() {
            let value = self.problem.loads(&self.w).breakdown(self.c).exact;
            // lexicographic visiting order: only a strictly better value replaces the incumbent
            if self.best.as_ref().is_none_or(|(v, _)| value < *v) {
                self.best = Some((value, self.w.clone()));
            }
            return;
        }
        debug_assert!(self.slots > 0);
        for k in 0..self.free.len() {
            if self.free[k] == 0 {
                continue;
            }
            self.free[k] -= 1;
            self.w[j] = k as u32;
            self.visit(j + 1);
            self.free[k] += 1;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::placement::lsa_assign;
    use crate::placement::objective;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn counts() {
        assert_eq!(feasible_assignment_count(2, 2).unwrap(), 2);
        assert_eq!(feasible_assignment_count(8, 4).unwrap(), 2520);
        assert_eq!(feasible_assignment_count(6, 3).unwrap(), 90);
        assert!(feasible_assignment_count(64, 4).unwrap() > BRUTE_FORCE_LIMIT);
    }

    #[test]
    fn too_large_is_rejected() {
        let a = AccessMatrix::zeros(16, 4);
        assert!(matches!(
            brute_force_optimal(&a, &CostCoefficients::alpha_only()),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn ties_pick_smallest_assignment() {
        let a = AccessMatrix::zeros(4, 2);
        let w = brute_force_optimal(&a, &CostCoefficients::alpha_only()).unwrap();
        assert_eq!(w.assignment(), &[0, 0, 1, 1]);
    }

    #[test]
    fn agrees_with_lsa_on_alpha_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let c = CostCoefficients::alpha_only();
        for _ in 0..30 {
            let a = AccessMatrix::from_rows(
                (0..6).map(|_| (0..3).map(|_| rng.gen_range(0..9)).collect()).collect(),
            )
            .unwrap();
            let best = objective(&a, &brute_force_optimal(&a, &c).unwrap(), &c).unwrap();
            let lsa = objective(&a, &lsa_assign(&a).unwrap(), &c).unwrap();
            assert_eq!(best.total_local, lsa.total_local);
        }
    }
}
