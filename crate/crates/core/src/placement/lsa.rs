use super::objective::{slots_per_gpu, PlacementSolution};
use crate::error::Result;
use crate::visibility::AccessMatrix;

/// Minimum-cost perfect matching on a square matrix (shortest augmenting paths with
/// potentials). `assignment[row] = column`.
pub fn hungarian(cost: &[Vec<i128>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let inf = i128::MAX / 4;
    // 1-based: index 0 is the virtual start column
    let mut u = vec![0i128; n + 1];
    let mut v = vec![0i128; n + 1];
    let mut col_row = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for row in 1..=n {
        col_row[0] = row;
        let mut j0 = 0;
        let mut minv = vec![inf; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = col_row[j0];
            let mut d = inf;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < d {
                    d = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[col_row[j]] += d;
                    v[j] -= d;
                } else {
                    minv[j] -= d;
                }
            }
            j0 = j1;
            if col_row[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            col_row[j0] = col_row[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut out = vec![0; n];
    for j in 1..=n {
        out[col_row[j] - 1] = j - 1;
    }
    out
}

/// Maximizes the points each patch finds on its own GPU, every GPU taking `rows / cols` patches.
///
/// Among optimal assignments the one closest to `patch j -> gpu j / slots` wins, so uniform
/// matrices map consecutive patches to consecutive GPUs.
pub fn lsa_assign(matrix: &AccessMatrix) -> Result<PlacementSolution> {
    let n_gpus = matrix.cols();
    let slots = slots_per_gpu(matrix.rows(), n_gpus)?;
    let b = matrix.rows();
    // secondary term never outweighs one unit of the primary: it sums to < b * n^2
    let scale = (b as i128) * (n_gpus as i128).pow(2) + 1;
    let cost: Vec<Vec<i128>> = (0..b)
        .map(|j| {
            let home = (j / slots.max(1)) as i128;
            (0..b)
                .map(|slot| {
                    let k = slot / slots;
                    let primary = -(matrix.get(j, k) as i128);
                    primary * scale + (k as i128 - home).pow(2)
                })
                .collect()
        })
        .collect();
    let gpu = hungarian(&cost)
        .into_iter()
        .map(|slot| (slot / slots) as u32)
        .collect();
    Ok(PlacementSolution::new_unchecked(gpu, n_gpus))
}
