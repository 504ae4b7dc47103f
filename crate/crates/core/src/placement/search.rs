use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use super::coefficients::CostCoefficients;
use super::objective::{check_shape, Loads, PlacementSolution, Problem};
use crate::error::Result;
use crate::visibility::AccessMatrix;

/// Accept a swap only if it improves the relaxed value by more than this relative amount.
const IMPROVEMENT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SearchBudget {
    /// One sweep evaluates every swap once and applies at most one.
    pub max_sweeps: usize,
    /// Off by default: a time limit makes results depend on machine speed.
    pub wall_time: Option<Duration>,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget {
            max_sweeps: 1000,
            wall_time: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum StopReason {
    LocalOptimum,
    SweepLimit,
    WallTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchOutcome {
    pub solution: PlacementSolution,
    pub swaps: usize,
    pub evaluations: u64,
    /// Relaxed objective before the search and after every accepted swap.
    pub history: Vec<f64>,
    pub stop: StopReason,
}

/// Steepest-descent pairwise swaps on the relaxed objective.
pub fn local_search(
    matrix: &AccessMatrix,
    init: &PlacementSolution,
    c: &CostCoefficients,
    budget: &SearchBudget,
) -> Result<SearchOutcome> {
    c.validate()?;
    check_shape(matrix, init)?;
    Ok(search_problem(&Problem::flat(matrix), init.assignment().to_vec(), c, budget))
}

/// Keeps `‖x‖_p` of one load vector so a two-entry change is O(1) to evaluate.
struct NormTracker {
    p: f64,
    /// `Σ x^p` for finite `p`.
    power_sum: f64,
    /// Indices of the three largest entries for `p = inf`.
    top: [usize; 3],
}

impl NormTracker {
    fn new(x: &[i64], p: f64) -> Self {
        let mut t = NormTracker {
            p,
            power_sum: 0.0,
            top: [usize::MAX; 3],
        };
        t.reset(x);
        t
    }

    fn pow(&self, v: i64) -> f64 {
        let v = v as f64;
        if self.p == 1.0 {
            v
        } else if self.p == 2.0 {
            v * v
        } else {
            v.powf(self.p)
        }
    }

    fn root(&self, s: f64) -> f64 {
        let s = s.max(0.0);
        if self.p == 1.0 {
            s
        } else if self.p == 2.0 {
            s.sqrt()
        } else {
            s.powf(1.0 / self.p)
        }
    }

    fn reset(&mut self, x: &[i64]) {
        if self.p.is_infinite() {
            let mut idx: Vec<usize> = (0..x.len()).collect();
            idx.sort_by_key(|&i| std::cmp::Reverse(x[i]));
            self.top = [usize::MAX; 3];
            for (slot, &i) in self.top.iter_mut().zip(&idx) {
                *slot = i;
            }
        } else {
            self.power_sum = x.iter().map(|&v| self.pow(v)).sum();
        }
    }

    fn norm_with(&self, x: &[i64], a: usize, new_a: i64, b: usize, new_b: i64) -> f64 {
        if self.p.is_infinite() {
            let rest = self
                .top
                .iter()
                .find(|&&i| i != usize::MAX && i != a && i != b)
                .map_or(0, |&i| x[i]);
            return rest.max(new_a).max(new_b) as f64;
        }
        let s = self.power_sum - self.pow(x[a]) - self.pow(x[b]) + self.pow(new_a) + self.pow(new_b);
        self.root(s)
    }
}

struct State<'p, 'a> {
    problem: &'p Problem<'a>,
    w: Vec<u32>,
    send: Vec<i64>,
    recv: Vec<i64>,
    comp: Vec<i64>,
    trackers: [NormTracker; 3],
}

impl<'p, 'a> State<'p, 'a> {
    fn new(problem: &'p Problem<'a>, w: Vec<u32>, p: f64) -> Self {
        let Loads { send, recv, comp, .. } = problem.loads(&w);
        let cast = |v: Vec<u64>| v.into_iter().map(|x| x as i64).collect::<Vec<i64>>();
        let (send, recv, comp) = (cast(send), cast(recv), cast(comp));
        let trackers = [
            NormTracker::new(&send, p),
            NormTracker::new(&recv, p),
            NormTracker::new(&comp, p),
        ];
        State {
            problem,
            w,
            send,
            recv,
            comp,
            trackers,
        }
    }

    /// New values at GPUs `ka` and `kb` of (send, recv, comp) if patches `a` and `b` swap.
    fn swapped(&self, a: usize, b: usize) -> (usize, usize, [(i64, i64); 3]) {
        let m = self.problem.matrix;
        let t = &self.problem.row_totals;
        let (ka, kb) = (self.w[a] as usize, self.w[b] as usize);
        let (aa, ab) = (m.get(a, ka) as i64, m.get(a, kb) as i64);
        let (ba, bb) = (m.get(b, ka) as i64, m.get(b, kb) as i64);
        let (ta, tb) = (t[a] as i64, t[b] as i64);
        let send = (self.send[ka] + aa - ba, self.send[kb] + bb - ab);
        let recv = (
            self.recv[ka] - (ta - aa) + (tb - ba),
            self.recv[kb] - (tb - bb) + (ta - ab),
        );
        let comp = (self.comp[ka] - ta + tb, self.comp[kb] - tb + ta);
        (ka, kb, [send, recv, comp])
    }

    fn value_after(&self, a: usize, b: usize, c: &CostCoefficients) -> f64 {
        let (ka, kb, new) = self.swapped(a, b);
        let vectors = [&self.send, &self.recv, &self.comp];
        let weights = [c.beta, c.gamma, c.delta];
        let mut total = 0.0;
        for i in 0..3 {
            if weights[i] != 0.0 {
                total += weights[i] * self.trackers[i].norm_with(vectors[i], ka, new[i].0, kb, new[i].1);
            }
        }
        total
    }

    fn apply(&mut self, a: usize, b: usize) {
        let (ka, kb, new) = self.swapped(a, b);
        for (v, (x, y)) in [&mut self.send, &mut self.recv, &mut self.comp].into_iter().zip(new) {
            v[ka] = x;
            v[kb] = y;
        }
        self.w.swap(a, b);
        self.trackers[0].reset(&self.send);
        self.trackers[1].reset(&self.recv);
        self.trackers[2].reset(&self.comp);
    }

    fn value(&self, c: &CostCoefficients) -> f64 {
        let norm = |t: &NormTracker, x: &[i64]| {
            if t.p.is_infinite() {
                x.iter().copied().max().unwrap_or(0) as f64
            } else {
                t.root(t.power_sum)
            }
        };
        c.beta * norm(&self.trackers[0], &self.send)
            + c.gamma * norm(&self.trackers[1], &self.recv)
            + c.delta * norm(&self.trackers[2], &self.comp)
    }
}

pub(crate) fn search_problem(
    problem: &Problem<'_>,
    init: Vec<u32>,
    c: &CostCoefficients,
    budget: &SearchBudget,
) -> SearchOutcome {
    let n_gpus = problem.matrix.cols();
    let started = Instant::now();
    let mut state = State::new(problem, init, c.p);
    let mut current = state.value(c);
    let mut history = vec![current];
    let mut evaluations = 0u64;
    let b = state.w.len();
    let stop = loop {
        if history.len() > budget.max_sweeps {
            break StopReason::SweepLimit;
        }
        if budget.wall_time.is_some_and(|limit| started.elapsed() >= limit) {
            break StopReason::WallTime;
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for a in 0..b {
            for bb in a + 1..b {
                if state.w[a] == state.w[bb] {
                    continue;
                }
                evaluations += 1;
                let v = state.value_after(a, bb, c);
                if best.is_none_or(|(bv, _, _)| v < bv) {
                    best = Some((v, a, bb));
                }
            }
        }
        match best {
            Some((v, a, bb)) if v < current * (1.0 - IMPROVEMENT_TOLERANCE) => {
                state.apply(a, bb);
                current = state.value(c);
                history.push(current);
            }
            _ => break StopReason::LocalOptimum,
        }
    };
    SearchOutcome {
        solution: PlacementSolution::new_unchecked(state.w, n_gpus),
        swaps: history.len() - 1,
        evaluations,
        history,
        stop,
    }
}
