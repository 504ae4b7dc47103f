//! Multilevel k-way partitioner: heavy-edge matching, greedy graph growing with recursive
//! bisection, and boundary refinement during uncoarsening.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::graph::{BipartiteGraph, WeightedGraph};
use crate::error::{Error, Result};

/// Coarsening stops once the graph has at most this many vertices per part.
const COARSEN_PER_PART: usize = 30;
/// ...or when a round of matching shrinks the graph by less than 5%.
const MIN_COARSEN_SHRINK: f64 = 0.95;
const GROW_TRIALS: usize = 6;
const REFINE_PASSES: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PartitionConfig {
    pub epsilon: f64,
    pub seed: u64,
    /// Independent runs; the best by (cut, balance, run) wins.
    pub runs: usize,
    /// Scale applied to image-vertex weights for balancing (0: only points count).
    pub image_weight_multiplier: f64,
}

impl Default for PartitionConfig {
    fn default() -> Self {
        PartitionConfig {
            epsilon: 0.05,
            seed: 0,
            runs: 4,
            image_weight_multiplier: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PartitionQuality {
    pub edge_cut: u64,
    /// Max part weight over mean part weight.
    pub balance: f64,
    pub part_weights: Vec<u64>,
}

impl PartitionQuality {
    pub(crate) fn compute(cut: u64, vwgt: &[u64], part: &[usize], parts: usize) -> Self {
        let mut part_weights = vec![0u64; parts];
        for (u, &p) in part.iter().enumerate() {
            part_weights[p] += vwgt[u];
        }
        PartitionQuality {
            edge_cut: cut,
            balance: balance_ratio(&part_weights),
            part_weights,
        }
    }
}

pub fn balance_ratio(part_weights: &[u64]) -> f64 {
    let total: u64 = part_weights.iter().sum();
    if total == 0 || part_weights.is_empty() {
        return 1.0;
    }
    let mean = total as f64 / part_weights.len() as f64;
    *part_weights.iter().max().unwrap() as f64 / mean
}

/// Per-part weight limit: `(1 + epsilon) * mean`, widened to `mean + heaviest * (k - 1) / k` when
/// vertex granularity makes the tighter bound unreachable (the widened bound is exactly the best
/// achievable one when all vertices weigh the same).
pub fn balance_cap(vertex_weights: &[u64], parts: usize, epsilon: f64) -> f64 {
    let total: u64 = vertex_weights.iter().sum();
    let mean = total as f64 / parts.max(1) as f64;
    let heaviest = vertex_weights.iter().copied().max().unwrap_or(0) as f64;
    let k = parts.max(1) as f64;
    ((1.0 + epsilon) * mean).max(mean + heaviest * (k - 1.0) / k)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphPartition {
    /// Part of every vertex, groups first then images.
    pub parts: Vec<usize>,
    pub quality: PartitionQuality,
}

/// Partition groups and images of `graph` together into `parts` parts.
pub fn partition_graph(
    graph: &BipartiteGraph,
    parts: usize,
    config: &PartitionConfig,
) -> Result<GraphPartition> {
    let wg = WeightedGraph::from_bipartite(graph, config.image_weight_multiplier);
    let part = partition_weighted(&wg, parts, config)?;
    let quality = PartitionQuality::compute(graph.edge_cut(&part), &wg.vwgt, &part, parts);
    Ok(GraphPartition {
        parts: part,
        quality,
    })
}

pub(crate) fn partition_weighted(
    g: &WeightedGraph,
    parts: usize,
    config: &PartitionConfig,
) -> Result<Vec<usize>> {
    if parts == 0 {
        return Err(Error::param("parts", "must be at least 1"));
    }
    if g.n() == 0 {
        return Err(Error::param("graph", "must have at least one vertex"));
    }
    if !(config.epsilon >= 0.0 && config.epsilon.is_finite()) {
        return Err(Error::param("epsilon", "must be a non-negative number"));
    }
    let total = g.total_vertex_weight();
    let limit = (1.0 + config.epsilon) * total as f64 / parts as f64;
    if let Some((vertex, &weight)) = g
        .vwgt
        .iter()
        .enumerate()
        .find(|(_, &w)| w as f64 > limit)
    {
        return Err(Error::Infeasible {
            vertex,
            weight,
            limit,
        });
    }
    if parts == 1 {
        return Ok(vec![0; g.n()]);
    }
    let runs = config.runs.max(1);
    let results: Vec<(u64, u64, usize, Vec<usize>)> = (0..runs)
        .into_par_iter()
        .map(|run| {
            let part = single_run(g, parts, config.epsilon, config.seed, run as u64);
            let cut = g.cut(&part);
            let mut weights = vec![0u64; parts];
            for (u, &p) in part.iter().enumerate() {
                weights[p] += g.vwgt[u];
            }
            (cut, *weights.iter().max().unwrap(), run, part)
        })
        .collect();
    let best = results
        .into_iter()
        .min_by_key(|(cut, heaviest, run, _)| (*cut, *heaviest, *run))
        .expect("at least one run");
    Ok(best.3)
}

fn single_run(g: &WeightedGraph, parts: usize, epsilon: f64, seed: u64, run: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(run);
    let cap = balance_cap(&g.vwgt, parts, epsilon);
    let caps = vec![cap; parts];

    let total = g.total_vertex_weight();
    let max_vertex = g.vwgt.iter().copied().max().unwrap_or(0);
    let coarse_limit = (max_vertex as f64).max(1.5 * total as f64 / (COARSEN_PER_PART * parts) as f64);

    let mut levels: Vec<(WeightedGraph, Vec<usize>)> = Vec::new();
    let mut current = g.clone();
    while current.n() > COARSEN_PER_PART * parts {
        let (coarse, cmap) = coarsen_once(&current, &mut rng, coarse_limit);
        if coarse.n() as f64 > MIN_COARSEN_SHRINK * current.n() as f64 {
            break;
        }
        levels.push((std::mem::replace(&mut current, coarse), cmap));
    }

    let mut part = vec![0usize; current.n()];
    let all: Vec<usize> = (0..current.n()).collect();
    recursive_bisection(&current, &all, parts, 0, epsilon, &mut rng, &mut part);
    refine(&current, &mut part, &caps, None);

    while let Some((fine, cmap)) = levels.pop() {
        let mut fine_part: Vec<usize> = cmap.iter().map(|&c| part[c]).collect();
        refine(&fine, &mut fine_part, &caps, None);
        part = fine_part;
        current = fine;
    }
    debug_assert_eq!(current.n(), g.n());
    part
}

/// Heavy-edge matching in vertex-index order; equal-weight edges are ranked by a seeded key.
pub(crate) fn coarsen_once(
    g: &WeightedGraph,
    rng: &mut ChaCha8Rng,
    max_vertex_weight: f64,
) -> (WeightedGraph, Vec<usize>) {
    let n = g.n();
    let keys: Vec<u64> = (0..n).map(|_| rng.gen()).collect();
    let mut mate = vec![usize::MAX; n];
    for u in 0..n {
        if mate[u] != usize::MAX {
            continue;
        }
        let mut best: Option<(u64, u64, usize)> = None;
        for (v, w) in g.neighbors(u) {
            if v == u || mate[v] != usize::MAX {
                continue;
            }
            if (g.vwgt[u] + g.vwgt[v]) as f64 > max_vertex_weight {
                continue;
            }
            let cand = (w, keys[v], v);
            if best.is_none_or(|b| (cand.0, cand.1) > (b.0, b.1)) {
                best = Some(cand);
            }
        }
        match best {
            Some((_, _, v)) => {
                mate[u] = v;
                mate[v] = u;
            }
            None => mate[u] = u,
        }
    }
    let mut cmap = vec![usize::MAX; n];
    let mut next = 0;
    for u in 0..n {
        if cmap[u] == usize::MAX {
            cmap[u] = next;
            cmap[mate[u]] = next;
            next += 1;
        }
    }
    let mut vwgt = vec![0u64; next];
    for u in 0..n {
        vwgt[cmap[u]] += g.vwgt[u];
    }
    let mut edges = Vec::new();
    for u in 0..n {
        for (v, w) in g.neighbors(u) {
            if u < v && cmap[u] != cmap[v] {
                edges.push((cmap[u], cmap[v], w));
            }
        }
    }
    (WeightedGraph::from_edge_list(vwgt, &edges), cmap)
}

fn recursive_bisection(
    g: &WeightedGraph,
    vertices: &[usize],
    parts: usize,
    first_part: usize,
    epsilon: f64,
    rng: &mut ChaCha8Rng,
    out: &mut [usize],
) {
    if parts == 1 || vertices.is_empty() {
        for &v in vertices {
            out[v] = first_part;
        }
        return;
    }
    let left_parts = parts / 2;
    let sub = g.induced(vertices);
    let side = grow_bisection(&sub, left_parts as f64 / parts as f64, epsilon, rng);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for (i, &v) in vertices.iter().enumerate() {
        if side[i] == 0 {
            left.push(v);
        } else {
            right.push(v);
        }
    }
    recursive_bisection(g, &left, left_parts, first_part, epsilon, rng, out);
    recursive_bisection(g, &right, parts - left_parts, first_part + left_parts, epsilon, rng, out);
}

/// Greedy graph growing from random seeds; returns side (0 or 1) per vertex.
fn grow_bisection(g: &WeightedGraph, frac_left: f64, epsilon: f64, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let n = g.n();
    let total = g.total_vertex_weight() as f64;
    let target = frac_left * total;
    let heaviest = g.vwgt.iter().copied().max().unwrap_or(0) as f64;
    let caps = [
        ((1.0 + epsilon) * target).max(target + heaviest),
        ((1.0 + epsilon) * (total - target)).max(total - target + heaviest),
    ];
    let mut best: Option<(u64, u64, Vec<usize>)> = None;
    for _ in 0..GROW_TRIALS {
        let mut side = vec![1usize; n];
        // conn[v]: edge weight from v into the grown region
        let mut conn = vec![0i64; n];
        let degree: Vec<i64> = (0..n).map(|u| g.neighbors(u).map(|(_, w)| w as i64).sum()).collect();
        let mut grown = 0.0;
        let mut frontier: Vec<usize> = Vec::new();
        while grown < target {
            frontier.retain(|&v| side[v] == 1);
            let pick = if frontier.is_empty() {
                let rest: Vec<usize> = (0..n).filter(|&v| side[v] == 1).collect();
                if rest.is_empty() {
                    break;
                }
                rest[rng.gen_range(0..rest.len())]
            } else {
                // highest gain = (into region) - (to the rest); lowest index on ties
                *frontier
                    .iter()
                    .max_by_key(|&&v| (2 * conn[v] - degree[v], std::cmp::Reverse(v)))
                    .unwrap()
            };
            let w = g.vwgt[pick] as f64;
            if w > 0.0 && grown > 0.0 && (grown + w - target).abs() > (grown - target).abs() {
                break;
            }
            side[pick] = 0;
            grown += w;
            for (v, ew) in g.neighbors(pick) {
                if side[v] == 1 {
                    if conn[v] == 0 {
                        frontier.push(v);
                    }
                    conn[v] += ew as i64;
                }
            }
        }
        refine(g, &mut side, &caps, None);
        let cut = g.cut(&side);
        let left: u64 = (0..n).filter(|&v| side[v] == 0).map(|v| g.vwgt[v]).sum();
        let dev = (left as f64 - target).abs() as u64;
        if best.as_ref().is_none_or(|b| (cut, dev) < (b.0, b.1)) {
            best = Some((cut, dev, side));
        }
    }
    best.expect("GROW_TRIALS > 0").2
}

/// One accepted refinement move, for checking monotonicity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct RefineMove {
    pub gain: i64,
    pub from_weight: u64,
    pub to_weight: u64,
    pub vertex_weight: u64,
}

/// Balance repair followed by greedy boundary passes. Every boundary move either strictly
/// lowers the cut or keeps it and strictly narrows the weight gap between the two parts.
pub(crate) fn refine(
    g: &WeightedGraph,
    part: &mut [usize],
    caps: &[f64],
    mut log: Option<&mut Vec<RefineMove>>,
) {
    let k = caps.len();
    let n = g.n();
    let mut weights = vec![0u64; k];
    for u in 0..n {
        weights[part[u]] += g.vwgt[u];
    }
    let mut conn = vec![0i64; k];
    let connectivity = |u: usize, part: &[usize], conn: &mut Vec<i64>| {
        conn.iter_mut().for_each(|c| *c = 0);
        for (v, w) in g.neighbors(u) {
            conn[part[v]] += w as i64;
        }
    };

    for _ in 0..REFINE_PASSES {
        repair_balance(g, part, &mut weights, caps);

        let mut order: Vec<(i64, usize)> = Vec::new();
        for u in 0..n {
            let from = part[u];
            if g.neighbors(u).all(|(v, _)| part[v] == from) {
                continue;
            }
            connectivity(u, part, &mut conn);
            let best = (0..k).filter(|&q| q != from).map(|q| conn[q]).max().unwrap_or(0);
            order.push((best - conn[from], u));
        }
        order.sort_by_key(|&(gain, u)| (std::cmp::Reverse(gain), u));

        let mut moved = false;
        for &(_, u) in &order {
            let from = part[u];
            let w = g.vwgt[u];
            connectivity(u, part, &mut conn);
            let mut choice: Option<(i64, u64, usize)> = None;
            for q in 0..k {
                if q == from || conn[q] == 0 && conn[from] > 0 {
                    continue;
                }
                if (weights[q] + w) as f64 > caps[q] {
                    continue;
                }
                let gain = conn[q] - conn[from];
                let acceptable = gain > 0 || (gain == 0 && w > 0 && weights[q] + w < weights[from]);
                if !acceptable {
                    continue;
                }
                let better = match choice {
                    None => true,
                    Some((bg, bw, _)) => gain > bg || (gain == bg && weights[q] < bw),
                };
                if better {
                    choice = Some((gain, weights[q], q));
                }
            }
            if let Some((gain, _, to)) = choice {
                if let Some(log) = log.as_deref_mut() {
                    log.push(RefineMove {
                        gain,
                        from_weight: weights[from],
                        to_weight: weights[to],
                        vertex_weight: w,
                    });
                }
                weights[from] -= w;
                weights[to] += w;
                part[u] = to;
                moved = true;
            }
        }
        if !moved {
            break;
        }
    }
}

/// Moves vertices out of parts above their cap, cheapest cut increase first.
fn repair_balance(g: &WeightedGraph, part: &mut [usize], weights: &mut [u64], caps: &[f64]) {
    let k = caps.len();
    let mut conn = vec![0i64; k];
    loop {
        let Some(over) = (0..k).find(|&p| weights[p] as f64 > caps[p]) else {
            return;
        };
        let mut best: Option<(i64, u64, usize, usize)> = None;
        for u in (0..g.n()).filter(|&u| part[u] == over && g.vwgt[u] > 0) {
            conn.iter_mut().for_each(|c| *c = 0);
            for (v, w) in g.neighbors(u) {
                conn[part[v]] += w as i64;
            }
            for q in (0..k).filter(|&q| q != over) {
                if (weights[q] + g.vwgt[u]) as f64 > caps[q] {
                    continue;
                }
                let gain = conn[q] - conn[over];
                let better = match best {
                    None => true,
                    Some((bg, bw, _, _)) => gain > bg || (gain == bg && weights[q] < bw),
                };
                if better {
                    best = Some((gain, weights[q], u, q));
                }
            }
        }
        match best {
            Some((_, _, u, q)) => {
                weights[over] -= g.vwgt[u];
                weights[q] += g.vwgt[u];
                part[u] = q;
            }
            None => return,
        }
    }
}
