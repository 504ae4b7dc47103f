use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::graph::{BipartiteGraph, WeightedGraph};
use super::multilevel::{balance_ratio, partition_weighted, PartitionConfig, PartitionQuality};
use crate::error::{Error, Result};
use crate::visibility::{GroupedCloud, Ownership};

/// Point-group placement on a `machines x gpus_per_machine` cluster.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PartitionAssignment {
    pub machines: usize,
    pub gpus_per_machine: usize,
    pub group_machine: Vec<u32>,
    /// GPU index local to the group's machine.
    pub group_gpu: Vec<u32>,
    /// Machine owning each image, from the first partitioning level.
    pub image_machine: Vec<u32>,
    /// Global GPU of each image vertex, from the second level.
    pub image_gpu: Vec<u32>,
}

impl PartitionAssignment {
    pub fn n_gpus(&self) -> usize {
        self.machines * self.gpus_per_machine
    }

    pub fn n_groups(&self) -> usize {
        self.group_machine.len()
    }

    pub fn global_gpu(&self, group: usize) -> usize {
        self.group_machine[group] as usize * self.gpus_per_machine + self.group_gpu[group] as usize
    }

    pub fn machine_of_gpu(&self, gpu: usize) -> usize {
        gpu / self.gpus_per_machine
    }

    /// Point count held by each global GPU.
    pub fn gpu_weights(&self, group_weights: &[u64]) -> Vec<u64> {
        let mut out = vec![0; self.n_gpus()];
        for (g, &w) in group_weights.iter().enumerate() {
            out[self.global_gpu(g)] += w;
        }
        out
    }

    pub fn point_ownership(&self, grouped: &GroupedCloud) -> Result<Ownership> {
        if grouped.groups().len() != self.n_groups() {
            return Err(Error::Consistency(format!(
                "partition covers {} groups, cloud has {}",
                self.n_groups(),
                grouped.groups().len()
            )));
        }
        let mut owner = vec![0u32; grouped.len()];
        for g in grouped.groups() {
            let gpu = self.global_gpu(g.id) as u32;
            owner[g.range()].iter_mut().for_each(|o| *o = gpu);
        }
        Ownership::new(owner, self.n_gpus())
    }

    /// Edge cut and balance of the final GPU-level placement over the full graph.
    pub fn quality(&self, graph: &BipartiteGraph) -> PartitionQuality {
        let mut part: Vec<usize> = (0..self.n_groups()).map(|g| self.global_gpu(g)).collect();
        part.extend(self.image_gpu.iter().map(|&g| g as usize));
        PartitionQuality {
            edge_cut: graph.edge_cut(&part),
            balance: balance_ratio(&self.gpu_weights(graph.group_weights())),
            part_weights: self.gpu_weights(graph.group_weights()),
        }
    }

    /// Cut between machines only.
    pub fn machine_edge_cut(&self, graph: &BipartiteGraph) -> u64 {
        let mut part: Vec<usize> = self.group_machine.iter().map(|&m| m as usize).collect();
        part.extend(self.image_machine.iter().map(|&m| m as usize));
        graph.edge_cut(&part)
    }

    /// CSV `group_id,machine,gpu` with the GPU index local to the machine.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["group_id", "machine", "gpu"])?;
        for g in 0..self.n_groups() {
            w.write_record([
                g.to_string(),
                self.group_machine[g].to_string(),
                self.group_gpu[g].to_string(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file).map_err(|source| Error::Csv {
            path: path.to_owned(),
            source,
        })
    }

    /// Imports an externally computed placement. Images are owned by their heaviest machine.
    pub fn read_csv<R: Read>(
        input: R,
        graph: &BipartiteGraph,
        machines: usize,
        gpus_per_machine: usize,
    ) -> Result<Self> {
        if machines == 0 || gpus_per_machine == 0 {
            return Err(Error::param("machines", "cluster must have at least one gpu"));
        }
        let n = graph.n_groups();
        let mut machine = vec![u32::MAX; n];
        let mut gpu = vec![u32::MAX; n];
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr.headers().map_err(|e| fmt_err(e.position().map_or(0, |p| p.byte()), e.to_string()))?;
        if header.iter().collect::<Vec<_>>() != ["group_id", "machine", "gpu"] {
            return Err(fmt_err(0, "header must be group_id,machine,gpu".into()));
        }
        for rec in rdr.records() {
            let rec = rec.map_err(|e| fmt_err(e.position().map_or(0, |p| p.byte()), e.to_string()))?;
            let offset = rec.position().map_or(0, |p| p.byte());
            let field = |i: usize| -> Result<usize> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| fmt_err(offset, format!("column {i} is not an index")))
            };
            let (g, m, k) = (field(0)?, field(1)?, field(2)?);
            if g >= n || m >= machines || k >= gpus_per_machine {
                return Err(Error::Consistency(format!(
                    "row ({g}, {m}, {k}) outside {n} groups on {machines}x{gpus_per_machine} gpus"
                )));
            }
            if machine[g] != u32::MAX {
                return Err(Error::Consistency(format!("group {g} assigned twice")));
            }
            machine[g] = m as u32;
            gpu[g] = k as u32;
        }
        if let Some(g) = machine.iter().position(|&m| m == u32::MAX) {
            return Err(Error::Consistency(format!("group {g} has no assignment")));
        }
        let gm: Vec<usize> = machine.iter().map(|&m| m as usize).collect();
        let image_machine = heaviest(&graph.image_affinity(&gm, machines));
        let global: Vec<usize> = (0..n)
            .map(|g| gm[g] * gpus_per_machine + gpu[g] as usize)
            .collect();
        let image_gpu = heaviest(&graph.image_affinity(&global, machines * gpus_per_machine));
        Ok(PartitionAssignment {
            machines,
            gpus_per_machine,
            group_machine: machine,
            group_gpu: gpu,
            image_machine,
            image_gpu,
        })
    }

    pub fn load_csv(path: &Path, graph: &BipartiteGraph, machines: usize, gpus_per_machine: usize) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file, graph, machines, gpus_per_machine)
    }
}

fn fmt_err(offset: u64, reason: String) -> Error {
    Error::Format {
        what: "partition csv",
        offset,
        reason,
    }
}

/// Index of the largest entry of each row, lowest index on ties.
fn heaviest(rows: &[Vec<u64>]) -> Vec<u32> {
    rows.iter()
        .map(|r| {
            r.iter()
                .enumerate()
                .max_by_key(|&(i, &w)| (w, std::cmp::Reverse(i)))
                .map_or(0, |(i, _)| i as u32)
        })
        .collect()
}

fn level_seed(seed: u64, machine: usize) -> u64 {
    seed.wrapping_add((machine as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Machines first, then each machine's groups (plus the images that lean towards it) across its GPUs.
pub fn hierarchical_partition(
    graph: &BipartiteGraph,
    machines: usize,
    gpus_per_machine: usize,
    config: &PartitionConfig,
) -> Result<PartitionAssignment> {
    if machines == 0 || gpus_per_machine == 0 {
        return Err(Error::param("machines", "need machines >= 1 and gpus_per_machine >= 1"));
    }
    let wg = WeightedGraph::from_bipartite(graph, config.image_weight_multiplier);
    let ng = graph.n_groups();
    let level1 = partition_weighted(&wg, machines, config)?;
    let group_machine: Vec<usize> = level1[..ng].to_vec();
    let image_machine: Vec<u32> = level1[ng..].iter().map(|&m| m as u32).collect();
    let image_home = heaviest(&graph.image_affinity(&group_machine, machines));

    let mut group_gpu = vec![0u32; ng];
    let mut image_gpu = vec![0u32; graph.n_images()];
    for m in 0..machines {
        let mut vertices: Vec<usize> = (0..ng).filter(|&g| group_machine[g] == m).collect();
        let n_local_groups = vertices.len();
        vertices.extend(
            (0..graph.n_images())
                .filter(|&i| image_home[i] as usize == m)
                .map(|i| ng + i),
        );
        if vertices.is_empty() {
            continue;
        }
        let sub = wg.induced(&vertices);
        let local_cfg = PartitionConfig {
            seed: level_seed(config.seed, m),
            ..*config
        };
        let local = partition_weighted(&sub, gpus_per_machine, &local_cfg)?;
        for (i, &v) in vertices.iter().enumerate() {
            let gpu = local[i] as u32;
            if i < n_local_groups {
                group_gpu[v] = gpu;
            } else {
                image_gpu[v - ng] = (m * gpus_per_machine) as u32 + gpu;
            }
        }
    }
    Ok(PartitionAssignment {
        machines,
        gpus_per_machine,
        group_machine: group_machine.iter().map(|&m| m as u32).collect(),
        group_gpu,
        image_machine,
        image_gpu,
    })
}

/// Machine owning each view's training image.
pub fn image_ownership(assignment: &PartitionAssignment, graph: &BipartiteGraph) -> Vec<u32> {
    if assignment.image_machine.len() == graph.n_images() {
        return assignment.image_machine.clone();
    }
    let gm: Vec<usize> = assignment.group_machine.iter().map(|&m| m as usize).collect();
    heaviest(&graph.image_affinity(&gm, assignment.machines))
}

/// Serialized form of the partition quality report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub machines: usize,
    pub gpus_per_machine: usize,
    pub epsilon: f64,
    pub edge_cut: u64,
    pub machine_edge_cut: u64,
    pub balance: f64,
    pub part_weights: Vec<u64>,
}

impl QualityReport {
    pub fn new(assignment: &PartitionAssignment, graph: &BipartiteGraph, epsilon: f64) -> Self {
        let q = assignment.quality(graph);
        QualityReport {
            machines: assignment.machines,
            gpus_per_machine: assignment.gpus_per_machine,
            epsilon,
            edge_cut: q.edge_cut,
            machine_edge_cut: assignment.machine_edge_cut(graph),
            balance: q.balance,
            part_weights: q.part_weights,
        }
    }
}
