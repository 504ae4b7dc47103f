use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::report::EpochReport;
use super::trace::{account, estimate_step_time, IterationTrace};
use super::{CoefficientMode, LocalityConfig, SimConfig, Staleness, Strategy};
use crate::error::Result;
use crate::partition::{build_bipartite_graph, hierarchical_partition, image_ownership, PartitionAssignment};
use crate::placement::{auto_coefficients, hierarchical_place, CostCoefficients, HierarchicalConfig, PlacementSolution, ProfilerStats};
use crate::scene::SceneDataset;
use crate::visibility::{build_access_matrix, zorder_group, AccessMatrix, AccessOptions, GroupedCloud, Ownership};

const STREAM_SCHEDULE: u64 = 10;
const STREAM_POINT_OWNERS: u64 = 11;
const STREAM_IMAGE_OWNERS: u64 = 12;
/// Random patch placement for iteration `i` uses stream `STREAM_PLACEMENT + i`.
const STREAM_PLACEMENT: u64 = 1 << 32;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

/// Everything that stays fixed over a training run for one strategy.
#[derive(Debug, Clone)]
pub struct Simulation<'a> {
    dataset: &'a SceneDataset,
    config: SimConfig,
    strategy: Strategy,
    grouped: GroupedCloud,
    ownership: Ownership,
    /// Machine holding each view's training image.
    image_owner: Vec<u32>,
    partition: Option<PartitionAssignment>,
    opts: AccessOptions,
}

/// `len` items dealt into `parts` near-equal chunks after a seeded shuffle.
fn random_chunks(len: usize, parts: usize, rng: &mut ChaCha8Rng) -> Vec<u32> {
    let mut order: Vec<usize> = (0..len).collect();
    order.shuffle(rng);
    let mut owner = vec![0u32; len];
    for (pos, &i) in order.iter().enumerate() {
        owner[i] = (pos * parts / len.max(1)) as u32;
    }
    owner
}

impl<'a> Simulation<'a> {
    pub fn new(dataset: &'a SceneDataset, config: SimConfig, strategy: Strategy) -> Result<Self> {
        dataset.validate()?;
        config.validate(dataset.views.len())?;
        let topo = config.topology;
        let grouped = zorder_group(&dataset.cloud, config.group_size)?;
        let (ownership, image_owner, partition) = match &strategy {
            Strategy::Random => {
                let by_original = random_chunks(
                    grouped.len(),
                    topo.n_gpus(),
                    &mut stream(config.seed, STREAM_POINT_OWNERS),
                );
                let owner = grouped.permutation().iter().map(|&o| by_original[o as usize]).collect();
                let images = random_chunks(
                    dataset.views.len(),
                    topo.machines,
                    &mut stream(config.seed, STREAM_IMAGE_OWNERS),
                );
                (Ownership::new(owner, topo.n_gpus())?, images, None)
            }
            Strategy::LocalityAware(loc) => {
                let graph = build_bipartite_graph(&grouped, dataset)?;
                let part = hierarchical_partition(&graph, topo.machines, topo.gpus_per_machine, &loc.partition)?;
                let own = part.point_ownership(&grouped)?;
                (own, image_ownership(&part, &graph), Some(part))
            }
        };
        let opts = AccessOptions {
            granularity: config.granularity,
            point_radius: config.point_radius,
            ..AccessOptions::new(config.patch_factor, dataset.profile.culling_mode)
        };
        Ok(Simulation {
            dataset,
            config,
            strategy,
            grouped,
            ownership,
            image_owner,
            partition,
            opts,
        })
    }

    pub fn grouped(&self) -> &GroupedCloud {
        &self.grouped
    }

    pub fn ownership(&self) -> &Ownership {
        &self.ownership
    }

    pub fn partition(&self) -> Option<&PartitionAssignment> {
        self.partition.as_ref()
    }

    pub fn image_owner(&self) -> &[u32] {
        &self.image_owner
    }

    /// Batches per epoch: a seeded shuffle of all views cut into full batches (a short tail is dropped).
    /// Depends only on the seed, so both strategies see the same sequence.
    pub fn schedule(&self) -> Vec<Vec<Vec<u32>>> {
        training_schedule(self.dataset.views.len(), &self.config)
    }

    pub fn access_matrix(&self, batch: &[u32]) -> Result<AccessMatrix> {
        let views: Vec<_> = batch.iter().map(|&v| self.dataset.views[v as usize].clone()).collect();
        build_access_matrix(&self.grouped, &self.ownership, &views, &self.opts)
    }

    /// Decides placement on `placement_matrix` (the fresh one when `None`) and charges costs
    /// against the fresh matrix.
    pub fn run_iteration(
        &self,
        epoch: usize,
        iteration: usize,
        batch: &[u32],
        placement_matrix: Option<&AccessMatrix>,
        inter: &CostCoefficients,
    ) -> Result<IterationTrace> {
        self.iterate(epoch, iteration, batch, placement_matrix, inter).map(|(t, _)| t)
    }

    fn iterate(
        &self,
        epoch: usize,
        iteration: usize,
        batch: &[u32],
        placement_matrix: Option<&AccessMatrix>,
        inter: &CostCoefficients,
    ) -> Result<(IterationTrace, AccessMatrix)> {
        let fresh = self.access_matrix(batch)?;
        let topo = &self.config.topology;
        let (w, coefficients) = match &self.strategy {
            Strategy::Random => {
                let mut order: Vec<usize> = (0..fresh.rows()).collect();
                order.shuffle(&mut stream(self.config.seed, STREAM_PLACEMENT + iteration as u64));
                let mut gpu = vec![0u32; fresh.rows()];
                for (i, &j) in order.iter().enumerate() {
                    gpu[j] = (i % topo.n_gpus()) as u32;
                }
                (PlacementSolution::new(gpu, topo.n_gpus())?, None)
            }
            Strategy::LocalityAware(loc) => {
                let cfg = HierarchicalConfig {
                    machines: topo.machines,
                    gpus_per_machine: topo.gpus_per_machine,
                    inter: *inter,
                    intra: loc.intra,
                    budget: loc.budget,
                };
                (hierarchical_place(placement_matrix.unwrap_or(&fresh), &cfg)?, Some(*inter))
            }
        };
        let (forward, backward, local_points) = account(&fresh, &w, topo);
        let per_view = self.opts.patches_per_view();
        let image_hits = (0..fresh.rows())
            .filter(|&j| {
                let view = batch[j / per_view] as usize;
                topo.machine_of(w.gpu_of(j)) == self.image_owner[view] as usize
            })
            .count() as u64;
        let mut trace = IterationTrace {
            epoch,
            iteration,
            views: batch.to_vec(),
            assignment: w.assignment().to_vec(),
            coefficients,
            bytes_per_point: self.dataset.profile.bytes_per_point(),
            forward,
            backward,
            local_points,
            total_access: fresh.total(),
            image_hits,
            patches: fresh.rows() as u64,
            est_time: 0.0,
        };
        trace.est_time = estimate_step_time(&trace, topo);
        Ok((trace, fresh))
    }

    pub fn run(&self) -> Result<EpochReport> {
        let schedule = self.schedule();
        let n_views = self.dataset.views.len();
        let mut recorded: Vec<Option<Vec<Vec<u64>>>> = vec![None; n_views];
        let mut iterations = Vec::new();
        let mut previous: Option<ProfilerStats> = None;
        let per_view = self.opts.patches_per_view();
        for (epoch, batches) in schedule.iter().enumerate() {
            for batch in batches {
                let inter = self.inter_coefficients(previous.as_ref())?;
                let stale = match self.config.staleness {
                    Staleness::StaleFromEpoch(e) if epoch > e => self.stale_matrix(batch, &recorded)?,
                    _ => None,
                };
                let (trace, fresh) = self.iterate(epoch, iterations.len(), batch, stale.as_ref(), &inter)?;
                if self.config.staleness == Staleness::StaleFromEpoch(epoch) {
                    for (i, &v) in batch.iter().enumerate() {
                        let rows = (i * per_view..(i + 1) * per_view).map(|j| fresh.row(j).to_vec()).collect();
                        recorded[v as usize] = Some(rows);
                    }
                }
                previous = Some(self.profile(&trace));
                iterations.push(trace);
            }
        }
        Ok(EpochReport::new(self.strategy.name(), self.config, schedule, iterations))
    }

    fn stale_matrix(&self, batch: &[u32], recorded: &[Option<Vec<Vec<u64>>>]) -> Result<Option<AccessMatrix>> {
        let mut rows = Vec::new();
        for &v in batch {
            match &recorded[v as usize] {
                Some(r) => rows.extend(r.iter().cloned()),
                None => return Ok(None),
            }
        }
        AccessMatrix::from_rows(rows).map(Some)
    }

    fn inter_coefficients(&self, previous: Option<&ProfilerStats>) -> Result<CostCoefficients> {
        let Strategy::LocalityAware(LocalityConfig { coefficients, p, .. }) = &self.strategy else {
            return Ok(CostCoefficients::balanced());
        };
        match (coefficients, previous) {
            (CoefficientMode::Fixed(c), _) => Ok(*c),
            (CoefficientMode::Auto, Some(stats)) if stats.t_comm + stats.t_comp > 0.0 => auto_coefficients(stats, *p),
            (CoefficientMode::Auto, _) => Ok(CostCoefficients::balanced().with_p(*p)),
        }
    }

    /// Timings and machine-level peak loads of the forward leg, as a profiler would report them.
    fn profile(&self, trace: &IterationTrace) -> ProfilerStats {
        let topo = &self.config.topology;
        let f = &trace.forward;
        let bpp = trace.bytes_per_point as f64;
        let t_comp = f.max_comp() as f64 * topo.compute_cost;
        let t_comm = (0..f.n_gpus())
            .map(|k| {
                (f.send_inter[k] + f.recv_inter[k]) as f64 * bpp / topo.inter_bandwidth
                    + (f.send_intra[k] + f.recv_intra[k]) as f64 * bpp / topo.intra_bandwidth
            })
            .fold(0.0, f64::max);
        let mut send = vec![0u64; topo.machines];
        let mut recv = vec![0u64; topo.machines];
        for k in 0..f.n_gpus() {
            send[topo.machine_of(k)] += f.send_inter[k];
            recv[topo.machine_of(k)] += f.recv_inter[k];
        }
        ProfilerStats {
            t_comm,
            t_comp,
            max_send: send.into_iter().max().unwrap_or(0),
            max_recv: recv.into_iter().max().unwrap_or(0),
        }
    }
}

pub(crate) fn training_schedule(n_views: usize, config: &SimConfig) -> Vec<Vec<Vec<u32>>> {
    let mut rng = stream(config.seed, STREAM_SCHEDULE);
    (0..config.epochs)
        .map(|_| {
            let mut order: Vec<u32> = (0..n_views as u32).collect();
            order.shuffle(&mut rng);
            order
                .chunks_exact(config.batch_size)
                .map(<[u32]>::to_vec)
                .collect()
        })
        .collect()
}

pub fn run_training_sim(dataset: &SceneDataset, config: SimConfig, strategy: Strategy) -> Result<EpochReport> {
    Simulation::new(dataset, config, strategy)?.run()
}
