use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::trace::IterationTrace;
use super::SimConfig;
use crate::error::{Error, Result};

pub const ITERATIONS_CSV_HEADER: [&str; 8] = [
    "iter",
    "gpu",
    "send_intra",
    "send_inter",
    "recv_intra",
    "recv_inter",
    "comp",
    "est_time",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub iterations: usize,
    /// Points crossing machines in the forward leg, the headline comparison quantity.
    pub total_inter_points_forward: u64,
    /// Forward plus backward.
    pub total_inter_points: u64,
    pub total_intra_points_forward: u64,
    pub total_inter_bytes_forward: u64,
    pub total_local_points: u64,
    pub total_access: u64,
    pub mean_comp: f64,
    pub max_comp: u64,
    /// Max over mean per-GPU compute, averaged over iterations.
    pub mean_comp_imbalance: f64,
    pub image_hit_rate: f64,
    pub total_est_time: f64,
    pub mean_est_time: f64,
    /// Percentiles of the per-GPU per-iteration compute samples.
    pub comp_p50: u64,
    pub comp_p90: u64,
    pub comp_p99: u64,
}

impl ReportSummary {
    pub fn from_traces(traces: &[IterationTrace]) -> Self {
        let iterations = traces.len();
        let samples = comp_samples(traces);
        let sum = |f: &dyn Fn(&IterationTrace) -> u64| traces.iter().map(f).sum::<u64>();
        let patches = sum(&|t| t.patches);
        let per_iter = |x: f64| if iterations == 0 { 0.0 } else { x / iterations as f64 };
        let total_est_time: f64 = traces.iter().map(|t| t.est_time).sum();
        ReportSummary {
            iterations,
            total_inter_points_forward: sum(&|t| t.forward.inter_points()),
            total_inter_points: sum(&|t| t.forward.inter_points() + t.backward.inter_points()),
            total_intra_points_forward: sum(&|t| t.forward.intra_points()),
            total_inter_bytes_forward: sum(&IterationTrace::inter_bytes_forward),
            total_local_points: sum(&|t| t.local_points),
            total_access: sum(&|t| t.total_access),
            mean_comp: if samples.is_empty() {
                0.0
            } else {
                samples.iter().sum::<u64>() as f64 / samples.len() as f64
            },
            max_comp: samples.last().copied().unwrap_or(0),
            mean_comp_imbalance: per_iter(traces.iter().map(|t| t.forward.comp_imbalance()).sum()),
            image_hit_rate: if patches == 0 {
                0.0
            } else {
                sum(&|t| t.image_hits) as f64 / patches as f64
            },
            total_est_time,
            mean_est_time: per_iter(total_est_time),
            comp_p50: percentile(&samples, 0.5),
            comp_p90: percentile(&samples, 0.9),
            comp_p99: percentile(&samples, 0.99),
        }
    }
}

/// Sorted per-GPU per-iteration compute, the rendering-time proxy distribution.
pub fn comp_samples(traces: &[IterationTrace]) -> Vec<u64> {
    let mut s: Vec<u64> = traces.iter().flat_map(|t| t.forward.comp.iter().copied()).collect();
    s.sort_unstable();
    s
}

/// Nearest-rank percentile of sorted samples.
fn percentile(sorted: &[u64], q: f64) -> u64 {
    if sorted.is_empty() {
        return 0;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    sorted[rank.clamp(1, sorted.len()) - 1]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochReport {
    pub strategy: String,
    pub config: SimConfig,
    /// Views of every batch, per epoch.
    pub schedule: Vec<Vec<Vec<u32>>>,
    pub summary: ReportSummary,
    pub iterations: Vec<IterationTrace>,
}

impl EpochReport {
    pub fn new(strategy: &str, config: SimConfig, schedule: Vec<Vec<Vec<u32>>>, iterations: Vec<IterationTrace>) -> Self {
        EpochReport {
            strategy: strategy.to_owned(),
            config,
            schedule,
            summary: ReportSummary::from_traces(&iterations),
            iterations,
        }
    }

    pub fn comp_samples(&self) -> Vec<u64> {
        comp_samples(&self.iterations)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("reports contain only finite numbers") + "\n"
    }

    pub fn save_json(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load_json(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|source| Error::Json {
            path: path.to_owned(),
            source,
        })
    }

    /// One row per iteration and GPU with forward-leg counts.
    pub fn write_iterations_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(ITERATIONS_CSV_HEADER)?;
        for t in &self.iterations {
            let f = &t.forward;
            for k in 0..f.n_gpus() {
                w.write_record([
                    t.iteration.to_string(),
                    k.to_string(),
                    f.send_intra[k].to_string(),
                    f.send_inter[k].to_string(),
                    f.recv_intra[k].to_string(),
                    f.recv_inter[k].to_string(),
                    f.comp[k].to_string(),
                    t.est_time.to_string(),
                ])?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn save_iterations_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_iterations_csv(file).map_err(|source| Error::Csv {
            path: path.to_owned(),
            source,
        })
    }
}

/// Percent fewer forward inter-machine points than the baseline; 0 when the baseline moves nothing.
pub fn comm_reduction(baseline: &EpochReport, ours: &EpochReport) -> Result<f64> {
    if baseline.schedule != ours.schedule {
        return Err(Error::Comparison("the runs processed different batch sequences".into()));
    }
    let base = baseline.summary.total_inter_points_forward;
    if base == 0 {
        return Ok(0.0);
    }
    Ok(100.0 * (1.0 - ours.summary.total_inter_points_forward as f64 / base as f64))
}
