use std::io::{Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::frustum::{frustum_from_view, Frustum, GroupVisibility, PixelRect};
use super::grouping::GroupedCloud;
use crate::error::{Error, Result};
use crate::scene::{CameraView, CullingMode};

/// Patch x GPU matrix of in-frustum point counts, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessMatrix {
    rows: usize,
    cols: usize,
    data: Vec<u64>,
}

impl AccessMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        AccessMatrix {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    pub fn from_rows(rows: Vec<Vec<u64>>) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if cols == 0 {
            return Err(Error::param("access_matrix", "needs at least one row and one column"));
        }
        if let Some(i) = rows.iter().position(|r| r.len() != cols) {
            return Err(Error::param("access_matrix", format!("row {i} has a different width")));
        }
        Ok(AccessMatrix {
            rows: rows.len(),
            cols,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> u64 {
        self.data[row * self.cols + col]
    }

    pub fn set(&mut self, row: usize, col: usize, value: u64) {
        self.data[row * self.cols + col] = value;
    }

    pub fn row(&self, row: usize) -> &[u64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn row_sum(&self, row: usize) -> u64 {
        self.row(row).iter().sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        (0..self.rows).map(|j| self.row_sum(j)).collect()
    }

    pub fn total(&self) -> u64 {
        self.data.iter().sum()
    }

    /// Sums columns into buckets: column `k` goes to bucket `bucket_of(k)`.
    pub fn aggregate_columns(&self, buckets: usize, bucket_of: impl Fn(usize) -> usize) -> Self {
        let mut out = AccessMatrix::zeros(self.rows, buckets);
        for j in 0..self.rows {
            for k in 0..self.cols {
                out.data[j * buckets + bucket_of(k)] += self.get(j, k);
            }
        }
        out
    }

    /// Sub-matrix of the given rows and columns, in the given order.
    pub fn select(&self, rows: &[usize], cols: &[usize]) -> Self {
        AccessMatrix {
            rows: rows.len(),
            cols: cols.len(),
            data: rows
                .iter()
                .flat_map(|&j| cols.iter().map(move |&k| self.get(j, k)))
                .collect(),
        }
    }

    /// CSV with header `patch_id,gpu_0,...,gpu_{N-1}`.
    pub fn write_csv<W: Write>(&self, out: W) -> std::result::Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["patch_id".to_owned()];
        header.extend((0..self.cols).map(|k| format!("gpu_{k}")));
        w.write_record(&header)?;
        for j in 0..self.rows {
            let mut rec = vec![j.to_string()];
            rec.extend(self.row(j).iter().map(u64::to_string));
            w.write_record(&rec)?;
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

    /// Rows must appear in `patch_id` order starting at 0.
    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let header = rdr
            .headers()
            .map_err(|e| csv_format_error(&e))?
            .clone();
        if header.get(0) != Some("patch_id") || header.len() < 2 {
            return Err(Error::Format {
                what: "access matrix csv",
                offset: 0,
                reason: "header must be patch_id,gpu_0,...".into(),
            });
        }
        for (k, name) in header.iter().skip(1).enumerate() {
            if name != format!("gpu_{k}") {
                return Err(Error::Format {
                    what: "access matrix csv",
                    offset: 0,
                    reason: format!("column {} should be gpu_{k}, found {name}", k + 1),
                });
            }
        }
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_format_error(&e))?;
            let offset = rec.position().map_or(0, |p| p.byte());
            let parse = |s: &str| {
                s.trim().parse::<u64>().map_err(|e| Error::Format {
                    what: "access matrix csv",
                    offset,
                    reason: format!("`{s}`: {e}"),
                })
            };
            let id = parse(&rec[0])?;
            if id != rows.len() as u64 {
                return Err(Error::Format {
                    what: "access matrix csv",
                    offset,
                    reason: format!("expected patch_id {}, found {id}", rows.len()),
                });
            }
            rows.push(rec.iter().skip(1).map(parse).collect::<Result<Vec<u64>>>()?);
        }
        AccessMatrix::from_rows(rows)
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_csv(file)
    }
}

fn csv_format_error(e: &csv::Error) -> Error {
    Error::Format {
        what: "csv",
        offset: e.position().map_or(0, |p| p.byte()),
        reason: e.to_string(),
    }
}

/// GPU owning each point of a [`GroupedCloud`], indexed in sorted order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ownership {
    owner: Vec<u32>,
    n_gpus: usize,
}

impl Ownership {
    pub fn new(owner: Vec<u32>, n_gpus: usize) -> Result<Self> {
        if n_gpus == 0 {
            return Err(Error::param("n_gpus", "must be at least 1"));
        }
        if let Some(i) = owner.iter().position(|&g| g as usize >= n_gpus) {
            return Err(Error::Consistency(format!(
                "point {i} owned by gpu {} but only {n_gpus} gpus exist",
                owner[i]
            )));
        }
        Ok(Ownership { owner, n_gpus })
    }

    pub fn single_gpu(n_points: usize) -> Self {
        Ownership {
            owner: vec![0; n_points],
            n_gpus: 1,
        }
    }

    pub fn owner(&self, sorted_index: usize) -> usize {
        self.owner[sorted_index] as usize
    }

    pub fn owners(&self) -> &[u32] {
        &self.owner
    }

    pub fn n_gpus(&self) -> usize {
        self.n_gpus
    }

    /// Points held by each GPU.
    pub fn load(&self) -> Vec<u64> {
        let mut out = vec![0; self.n_gpus];
        for &g in &self.owner {
            out[g as usize] += 1;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Granularity {
    /// Count member points that pass the per-point test.
    Exact,
    /// Count every member of every group that is not culled (an upper bound).
    GroupApprox,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AccessOptions {
    /// Each image is split into `patch_factor^2` patches.
    pub patch_factor: u32,
    pub granularity: Granularity,
    pub culling: CullingMode,
    /// Uniform point radius used to inflate the culling test.
    pub point_radius: f64,
}

impl AccessOptions {
    pub fn new(patch_factor: u32, culling: CullingMode) -> Self {
        AccessOptions {
            patch_factor,
            granularity: Granularity::Exact,
            culling,
            point_radius: 0.0,
        }
    }

    pub fn patches_per_view(&self) -> usize {
        (self.patch_factor as usize).pow(2)
    }
}

/// The `P^2` patch rows of one view, in `patch_row * P + patch_col` order.
pub fn view_access_rows(
    grouped: &GroupedCloud,
    ownership: &Ownership,
    view: &CameraView,
    opts: &AccessOptions,
) -> Result<Vec<Vec<u64>>> {
    check_inputs(grouped, ownership, opts)?;
    let time = match opts.culling {
        CullingMode::Spatial => None,
        CullingMode::SpatioTemporal => Some(view.timestamp.ok_or_else(|| {
            Error::Configuration(format!(
                "spatio-temporal culling needs a timestamp on view {}",
                view.id
            ))
        })?),
    };
    let presence = match time {
        Some(_) => Some(grouped.presence().ok_or_else(|| {
            Error::Configuration("spatio-temporal culling needs point presence intervals".into())
        })?),
        None => None,
    };

    let full = frustum_from_view(view, None)?.with_margin(opts.point_radius);
    let candidates: Vec<usize> = grouped
        .groups()
        .iter()
        .filter(|g| full.classify_aabb(&g.aabb) == GroupVisibility::Intersecting)
        .map(|g| g.id)
        .collect();

    let p = opts.patch_factor;
    let mut rows = Vec::with_capacity(opts.patches_per_view());
    for pr in 0..p {
        for pc in 0..p {
            let rect = PixelRect::patch(view, p, pr, pc);
            let frustum: Frustum = frustum_from_view(view, Some(rect))?.with_margin(opts.point_radius);
            let mut counts = vec![0u64; ownership.n_gpus()];
            for &gid in &candidates {
                let group = &grouped.groups()[gid];
                if frustum.classify_aabb(&group.aabb) == GroupVisibility::Outside {
                    continue;
                }
                match opts.granularity {
                    Granularity::GroupApprox => {
                        for i in group.range() {
                            counts[ownership.owner(i)] += 1;
                        }
                    }
                    Granularity::Exact => {
                        for i in group.range() {
                            let alive = match (time, presence) {
                                (Some(t), Some(pres)) => pres[i].contains(t),
                                _ => true,
                            };
                            if alive && frustum.contains(grouped.points()[i]) {
                                counts[ownership.owner(i)] += 1;
                            }
                        }
                    }
                }
            }
            rows.push(counts);
        }
    }
    Ok(rows)
}

/// Access matrix for a batch; row `view_index * P^2 + patch_row * P + patch_col`.
pub fn build_access_matrix(
    grouped: &GroupedCloud,
    ownership: &Ownership,
    batch: &[CameraView],
    opts: &AccessOptions,
) -> Result<AccessMatrix> {
    if batch.is_empty() {
        return Err(Error::param("batch", "must contain at least one view"));
    }
    let per_view = batch
        .par_iter()
        .map(|v| view_access_rows(grouped, ownership, v, opts))
        .collect::<Result<Vec<_>>>()?;
    AccessMatrix::from_rows(per_view.into_iter().flatten().collect())
}

fn check_inputs(grouped: &GroupedCloud, ownership: &Ownership, opts: &AccessOptions) -> Result<()> {
    if opts.patch_factor == 0 {
        return Err(Error::param("patch_factor", "must be at least 1"));
    }
    if ownership.owners().len() != grouped.len() {
        return Err(Error::Consistency(format!(
            "ownership covers {} points, cloud has {}",
            ownership.owners().len(),
            grouped.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point3, Rotation};
    use crate::scene::{PointCloud, Presence};
    use crate::visibility::{cull_point, zorder_group};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn camera(id: u32, pos: Point3) -> CameraView {
        CameraView {
            id,
            position: pos,
            rotation: Rotation::look_along(Point3::new(0.0, 0.0, -1.0), Point3::new(0.0, 1.0, 0.0)),
            fov_x: 1.0,
            fov_y: 0.8,
            near: 0.5,
            far: 40.0,
            width: 40,
            height: 30,
            timestamp: None,
        }
    }

    fn random_cloud(seed: u64, n: usize) -> PointCloud {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts = (0..n)
            .map(|_| Point3::new(rng.gen_range(-20.0..20.0), rng.gen_range(-20.0..20.0), rng.gen_range(0.0..5.0)))
            .collect();
        PointCloud::new(pts, None).unwrap()
    }

    #[test]
    fn tiny_scene_matches_brute_force() {
        let cloud = random_cloud(1, 20);
        let grouped = zorder_group(&cloud, 3).unwrap();
        let owners: Vec<u32> = (0..20).map(|i| (i % 2) as u32).collect();
        let own = Ownership::new(owners.clone(), 2).unwrap();
        let view = camera(0, Point3::new(0.0, 0.0, 15.0));
        let m = build_access_matrix(&grouped, &own, &[view.clone()], &AccessOptions::new(1, CullingMode::Spatial))
            .unwrap();
        let f = frustum_from_view(&view, None).unwrap();
        let mut expected = [0u64; 2];
        for (i, p) in grouped.points().iter().enumerate() {
            if cull_point(&f, *p, None, None).unwrap() {
                expected[owners[i] as usize] += 1;
            }
        }
        assert!(expected.iter().sum::<u64>() > 0);
        assert_eq!(m.row(0), &expected);
    }

    #[test]
    fn exact_bounded_by_group_approx_and_single_gpu_column() {
        let cloud = random_cloud(2, 2_000);
        let grouped = zorder_group(&cloud, 64).unwrap();
        let own = Ownership::new((0..2_000).map(|i| (i * 7 % 3) as u32).collect(), 3).unwrap();
        let batch: Vec<CameraView> = (0..3)
            .map(|i| camera(i, Point3::new(i as f64 * 6.0 - 6.0, 2.0, 18.0)))
            .collect();
        let mut opts = AccessOptions::new(2, CullingMode::Spatial);
        let exact = build_access_matrix(&grouped, &own, &batch, &opts).unwrap();
        opts.granularity = Granularity::GroupApprox;
        let approx = build_access_matrix(&grouped, &own, &batch, &opts).unwrap();
        assert_eq!(exact.rows(), 12);
        for j in 0..12 {
            for k in 0..3 {
                assert!(exact.get(j, k) <= approx.get(j, k));
            }
        }
        opts.granularity = Granularity::Exact;
        let single = build_access_matrix(&grouped, &Ownership::single_gpu(2_000), &batch, &opts).unwrap();
        assert_eq!(single.cols(), 1);
        assert_eq!(single.row_sums(), exact.row_sums());
    }

    #[test]
    fn patch_rows_partition_view_count() {
        let cloud = random_cloud(3, 3_000);
        let grouped = zorder_group(&cloud, 50).unwrap();
        let own = Ownership::single_gpu(3_000);
        let view = camera(0, Point3::new(1.0, -2.0, 20.0));
        let whole = view_access_rows(&grouped, &own, &view, &AccessOptions::new(1, CullingMode::Spatial)).unwrap();
        for p in [2, 3, 4] {
            let rows = view_access_rows(&grouped, &own, &view, &AccessOptions::new(p, CullingMode::Spatial)).unwrap();
            assert_eq!(rows.len(), (p * p) as usize);
            let sum: u64 = rows.iter().map(|r| r[0]).sum();
            assert_eq!(sum, whole[0][0]);
        }
    }

    #[test]
    fn temporal_requires_data() {
        let cloud = random_cloud(4, 50);
        let grouped = zorder_group(&cloud, 8).unwrap();
        let own = Ownership::single_gpu(50);
        let view = camera(0, Point3::new(0.0, 0.0, 15.0));
        let opts = AccessOptions::new(1, CullingMode::SpatioTemporal);
        assert!(matches!(
            build_access_matrix(&grouped, &own, &[view.clone()], &opts),
            Err(Error::Configuration(_))
        ));
        let pres = vec![Presence { start: 0.0, end: 1.0 }; 50];
        let cloud = PointCloud::new(cloud.points().to_vec(), Some(pres)).unwrap();
        let grouped = zorder_group(&cloud, 8).unwrap();
        assert!(matches!(
            build_access_matrix(&grouped, &own, &[view.clone()], &opts),
            Err(Error::Configuration(_))
        ));
        let mut timed = view;
        timed.timestamp = Some(3.0);
        let m = build_access_matrix(&grouped, &own, &[timed], &opts).unwrap();
        assert_eq!(m.total(), 0);
    }

    #[test]
    fn ownership_mismatch_is_consistency_error() {
        let grouped = zorder_group(&random_cloud(5, 10), 4).unwrap();
        let own = Ownership::single_gpu(9);
        let r = build_access_matrix(&grouped, &own, &[camera(0, Point3::ZERO)], &AccessOptions::new(1, CullingMode::Spatial));
        assert!(matches!(r, Err(Error::Consistency(_))));
        assert!(matches!(Ownership::new(vec![0, 3], 2), Err(Error::Consistency(_))));
    }

    #[test]
    fn csv_round_trip_and_errors() {
        let m = AccessMatrix::from_rows(vec![vec![5, 0, 2], vec![0, 7, 1]]).unwrap();
        let mut buf = Vec::new();
        m.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("patch_id,gpu_0,gpu_1,gpu_2\n0,5,0,2\n"));
        assert_eq!(AccessMatrix::read_csv(&buf[..]).unwrap(), m);
        let bad = "patch_id,gpu_0\n0,x\n";
        assert!(matches!(AccessMatrix::read_csv(bad.as_bytes()), Err(Error::Format { .. })));
        let skipped = "patch_id,gpu_0\n1,4\n";
        assert!(matches!(AccessMatrix::read_csv(skipped.as_bytes()), Err(Error::Format { .. })));
    }

    #[test]
    fn aggregate_and_select() {
        let m = AccessMatrix::from_rows(vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8]]).unwrap();
        let agg = m.aggregate_columns(2, |k| k / 2);
        assert_eq!(agg.row(0), &[3, 7]);
        assert_eq!(agg.row(1), &[11, 15]);
        let sub = m.select(&[1], &[3, 0]);
        assert_eq!(sub.row(0), &[8, 5]);
    }
}
