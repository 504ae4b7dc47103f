use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{CameraView, CullingMode, PointCloud, Presence, SceneDataset, WorkloadProfile};
use crate::error::{Error, Result};
use crate::geometry::{Point3, Rotation};

// Independent RNG streams so that e.g. the view count never perturbs the points.
const STREAM_POINTS: u64 = 0;
const STREAM_VIEWS: u64 = 1;
const STREAM_TIME: u64 = 2;

fn stream(seed: u64, id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(id);
    rng
}

const IMAGE_WIDTH: u32 = 512;
const IMAGE_HEIGHT: u32 = 384;

/// Drone-style survey: points on a ground plane, cameras pointing straight down.
#[derive(Debug, Clone, PartialEq)]
pub struct AerialParams {
    pub seed: u64,
    pub n_points: usize,
    /// Rows and columns of the flight grid.
    pub grid: (usize, usize),
    pub n_views: usize,
    pub altitude: f64,
    pub fov_x: f64,
    pub profile: WorkloadProfile,
}

impl AerialParams {
    pub fn new(seed: u64, n_points: usize, grid: (usize, usize), n_views: usize, altitude: f64) -> Self {
        AerialParams {
            seed,
            n_points,
            grid,
            n_views,
            altitude,
            fov_x: 60f64.to_radians(),
            profile: WorkloadProfile::gaussian_3d(),
        }
    }

    /// A roughly 1:2 grid with one flight-grid cell per view.
    pub fn default_grid(n_views: usize) -> (usize, usize) {
        let cols = ((2 * n_views.max(1)) as f64).sqrt().ceil() as usize;
        let rows = n_views.max(1).div_ceil(cols);
        (rows.max(1), cols.max(1))
    }
}

pub fn generate_aerial_scene(params: &AerialParams) -> Result<SceneDataset> {
    let (cloud, views) = aerial_parts(params)?;
    SceneDataset::new(cloud, views, params.profile.clone())
}

fn aerial_parts(params: &AerialParams) -> Result<(PointCloud, Vec<CameraView>)> {
    if params.n_points == 0 {
        return Err(Error::param("n_points", "must be at least 1"));
    }
    if params.n_views == 0 {
        return Err(Error::param("n_views", "must be at least 1"));
    }
    if !(params.altitude > 0.0 && params.altitude.is_finite()) {
        return Err(Error::param("altitude", "must be positive"));
    }
    let (rows, cols) = params.grid;
    if rows == 0 || cols == 0 {
        return Err(Error::param("grid", "rows and cols must be at least 1"));
    }
    if !(params.fov_x > 0.0 && params.fov_x < std::f64::consts::PI) {
        return Err(Error::param("fov_x", "must lie in (0, pi)"));
    }

    // Cell spacing is half a footprint, so neighbouring shots overlap by 50%.
    let spacing = params.altitude * (params.fov_x / 2.0).tan();
    let extent_x = cols as f64 * spacing;
    let extent_y = rows as f64 * spacing;
    let max_height = 0.2 * params.altitude;

    let mut rng = stream(params.seed, STREAM_POINTS);
    let cell_weights: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0.25..1.75)).collect();
    let cell_heights: Vec<f64> = (0..rows * cols).map(|_| rng.gen_range(0.0..max_height)).collect();
    let cumulative: Vec<f64> = cell_weights
        .iter()
        .scan(0.0, |acc, w| {
            *acc += w;
            Some(*acc)
        })
        .collect();
    let total = *cumulative.last().unwrap();

    let points = (0..params.n_points)
        .map(|_| {
            let pick = rng.gen_range(0.0..total);
            let cell = cumulative.partition_point(|&c| c <= pick).min(rows * cols - 1);
            let (r, c) = (cell / cols, cell % cols);
            let x = (c as f64 + rng.gen::<f64>()) * spacing;
            let y = (r as f64 + rng.gen::<f64>()) * spacing;
            let z = rng.gen::<f64>() * cell_heights[cell];
            Point3::new(x, y, z).to_f32_precision()
        })
        .collect();

    // Serpentine flight path through the cell centres, sampled evenly.
    let path: Vec<Point3> = (0..rows)
        .flat_map(|r| {
            let cs: Vec<usize> = if r % 2 == 0 {
                (0..cols).collect()
            } else {
                (0..cols).rev().collect()
            };
            cs.into_iter().map(move |c| {
                Point3::new(
                    (c as f64 + 0.5) * spacing,
                    (r as f64 + 0.5) * spacing,
                    params.altitude,
                )
            })
        })
        .collect();

    let mut view_rng = stream(params.seed, STREAM_VIEWS);
    let (fov_x, fov_y) = CameraView::fov_for_aspect(params.fov_x, IMAGE_WIDTH, IMAGE_HEIGHT);
    let down = Rotation::look_along(Point3::new(0.0, 0.0, -1.0), Point3::new(0.0, 1.0, 0.0));
    let views = (0..params.n_views)
        .map(|i| {
            let mut pos = sample_polyline(&path, i, params.n_views);
            // Small lateral jitter, as real flights never hit the grid exactly.
            pos.x += view_rng.gen_range(-0.05..0.05) * spacing;
            pos.y += view_rng.gen_range(-0.05..0.05) * spacing;
            pos.x = pos.x.clamp(0.0, extent_x);
            pos.y = pos.y.clamp(0.0, extent_y);
            CameraView {
                id: i as u32,
                position: pos,
                rotation: down,
                fov_x,
                fov_y,
                near: 0.05 * params.altitude,
                far: 2.0 * params.altitude,
                width: IMAGE_WIDTH,
                height: IMAGE_HEIGHT,
                timestamp: None,
            }
        })
        .collect();

    Ok((PointCloud::new(points, None)?, views))
}

/// Position `i` of `n` evenly spaced samples along the polyline (by vertex index).
fn sample_polyline(path: &[Point3], i: usize, n: usize) -> Point3 {
    if path.len() == 1 || n == 1 {
        return path[0];
    }
    let t = i as f64 * (path.len() - 1) as f64 / (n - 1) as f64;
    let k = (t.floor() as usize).min(path.len() - 2);
    let f = t - k as f64;
    path[k] + (path[k + 1] - path[k]) * f
}

/// Ground-level capture along a street polyline.
#[derive(Debug, Clone, PartialEq)]
pub struct StreetParams {
    pub seed: u64,
    pub n_points: usize,
    pub waypoints: Vec<Point3>,
    pub n_views: usize,
    pub corridor_radius: f64,
    /// Fraction of points scattered far away from the corridor.
    pub background_fraction: f64,
    /// Background points land between `4 * corridor_radius` and this distance from the corridor.
    pub background_distance: f64,
    pub fov_x: f64,
    pub far: f64,
    pub profile: WorkloadProfile,
}

impl StreetParams {
    pub fn new(seed: u64, n_points: usize, waypoints: Vec<Point3>, n_views: usize) -> Self {
        StreetParams {
            seed,
            n_points,
            waypoints,
            n_views,
            corridor_radius: 12.0,
            background_fraction: 0.05,
            background_distance: 300.0,
            fov_x: 90f64.to_radians(),
            far: 150.0,
            profile: WorkloadProfile::gaussian_3d(),
        }
    }

    /// A winding route of about 2 km at eye height.
    pub fn default_waypoints() -> Vec<Point3> {
        [
            (0.0, 0.0),
            (500.0, 0.0),
            (500.0, 400.0),
            (0.0, 400.0),
            (0.0, 800.0),
            (500.0, 800.0),
        ]
        .iter()
        .map(|&(x, y)| Point3::new(x, y, 1.7))
        .collect()
    }
}

pub fn generate_street_scene(params: &StreetParams) -> Result<SceneDataset> {
    if params.waypoints.len() < 2 {
        return Err(Error::param("trajectory_waypoints", "need at least 2 waypoints"));
    }
    if params.n_points == 0 {
        return Err(Error::param("n_points", "must be at least 1"));
    }
    if params.n_views == 0 {
        return Err(Error::param("n_views", "must be at least 1"));
    }
    if !(0.0..=1.0).contains(&params.background_fraction) {
        return Err(Error::param("background_fraction", "must lie in [0, 1]"));
    }
    if !(params.corridor_radius > 0.0) || !(params.background_distance > 4.0 * params.corridor_radius)
    {
        return Err(Error::param(
            "corridor_radius",
            "need 0 < 4 * corridor_radius < background_distance",
        ));
    }
    if params.waypoints.iter().any(|w| !w.is_finite()) {
        return Err(Error::param("trajectory_waypoints", "non-finite waypoint"));
    }
    let segments: Vec<(Point3, Point3)> = params
        .waypoints
        .windows(2)
        .map(|w| (w[0], w[1]))
        .filter(|(a, b)| (*b - *a).norm() > 0.0)
        .collect();
    if segments.is_empty() {
        return Err(Error::param("trajectory_waypoints", "waypoints are all identical"));
    }
    let lengths: Vec<f64> = segments.iter().map(|(a, b)| (*b - *a).norm()).collect();
    let total_len: f64 = lengths.iter().sum();

    let mut rng = stream(params.seed, STREAM_POINTS);
    let n_background = (params.n_points as f64 * params.background_fraction).round() as usize;
    let n_corridor = params.n_points - n_background;
    let mut points = Vec::with_capacity(params.n_points);

    for _ in 0..n_corridor {
        let (seg, t) = pick_on_polyline(&mut rng, &lengths, total_len);
        let (a, b) = segments[seg];
        let dir = (b - a).normalized();
        let (u, w) = perpendicular_basis(dir);
        // Uniform in a disc slightly inside the radius so f32 rounding cannot push it out.
        let r = 0.98 * params.corridor_radius * rng.gen::<f64>().sqrt();
        let theta = rng.gen_range(0.0..std::f64::consts::TAU);
        let p = a + (b - a) * t + u * (r * theta.cos()) + w * (r * theta.sin());
        points.push(p.to_f32_precision());
    }

    let min_dist = 4.0 * params.corridor_radius;
    for _ in 0..n_background {
        let mut candidate = Point3::ZERO;
        for _ in 0..64 {
            let (seg, t) = pick_on_polyline(&mut rng, &lengths, total_len);
            let (a, b) = segments[seg];
            let d = rng.gen_range(min_dist..params.background_distance);
            let theta = rng.gen_range(0.0..std::f64::consts::TAU);
            let lift = rng.gen_range(0.0..0.25) * d;
            candidate = (a + (b - a) * t + Point3::new(d * theta.cos(), d * theta.sin(), lift))
                .to_f32_precision();
            let near_corridor = segments.iter().any(|(a, b)| {
                crate::geometry::point_segment_distance(candidate, *a, *b) < min_dist
            });
            if !near_corridor {
                break;
            }
        }
        points.push(candidate);
    }

    let (fov_x, fov_y) = CameraView::fov_for_aspect(params.fov_x, IMAGE_WIDTH, IMAGE_HEIGHT);
    let views = (0..params.n_views)
        .map(|i| {
            let s = if params.n_views == 1 {
                0.0
            } else {
                total_len * i as f64 / (params.n_views - 1) as f64
            };
            let (pos, dir) = locate_on_polyline(&segments, &lengths, s);
            let up_hint = if dir.z.abs() > 0.99 {
                Point3::new(0.0, 1.0, 0.0)
            } else {
                Point3::new(0.0, 0.0, 1.0)
            };
            CameraView {
                id: i as u32,
                position: pos,
                rotation: Rotation::look_along(dir, up_hint),
                fov_x,
                fov_y,
                near: 0.5,
                far: params.far,
                width: IMAGE_WIDTH,
                height: IMAGE_HEIGHT,
                timestamp: None,
            }
        })
        .collect();

    SceneDataset::new(PointCloud::new(points, None)?, views, params.profile.clone())
}

fn pick_on_polyline(rng: &mut ChaCha8Rng, lengths: &[f64], total: f64) -> (usize, f64) {
    let mut s = rng.gen_range(0.0..total);
    for (i, &l) in lengths.iter().enumerate() {
        if s < l {
            return (i, s / l);
        }
        s -= l;
    }
    (lengths.len() - 1, 1.0)
}

fn locate_on_polyline(segments: &[(Point3, Point3)], lengths: &[f64], s: f64) -> (Point3, Point3) {
    let mut rest = s;
    for (i, &l) in lengths.iter().enumerate() {
        let (a, b) = segments[i];
        if rest <= l || i == lengths.len() - 1 {
            let t = (rest / l).clamp(0.0, 1.0);
            return (a + (b - a) * t, (b - a).normalized());
        }
        rest -= l;
    }
    unreachable!("segments is non-empty")
}

fn perpendicular_basis(dir: Point3) -> (Point3, Point3) {
    let helper = if dir.z.abs() < 0.9 {
        Point3::new(0.0, 0.0, 1.0)
    } else {
        Point3::new(1.0, 0.0, 0.0)
    };
    let u = dir.cross(helper).normalized();
    let w = dir.cross(u);
    (u, w)
}

/// Aerial scene whose points appear and disappear over time.
#[derive(Debug, Clone, PartialEq)]
pub struct TemporalParams {
    pub aerial: AerialParams,
    /// Scene duration in seconds.
    pub duration: f64,
}

/// Presence intervals have uniformly random start and a mean length of 20% of the duration;
/// view timestamps advance uniformly along the flight path.
pub fn generate_temporal_scene(params: &TemporalParams) -> Result<SceneDataset> {
    if !(params.duration > 0.0 && params.duration.is_finite()) {
        return Err(Error::param("duration", "must be positive"));
    }
    let (cloud, mut views) = aerial_parts(&params.aerial)?;
    let d = params.duration;
    let mut rng = stream(params.aerial.seed, STREAM_TIME);
    let presence = (0..cloud.len())
        .map(|_| {
            let len = rng.gen_range(0.0..0.4 * d);
            let start = rng.gen_range(0.0..=(d - len));
            let start = start as f32 as f64;
            let end = ((start + len) as f32 as f64).max(start);
            Presence { start, end }
        })
        .collect();
    let n = views.len();
    for (i, v) in views.iter_mut().enumerate() {
        let t = if n == 1 { 0.0 } else { d * i as f64 / (n - 1) as f64 };
        v.timestamp = Some(t);
    }
    let cloud = PointCloud::new(cloud.points().to_vec(), Some(presence))?;
    SceneDataset::new(
        cloud,
        views,
        params
            .aerial
            .profile
            .clone()
            .with_culling(CullingMode::SpatioTemporal),
    )
}
