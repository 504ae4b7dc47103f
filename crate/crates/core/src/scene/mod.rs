//! Point clouds, camera views, workload profiles and the synthetic generators that produce them.

mod generate;
mod io;

pub use generate::{
    generate_aerial_scene, generate_street_scene, generate_temporal_scene, AerialParams,
    StreetParams, TemporalParams,
};
pub use io::{load_dataset, save_dataset, DATASET_VERSION, POINTS_FILE, POINTS_MAGIC};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3, Rotation};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CullingMode {
    Spatial,
    SpatioTemporal,
}

/// Per-point transfer cost of one splatting algorithm.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorkloadProfile {
    pub name: String,
    pub splat_state_elements: u32,
    pub bytes_per_element: u32,
    pub culling_mode: CullingMode,
}

impl WorkloadProfile {
    /// 3D Gaussian splatting: 11 view-dependent elements per point.
    pub fn gaussian_3d() -> Self {
        Self::builtin("3dgs", 11)
    }

    /// 2D Gaussian splatting: 20 view-dependent elements per point.
    pub fn gaussian_2d() -> Self {
        Self::builtin("2dgs", 20)
    }

    /// 3D convex splatting: 29 view-dependent elements per point.
    pub fn convex_3d() -> Self {
        Self::builtin("3dcx", 29)
    }

    fn builtin(name: &str, elements: u32) -> Self {
        WorkloadProfile {
            name: name.to_owned(),
            splat_state_elements: elements,
            bytes_per_element: 4,
            culling_mode: CullingMode::Spatial,
        }
    }

    pub fn by_name(name: &str) -> Option<Self> {
        match name {
            "3dgs" => Some(Self::gaussian_3d()),
            "2dgs" => Some(Self::gaussian_2d()),
            "3dcx" => Some(Self::convex_3d()),
            _ => None,
        }
    }

    pub fn custom(
        name: impl Into<String>,
        splat_state_elements: u32,
        bytes_per_element: u32,
        culling_mode: CullingMode,
    ) -> Result<Self> {
        let profile = WorkloadProfile {
            name: name.into(),
            splat_state_elements,
            bytes_per_element,
            culling_mode,
        };
        profile.validate()?;
        Ok(profile)
    }

    pub fn with_culling(mut self, mode: CullingMode) -> Self {
        self.culling_mode = mode;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.splat_state_elements == 0 {
            return Err(Error::param("splat_state_elements", "must be positive"));
        }
        if self.bytes_per_element == 0 {
            return Err(Error::param("bytes_per_element", "must be positive"));
        }
        Ok(())
    }

    pub fn bytes_per_point(&self) -> u64 {
        self.splat_state_elements as u64 * self.bytes_per_element as u64
    }
}

/// Time interval `[start, end]` during which a point exists.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Presence {
    pub start: f64,
    pub end: f64,
}

impl Presence {
    pub fn contains(&self, t: f64) -> bool {
        self.start <= t && t <= self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Vec<Point3>,
    presence: Option<Vec<Presence>>,
    bounds: Aabb,
}

impl PointCloud {
    pub fn new(points: Vec<Point3>, presence: Option<Vec<Presence>>) -> Result<Self> {
        let bounds = Aabb::from_points(points.iter().copied())
            .ok_or_else(|| Error::param("points", "point cloud must be non-empty"))?;
        if let Some(i) = points.iter().position(|p| !p.is_finite()) {
            return Err(Error::param("points", format!("point {i} has a non-finite coordinate")));
        }
        if let Some(pres) = &presence {
            if pres.len() != points.len() {
                return Err(Error::param(
                    "presence",
                    format!("{} intervals for {} points", pres.len(), points.len()),
                ));
            }
            if let Some(i) = pres
                .iter()
                .position(|p| !(p.start <= p.end) || !p.start.is_finite() || !p.end.is_finite())
            {
                return Err(Error::param("presence", format!("interval {i} is not ordered")));
            }
        }
        Ok(PointCloud {
            points,
            presence,
            bounds,
        })
    }

    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn presence(&self) -> Option<&[Presence]> {
        self.presence.as_deref()
    }

    pub fn bounds(&self) -> Aabb {
        self.bounds
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// Pinhole camera. The rotation maps camera axes (x right, y down, z forward) to world axes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CameraView {
    pub id: u32,
    pub position: Point3,
    pub rotation: Rotation,
    pub fov_x: f64,
    pub fov_y: f64,
    pub near: f64,
    pub far: f64,
    pub width: u32,
    pub height: u32,
    pub timestamp: Option<f64>,
}

impl CameraView {
    pub fn validate(&self) -> Result<()> {
        if !self.position.is_finite() || !self.rotation.is_finite() {
            return Err(Error::param("view", format!("view {} has non-finite pose", self.id)));
        }
        if !(self.near > 0.0 && self.near < self.far && self.far.is_finite()) {
            return Err(Error::param(
                "near/far",
                format!("view {} needs 0 < near < far", self.id),
            ));
        }
        let pi = std::f64::consts::PI;
        if !(self.fov_x > 0.0 && self.fov_x < pi && self.fov_y > 0.0 && self.fov_y < pi) {
            return Err(Error::param("fov", format!("view {} needs 0 < fov < pi", self.id)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("width/height", format!("view {} has an empty image", self.id)));
        }
        if self.rotation.orthonormality_error() > 1e-9 {
            return Err(Error::param(
                "rotation",
                format!("view {} rotation is not orthonormal", self.id),
            ));
        }
        if let Some(t) = self.timestamp {
            if !t.is_finite() {
                return Err(Error::param("timestamp", format!("view {} timestamp", self.id)));
            }
        }
        Ok(())
    }

    /// Horizontal and vertical field of view for an image of the given size and horizontal fov.
    pub fn fov_for_aspect(fov_x: f64, width: u32, height: u32) -> (f64, f64) {
        let fov_y = 2.0 * ((fov_x / 2.0).tan() * height as f64 / width as f64).atan();
        (fov_x, fov_y)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneDataset {
    pub cloud: PointCloud,
    pub views: Vec<CameraView>,
    pub profile: WorkloadProfile,
}

impl SceneDataset {
    pub fn new(cloud: PointCloud, views: Vec<CameraView>, profile: WorkloadProfile) -> Result<Self> {
        let ds = SceneDataset {
            cloud,
            views,
            profile,
        };
        ds.validate()?;
        Ok(ds)
    }

    pub fn validate(&self) -> Result<()> {
        self.profile.validate()?;
        for (i, v) in self.views.iter().enumerate() {
            if v.id as usize != i {
                return Err(Error::param(
                    "views",
                    format!("view ids must be contiguous from 0; position {i} has id {}", v.id),
                ));
            }
            v.validate()?;
        }
        if self.profile.culling_mode == CullingMode::SpatioTemporal {
            if self.cloud.presence().is_none() {
                return Err(Error::Configuration(
                    "spatio-temporal profile requires per-point presence intervals".into(),
                ));
            }
            if let Some(v) = self.views.iter().find(|v| v.timestamp.is_none()) {
                return Err(Error::Configuration(format!(
                    "spatio-temporal profile requires a timestamp on view {}",
                    v.id
                )));
            }
        }
        Ok(())
    }

    pub fn is_temporal(&self) -> bool {
        self.profile.culling_mode == CullingMode::SpatioTemporal
    }
}
