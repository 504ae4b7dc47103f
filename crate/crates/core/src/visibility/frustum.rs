use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3};
use crate::scene::{CameraView, Presence};

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PixelRect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelRect {
    pub fn full(view: &CameraView) -> Self {
        PixelRect {
            x0: 0,
            y0: 0,
            x1: view.width,
            y1: view.height,
        }
    }

    /// Patch `(row, col)` of a `factor x factor` split of the view's image.
    pub fn patch(view: &CameraView, factor: u32, row: u32, col: u32) -> Self {
        let (w, h, f) = (view.width as u64, view.height as u64, factor as u64);
        let (r, c) = (row as u64, col as u64);
        PixelRect {
            x0: (c * w / f) as u32,
            x1: ((c + 1) * w / f) as u32,
            y0: (r * h / f) as u32,
            y1: ((r + 1) * h / f) as u32,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.x0 >= self.x1 || self.y0 >= self.y1
    }
}

/// `normal . p + offset` is the signed distance; inside means `>= 0`, or `> 0` for strict planes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Plane {
    pub normal: Point3,
    pub offset: f64,
    /// Strict planes bound the open side of a half-open pixel rectangle.
    pub strict: bool,
}

impl Plane {
    pub fn signed_distance(&self, p: Point3) -> f64 {
        self.normal.dot(p) + self.offset
    }

    fn admits(&self, d: f64, margin: f64) -> bool {
        if self.strict {
            d > -margin
        } else {
            d >= -margin
        }
    }
}

/// Six planes in the order left, right, top, bottom, near, far.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Frustum {
    pub planes: [Plane; 6],
    /// Uniform point radius; points within this distance outside a plane still count as inside.
    pub margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum GroupVisibility {
    Outside,
    Intersecting,
}

impl Frustum {
    pub fn with_margin(mut self, radius: f64) -> Self {
        self.margin = radius.max(0.0);
        self
    }

    pub fn contains(&self, p: Point3) -> bool {
        self.planes
            .iter()
            .all(|pl| pl.admits(pl.signed_distance(p), self.margin))
    }

    /// Conservative box test: `Outside` only when all eight corners fail one single plane.
    pub fn classify_aabb(&self, aabb: &Aabb) -> GroupVisibility {
        let corners = aabb.corners();
        for pl in &self.planes {
            if corners
                .iter()
                .all(|c| !pl.admits(pl.signed_distance(*c), self.margin))
            {
                return GroupVisibility::Outside;
            }
        }
        GroupVisibility::Intersecting
    }
}

/// Frustum of `view`, restricted to `patch` if given.
pub fn frustum_from_view(view: &CameraView, patch: Option<PixelRect>) -> Result<Frustum> {
    let rect = patch.unwrap_or_else(|| PixelRect::full(view));
    if rect.is_empty() {
        return Err(Error::param("patch", format!("empty pixel rectangle {rect:?}")));
    }
    if rect.x1 > view.width || rect.y1 > view.height {
        return Err(Error::param(
            "patch",
            format!(
                "rectangle {rect:?} exceeds the {}x{} image",
                view.width, view.height
            ),
        ));
    }
    let tan_x = (view.fov_x / 2.0).tan();
    let tan_y = (view.fov_y / 2.0).tan();
    let tx = |u: u32| (2.0 * u as f64 / view.width as f64 - 1.0) * tan_x;
    let ty = |v: u32| (2.0 * v as f64 / view.height as f64 - 1.0) * tan_y;
    let (l, r, t, b) = (tx(rect.x0), tx(rect.x1), ty(rect.y0), ty(rect.y1));

    let c = view.position;
    let side = |n_cam: Point3, strict: bool| {
        let normal = view.rotation.apply(n_cam.normalized());
        Plane {
            normal,
            offset: -normal.dot(c),
            strict,
        }
    };
    let forward = view.rotation.column(2);
    let near = Plane {
        normal: forward,
        offset: -forward.dot(c) - view.near,
        strict: false,
    };
    let far = Plane {
        normal: -forward,
        offset: forward.dot(c) + view.far,
        strict: false,
    };
    Ok(Frustum {
        planes: [
            side(Point3::new(1.0, 0.0, -l), false),
            side(Point3::new(-1.0, 0.0, r), true),
            side(Point3::new(0.0, 1.0, -t), false),
            side(Point3::new(0.0, -1.0, b), true),
            near,
            far,
        ],
        margin: 0.0,
    })
}

/// True iff `point` survives culling. Temporal data must be given as a pair or not at all.
pub fn cull_point(
    frustum: &Frustum,
    point: Point3,
    view_time: Option<f64>,
    presence: Option<Presence>,
) -> Result<bool> {
    match (view_time, presence) {
        (None, None) => Ok(frustum.contains(point)),
        (Some(t), Some(p)) => Ok(p.contains(t) && frustum.contains(point)),
        _ => Err(Error::Configuration(
            "spatio-temporal culling needs both a view timestamp and a presence interval".into(),
        )),
    }
}

pub fn cull_group(frustum: &Frustum, aabb: &Aabb) -> GroupVisibility {
    frustum.classify_aabb(aabb)
}
