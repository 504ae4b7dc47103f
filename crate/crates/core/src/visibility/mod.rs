//! Z-order grouping, frustum construction, culling, and the per-batch access matrix.

mod access;
mod frustum;
mod grouping;
mod morton;

pub use access::{
    build_access_matrix, view_access_rows, AccessMatrix, AccessOptions, Granularity, Ownership,
};
pub use frustum::{
    cull_group, cull_point, frustum_from_view, Frustum, GroupVisibility, PixelRect, Plane,
};
pub use grouping::{
    zorder_group, zorder_group_with_bits, GroupedCloud, PointGroup, DEFAULT_GROUP_SIZE,
};
pub use morton::{interleave, morton_code, DEFAULT_BITS_PER_AXIS};
