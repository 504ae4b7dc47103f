use serde::{Deserialize, Serialize};

use super::morton::{morton_code, DEFAULT_BITS_PER_AXIS};
use crate::error::{Error, Result};
use crate::geometry::{Aabb, Point3};
use crate::scene::{PointCloud, Presence};

pub const DEFAULT_GROUP_SIZE: usize = 2048;

/// A contiguous block `[begin, end)` of the Z-order-sorted cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointGroup {
    pub id: usize,
    pub begin: usize,
    pub end: usize,
    pub aabb: Aabb,
}

impl PointGroup {
    pub fn size(&self) -> usize {
        self.end - self.begin
    }

    pub fn range(&self) -> std::ops::Range<usize> {
        self.begin..self.end
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupedCloud {
    points: Vec<Point3>,
    presence: Option<Vec<Presence>>,
    /// `permutation[new] = original index`.
    permutation: Vec<u32>,
    groups: Vec<PointGroup>,
    group_size: usize,
}

impl GroupedCloud {
    pub fn points(&self) -> &[Point3] {
        &self.points
    }

    pub fn presence(&self) -> Option<&[Presence]> {
        self.presence.as_deref()
    }

    pub fn permutation(&self) -> &[u32] {
        &self.permutation
    }

    pub fn groups(&self) -> &[PointGroup] {
        &self.groups
    }

    pub fn group_size(&self) -> usize {
        self.group_size
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn group_of(&self, sorted_index: usize) -> usize {
        sorted_index / self.group_size
    }

    /// Undo the sort: element `i` of the result is original point `i`.
    pub fn unsorted_points(&self) -> Vec<Point3> {
        let mut out = vec![Point3::ZERO; self.points.len()];
        for (new, &orig) in self.permutation.iter().enumerate() {
            out[orig as usize] = self.points[new];
        }
        out
    }
}

pub fn zorder_group(cloud: &PointCloud, group_size: usize) -> Result<GroupedCloud> {
    zorder_group_with_bits(cloud, group_size, DEFAULT_BITS_PER_AXIS)
}

/// Stable sort by Morton code (ties keep original order), then tile into blocks of `group_size`.
pub fn zorder_group_with_bits(
    cloud: &PointCloud,
    group_size: usize,
    bits_per_axis: u32,
) -> Result<GroupedCloud> {
    if group_size == 0 {
        return Err(Error::param("group_size", "must be at least 1"));
    }
    let bounds = cloud.bounds();
    let codes = cloud
        .points()
        .iter()
        .map(|p| morton_code(*p, &bounds, bits_per_axis))
        .collect::<Result<Vec<u64>>>()?;
    let mut order: Vec<u32> = (0..cloud.len() as u32).collect();
    order.sort_by_key(|&i| (codes[i as usize], i));

    let points: Vec<Point3> = order.iter().map(|&i| cloud.points()[i as usize]).collect();
    let presence = cloud
        .presence()
        .map(|pres| order.iter().map(|&i| pres[i as usize]).collect());
    let groups = points
        .chunks(group_size)
        .enumerate()
        .map(|(id, chunk)| {
            let begin = id * group_size;
            PointGroup {
                id,
                begin,
                end: begin + chunk.len(),
                aabb: Aabb::from_points(chunk.iter().copied()).expect("chunks are non-empty"),
            }
        })
        .collect();
    Ok(GroupedCloud {
        points,
        presence,
        permutation: order,
        groups,
        group_size,
    })
}
