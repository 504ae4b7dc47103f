use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::scene::{CullingMode, SceneDataset};
use crate::visibility::{frustum_from_view, GroupVisibility, GroupedCloud};

/// Point groups on one side, camera views on the other; an edge counts the group's points
/// visible from the view.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BipartiteGraph {
    group_weights: Vec<u64>,
    image_weights: Vec<u64>,
    /// `(group, image, weight)`, sorted by image then group, weights >= 1.
    edges: Vec<(u32, u32, u64)>,
}

impl BipartiteGraph {
    /// Image weights are derived as the sum of incident edge weights.
    pub fn from_edges(
        group_weights: Vec<u64>,
        n_images: usize,
        edges: impl IntoIterator<Item = (usize, usize, u64)>,
    ) -> Result<Self> {
        let mut merged: Vec<(u32, u32, u64)> = Vec::new();
        let mut raw: Vec<(usize, usize, u64)> = edges.into_iter().collect();
        raw.sort_by_key(|&(g, i, _)| (i, g));
        for (g, i, w) in raw {
            if g >= group_weights.len() || i >= n_images {
                return Err(Error::Consistency(format!(
                    "edge ({g}, {i}) outside {} groups x {n_images} images",
                    group_weights.len()
                )));
            }
            if w == 0 {
                continue;
            }
            match merged.last_mut() {
                Some(last) if last.0 == g as u32 && last.1 == i as u32 => last.2 += w,
                _ => merged.push((g as u32, i as u32, w)),
            }
        }
        let mut image_weights = vec![0; n_images];
        for &(_, i, w) in &merged {
            image_weights[i as usize] += w;
        }
        Ok(BipartiteGraph {
            group_weights,
            image_weights,
            edges: merged,
        })
    }

    pub fn n_groups(&self) -> usize {
        self.group_weights.len()
    }

    pub fn n_images(&self) -> usize {
        self.image_weights.len()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_groups() + self.n_images()
    }

    pub fn group_weights(&self) -> &[u64] {
        &self.group_weights
    }

    pub fn image_weights(&self) -> &[u64] {
        &self.image_weights
    }

    pub fn edges(&self) -> &[(u32, u32, u64)] {
        &self.edges
    }

    /// Vertex index of image `i` in the combined numbering (groups first).
    pub fn image_vertex(&self, image: usize) -> usize {
        self.n_groups() + image
    }

    /// Weight of edges whose endpoints land in different parts; `part` uses the combined numbering.
    pub fn edge_cut(&self, part: &[usize]) -> u64 {
        let ng = self.n_groups();
        self.edges
            .iter()
            .filter(|&&(g, i, _)| part[g as usize] != part[ng + i as usize])
            .map(|e| e.2)
            .sum()
    }

    /// Incident edge weight of each image towards each of `parts` group buckets.
    pub fn image_affinity(&self, group_part: &[usize], parts: usize) -> Vec<Vec<u64>> {
        let mut out = vec![vec![0; parts]; self.n_images()];
        for &(g, i, w) in &self.edges {
            out[i as usize][group_part[g as usize]] += w;
        }
        out
    }
}

/// One culling pass over every (view, group) pair with per-point counts inside surviving groups.
pub fn build_bipartite_graph(grouped: &GroupedCloud, dataset: &SceneDataset) -> Result<BipartiteGraph> {
    if grouped.len() != dataset.cloud.len() {
        return Err(Error::Consistency(format!(
            "grouped cloud has {} points, dataset has {}",
            grouped.len(),
            dataset.cloud.len()
        )));
    }
    let temporal = dataset.profile.culling_mode == CullingMode::SpatioTemporal;
    let presence = if temporal {
        Some(grouped.presence().ok_or_else(|| {
            Error::Configuration("spatio-temporal profile without presence intervals".into())
        })?)
    } else {
        None
    };
    let per_view: Vec<Vec<(usize, usize, u64)>> = dataset
        .views
        .par_iter()
        .enumerate()
        .map(|(vi, view)| {
            let frustum = frustum_from_view(view, None)?;
            let time = match temporal {
                true => Some(view.timestamp.ok_or_else(|| {
                    Error::Configuration(format!("view {} has no timestamp", view.id))
                })?),
                false => None,
            };
            let mut out = Vec::new();
            for g in grouped.groups() {
                if frustum.classify_aabb(&g.aabb) == GroupVisibility::Outside {
                    continue;
                }
                let count = g
                    .range()
                    .filter(|&i| match (time, presence) {
                        (Some(t), Some(p)) => p[i].contains(t),
                        _ => true,
                    })
                    .filter(|&i| frustum.contains(grouped.points()[i]))
                    .count() as u64;
                if count > 0 {
                    out.push((g.id, vi, count));
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let weights = grouped.groups().iter().map(|g| g.size() as u64).collect();
    BipartiteGraph::from_edges(weights, dataset.views.len(), per_view.into_iter().flatten())
}

/// Undirected weighted graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct WeightedGraph {
    pub xadj: Vec<usize>,
    pub adj: Vec<u32>,
    pub ewgt: Vec<u64>,
    pub vwgt: Vec<u64>,
}

impl WeightedGraph {
    pub fn n(&self) -> usize {
        self.vwgt.len()
    }

    pub fn neighbors(&self, u: usize) -> impl Iterator<Item = (usize, u64)> + '_ {
        (self.xadj[u]..self.xadj[u + 1]).map(move |e| (self.adj[e] as usize, self.ewgt[e]))
    }

    pub fn total_vertex_weight(&self) -> u64 {
        self.vwgt.iter().sum()
    }

    /// Sum over undirected edges.
    #[cfg(test)]
    pub fn total_edge_weight(&self) -> u64 {
        self.ewgt.iter().sum::<u64>() / 2
    }

    pub fn cut(&self, part: &[usize]) -> u64 {
        let mut cut = 0;
        for u in 0..self.n() {
            for (v, w) in self.neighbors(u) {
                if u < v && part[u] != part[v] {
                    cut += w;
                }
            }
        }
        cut
    }

    /// Builds from undirected edge triples; duplicate pairs are summed and self loops dropped.
    pub fn from_edge_list(vwgt: Vec<u64>, edges: &[(usize, usize, u64)]) -> Self {
        let n = vwgt.len();
        let mut lists: Vec<Vec<(u32, u64)>> = vec![Vec::new(); n];
        for &(u, v, w) in edges {
            if u != v && w > 0 {
                lists[u].push((v as u32, w));
                lists[v].push((u as u32, w));
            }
        }
        let mut xadj = Vec::with_capacity(n + 1);
        let mut adj = Vec::new();
        let mut ewgt = Vec::new();
        xadj.push(0);
        for list in &mut lists {
            list.sort_unstable_by_key(|e| e.0);
            let mut last: Option<u32> = None;
            for &(v, w) in list.iter() {
                if last == Some(v) {
                    *ewgt.last_mut().unwrap() += w;
                } else {
                    adj.push(v);
                    ewgt.push(w);
                    last = Some(v);
                }
            }
            xadj.push(adj.len());
        }
        WeightedGraph {
            xadj,
            adj,
            ewgt,
            vwgt,
        }
    }

    /// Combined numbering: groups first, then images. Image balance weight is scaled.
    pub fn from_bipartite(graph: &BipartiteGraph, image_weight_multiplier: f64) -> Self {
        let ng = graph.n_groups();
        let mut vwgt = graph.group_weights().to_vec();
        vwgt.extend(
            graph
                .image_weights()
                .iter()
                .map(|&w| (w as f64 * image_weight_multiplier).round() as u64),
        );
        let edges: Vec<(usize, usize, u64)> = graph
            .edges()
            .iter()
            .map(|&(g, i, w)| (g as usize, ng + i as usize, w))
            .collect();
        WeightedGraph::from_edge_list(vwgt, &edges)
    }

    /// Subgraph induced by `vertices` (new index = position in the slice).
    pub fn induced(&self, vertices: &[usize]) -> Self {
        let mut local = vec![u32::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i as u32;
        }
        let mut xadj = Vec::with_capacity(vertices.len() + 1);
        let mut adj = Vec::new();
        let mut ewgt = Vec::new();
        xadj.push(0);
        for &u in vertices {
            for (v, w) in self.neighbors(u) {
                if local[v] != u32::MAX {
                    adj.push(local[v]);
                    ewgt.push(w);
                }
            }
            xadj.push(adj.len());
        }
        WeightedGraph {
            xadj,
            adj,
            ewgt,
            vwgt: vertices.iter().map(|&v| self.vwgt[v]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Point3, Rotation};
    use crate::scene::{CameraView, PointCloud, WorkloadProfile};
    use crate::visibility::{cull_point, zorder_group};

    fn down_view(id: u32, x: f64) -> CameraView {
        CameraView {
            id,
            position: Point3::new(x, 0.0, 10.0),
            rotation: Rotation::look_along(Point3::new(0.0, 0.0, -1.0), Point3::new(0.0, 1.0, 0.0)),
            fov_x: 1.2,
            fov_y: 1.2,
            near: 1.0,
            far: 30.0,
            width: 32,
            height: 32,
            timestamp: None,
        }
    }

    #[test]
    fn toy_scene_matches_brute_force() {
        // three clusters along x; two views, each over part of the line
        let pts: Vec<Point3> = (0..30)
            .map(|i| Point3::new((i / 10) as f64 * 8.0 + (i % 10) as f64 * 0.3, 0.5, 0.0))
            .collect();
        let cloud = PointCloud::new(pts, None).unwrap();
        let views = vec![down_view(0, 2.0), down_view(1, 14.0)];
        let ds = SceneDataset::new(cloud, views.clone(), WorkloadProfile::gaussian_3d()).unwrap();
        let grouped = zorder_group(&ds.cloud, 10).unwrap();
        let g = build_bipartite_graph(&grouped, &ds).unwrap();
        assert_eq!(g.n_groups(), 3);
        let mut expected = Vec::new();
        for (vi, v) in views.iter().enumerate() {
            let f = frustum_from_view(v, None).unwrap();
            for grp in grouped.groups() {
                let c = grp
                    .range()
                    .filter(|&i| cull_point(&f, grouped.points()[i], None, None).unwrap())
                    .count() as u64;
                if c > 0 {
                    expected.push((grp.id as u32, vi as u32, c));
                }
            }
        }
        expected.sort_by_key(|&(g, i, _)| (i, g));
        assert!(expected.len() >= 2);
        assert_eq!(g.edges(), &expected[..]);
        for (i, &w) in g.image_weights().iter().enumerate() {
            let s: u64 = expected.iter().filter(|e| e.1 == i as u32).map(|e| e.2).sum();
            assert_eq!(w, s);
        }
    }

    #[test]
    fn blind_view_and_full_view() {
        let pts: Vec<Point3> = (0..12).map(|i| Point3::new(i as f64 * 0.1, 0.0, 0.0)).collect();
        let cloud = PointCloud::new(pts, None).unwrap();
        let mut away = down_view(1, 0.5);
        away.position.z = -50.0;
        let ds = SceneDataset::new(cloud, vec![down_view(0, 0.5), away], WorkloadProfile::gaussian_3d())
            .unwrap();
        let grouped = zorder_group(&ds.cloud, 12).unwrap();
        let g = build_bipartite_graph(&grouped, &ds).unwrap();
        assert_eq!(g.edges(), &[(0, 0, 12)]);
        assert_eq!(g.image_weights(), &[12, 0]);
    }

    #[test]
    fn from_edges_merges_and_validates() {
        let g = BipartiteGraph::from_edges(vec![1, 1], 2, [(0, 1, 2), (0, 1, 3), (1, 0, 0)]).unwrap();
        assert_eq!(g.edges(), &[(0, 1, 5)]);
        assert!(BipartiteGraph::from_edges(vec![1], 1, [(1, 0, 1)]).is_err());
    }

    #[test]
    fn weighted_graph_views() {
        let g = BipartiteGraph::from_edges(vec![4, 6], 2, [(0, 0, 2), (1, 0, 1), (1, 1, 5)]).unwrap();
        let wg = WeightedGraph::from_bipartite(&g, 0.5);
        assert_eq!(wg.vwgt, vec![4, 6, 2, 3]);
        assert_eq!(wg.total_edge_weight(), 8);
        assert_eq!(wg.cut(&[0, 1, 0, 1]), 1);
        assert_eq!(g.edge_cut(&[0, 1, 0, 1]), 1);
        let sub = wg.induced(&[1, 3]);
        assert_eq!(sub.total_edge_weight(), 5);
        assert_eq!(sub.vwgt, vec![6, 3]);
    }
}
