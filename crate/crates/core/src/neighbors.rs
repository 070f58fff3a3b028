//! Directed k-nearest-neighbor graphs, one per cloud.
//!
//! Neighbor lists are computed once on the input coordinates. Rigid motions
//! preserve distances, so the graph never needs rebuilding during EM.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{PointCloud, PointCloudSet};

/// Neighbor lists for a single cloud, stored flat with a fixed row width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CloudNeighbors {
    width: usize,
    indices: Vec<usize>,
}

impl CloudNeighbors {
    /// Neighbors per point, `min(k, N_j - 1)`.
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.indices.len().checked_div(self.width).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.indices[i * self.width..(i + 1) * self.width]
    }

    /// Every directed edge `(i, b)` in point order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.indices
            .chunks_exact(self.width.max(1))
            .enumerate()
            .flat_map(|(i, row)| row.iter().map(move |&b| (i, b)))
    }
}

/// Directed k-NN graph over every cloud of a set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NeighborGraph {
    k: usize,
    clouds: Vec<CloudNeighbors>,
}

impl NeighborGraph {
    pub fn build(set: &PointCloudSet, k: usize) -> Result<Self> {
        let clouds = set.clouds().iter().map(|c| build_knn(c, k)).collect::<Result<_>>()?;
        Ok(Self { k, clouds })
    }

    /// A graph with no edges; the local-consistency term vanishes on it.
    pub fn empty(set: &PointCloudSet) -> Self {
        Self {
            k: 0,
            clouds: set
                .clouds()
                .iter()
                .map(|_| CloudNeighbors {
                    width: 0,
                    indices: Vec::new(),
                })
                .collect(),
        }
    }

    pub fn from_lists(k: usize, clouds: Vec<CloudNeighbors>) -> Self {
        Self { k, clouds }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn cloud(&self, j: usize) -> &CloudNeighbors {
        &self.clouds[j]
    }

    pub fn len(&self) -> usize {
        self.clouds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clouds.is_empty()
    }
}

/// Exact k nearest neighbors of every point of `cloud`, excluding the point
/// itself. Equal distances are ordered by lower index.
pub fn build_knn(cloud: &PointCloud, k: usize) -> Result<CloudNeighbors> {
    if k == 0 {
        return Err(Error::config("k_neighbors must be at least 1"));
    }
    let n = cloud.len();
    if n < 2 {
        return Err(Error::config(format!(
            "cloud {} has {n} point(s); neighbor search needs at least 2",
            cloud.id()
        )));
    }
    let width = k.min(n - 1);
    let pts = cloud.points();
    let indices = (0..n)
        .into_par_iter()
        .flat_map_iter(|i| {
            let mut cand: Vec<(f64, usize)> = (0..n)
                .filter(|&b| b != i)
                .map(|b| ((pts[b] - pts[i]).norm_squared(), b))
                .collect();
            let by_dist = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
            if width < cand.len() {
                cand.select_nth_unstable_by(width - 1, by_dist);
                cand.truncate(width);
            }
            cand.sort_unstable_by(by_dist);
            cand.into_iter().map(|(_, b)| b)
        })
        .collect();
    Ok(CloudNeighbors { width, indices })
}
