//! Exact nearest neighbours, k-NN graphs and shortest-path geodesics.
//!
//! Distances are Euclidean. Candidates are ordered by `(squared distance,
//! index)`, so equidistant neighbours are always reported by ascending
//! index and the k-d tree and brute-force paths agree bit for bit.

mod geodesic;
mod graph;
mod kdtree;

use std::cmp::Ordering;

use ndarray::ArrayView1;
use rayon::prelude::*;

use crate::data::PointCloud;
use crate::error::{Error, Result};

pub use geodesic::{geodesics_all_pairs, pairwise_geodesics, single_source, GeodesicDistances};
pub use graph::{knn_graph, largest_component, KnnGraph};
pub use kdtree::KdTree;

/// Above this embedding dimension the k-d tree prunes too little to pay off.
const KDTREE_MAX_DIM: usize = 16;

/// Per-point sorted neighbour lists.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborTable {
    k: usize,
    indices: Vec<usize>,
    distances: Vec<f64>,
}

impl NeighborTable {
    pub(crate) fn from_rows(k: usize, rows: Vec<Vec<Candidate>>) -> Self {
        let mut indices = Vec::with_capacity(rows.len() * k);
        let mut distances = Vec::with_capacity(rows.len() * k);
        for row in rows {
            debug_assert_eq!(row.len(), k);
            for c in row {
                indices.push(c.index);
                distances.push(c.sq.sqrt());
            }
        }
        NeighborTable {
            k,
            indices,
            distances,
        }
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.indices.len() / self.k
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self, i: usize) -> &[usize] {
        &self.indices[i * self.k..(i + 1) * self.k]
    }

    pub fn distances(&self, i: usize) -> &[f64] {
        &self.distances[i * self.k..(i + 1) * self.k]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Candidate {
    pub sq: f64,
    pub index: usize,
}

impl Eq for Candidate {}

impl Ord for Candidate {
    fn cmp(&self, other: &Self) -> Ordering {
        self.sq
            .total_cmp(&other.sq)
            .then(self.index.cmp(&other.index))
    }
}

impl PartialOrd for Candidate {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Squared Euclidean distance, summed in coordinate order.
#[inline]
pub fn sq_dist(a: ArrayView1<f64>, b: ArrayView1<f64>) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b.iter()) {
        let d = x - y;
        s += d * d;
    }
    s
}

fn check_k(cloud: &PointCloud, k: usize) -> Result<()> {
    if k == 0 || k >= cloud.len() {
        return Err(Error::Parameter(format!(
            "k must satisfy 1 <= k < N, got k={k} with N={}",
            cloud.len()
        )));
    }
    Ok(())
}

/// Exact `k` nearest neighbours of every point (self excluded).
pub fn knn(cloud: &PointCloud, k: usize) -> Result<NeighborTable> {
    if cloud.dim() <= KDTREE_MAX_DIM {
        knn_kdtree(cloud, k)
    } else {
        knn_brute_force(cloud, k)
    }
}

pub fn knn_kdtree(cloud: &PointCloud, k: usize) -> Result<NeighborTable> {
    check_k(cloud, k)?;
    let tree = KdTree::build(cloud.points().view());
    let rows = (0..cloud.len())
        .into_par_iter()
        .map(|i| tree.nearest(cloud.row(i), k, Some(i)))
        .collect();
    Ok(NeighborTable::from_rows(k, rows))
}

/// O(N^2) scan; the reference the indexed search must reproduce.
pub fn knn_brute_force(cloud: &PointCloud, k: usize) -> Result<NeighborTable> {
    check_k(cloud, k)?;
    let pts = cloud.points();
    let rows = (0..cloud.len())
        .into_par_iter()
        .map(|i| {
            let q = pts.row(i);
            let mut all: Vec<Candidate> = (0..pts.nrows())
                .filter(|&j| j != i)
                .map(|j| Candidate {
                    sq: sq_dist(q, pts.row(j)),
                    index: j,
                })
                .collect();
            all.select_nth_unstable(k - 1);
            all.truncate(k);
            all.sort_unstable();
            all
        })
        .collect();
    Ok(NeighborTable::from_rows(k, rows))
}
