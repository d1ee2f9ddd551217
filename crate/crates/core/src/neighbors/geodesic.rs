use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::KnnGraph;

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    node: usize,
}

impl Eq for Entry {}

// reversed: BinaryHeap pops the smallest distance first
impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .total_cmp(&self.dist)
            .then(other.node.cmp(&self.node))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Dijkstra from `source`. Unreachable nodes come back as `None`.
pub fn single_source(graph: &KnnGraph, source: usize) -> Vec<Option<f64>> {
    dijkstra(graph, source)
        .into_iter()
        .map(|d| d.is_finite().then_some(d))
        .collect()
}

fn dijkstra(graph: &KnnGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; graph.node_count()];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(Entry {
        dist: 0.0,
        node: source,
    });
    while let Some(Entry { dist: d, node: u }) = heap.pop() {
        if d > dist[u] {
            continue;
        }
        for (v, w) in graph.neighbors(u) {
            let nd = d + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(Entry { dist: nd, node: v });
            }
        }
    }
    dist
}

/// All-pairs shortest-path lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct GeodesicDistances {
    n: usize,
    // row-major; unreachable pairs are stored as +inf and never exposed
    values: Vec<f64>,
}

impl GeodesicDistances {
    pub fn source_count(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> Option<f64> {
        let v = self.values[i * self.n + j];
        v.is_finite().then_some(v)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = Option<f64>> + '_ {
        self.values[i * self.n..(i + 1) * self.n]
            .iter()
            .map(|v| v.is_finite().then_some(*v))
    }

    /// Reachable pairs `i < j`, row by row.
    pub fn finite_upper_triangle(&self) -> Vec<f64> {
        (0..self.n)
            .flat_map(|i| self.values[i * self.n + i + 1..(i + 1) * self.n].iter().copied())
            .filter(|v| v.is_finite())
            .collect()
    }

    pub fn unreachable_pairs(&self) -> usize {
        (0..self.n)
            .map(|i| {
                self.values[i * self.n + i + 1..(i + 1) * self.n]
                    .iter()
                    .filter(|v| !v.is_finite())
                    .count()
            })
            .sum()
    }
}

/// One Dijkstra run per node, rows filled independently.
pub fn geodesics_all_pairs(graph: &KnnGraph) -> GeodesicDistances {
    let n = graph.node_count();
    let mut values = vec![0.0; n * n];
    if n > 0 {
        values
            .par_chunks_mut(n)
            .enumerate()
            .for_each(|(i, row)| row.copy_from_slice(&dijkstra(graph, i)));
    }
    GeodesicDistances { n, values }
}

/// Upper-triangle geodesic lengths (`i < j`) without materialising the full
/// matrix. Unreachable pairs are skipped; the count of skipped pairs is
/// returned alongside.
pub fn pairwise_geodesics(graph: &KnnGraph) -> (Vec<f64>, usize) {
    let n = graph.node_count();
    let rows: Vec<(Vec<f64>, usize)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d = dijkstra(graph, i);
            let mut kept = Vec::with_capacity(n - i - 1);
            let mut missing = 0;
            for &v in &d[i + 1..] {
                if v.is_finite() {
                    kept.push(v);
                } else {
                    missing += 1;
                }
            }
            (kept, missing)
        })
        .collect();
    let total: usize = rows.iter().map(|(r, _)| r.len()).sum();
    let mut out = Vec::with_capacity(total);
    let mut missing = 0;
    for (r, m) in rows {
        out.extend_from_slice(&r);
        missing += m;
    }
    (out, missing)
}
