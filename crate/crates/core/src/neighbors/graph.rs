use std::collections::VecDeque;

use super::NeighborTable;

/// Undirected weighted graph in compressed adjacency form.
#[derive(Debug, Clone, PartialEq)]
pub struct KnnGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    weights: Vec<f64>,
}

impl KnnGraph {
    /// Builds from undirected edges `(a, b, w)`. Duplicates keep the first weight.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Self {
        let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            assert!(a < n && b < n, "edge ({a},{b}) out of range for {n} nodes");
            if a == b {
                continue;
            }
            adj[a].push((b, w));
            adj[b].push((a, w));
        }
        Self::from_adjacency(adj)
    }

    fn from_adjacency(mut adj: Vec<Vec<(usize, f64)>>) -> Self {
        let mut offsets = Vec::with_capacity(adj.len() + 1);
        let mut targets = Vec::new();
        let mut weights = Vec::new();
        offsets.push(0);
        for list in &mut adj {
            list.sort_by_key(|&(j, _)| j);
            list.dedup_by_key(|&mut (j, _)| j);
            for &(j, w) in list.iter() {
                targets.push(j);
                weights.push(w);
            }
            offsets.push(targets.len());
        }
        KnnGraph {
            offsets,
            targets,
            weights,
        }
    }

    pub fn node_count(&self) -> usize {
        self.offsets.len() - 1
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    pub fn degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn neighbors(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.targets[r.clone()]
            .iter()
            .copied()
            .zip(self.weights[r].iter().copied())
    }

    pub fn weight(&self, i: usize, j: usize) -> Option<f64> {
        self.neighbors(i).find(|&(t, _)| t == j).map(|(_, w)| w)
    }

    /// Induced subgraph on `nodes`; node `nodes[i]` becomes `i`.
    pub fn induced(&self, nodes: &[usize]) -> KnnGraph {
        let mut map = vec![usize::MAX; self.node_count()];
        for (new, &old) in nodes.iter().enumerate() {
            map[old] = new;
        }
        let adj = nodes
            .iter()
            .map(|&old| {
                self.neighbors(old)
                    .filter(|&(t, _)| map[t] != usize::MAX)
                    .map(|(t, w)| (map[t], w))
                    .collect()
            })
            .collect();
        Self::from_adjacency(adj)
    }
}

/// Symmetrised k-NN graph: `i ~ j` when either lists the other.
pub fn knn_graph(table: &NeighborTable) -> KnnGraph {
    let n = table.len();
    let mut adj: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for i in 0..n {
        for (&j, &w) in table.indices(i).iter().zip(table.distances(i)) {
            adj[i].push((j, w));
            adj[j].push((i, w));
        }
    }
    KnnGraph::from_adjacency(adj)
}

/// Nodes of the largest connected component, ascending. Equal sizes go to
/// the component holding the smallest node index.
pub fn largest_component(graph: &KnnGraph) -> Vec<usize> {
    let n = graph.node_count();
    let mut seen = vec![false; n];
    let mut best: Vec<usize> = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..n {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        queue.push_back(start);
        let mut comp = Vec::new();
        while let Some(u) = queue.pop_front() {
            comp.push(u);
            for (v, _) in graph.neighbors(u) {
                if !seen[v] {
                    seen[v] = true;
                    queue.push_back(v);
                }
            }
        }
        if comp.len() > best.len() {
            best = comp;
        }
    }
    best.sort_unstable();
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::PointCloud;
    use crate::neighbors::knn;
    use ndarray::array;

    #[test]
    fn collinear_graph_edges() {
        let c = PointCloud::unlabeled(array![[0.0], [1.0], [3.0]]).unwrap();
        let g = knn_graph(&knn(&c, 1).unwrap());
        assert_eq!(g.edge_count(), 2);
        assert_eq!(g.weight(0, 1), Some(1.0));
        assert_eq!(g.weight(1, 2), Some(2.0));
        assert_eq!(g.weight(2, 1), Some(2.0));
        assert_eq!(g.weight(0, 2), None);
    }

    #[test]
    fn square_corners_all_have_edges() {
        let c = PointCloud::unlabeled(array![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]).unwrap();
        let g = knn_graph(&knn(&c, 1).unwrap());
        assert!((0..4).all(|i| g.degree(i) >= 1));
    }

    #[test]
    fn edge_count_bounded() {
        let c = crate::data::generate_hypercube(200, 2, 3).unwrap();
        for k in [1, 3, 10] {
            let g = knn_graph(&knn(&c, k).unwrap());
            assert!(g.edge_count() <= c.len() * k);
            assert!(g.edge_count() >= c.len() * k / 2);
        }
    }

    #[test]
    fn components() {
        let connected = KnnGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]);
        assert_eq!(largest_component(&connected), vec![0, 1, 2]);
        let split = KnnGraph::from_edges(5, &[(0, 4, 1.0), (1, 2, 1.0), (2, 3, 1.0)]);
        assert_eq!(largest_component(&split), vec![1, 2, 3]);
        let tie = KnnGraph::from_edges(4, &[(3, 1, 1.0), (0, 2, 1.0)]);
        assert_eq!(largest_component(&tie), vec![0, 2]);
        assert!(largest_component(&KnnGraph::from_edges(0, &[])).is_empty());
    }

    #[test]
    fn induced_subgraph_relabels() {
        let g = KnnGraph::from_edges(4, &[(0, 1, 1.0), (1, 3, 2.0), (2, 3, 5.0)]);
        let s = g.induced(&[1, 3]);
        assert_eq!(s.node_count(), 2);
        assert_eq!(s.weight(0, 1), Some(2.0));
        assert_eq!(s.edge_count(), 1);
    }
}
