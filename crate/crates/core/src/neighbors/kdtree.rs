use std::collections::BinaryHeap;

use ndarray::{ArrayView1, ArrayView2};

use super::{sq_dist, Candidate};

const LEAF_SIZE: usize = 16;

#[derive(Debug)]
enum Node {
    Leaf { start: usize, end: usize },
    Split { dim: usize, value: f64, left: usize, right: usize },
}

/// Static k-d tree over the rows of a matrix.
///
/// Subtrees are pruned only when their lower bound is strictly worse than
/// the current k-th candidate, so ties resolve exactly as a full scan would.
#[derive(Debug)]
pub struct KdTree<'a> {
    points: ArrayView2<'a, f64>,
    order: Vec<usize>,
    nodes: Vec<Node>,
}

impl<'a> KdTree<'a> {
    pub fn build(points: ArrayView2<'a, f64>) -> Self {
        let mut tree = KdTree {
            points,
            order: (0..points.nrows()).collect(),
            nodes: Vec::new(),
        };
        if points.nrows() > 0 {
            tree.build_node(0, points.nrows());
        }
        tree
    }

    fn build_node(&mut self, start: usize, end: usize) -> usize {
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { start, end });
        if end - start <= LEAF_SIZE {
            return id;
        }
        let pts = self.points;
        let (mut best_dim, mut best_spread) = (0, 0.0);
        for d in 0..pts.ncols() {
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for &i in &self.order[start..end] {
                let v = pts[[i, d]];
                lo = lo.min(v);
                hi = hi.max(v);
            }
            if hi - lo > best_spread {
                best_spread = hi - lo;
                best_dim = d;
            }
        }
        if best_spread == 0.0 {
            return id;
        }
        let mid = (end - start) / 2;
        self.order[start..end].select_nth_unstable_by(mid, |&a, &b| {
            pts[[a, best_dim]]
                .total_cmp(&pts[[b, best_dim]])
                .then(a.cmp(&b))
        });
        let value = pts[[self.order[start + mid], best_dim]];
        let left = self.build_node(start, start + mid);
        let right = self.build_node(start + mid, end);
        self.nodes[id] = Node::Split {
            dim: best_dim,
            value,
            left,
            right,
        };
        id
    }

    /// The `k` nearest rows to `query`, ascending; `exclude` skips one row.
    pub(crate) fn nearest(
        &self,
        query: ArrayView1<f64>,
        k: usize,
        exclude: Option<usize>,
    ) -> Vec<Candidate> {
        let mut heap = BinaryHeap::with_capacity(k + 1);
        if !self.nodes.is_empty() && k > 0 {
            self.search(0, query, k, exclude, &mut heap);
        }
        heap.into_sorted_vec()
    }

    fn search(
        &self,
        node: usize,
        q: ArrayView1<f64>,
        k: usize,
        exclude: Option<usize>,
        heap: &mut BinaryHeap<Candidate>,
    ) {
        match self.nodes[node] {
            Node::Leaf { start, end } => {
                for &i in &self.order[start..end] {
                    if Some(i) == exclude {
                        continue;
                    }
                    let c = Candidate {
                        sq: sq_dist(q, self.points.row(i)),
                        index: i,
                    };
                    if heap.len() < k {
                        heap.push(c);
                    } else if c < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(c);
                    }
                }
            }
            Node::Split {
                dim,
                value,
                left,
                right,
            } => {
                let diff = q[dim] - value;
                let (near, far) = if diff < 0.0 { (left, right) } else { (right, left) };
                self.search(near, q, k, exclude, heap);
                let bound = diff * diff;
                if heap.len() < k || bound <= heap.peek().unwrap().sq {
                    self.search(far, q, k, exclude, heap);
                }
            }
        }
    }
}
