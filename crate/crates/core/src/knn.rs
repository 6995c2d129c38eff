//! Exact 3D nearest-neighbor search.
//!
//! Results are identical to a linear scan that keeps the lowest index among
//! equidistant points: distances are computed with the same expression and
//! subtrees are only pruned when strictly farther than the current best.

use crate::mesh::Vec3;

#[derive(Debug, Clone)]
struct Node {
    point: usize,
    axis: usize,
    left: Option<usize>,
    right: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct KdTree {
    points: Vec<Vec3>,
    nodes: Vec<Node>,
    root: Option<usize>,
}

#[inline]
pub(crate) fn dist2(a: &Vec3, b: &Vec3) -> f64 {
    let dx = a.x - b.x;
    let dy = a.y - b.y;
    let dz = a.z - b.z;
    dx * dx + dy * dy + dz * dz
}

impl KdTree {
    pub fn new(points: &[Vec3]) -> Self {
        let mut tree = Self {
            points: points.to_vec(),
            nodes: Vec::with_capacity(points.len()),
            root: None,
        };
        let mut idx: Vec<usize> = (0..points.len()).collect();
        tree.root = tree.build(&mut idx, 0);
        tree
    }

    fn build(&mut self, idx: &mut [usize], depth: usize) -> Option<usize> {
        if idx.is_empty() {
            return None;
        }
        let axis = depth % 3;
        let pts = &self.points;
        idx.sort_unstable_by(|&a, &b| pts[a][axis].total_cmp(&pts[b][axis]).then(a.cmp(&b)));
        let mid = idx.len() / 2;
        let point = idx[mid];
        let node = self.nodes.len();
        self.nodes.push(Node {
            point,
            axis,
            left: None,
            right: None,
        });
        let (lo, hi) = idx.split_at_mut(mid);
        let left = self.build(lo, depth + 1);
        let right = self.build(&mut hi[1..], depth + 1);
        self.nodes[node].left = left;
        self.nodes[node].right = right;
        Some(node)
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Index of the nearest point, lowest index among ties. `None` if empty.
    pub fn nearest(&self, q: &Vec3) -> Option<usize> {
        let mut best = (f64::INFINITY, usize::MAX);
        self.search(self.root, q, &mut best);
        (best.1 != usize::MAX).then_some(best.1)
    }

    fn search(&self, node: Option<usize>, q: &Vec3, best: &mut (f64, usize)) {
        let Some(ni) = node else { return };
        let n = &self.nodes[ni];
        let d = dist2(&self.points[n.point], q);
        if d < best.0 || (d == best.0 && n.point < best.1) {
            *best = (d, n.point);
        }
        let diff = q[n.axis] - self.points[n.point][n.axis];
        let (near, far) = if diff < 0.0 {
            (n.left, n.right)
        } else {
            (n.right, n.left)
        };
        self.search(near, q, best);
        if diff * diff <= best.0 {
            self.search(far, q, best);
        }
    }
}
