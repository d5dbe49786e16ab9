//! A static k-d tree over row-major points, specialized for the two queries
//! the climate metrics need: multi-radius pair counting and nearest neighbour
//! outside a temporal exclusion window.

const LEAF_SIZE: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    /// Child node indices; `usize::MAX` for leaves.
    left: usize,
    right: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct KdTree<'a> {
    points: &'a [f64],
    dim: usize,
    /// Point indices, permuted so each node owns a contiguous range.
    order: Vec<usize>,
    nodes: Vec<Node>,
}

/// Squared Euclidean distance, summed in coordinate order. Every distance in
/// this module goes through here or through the box bounds below, which use
/// the same summation order; that is what makes tree and brute-force pair
/// counts agree exactly.
#[inline]
pub fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for (x, y) in a.iter().zip(b) {
        let d = x - y;
        s += d * d;
    }
    s
}

impl<'a> KdTree<'a> {
    pub fn new(points: &'a [f64], dim: usize) -> Self {
        assert!(dim > 0 && points.len() % dim == 0, "point buffer does not match dimension");
        let n = points.len() / dim;
        let mut tree = KdTree {
            points,
            dim,
            order: (0..n).collect(),
            nodes: Vec::new(),
        };
        if n > 0 {
            tree.build(0, n);
        }
        tree
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    fn build(&mut self, start: usize, end: usize) -> usize {
        let mut lo = vec![f64::INFINITY; self.dim];
        let mut hi = vec![f64::NEG_INFINITY; self.dim];
        for &i in &self.order[start..end] {
            for (k, v) in self.points[i * self.dim..(i + 1) * self.dim].iter().enumerate() {
                lo[k] = lo[k].min(*v);
                hi[k] = hi[k].max(*v);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            start,
            end,
            left: usize::MAX,
            right: usize::MAX,
            lo: lo.clone(),
            hi: hi.clone(),
        });
        if end - start > LEAF_SIZE {
            let axis = (0..self.dim)
                .max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b])))
                .unwrap_or(0);
            if hi[axis] > lo[axis] {
                let mid = start + (end - start) / 2;
                let (pts, dim) = (self.points, self.dim);
                self.order[start..end].select_nth_unstable_by(mid - start, |&a, &b| {
                    pts[a * dim + axis].total_cmp(&pts[b * dim + axis])
                });
                let left = self.build(start, mid);
                let right = self.build(mid, end);
                self.nodes[id].left = left;
                self.nodes[id].right = right;
            }
        }
        id
    }

    #[inline]
    fn box_bounds(&self, node: &Node, q: &[f64]) -> (f64, f64) {
        let mut min2 = 0.0;
        let mut max2 = 0.0;
        for k in 0..self.dim {
            let below = node.lo[k] - q[k];
            let above = q[k] - node.hi[k];
            let near = below.max(above).max(0.0);
            min2 += near * near;
            let far = (q[k] - node.lo[k]).max(node.hi[k] - q[k]);
            max2 += far * far;
        }
        (min2, max2)
    }

    /// Number of ordered pairs `(i, j)`, `i ≠ j`, with `‖xᵢ - xⱼ‖ < r` for
    /// each radius in `radii` (which must be ascending).
    pub fn count_pairs(&self, radii: &[f64]) -> Vec<u64> {
        debug_assert!(radii.windows(2).all(|w| w[0] <= w[1]));
        let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
        let mut diff = vec![0i64; r2.len() + 1];
        if self.nodes.is_empty() {
            return vec![0; radii.len()];
        }
        for i in 0..self.len() {
            self.count_from(0, self.point(i), &r2, 0, r2.len(), &mut diff);
        }
        let mut out = Vec::with_capacity(radii.len());
        let mut acc = 0i64;
        let n = self.len() as i64;
        for (k, d) in diff.iter().take(r2.len()).enumerate() {
            acc += d;
            // every query counted itself once for each positive radius
            let own = if r2[k] > 0.0 { n } else { 0 };
            out.push((acc - own) as u64);
        }
        out
    }

    fn count_from(&self, id: usize, q: &[f64], r2: &[f64], lo: usize, hi: usize, diff: &mut [i64]) {
        let node = &self.nodes[id];
        let (min2, max2) = self.box_bounds(node, q);
        // radii with r² <= min2 see nothing; radii with r² > max2 see everything
        let first_any = lo + r2[lo..hi].partition_point(|&r| r <= min2);
        let first_all = lo + r2[lo..hi].partition_point(|&r| r <= max2);
        let count = (node.end - node.start) as i64;
        if first_all < hi {
            diff[first_all] += count;
            diff[hi] -= count;
        }
        if first_any >= first_all {
            return;
        }
        if node.left == usize::MAX {
            for &j in &self.order[node.start..node.end] {
                let d2 = dist2(q, self.point(j));
                let k = first_any + r2[first_any..first_all].partition_point(|&r| r <= d2);
                if k < first_all {
                    diff[k] += 1;
                    diff[first_all] -= 1;
                }
            }
        } else {
            self.count_from(node.left, q, r2, first_any, first_all, diff);
            self.count_from(node.right, q, r2, first_any, first_all, diff);
        }
    }

    /// Nearest neighbour of point `qi` among points `j` with `|j - qi| > window`.
    /// Returns `(j, squared distance)`.
    pub fn nearest_outside_window(&self, qi: usize, window: usize) -> Option<(usize, f64)> {
        let q = self.point(qi);
        let mut best = (usize::MAX, f64::INFINITY);
        if !self.nodes.is_empty() {
            self.nearest_from(0, q, qi, window, &mut best);
        }
        (best.0 != usize::MAX).then_some(best)
    }

    fn nearest_from(&self, id: usize, q: &[f64], qi: usize, window: usize, best: &mut (usize, f64)) {
        let node = &self.nodes[id];
        if node.left == usize::MAX {
            for &j in &self.order[node.start..node.end] {
                if j.abs_diff(qi) <= window {
                    continue;
                }
                let d2 = dist2(q, self.point(j));
                if d2 < best.1 || (d2 == best.1 && j < best.0) {
                    *best = (j, d2);
                }
            }
            return;
        }
        let (l, r) = (&self.nodes[node.left], &self.nodes[node.right]);
        let dl = self.box_bounds(l, q).0;
        let dr = self.box_bounds(r, q).0;
        let (first, fd, second, sd) = if dl <= dr {
            (node.left, dl, node.right, dr)
        } else {
            (node.right, dr, node.left, dl)
        };
        if fd <= best.1 {
            self.nearest_from(first, q, qi, window, best);
        }
        if sd <= best.1 {
            self.nearest_from(second, q, qi, window, best);
        }
    }
}
