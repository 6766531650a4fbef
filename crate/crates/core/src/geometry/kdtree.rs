use std::collections::BinaryHeap;

const LEAF: usize = 16;

#[derive(Debug, Clone)]
struct Node {
    start: usize,
    end: usize,
    lo: Vec<f64>,
    hi: Vec<f64>,
    children: Option<(usize, usize)>,
}

/// Static k-d tree for closed-ball counting in `R^d`.
///
/// Owns a reordered copy of the points. Each node keeps its bounding box so a
/// query can count whole subtrees that lie inside a ball without visiting them.
#[derive(Debug, Clone)]
pub struct KdTree {
    dim: usize,
    points: Vec<f64>,
    nodes: Vec<Node>,
}

impl KdTree {
    /// `points` is row-major with `dim` columns.
    pub fn build(dim: usize, points: &[f64]) -> Self {
        assert!(dim > 0 && points.len() % dim == 0, "point buffer does not match dimension");
        let n = points.len() / dim;
        let mut order: Vec<usize> = (0..n).collect();
        let mut nodes = Vec::with_capacity(2 * n / LEAF + 1);
        if n > 0 {
            build_node(dim, points, &mut order, 0, n, &mut nodes);
        }
        let mut reordered = Vec::with_capacity(points.len());
        for &i in &order {
            reordered.extend_from_slice(&points[i * dim..(i + 1) * dim]);
        }
        KdTree { dim, points: reordered, nodes }
    }

    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `#{p : |p − center| ≤ r}` for each radius; `radii` must be increasing.
    pub fn count_within(&self, center: &[f64], radii: &[f64]) -> Vec<usize> {
        debug_assert!(radii.windows(2).all(|w| w[0] <= w[1]));
        let r2: Vec<f64> = radii.iter().map(|r| r * r).collect();
        // range increments over radius indices, closed by `diff[active]`
        let mut diff = vec![0isize; radii.len() + 1];
        if !self.nodes.is_empty() && !r2.is_empty() {
            self.count_node(0, center, &r2, r2.len(), &mut diff);
        }
        let mut acc = 0isize;
        diff[..radii.len()]
            .iter()
            .map(|&d| {
                acc += d;
                acc as usize
            })
            .collect()
    }

    /// Radii with index `≥ active` already count this subtree in full.
    fn count_node(&self, id: usize, c: &[f64], r2: &[f64], mut active: usize, diff: &mut [isize]) {
        let node = &self.nodes[id];
        let (near, far) = box_distances(c, &node.lo, &node.hi);
        if near > r2[active - 1] {
            return;
        }
        let j = r2[..active].partition_point(|&r| r < far);
        if j < active {
            let size = (node.end - node.start) as isize;
            diff[j] += size;
            diff[active] -= size;
            active = j;
            if active == 0 {
                return;
            }
        }
        match node.children {
            Some((l, r)) => {
                self.count_node(l, c, r2, active, diff);
                self.count_node(r, c, r2, active, diff);
            }
            None => {
                for p in self.points[node.start * self.dim..node.end * self.dim].chunks_exact(self.dim) {
                    let d2 = dist2(c, p);
                    let k = r2[..active].partition_point(|&r| r < d2);
                    if k < active {
                        diff[k] += 1;
                        diff[active] -= 1;
                    }
                }
            }
        }
    }

    /// Distance to the `k`-th nearest point (`k ≥ 1`), counting points at
    /// distance zero; `None` if fewer than `k` points.
    pub fn kth_nearest(&self, center: &[f64], k: usize) -> Option<f64> {
        if k == 0 || k > self.len() {
            return None;
        }
        // Non-negative floats order like their bit patterns.
        let mut heap: BinaryHeap<u64> = BinaryHeap::with_capacity(k + 1);
        self.knn_node(0, center, k, &mut heap);
        heap.peek().map(|&b| f64::from_bits(b).sqrt())
    }

    fn knn_node(&self, id: usize, c: &[f64], k: usize, heap: &mut BinaryHeap<u64>) {
        let node = &self.nodes[id];
        let (near, _) = box_distances(c, &node.lo, &node.hi);
        if heap.len() == k && near >= f64::from_bits(*heap.peek().unwrap()) {
            return;
        }
        match node.children {
            Some((l, r)) => {
                let dl = box_distances(c, &self.nodes[l].lo, &self.nodes[l].hi).0;
                let dr = box_distances(c, &self.nodes[r].lo, &self.nodes[r].hi).0;
                let (a, b) = if dl <= dr { (l, r) } else { (r, l) };
                self.knn_node(a, c, k, heap);
                self.knn_node(b, c, k, heap);
            }
            None => {
                for p in self.points[node.start * self.dim..node.end * self.dim].chunks_exact(self.dim) {
                    let d2 = dist2(c, p).to_bits();
                    if heap.len() < k {
                        heap.push(d2);
                    } else if d2 < *heap.peek().unwrap() {
                        heap.pop();
                        heap.push(d2);
                    }
                }
            }
        }
    }
}

fn build_node(dim: usize, pts: &[f64], order: &mut [usize], start: usize, end: usize, nodes: &mut Vec<Node>) -> usize {
    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    for &i in &order[start..end] {
        for l in 0..dim {
            let x = pts[i * dim + l];
            lo[l] = lo[l].min(x);
            hi[l] = hi[l].max(x);
        }
    }
    let id = nodes.len();
    let axis = (0..dim).max_by(|&a, &b| (hi[a] - lo[a]).total_cmp(&(hi[b] - lo[b]))).unwrap();
    let flat = hi[axis] - lo[axis] <= 0.0;
    nodes.push(Node { start, end, lo, hi, children: None });
    if end - start <= LEAF || flat {
        return id;
    }
    let mid = start + (end - start) / 2;
    order[start..end].select_nth_unstable_by(mid - start, |&a, &b| pts[a * dim + axis].total_cmp(&pts[b * dim + axis]));
    let l = build_node(dim, pts, order, start, mid, nodes);
    let r = build_node(dim, pts, order, mid, end, nodes);
    nodes[id].children = Some((l, r));
    id
}

#[inline]
fn dist2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Squared distances from `c` to the nearest and farthest points of a box.
#[inline]
fn box_distances(c: &[f64], lo: &[f64], hi: &[f64]) -> (f64, f64) {
    let mut near = 0.0;
    let mut far = 0.0;
    for l in 0..c.len() {
        let below = lo[l] - c[l];
        let above = c[l] - hi[l];
        let gap = below.max(above).max(0.0);
        near += gap * gap;
        let reach = (c[l] - lo[l]).abs().max((hi[l] - c[l]).abs());
        far += reach * reach;
    }
    (near, far)
}
