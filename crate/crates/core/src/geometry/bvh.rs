//! Axis-aligned bounding volume hierarchy over boundary elements.

const LEAF: usize = 4;

#[derive(Clone, Debug)]
struct Node<const D: usize> {
    lo: [f64; D],
    hi: [f64; D],
    /// Leaf: range into `order`. Inner: `start` is the left child, `count == 0`.
    start: usize,
    count: usize,
    right: usize,
}

#[derive(Clone, Debug, Default)]
pub struct Bvh<const D: usize> {
    nodes: Vec<Node<D>>,
    order: Vec<usize>,
}

fn box_dist2<const D: usize>(lo: &[f64; D], hi: &[f64; D], p: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..D {
        let d = if p[k] < lo[k] {
            lo[k] - p[k]
        } else if p[k] > hi[k] {
            p[k] - hi[k]
        } else {
            0.0
        };
        s += d * d;
    }
    s
}

impl<const D: usize> Bvh<D> {
    pub fn build(boxes: &[([f64; D], [f64; D])]) -> Self {
        let mut bvh = Bvh {
            nodes: Vec::with_capacity(2 * boxes.len() / LEAF + 1),
            order: (0..boxes.len()).collect(),
        };
        if !boxes.is_empty() {
            let centroids: Vec<[f64; D]> = boxes
                .iter()
                .map(|(lo, hi)| std::array::from_fn(|k| 0.5 * (lo[k] + hi[k])))
                .collect();
            bvh.build_node(boxes, &centroids, 0, boxes.len());
        }
        bvh
    }

    fn build_node(
        &mut self,
        boxes: &[([f64; D], [f64; D])],
        cent: &[[f64; D]],
        start: usize,
        end: usize,
    ) -> usize {
        let mut lo = [f64::INFINITY; D];
        let mut hi = [f64::NEG_INFINITY; D];
        let mut clo = [f64::INFINITY; D];
        let mut chi = [f64::NEG_INFINITY; D];
        for &i in &self.order[start..end] {
            for k in 0..D {
                lo[k] = lo[k].min(boxes[i].0[k]);
                hi[k] = hi[k].max(boxes[i].1[k]);
                clo[k] = clo[k].min(cent[i][k]);
                chi[k] = chi[k].max(cent[i][k]);
            }
        }
        let id = self.nodes.len();
        self.nodes.push(Node {
            lo,
            hi,
            start,
            count: end - start,
            right: 0,
        });
        if end - start <= LEAF {
            return id;
        }
        let axis = (0..D)
            .max_by(|a, b| (chi[*a] - clo[*a]).total_cmp(&(chi[*b] - clo[*b])))
            .unwrap_or(0);
        let mid = (start + end) / 2;
        self.order[start..end].select_nth_unstable_by(mid - start, |a, b| {
            cent[*a][axis].total_cmp(&cent[*b][axis]).then(a.cmp(b))
        });
        let left = self.build_node(boxes, cent, start, mid);
        let right = self.build_node(boxes, cent, mid, end);
        let node = &mut self.nodes[id];
        node.count = 0;
        node.start = left;
        node.right = right;
        id
    }

    /// Element minimising `dist2(i)` (squared distance from `p` to element i).
    pub fn nearest<F: FnMut(usize) -> f64>(&self, p: &[f64], mut dist2: F) -> Option<(usize, f64)> {
        if self.nodes.is_empty() {
            return None;
        }
        let mut best = (usize::MAX, f64::INFINITY);
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if box_dist2(&node.lo, &node.hi, p) > best.1 {
                continue;
            }
            if node.count > 0 {
                for &i in &self.order[node.start..node.start + node.count] {
                    let d = dist2(i);
                    if d < best.1 || (d == best.1 && i < best.0) {
                        best = (i, d);
                    }
                }
            } else {
                let (l, r) = (node.start, node.right);
                let dl = box_dist2(&self.nodes[l].lo, &self.nodes[l].hi, p);
                let dr = box_dist2(&self.nodes[r].lo, &self.nodes[r].hi, p);
                if dl < dr {
                    stack.push(r);
                    stack.push(l);
                } else {
                    stack.push(l);
                    stack.push(r);
                }
            }
        }
        Some(best)
    }

    /// Elements whose boxes come within `radius` of `p`, in ascending index order.
    pub fn within(&self, p: &[f64], radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        if self.nodes.is_empty() {
            return out;
        }
        let r2 = radius * radius;
        let mut stack = vec![0usize];
        while let Some(id) = stack.pop() {
            let node = &self.nodes[id];
            if box_dist2(&node.lo, &node.hi, p) > r2 {
                continue;
            }
            if node.count > 0 {
                out.extend_from_slice(&self.order[node.start..node.start + node.count]);
            } else {
                stack.push(node.start);
                stack.push(node.right);
            }
        }
        out.sort_unstable();
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_matches_brute_force() {
        let pts: Vec<[f64; 2]> = (0..500)
            .map(|i| {
                let t = i as f64 * 0.7;
                [t.sin() * (1.0 + 0.3 * (3.0 * t).cos()), t.cos()]
            })
            .collect();
        let boxes: Vec<_> = pts.iter().map(|p| (*p, *p)).collect();
        let bvh = Bvh::build(&boxes);
        for q in [[0.1, 0.2], [2.0, -1.0], [-0.5, 0.9]] {
            let d2 = |i: usize| (pts[i][0] - q[0]).powi(2) + (pts[i][1] - q[1]).powi(2);
            let (i, d) = bvh.nearest(&q, d2).unwrap();
            let brute = (0..pts.len()).map(d2).fold(f64::INFINITY, f64::min);
            assert_eq!(d, brute);
            assert_eq!(d2(i), brute);
            let near = bvh.within(&q, 0.3);
            let want: Vec<usize> = (0..pts.len()).filter(|&i| d2(i) <= 0.09).collect();
            assert!(want.iter().all(|i| near.contains(i)));
        }
    }
}
