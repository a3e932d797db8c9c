//! Closed simple polygons in the plane, stored counter-clockwise.

use std::collections::HashMap;

use super::bvh::Bvh;
use super::SmoothSource;
use crate::error::{Error, Result};
use crate::quadrature::rules::pairwise_sum;

#[derive(Clone, Debug)]
pub struct Polyline {
    pub vertices: Vec<[f64; 2]>,
    /// Smooth curve the vertices sample; refinement projects onto it.
    pub source: Option<SmoothSource>,
    bvh: Bvh<2>,
}

pub fn closest_on_segment(p: &[f64], a: &[f64; 2], b: &[f64; 2]) -> ([f64; 2], f64) {
    let d = [b[0] - a[0], b[1] - a[1]];
    let l2 = d[0] * d[0] + d[1] * d[1];
    let t = if l2 > 0.0 {
        (((p[0] - a[0]) * d[0] + (p[1] - a[1]) * d[1]) / l2).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let q = [a[0] + t * d[0], a[1] + t * d[1]];
    (q, (q[0] - p[0]).powi(2) + (q[1] - p[1]).powi(2))
}

fn orient(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn segments_cross(a: &[f64; 2], b: &[f64; 2], c: &[f64; 2], d: &[f64; 2]) -> bool {
    let o1 = orient(a, b, c);
    let o2 = orient(a, b, d);
    let o3 = orient(c, d, a);
    let o4 = orient(c, d, b);
    if ((o1 > 0.0 && o2 < 0.0) || (o1 < 0.0 && o2 > 0.0))
        && ((o3 > 0.0 && o4 < 0.0) || (o3 < 0.0 && o4 > 0.0))
    {
        return true;
    }
    let on = |p: &[f64; 2], q: &[f64; 2], r: &[f64; 2], o: f64| {
        o == 0.0
            && r[0] >= p[0].min(q[0])
            && r[0] <= p[0].max(q[0])
            && r[1] >= p[1].min(q[1])
            && r[1] <= p[1].max(q[1])
    };
    on(a, b, c, o1) || on(a, b, d, o2) || on(c, d, a, o3) || on(c, d, b, o4)
}

impl Polyline {
    pub fn new(mut vertices: Vec<[f64; 2]>, source: Option<SmoothSource>) -> Result<Self> {
        if vertices.len() > 3 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        if vertices.len() < 3 {
            return Err(Error::InvalidShape(
                "a polyline loop needs at least 3 vertices".into(),
            ));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidShape("non-finite polyline vertex".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(Error::InvalidShape(format!(
                    "zero-length segment at vertex {i}"
                )));
            }
        }
        let mut pl = Polyline {
            vertices,
            source,
            bvh: Bvh::default(),
        };
        if pl.signed_area() < 0.0 {
            pl.vertices.reverse();
        }
        pl.check_simple()?;
        pl.rebuild_bvh();
        Ok(pl)
    }

    fn rebuild_bvh(&mut self) {
        let boxes: Vec<_> = (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                (
                    [a[0].min(b[0]), a[1].min(b[1])],
                    [a[0].max(b[0]), a[1].max(b[1])],
                )
            })
            .collect();
        self.bvh = Bvh::build(&boxes);
    }

    /// Non-adjacent segments must not touch; checked with a uniform grid.
    fn check_simple(&self) -> Result<()> {
        let n = self.len();
        let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
        for v in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(v[k]);
                hi[k] = hi[k].max(v[k]);
            }
        }
        let cells = ((n as f64).sqrt().ceil() as usize).clamp(1, 2048);
        let size = [
            (hi[0] - lo[0]).max(1e-300) / cells as f64,
            (hi[1] - lo[1]).max(1e-300) / cells as f64,
        ];
        let cell = |x: f64, k: usize| (((x - lo[k]) / size[k]) as usize).min(cells - 1);
        let mut grid: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for i in 0..n {
            let (a, b) = self.segment(i);
            for cx in cell(a[0].min(b[0]), 0)..=cell(a[0].max(b[0]), 0) {
                for cy in cell(a[1].min(b[1]), 1)..=cell(a[1].max(b[1]), 1) {
                    grid.entry((cx, cy)).or_default().push(i);
                }
            }
        }
        let mut keys: Vec<_> = grid.keys().copied().collect();
        keys.sort_unstable();
        for key in keys {
            let segs = &grid[&key];
            for (k, &i) in segs.iter().enumerate() {
                for &j in &segs[k + 1..] {
                    let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                    if adjacent {
                        continue;
                    }
                    let (a, b) = self.segment(i);
                    let (c, d) = self.segment(j);
                    if segments_cross(a, b, c, d) {
                        return Err(Error::InvalidShape(format!(
                            "polyline is not simple: segments {i} and {j} intersect"
                        )));
                    }
                }
            }
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn segment(&self, i: usize) -> (&[f64; 2], &[f64; 2]) {
        (&self.vertices[i], &self.vertices[(i + 1) % self.len()])
    }

    pub fn segment_length(&self, i: usize) -> f64 {
        let (a, b) = self.segment(i);
        (b[0] - a[0]).hypot(b[1] - a[1])
    }

    /// Outward unit normal of segment i.
    pub fn segment_normal(&self, i: usize) -> [f64; 2] {
        let (a, b) = self.segment(i);
        let l = self.segment_length(i);
        [(b[1] - a[1]) / l, -(b[0] - a[0]) / l]
    }

    pub fn measure(&self) -> f64 {
        let v: Vec<f64> = (0..self.len()).map(|i| self.segment_length(i)).collect();
        pairwise_sum(&v)
    }

    pub fn signed_area(&self) -> f64 {
        let v: Vec<f64> = (0..self.len())
            .map(|i| {
                let (a, b) = self.segment(i);
                0.5 * (a[0] * b[1] - a[1] * b[0])
            })
            .collect();
        pairwise_sum(&v)
    }

    /// Winding number of the loop around p (Sunday's crossing rule).
    pub fn winding_number(&self, p: &[f64]) -> i64 {
        let mut w = 0;
        for i in 0..self.len() {
            let (a, b) = self.segment(i);
            if a[1] <= p[1] {
                if b[1] > p[1] && orient(a, b, &[p[0], p[1]]) > 0.0 {
                    w += 1;
                }
            } else if b[1] <= p[1] && orient(a, b, &[p[0], p[1]]) < 0.0 {
                w -= 1;
            }
        }
        w
    }

    /// Nearest point, segment index and distance.
    pub fn closest(&self, p: &[f64]) -> ([f64; 2], usize, f64) {
        let (i, d2) = self
            .bvh
            .nearest(p, |i| {
                let (a, b) = self.segment(i);
                closest_on_segment(p, a, b).1
            })
            .expect("polyline has segments");
        let (a, b) = self.segment(i);
        (closest_on_segment(p, a, b).0, i, d2.sqrt())
    }

    /// Segments whose bounding boxes come within `radius` of p.
    pub fn segments_near(&self, p: &[f64], radius: f64) -> Vec<usize> {
        self.bvh.within(p, radius)
    }

    /// Recursive bisection of segments longer than `max(g · dist, h_min)`.
    /// With `project`, new vertices move onto the smooth source.
    pub fn graded(&self, near: &[f64], grading: f64, h_min: f64, project: bool) -> Polyline {
        let mut out = Vec::with_capacity(self.len());
        for i in 0..self.len() {
            let (a, b) = self.segment(i);
            let mut stack = vec![(*a, *b)];
            while let Some((a, b)) = stack.pop() {
                let len = (b[0] - a[0]).hypot(b[1] - a[1]);
                let d = closest_on_segment(near, &a, &b).1.sqrt();
                if len > (grading * d).max(h_min) {
                    let mut m = [0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])];
                    if let Some(src) = self.source.as_ref().filter(|_| project) {
                        let q = src.project(&m);
                        m = [q[0], q[1]];
                    }
                    // right half first so that the left half is emitted next
                    stack.push((m, b));
                    stack.push((a, m));
                } else {
                    out.push(a);
                }
            }
        }
        let mut pl = Polyline {
            vertices: out,
            source: self.source.clone(),
            bvh: Bvh::default(),
        };
        pl.rebuild_bvh();
        pl
    }

    /// Parameter interval of segment i inside the ball `B(z, R)`.
    pub fn clip_segment(&self, i: usize, z: &[f64], radius: f64) -> Option<(f64, f64)> {
        let (a, b) = self.segment(i);
        let d = [b[0] - a[0], b[1] - a[1]];
        let w = [a[0] - z[0], a[1] - z[1]];
        let qa = d[0] * d[0] + d[1] * d[1];
        let qb = 2.0 * (w[0] * d[0] + w[1] * d[1]);
        let qc = w[0] * w[0] + w[1] * w[1] - radius * radius;
        let disc = qb * qb - 4.0 * qa * qc;
        if disc <= 0.0 {
            return None;
        }
        let s = disc.sqrt();
        // numerically stable roots
        let q = -0.5 * (qb + qb.signum() * s);
        let (mut t0, mut t1) = if q == 0.0 {
            (-s / (2.0 * qa), s / (2.0 * qa))
        } else {
            (q / qa, qc / q)
        };
        if t0 > t1 {
            std::mem::swap(&mut t0, &mut t1);
        }
        let (t0, t1) = (t0.max(0.0), t1.min(1.0));
        (t1 > t0).then_some((t0, t1))
    }

    pub fn transformed(
        &self,
        f: impl Fn(&[f64]) -> Vec<f64>,
        source: Option<SmoothSource>,
    ) -> Result<Polyline> {
        let v = self
            .vertices
            .iter()
            .map(|p| {
                let q = f(p);
                [q[0], q[1]]
            })
            .collect();
        Polyline::new(v, source)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn square() -> Polyline {
        Polyline::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 1.0], [1.0, 0.0]], None).unwrap()
    }

    #[test]
    fn orientation_is_normalised() {
        let s = square();
        assert!((s.signed_area() - 1.0).abs() < 1e-15);
        assert!((s.measure() - 4.0).abs() < 1e-15);
        let n = s.segment_normal(0);
        let (a, b) = s.segment(0);
        // outward normal points away from the centroid
        let mid = [0.5 * (a[0] + b[0]) - 0.5, 0.5 * (a[1] + b[1]) - 0.5];
        assert!(n[0] * mid[0] + n[1] * mid[1] > 0.0);
    }

    #[test]
    fn bowtie_is_rejected() {
        let r = Polyline::new(vec![[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]], None);
        assert!(r.is_err());
    }

    #[test]
    fn winding_number_inside_outside() {
        let s = square();
        assert_eq!(s.winding_number(&[0.5, 0.5]), 1);
        assert_eq!(s.winding_number(&[1.5, 0.5]), 0);
    }

    #[test]
    fn clipping_of_a_diameter() {
        let pl = Polyline::new(vec![[-2.0, 0.0], [2.0, 0.0], [0.0, 3.0]], None).unwrap();
        let i = (0..3)
            .find(|&i| pl.segment(i).0[1] == 0.0 && pl.segment(i).1[1] == 0.0)
            .unwrap();
        let (t0, t1) = pl.clip_segment(i, &[0.0, 0.0], 1.0).unwrap();
        assert!((pl.segment_length(i) * (t1 - t0) - 2.0).abs() < 1e-14);
        let _ = PI;
    }
}
