//! Watertight, outward-oriented triangle meshes in R³.

use std::collections::HashMap;
use std::f64::consts::PI;

use super::bvh::Bvh;
use super::SmoothSource;
use crate::error::{Error, Result};
use crate::point::{cross3, dot, norm};
use crate::quadrature::rules::pairwise_sum;

#[derive(Clone, Debug)]
pub struct TriMesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
    pub source: Option<SmoothSource>,
    bvh: Bvh<3>,
}

fn sub3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn d2(a: &[f64], b: &[f64]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)
}

/// Closest point of triangle `abc` to `p` (Voronoi-region walk).
pub fn closest_on_triangle(p: &[f64], a: &[f64; 3], b: &[f64; 3], c: &[f64; 3]) -> [f64; 3] {
    let p = [p[0], p[1], p[2]];
    let ab = sub3(b, a);
    let ac = sub3(c, a);
    let ap = sub3(&p, a);
    let d1 = dot(&ab, &ap);
    let d2_ = dot(&ac, &ap);
    if d1 <= 0.0 && d2_ <= 0.0 {
        return *a;
    }
    let bp = sub3(&p, b);
    let d3 = dot(&ab, &bp);
    let d4 = dot(&ac, &bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2_;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return [a[0] + v * ab[0], a[1] + v * ab[1], a[2] + v * ab[2]];
    }
    let cp = sub3(&p, c);
    let d5 = dot(&ab, &cp);
    let d6 = dot(&ac, &cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2_ - d1 * d6;
    if vb <= 0.0 && d2_ >= 0.0 && d6 <= 0.0 {
        let w = d2_ / (d2_ - d6);
        return [a[0] + w * ac[0], a[1] + w * ac[1], a[2] + w * ac[2]];
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return [
            b[0] + w * (c[0] - b[0]),
            b[1] + w * (c[1] - b[1]),
            b[2] + w * (c[2] - b[2]),
        ];
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    [
        a[0] + ab[0] * v + ac[0] * w,
        a[1] + ab[1] * v + ac[1] * w,
        a[2] + ab[2] * v + ac[2] * w,
    ]
}

fn edge_key(a: usize, b: usize) -> (usize, usize) {
    (a.min(b), a.max(b))
}

impl TriMesh {
    pub fn new(
        vertices: Vec<[f64; 3]>,
        mut faces: Vec<[usize; 3]>,
        source: Option<SmoothSource>,
    ) -> Result<Self> {
        if faces.len() < 4 {
            return Err(Error::InvalidShape(
                "a closed mesh needs at least 4 faces".into(),
            ));
        }
        if vertices.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::InvalidShape("non-finite mesh vertex".into()));
        }
        for (i, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidShape(format!(
                    "face {i} references a missing vertex"
                )));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidShape(format!("face {i} is degenerate")));
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * faces.len());
        for f in &faces {
            for k in 0..3 {
                *directed.entry((f[k], f[(k + 1) % 3])).or_insert(0) += 1;
            }
        }
        let mut keys: Vec<_> = directed.keys().copied().collect();
        keys.sort_unstable();
        for (a, b) in keys {
            if directed[&(a, b)] != 1 || directed.get(&(b, a)) != Some(&1) {
                return Err(Error::InvalidShape(format!(
                    "mesh is not watertight and consistently oriented at edge ({a}, {b})"
                )));
            }
        }
        let mut m = TriMesh {
            vertices,
            faces: Vec::new(),
            source,
            bvh: Bvh::default(),
        };
        let vol = {
            m.faces = std::mem::take(&mut faces);
            m.signed_volume()
        };
        if vol < 0.0 {
            for f in &mut m.faces {
                f.swap(1, 2);
            }
        }
        if (0..m.faces.len()).any(|i| m.face_area(i) <= 0.0) {
            return Err(Error::InvalidShape("mesh has a zero-area face".into()));
        }
        m.rebuild_bvh();
        Ok(m)
    }

    fn rebuild_bvh(&mut self) {
        let boxes: Vec<_> = self
            .faces
            .iter()
            .map(|f| {
                let mut lo = [f64::INFINITY; 3];
                let mut hi = [f64::NEG_INFINITY; 3];
                for &v in f {
                    for k in 0..3 {
                        lo[k] = lo[k].min(self.vertices[v][k]);
                        hi[k] = hi[k].max(self.vertices[v][k]);
                    }
                }
                (lo, hi)
            })
            .collect();
        self.bvh = Bvh::build(&boxes);
    }

    pub fn face_points(&self, i: usize) -> (&[f64; 3], &[f64; 3], &[f64; 3]) {
        let f = self.faces[i];
        (
            &self.vertices[f[0]],
            &self.vertices[f[1]],
            &self.vertices[f[2]],
        )
    }

    /// Unnormalised normal `(b - a) × (c - a)`, length twice the area.
    pub fn face_cross(&self, i: usize) -> [f64; 3] {
        let (a, b, c) = self.face_points(i);
        cross3(&sub3(b, a), &sub3(c, a))
    }

    pub fn face_area(&self, i: usize) -> f64 {
        0.5 * norm(&self.face_cross(i))
    }

    pub fn face_normal(&self, i: usize) -> [f64; 3] {
        let c = self.face_cross(i);
        let l = norm(&c);
        [c[0] / l, c[1] / l, c[2] / l]
    }

    pub fn face_diameter(&self, i: usize) -> f64 {
        let (a, b, c) = self.face_points(i);
        d2(a, b).max(d2(b, c)).max(d2(a, c)).sqrt()
    }

    pub fn measure(&self) -> f64 {
        let v: Vec<f64> = (0..self.faces.len()).map(|i| self.face_area(i)).collect();
        pairwise_sum(&v)
    }

    pub fn signed_volume(&self) -> f64 {
        let v: Vec<f64> = (0..self.faces.len())
            .map(|i| {
                let (a, b, c) = self.face_points(i);
                dot(a, &cross3(b, c)) / 6.0
            })
            .collect();
        pairwise_sum(&v)
    }

    /// Generalised winding number: total signed solid angle over 4π.
    pub fn winding_number(&self, p: &[f64]) -> f64 {
        let v: Vec<f64> = (0..self.faces.len())
            .map(|i| {
                let (a, b, c) = self.face_points(i);
                let a = [a[0] - p[0], a[1] - p[1], a[2] - p[2]];
                let b = [b[0] - p[0], b[1] - p[1], b[2] - p[2]];
                let c = [c[0] - p[0], c[1] - p[1], c[2] - p[2]];
                let (la, lb, lc) = (norm(&a), norm(&b), norm(&c));
                let num = dot(&a, &cross3(&b, &c));
                let den = la * lb * lc + dot(&a, &b) * lc + dot(&b, &c) * la + dot(&c, &a) * lb;
                2.0 * num.atan2(den)
            })
            .collect();
        pairwise_sum(&v) / (4.0 * PI)
    }

    /// Nearest point, face index, distance.
    pub fn closest(&self, p: &[f64]) -> ([f64; 3], usize, f64) {
        let (i, dd) = self
            .bvh
            .nearest(p, |i| {
                let (a, b, c) = self.face_points(i);
                d2(&closest_on_triangle(p, a, b, c), p)
            })
            .expect("mesh has faces");
        let (a, b, c) = self.face_points(i);
        (closest_on_triangle(p, a, b, c), i, dd.sqrt())
    }

    pub fn faces_near(&self, p: &[f64], radius: f64) -> Vec<usize> {
        self.bvh.within(p, radius)
    }

    /// Area-weighted vertex normals.
    pub fn vertex_normals(&self) -> Vec<[f64; 3]> {
        let mut acc = vec![[0.0; 3]; self.vertices.len()];
        for i in 0..self.faces.len() {
            let c = self.face_cross(i);
            for &v in &self.faces[i] {
                for k in 0..3 {
                    acc[v][k] += c[k];
                }
            }
        }
        acc.iter()
            .map(|c| {
                let l = norm(c);
                [c[0] / l, c[1] / l, c[2] / l]
            })
            .collect()
    }

    /// Geodesic sphere with `20 ν²` faces; vertices (0, 0, ±R) relative to
    /// the centre are always present.
    pub fn icosphere(
        center: [f64; 3],
        radius: f64,
        freq: usize,
        source: Option<SmoothSource>,
    ) -> Result<TriMesh> {
        if freq == 0 || !(radius > 0.0) {
            return Err(Error::InvalidShape(
                "icosphere needs frequency >= 1 and radius > 0".into(),
            ));
        }
        let z = 1.0 / 5f64.sqrt();
        let rr = 2.0 * z;
        let mut ico = vec![[0.0, 0.0, 1.0]];
        for k in 0..5 {
            let t = 2.0 * PI * k as f64 / 5.0;
            ico.push([rr * t.cos(), rr * t.sin(), z]);
        }
        for k in 0..5 {
            let t = 2.0 * PI * (k as f64 + 0.5) / 5.0;
            ico.push([rr * t.cos(), rr * t.sin(), -z]);
        }
        ico.push([0.0, 0.0, -1.0]);
        let mut tri = Vec::new();
        for k in 0..5 {
            let (u0, u1) = (1 + k, 1 + (k + 1) % 5);
            let (l0, l1) = (6 + k, 6 + (k + 1) % 5);
            tri.push([0, u0, u1]);
            tri.push([u0, l0, u1]);
            tri.push([u1, l0, l1]);
            tri.push([11, l1, l0]);
        }
        let mut verts: Vec<[f64; 3]> = Vec::new();
        let mut index: HashMap<[i64; 3], usize> = HashMap::new();
        let mut faces = Vec::with_capacity(20 * freq * freq);
        let nf = freq as f64;
        let mut vid = |p: [f64; 3]| -> usize {
            let l = norm(&p);
            let u = [p[0] / l, p[1] / l, p[2] / l];
            let key = [
                (u[0] * 1e9).round() as i64,
                (u[1] * 1e9).round() as i64,
                (u[2] * 1e9).round() as i64,
            ];
            *index.entry(key).or_insert_with(|| {
                verts.push([
                    center[0] + radius * u[0],
                    center[1] + radius * u[1],
                    center[2] + radius * u[2],
                ]);
                verts.len() - 1
            })
        };
        for t in &tri {
            let (a, b, c) = (ico[t[0]], ico[t[1]], ico[t[2]]);
            let at = |i: usize, j: usize| -> [f64; 3] {
                // barycentric (1 - (i+j)/ν, i/ν, j/ν)
                let (wb, wc) = (i as f64 / nf, j as f64 / nf);
                let wa = 1.0 - wb - wc;
                std::array::from_fn(|k| wa * a[k] + wb * b[k] + wc * c[k])
            };
            let mut grid = vec![vec![0usize; freq + 1]; freq + 1];
            for i in 0..=freq {
                for j in 0..=(freq - i) {
                    grid[i][j] = vid(at(i, j));
                }
            }
            for i in 0..freq {
                for j in 0..(freq - i) {
                    faces.push([grid[i][j], grid[i + 1][j], grid[i][j + 1]]);
                    if i + j + 1 < freq {
                        faces.push([grid[i + 1][j], grid[i + 1][j + 1], grid[i][j + 1]]);
                    }
                }
            }
        }
        TriMesh::new(verts, faces, source)
    }

    /// Conforming longest-edge bisection until every face satisfies
    /// `diameter <= max(g · dist(face, near), h_min)`. With `project`, new
    /// vertices move onto the smooth source.
    pub fn graded(&self, near: &[f64], grading: f64, h_min: f64, project: bool) -> TriMesh {
        let mut r = Refiner::new(self, project);
        let needs = |r: &Refiner, f: usize| -> bool {
            let [a, b, c] = r.faces[f];
            let (pa, pb, pc) = (&r.verts[a], &r.verts[b], &r.verts[c]);
            let diam = d2(pa, pb).max(d2(pb, pc)).max(d2(pa, pc)).sqrt();
            let dist = d2(&closest_on_triangle(near, pa, pb, pc), near).sqrt();
            diam > (grading * dist).max(h_min)
        };
        let mut queue: Vec<usize> = (0..r.faces.len()).filter(|&f| needs(&r, f)).collect();
        while let Some(f) = queue.pop() {
            if !r.alive[f] || !needs(&r, f) {
                continue;
            }
            let before = r.faces.len();
            r.bisect(f);
            for g in before..r.faces.len() {
                if r.alive[g] && needs(&r, g) {
                    queue.push(g);
                }
            }
        }
        let faces: Vec<[usize; 3]> = r
            .faces
            .iter()
            .zip(&r.alive)
            .filter(|(_, a)| **a)
            .map(|(f, _)| *f)
            .collect();
        let mut m = TriMesh {
            vertices: r.verts,
            faces,
            source: self.source.clone(),
            bvh: Bvh::default(),
        };
        m.rebuild_bvh();
        m
    }

    pub fn transformed(
        &self,
        f: impl Fn(&[f64]) -> Vec<f64>,
        source: Option<SmoothSource>,
    ) -> Result<TriMesh> {
        let v = self
            .vertices
            .iter()
            .map(|p| {
                let q = f(p);
                [q[0], q[1], q[2]]
            })
            .collect();
        TriMesh::new(v, self.faces.clone(), source)
    }
}

/// Mutable mesh with edge adjacency for Rivara bisection.
struct Refiner<'a> {
    verts: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    alive: Vec<bool>,
    edges: HashMap<(usize, usize), Vec<usize>>,
    mids: HashMap<(usize, usize), usize>,
    source: Option<&'a SmoothSource>,
}

impl<'a> Refiner<'a> {
    fn new(m: &'a TriMesh, project: bool) -> Self {
        let mut edges: HashMap<(usize, usize), Vec<usize>> = HashMap::new();
        for (i, f) in m.faces.iter().enumerate() {
            for k in 0..3 {
                edges
                    .entry(edge_key(f[k], f[(k + 1) % 3]))
                    .or_default()
                    .push(i);
            }
        }
        Refiner {
            verts: m.vertices.clone(),
            faces: m.faces.clone(),
            alive: vec![true; m.faces.len()],
            edges,
            mids: HashMap::new(),
            source: m.source.as_ref().filter(|_| project),
        }
    }

    /// Longest edge under a strict total order (length, then key).
    fn longest(&self, f: usize) -> (usize, usize) {
        let t = self.faces[f];
        (0..3)
            .map(|k| edge_key(t[k], t[(k + 1) % 3]))
            .max_by(|a, b| {
                d2(&self.verts[a.0], &self.verts[a.1])
                    .total_cmp(&d2(&self.verts[b.0], &self.verts[b.1]))
                    .then(b.cmp(a))
            })
            .expect("three edges")
    }

    fn neighbour(&self, f: usize, e: (usize, usize)) -> Option<usize> {
        self.edges
            .get(&e)?
            .iter()
            .copied()
            .find(|&g| g != f && self.alive[g])
    }

    fn bisect(&mut self, f: usize) {
        let mut stack = vec![f];
        while let Some(&top) = stack.last() {
            if !self.alive[top] {
                stack.pop();
                continue;
            }
            let e = self.longest(top);
            match self.neighbour(top, e) {
                Some(g) if self.longest(g) != e => stack.push(g),
                nb => {
                    let m = self.midpoint(e);
                    self.split(top, e, m);
                    if let Some(g) = nb {
                        self.split(g, e, m);
                    }
                    stack.pop();
                }
            }
        }
    }

    fn midpoint(&mut self, e: (usize, usize)) -> usize {
        if let Some(&m) = self.mids.get(&e) {
            return m;
        }
        let (a, b) = (self.verts[e.0], self.verts[e.1]);
        let mut p = [
            0.5 * (a[0] + b[0]),
            0.5 * (a[1] + b[1]),
            0.5 * (a[2] + b[2]),
        ];
        if let Some(src) = self.source {
            let q = src.project(&p);
            p = [q[0], q[1], q[2]];
        }
        self.verts.push(p);
        let id = self.verts.len() - 1;
        self.mids.insert(e, id);
        id
    }

    fn split(&mut self, f: usize, e: (usize, usize), m: usize) {
        let t = self.faces[f];
        let k = (0..3)
            .find(|&k| edge_key(t[k], t[(k + 1) % 3]) == e)
            .expect("edge belongs to face");
        let (a, b, c) = (t[k], t[(k + 1) % 3], t[(k + 2) % 3]);
        self.alive[f] = false;
        for k in 0..3 {
            let key = edge_key(t[k], t[(k + 1) % 3]);
            if let Some(v) = self.edges.get_mut(&key) {
                v.retain(|&g| g != f);
            }
        }
        for nf in [[a, m, c], [m, b, c]] {
            let id = self.faces.len();
            self.faces.push(nf);
            self.alive.push(true);
            for k in 0..3 {
                self.edges
                    .entry(edge_key(nf[k], nf[(k + 1) % 3]))
                    .or_default()
                    .push(id);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn icosphere_is_closed_and_converges() {
        let mut prev_err = f64::INFINITY;
        for freq in [4, 8, 16] {
            let m = TriMesh::icosphere([0.0; 3], 1.0, freq, None).unwrap();
            assert_eq!(m.faces.len(), 20 * freq * freq);
            assert_eq!(m.vertices.len(), 10 * freq * freq + 2);
            let err = (m.signed_volume() - 4.0 * PI / 3.0).abs();
            assert!(err < prev_err);
            prev_err = err;
        }
    }

    #[test]
    fn winding_number_classifies() {
        let m = TriMesh::icosphere([0.0; 3], 1.0, 4, None).unwrap();
        assert!((m.winding_number(&[0.1, 0.2, 0.0]) - 1.0).abs() < 1e-9);
        assert!(m.winding_number(&[2.0, 0.0, 0.0]).abs() < 1e-9);
    }

    #[test]
    fn open_mesh_is_rejected() {
        let v = vec![
            [0.0, 0.0, 0.0],
            [1.0, 0.0, 0.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ];
        let f = vec![[0, 2, 1], [0, 1, 3], [1, 2, 3]];
        assert!(TriMesh::new(v, f, None).is_err());
    }

    #[test]
    fn graded_refinement_stays_watertight() {
        let m = TriMesh::icosphere([0.0; 3], 1.0, 3, None).unwrap();
        let g = m.graded(&[0.0, 0.0, 1.0], 0.5, 1e-3, true);
        let g = TriMesh::new(g.vertices, g.faces, None).expect("conforming");
        assert_relative_eq!(g.measure(), m.measure(), max_relative = 1e-12);
        let (_, _, d) = g.closest(&[0.0, 0.0, 1.0]);
        assert!(d < 1e-12);
    }

    #[test]
    fn closest_point_inside_face() {
        let q = closest_on_triangle(
            &[0.2, 0.2, 1.0],
            &[0.0, 0.0, 0.0],
            &[1.0, 0.0, 0.0],
            &[0.0, 1.0, 0.0],
        );
        for (a, b) in q.iter().zip([0.2, 0.2, 0.0]) {
            assert!((a - b).abs() < 1e-15);
        }
    }
}
