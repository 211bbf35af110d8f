//! Conforming triangulations of a rectangle with red/green refinement.
//!
//! Refinement works on two levels. The *leaves* are the triangles produced by
//! red (4-way similar) refinement only; neighbouring leaves differ by at most
//! one level, so a leaf edge may carry a hanging midpoint. The conforming mesh
//! handed to the finite element code is obtained from the leaves by a
//! bisection closure: a leaf with hanging midpoints is split along its longest
//! edge (green) and, if a second edge is split, once more (blue). Closure
//! triangles are thrown away before the next refinement and replaced by their
//! leaf, so they are never refined themselves.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use crate::error::{Error, Result};

pub type Point = [f64; 2];

/// Default lower bound on interior angles checked by [`Mesh::check_invariants`].
pub const DEFAULT_MIN_ANGLE_DEG: f64 = 20.0;

/// Axis-aligned rectangle `[x0, x1] x [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x0: f64,
    pub x1: f64,
    pub y0: f64,
    pub y1: f64,
}

impl Rect {
    pub fn new(x0: f64, x1: f64, y0: f64, y1: f64) -> Result<Self> {
        let r = Rect { x0, x1, y0, y1 };
        if !(r.x1 - r.x0 > 0.0 && r.y1 - r.y0 > 0.0) || ![x0, x1, y0, y1].iter().all(|v| v.is_finite()) {
            return Err(Error::invalid(format!("degenerate rectangle {r:?}")));
        }
        Ok(r)
    }

    pub fn area(&self) -> f64 {
        (self.x1 - self.x0) * (self.y1 - self.y0)
    }

    pub fn contains(&self, p: Point) -> bool {
        p[0] >= self.x0 && p[0] <= self.x1 && p[1] >= self.y0 && p[1] <= self.y1
    }

    pub fn on_boundary(&self, p: Point) -> bool {
        p[0] == self.x0 || p[0] == self.x1 || p[1] == self.y0 || p[1] == self.y1
    }
}

/// An edge of the conforming mesh. `triangles[1]` is `None` on the boundary;
/// every boundary edge carries a homogeneous Dirichlet condition.
#[derive(Debug, Clone, PartialEq)]
pub struct Edge {
    /// Endpoints, smaller index first.
    pub vertices: [usize; 2],
    pub triangles: [Option<usize>; 2],
}

impl Edge {
    pub fn is_boundary(&self) -> bool {
        self.triangles[1].is_none()
    }
}

/// Set of triangles selected for refinement.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MarkSet {
    marked: BTreeSet<usize>,
    n_triangles: usize,
}

impl MarkSet {
    pub fn new(mesh: &Mesh, indices: impl IntoIterator<Item = usize>) -> Result<Self> {
        let marked: BTreeSet<usize> = indices.into_iter().collect();
        if let Some(&bad) = marked.iter().find(|&&k| k >= mesh.n_triangles()) {
            return Err(Error::invalid(format!(
                "triangle index {bad} out of range for a mesh with {} triangles",
                mesh.n_triangles()
            )));
        }
        Ok(MarkSet {
            marked,
            n_triangles: mesh.n_triangles(),
        })
    }

    pub fn empty(mesh: &Mesh) -> Self {
        MarkSet {
            marked: BTreeSet::new(),
            n_triangles: mesh.n_triangles(),
        }
    }

    pub fn all(mesh: &Mesh) -> Self {
        MarkSet {
            marked: (0..mesh.n_triangles()).collect(),
            n_triangles: mesh.n_triangles(),
        }
    }

    pub fn len(&self) -> usize {
        self.marked.len()
    }

    pub fn is_empty(&self) -> bool {
        self.marked.is_empty()
    }

    pub fn contains(&self, k: usize) -> bool {
        self.marked.contains(&k)
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.marked.iter().copied()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    triangles: Vec<[usize; 3]>,
    edges: Vec<Edge>,
    /// Local edge `i` of a triangle joins its vertices `i` and `i + 1 (mod 3)`.
    triangle_edges: Vec<[usize; 3]>,
    boundary_vertex: Vec<bool>,

    leaves: Vec<[usize; 3]>,
    leaf_of: Vec<usize>,
    parent_leaf: Vec<usize>,
    midpoints: BTreeMap<(usize, usize), usize>,
}

fn key(a: usize, b: usize) -> (usize, usize) {
    if a < b {
        (a, b)
    } else {
        (b, a)
    }
}

fn signed_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

fn dist2(a: Point, b: Point) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Euclidean length of the segment `ab`; coincident endpoints are rejected.
pub fn segment_length(a: Point, b: Point) -> Result<f64> {
    let l = dist2(a, b).sqrt();
    if l == 0.0 {
        return Err(Error::invalid(format!("degenerate edge {a:?}-{b:?}")));
    }
    Ok(l)
}

/// Interior angles of the triangle `abc`, in degrees.
pub fn triangle_angles(a: Point, b: Point, c: Point) -> [f64; 3] {
    let angle = |p: Point, q: Point, r: Point| {
        let u = [q[0] - p[0], q[1] - p[1]];
        let v = [r[0] - p[0], r[1] - p[1]];
        let cross = u[0] * v[1] - u[1] * v[0];
        let dot = u[0] * v[0] + u[1] * v[1];
        cross.abs().atan2(dot).to_degrees()
    };
    [angle(a, b, c), angle(b, c, a), angle(c, a, b)]
}

/// Builds the structured mesh of `domain`: `nx * ny` cells, each split along
/// the diagonal from its bottom-left to its top-right corner.
pub fn build_rect_mesh(domain: Rect, nx: usize, ny: usize) -> Result<Mesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid(format!("grid counts must be positive, got {nx}x{ny}")));
    }
    let domain = Rect::new(domain.x0, domain.x1, domain.y0, domain.y1)?;
    let coord = |i: usize, n: usize, lo: f64, hi: f64| {
        // hit the far side exactly so boundary vertices lie on the boundary
        if i == n {
            hi
        } else {
            lo + (hi - lo) * (i as f64) / (n as f64)
        }
    };
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([coord(i, nx, domain.x0, domain.x1), coord(j, ny, domain.y0, domain.y1)]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (bl, br, tl, tr) = (id(i, j), id(i + 1, j), id(i, j + 1), id(i + 1, j + 1));
            triangles.push([bl, br, tr]);
            triangles.push([bl, tr, tl]);
        }
    }
    Mesh::from_parts(vertices, triangles)
}

impl Mesh {
    /// Builds a mesh from raw vertices and counterclockwise triangles,
    /// checking orientation and edge manifoldness.
    pub fn from_parts(vertices: Vec<Point>, triangles: Vec<[usize; 3]>) -> Result<Mesh> {
        let n = triangles.len();
        Self::assemble(vertices, triangles.clone(), triangles, (0..n).collect(), (0..n).collect(), BTreeMap::new())
    }

    fn assemble(
        vertices: Vec<Point>,
        triangles: Vec<[usize; 3]>,
        leaves: Vec<[usize; 3]>,
        leaf_of: Vec<usize>,
        parent_leaf: Vec<usize>,
        midpoints: BTreeMap<(usize, usize), usize>,
    ) -> Result<Mesh> {
        for (k, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::invalid(format!("triangle {k} references a missing vertex")));
            }
            let area = signed_area(vertices[t[0]], vertices[t[1]], vertices[t[2]]);
            if !(area > 0.0) {
                return Err(Error::DegenerateElement { element: k, det: 2.0 * area });
            }
        }
        let mut edge_index: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len() / 2 + 8);
        let mut edges: Vec<Edge> = Vec::new();
        let mut triangle_edges = Vec::with_capacity(triangles.len());
        for (k, t) in triangles.iter().enumerate() {
            let mut local = [0; 3];
            for i in 0..3 {
                let kk = key(t[i], t[(i + 1) % 3]);
                let e = *edge_index.entry(kk).or_insert_with(|| {
                    edges.push(Edge {
                        vertices: [kk.0, kk.1],
                        triangles: [None, None],
                    });
                    edges.len() - 1
                });
                let edge = &mut edges[e];
                if edge.triangles[0].is_none() {
                    edge.triangles[0] = Some(k);
                } else if edge.triangles[1].is_none() {
                    edge.triangles[1] = Some(k);
                } else {
                    return Err(Error::invalid(format!("edge {kk:?} is shared by more than two triangles")));
                }
                local[i] = e;
            }
            triangle_edges.push(local);
        }
        let mut boundary_vertex = vec![false; vertices.len()];
        for e in edges.iter().filter(|e| e.is_boundary()) {
            boundary_vertex[e.vertices[0]] = true;
            boundary_vertex[e.vertices[1]] = true;
        }
        Ok(Mesh {
            vertices,
            triangles,
            edges,
            triangle_edges,
            boundary_vertex,
            leaves,
            leaf_of,
            parent_leaf,
            midpoints,
        })
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_triangles(&self) -> usize {
        self.triangles.len()
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.vertices[v]
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn triangle(&self, k: usize) -> [usize; 3] {
        self.triangles[k]
    }

    pub fn triangle_points(&self, k: usize) -> [Point; 3] {
        let t = self.triangles[k];
        [self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]]]
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn edge(&self, e: usize) -> &Edge {
        &self.edges[e]
    }

    pub fn triangle_edges(&self, k: usize) -> [usize; 3] {
        self.triangle_edges[k]
    }

    pub fn boundary_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| self.edges[e].is_boundary())
    }

    pub fn interior_edges(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.edges.len()).filter(|&e| !self.edges[e].is_boundary())
    }

    pub fn is_boundary_vertex(&self, v: usize) -> bool {
        self.boundary_vertex[v]
    }

    pub fn area(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        signed_area(a, b, c)
    }

    pub fn centroid(&self, k: usize) -> Point {
        let [a, b, c] = self.triangle_points(k);
        [(a[0] + b[0] + c[0]) / 3.0, (a[1] + b[1] + c[1]) / 3.0]
    }

    /// `h_K`: the longest edge of triangle `k`.
    pub fn element_diameter(&self, k: usize) -> f64 {
        let [a, b, c] = self.triangle_points(k);
        dist2(a, b).max(dist2(b, c)).max(dist2(c, a)).sqrt()
    }

    /// `h_E`: Euclidean length of edge `e`.
    pub fn edge_length(&self, e: usize) -> f64 {
        let [a, b] = self.edges[e].vertices;
        dist2(self.vertices[a], self.vertices[b]).sqrt()
    }

    pub fn min_angle(&self) -> f64 {
        (0..self.n_triangles())
            .map(|k| {
                let [a, b, c] = self.triangle_points(k);
                triangle_angles(a, b, c).into_iter().fold(f64::INFINITY, f64::min)
            })
            .fold(f64::INFINITY, f64::min)
    }

    /// Red-level ancestor of every triangle, as an index into the previous
    /// mesh's leaves (identity for a mesh that was never refined).
    pub fn parent_leaf(&self) -> &[usize] {
        &self.parent_leaf
    }

    pub fn leaves(&self) -> &[[usize; 3]] {
        &self.leaves
    }

    /// Leaf (red-level triangle) containing conforming triangle `k`.
    pub fn leaf_of(&self, k: usize) -> usize {
        self.leaf_of[k]
    }

    pub fn leaf_area(&self, leaf: usize) -> f64 {
        let t = self.leaves[leaf];
        signed_area(self.vertices[t[0]], self.vertices[t[1]], self.vertices[t[2]])
    }

    /// Checks conformity, orientation and the minimum angle floor.
    pub fn check_invariants(&self, min_angle_deg: f64) -> Result<()> {
        for k in 0..self.n_triangles() {
            if !(self.area(k) > 0.0) {
                return Err(Error::DegenerateElement {
                    element: k,
                    det: 2.0 * self.area(k),
                });
            }
        }
        // Count triangle incidences per vertex pair independently of the stored edge table.
        let mut count: HashMap<(usize, usize), u32> = HashMap::new();
        for t in &self.triangles {
            for i in 0..3 {
                *count.entry(key(t[i], t[(i + 1) % 3])).or_default() += 1;
            }
        }
        let bbox = self.bounding_box();
        for (&(a, b), &c) in &count {
            let (pa, pb) = (self.vertices[a], self.vertices[b]);
            let on_boundary = (pa[0] == pb[0] && (pa[0] == bbox.x0 || pa[0] == bbox.x1))
                || (pa[1] == pb[1] && (pa[1] == bbox.y0 || pa[1] == bbox.y1));
            let expected = if on_boundary { 1 } else { 2 };
            if c != expected {
                return Err(Error::invalid(format!(
                    "edge ({a},{b}) is shared by {c} triangles, expected {expected} (hanging node)"
                )));
            }
        }
        for e in self.boundary_edges() {
            for v in self.edges[e].vertices {
                if !bbox.on_boundary(self.vertices[v]) {
                    return Err(Error::invalid(format!("boundary vertex {v} is off the boundary")));
                }
            }
        }
        let min = self.min_angle();
        if min < min_angle_deg {
            return Err(Error::invalid(format!("minimum angle {min:.3} below floor {min_angle_deg}")));
        }
        Ok(())
    }

    pub fn bounding_box(&self) -> Rect {
        let mut r = Rect {
            x0: f64::INFINITY,
            x1: f64::NEG_INFINITY,
            y0: f64::INFINITY,
            y1: f64::NEG_INFINITY,
        };
        for p in &self.vertices {
            r.x0 = r.x0.min(p[0]);
            r.x1 = r.x1.max(p[0]);
            r.y0 = r.y0.min(p[1]);
            r.y1 = r.y1.max(p[1]);
        }
        r
    }

    /// Red refinement of the marked triangles followed by bisection closure.
    ///
    /// A marked closure triangle refines its leaf instead. The closure may
    /// red-refine extra leaves to keep neighbouring leaves within one level.
    pub fn refine(&self, marks: &MarkSet) -> Mesh {
        assert_eq!(marks.n_triangles, self.n_triangles(), "mark set belongs to another mesh");
        let mut builder = RefineBuilder {
            vertices: self.vertices.clone(),
            midpoints: self.midpoints.clone(),
        };
        let mut leaves: Vec<([usize; 3], usize)> = self.leaves.iter().enumerate().map(|(i, t)| (*t, i)).collect();
        let mut to_red: BTreeSet<usize> = marks.iter().map(|k| self.leaf_of[k]).collect();

        let split = loop {
            if !to_red.is_empty() {
                let mut next = Vec::with_capacity(leaves.len() + 3 * to_red.len());
                for (i, &(t, anc)) in leaves.iter().enumerate() {
                    if to_red.contains(&i) {
                        next.extend(builder.red_children(t).into_iter().map(|c| (c, anc)));
                    } else {
                        next.push((t, anc));
                    }
                }
                leaves = next;
                to_red.clear();
            }

            // Every existing midpoint on a leaf edge stays, so vertices are never removed.
            let mut split: BTreeSet<(usize, usize)> = BTreeSet::new();
            for (t, _) in &leaves {
                for i in 0..3 {
                    let e = key(t[i], t[(i + 1) % 3]);
                    if builder.midpoints.contains_key(&e) {
                        split.insert(e);
                    }
                }
            }
            // Longest-edge closure: any leaf with a split edge also splits its longest edge.
            loop {
                let mut changed = false;
                for (t, _) in &leaves {
                    let edges = leaf_edges(t);
                    if edges.iter().any(|e| split.contains(e)) {
                        let longest = edges[builder.longest_local_edge(t)];
                        changed |= split.insert(longest);
                    }
                }
                if !changed {
                    break;
                }
            }
            for (i, (t, _)) in leaves.iter().enumerate() {
                let edges = leaf_edges(t);
                if edges.iter().all(|e| split.contains(e)) {
                    to_red.insert(i);
                    continue;
                }
                // A split half of a split edge would leave a two-level jump.
                for e in edges {
                    if let Some(&m) = builder.midpoints.get(&e) {
                        let mids = &builder.midpoints;
                        let (h0, h1) = (key(e.0, m), key(m, e.1));
                        if mids.contains_key(&h0) || mids.contains_key(&h1) || split.contains(&h0) || split.contains(&h1) {
                            to_red.insert(i);
                        }
                    }
                }
            }
            if to_red.is_empty() {
                break split;
            }
        };

        let mut triangles = Vec::with_capacity(leaves.len() * 2);
        let mut leaf_of = Vec::with_capacity(leaves.len() * 2);
        let mut parent_leaf = Vec::with_capacity(leaves.len() * 2);
        for (li, &(t, anc)) in leaves.iter().enumerate() {
            for child in builder.closure_children(t, &split) {
                triangles.push(child);
                leaf_of.push(li);
                parent_leaf.push(anc);
            }
        }
        let leaves: Vec<[usize; 3]> = leaves.into_iter().map(|(t, _)| t).collect();

        // Drop vertices no triangle uses (midpoints of discarded closures).
        let mut used = vec![false; builder.vertices.len()];
        for t in &triangles {
            for &v in t {
                used[v] = true;
            }
        }
        let mut renumber = vec![usize::MAX; builder.vertices.len()];
        let mut vertices = Vec::with_capacity(builder.vertices.len());
        for (v, p) in builder.vertices.iter().enumerate() {
            if used[v] {
                renumber[v] = vertices.len();
                vertices.push(*p);
            }
        }
        let map = |t: [usize; 3]| [renumber[t[0]], renumber[t[1]], renumber[t[2]]];
        let triangles: Vec<_> = triangles.into_iter().map(map).collect();
        let leaves: Vec<_> = leaves.into_iter().map(map).collect();
        let midpoints = builder
            .midpoints
            .into_iter()
            .filter(|&((a, b), m)| used[a] && used[b] && used[m])
            .map(|((a, b), m)| (key(renumber[a], renumber[b]), renumber[m]))
            .collect();

        Mesh::assemble(vertices, triangles, leaves, leaf_of, parent_leaf, midpoints)
            .expect("refinement produced an invalid mesh")
    }

    /// Refines every triangle.
    pub fn refine_uniform(&self) -> Mesh {
        self.refine(&MarkSet::all(self))
    }
}

fn leaf_edges(t: &[usize; 3]) -> [(usize, usize); 3] {
    [key(t[0], t[1]), key(t[1], t[2]), key(t[2], t[0])]
}

struct RefineBuilder {
    vertices: Vec<Point>,
    midpoints: BTreeMap<(usize, usize), usize>,
}

impl RefineBuilder {
    fn midpoint(&mut self, a: usize, b: usize) -> usize {
        let k = key(a, b);
        if let Some(&m) = self.midpoints.get(&k) {
            return m;
        }
        let (pa, pb) = (self.vertices[k.0], self.vertices[k.1]);
        self.vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
        let m = self.vertices.len() - 1;
        self.midpoints.insert(k, m);
        m
    }

    fn red_children(&mut self, t: [usize; 3]) -> [[usize; 3]; 4] {
        let [a, b, c] = t;
        let (ab, bc, ca) = (self.midpoint(a, b), self.midpoint(b, c), self.midpoint(c, a));
        [[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]
    }

    /// Local index `i` of the longest edge `(t[i], t[i+1])`; ties go to the lowest index.
    fn longest_local_edge(&self, t: &[usize; 3]) -> usize {
        let len = |i: usize| dist2(self.vertices[t[i]], self.vertices[t[(i + 1) % 3]]);
        let mut best = 0;
        for i in 1..3 {
            // relative slack keeps the choice stable for nearly isosceles shapes
            if len(i) > len(best) * (1.0 + 1e-12) {
                best = i;
            }
        }
        best
    }

    fn closure_children(&mut self, t: [usize; 3], split: &BTreeSet<(usize, usize)>) -> Vec<[usize; 3]> {
        let edges = leaf_edges(&t);
        let n_split = edges.iter().filter(|e| split.contains(e)).count();
        if n_split == 0 {
            return vec![t];
        }
        let l = self.longest_local_edge(&t);
        let (a, b, c) = (t[l], t[(l + 1) % 3], t[(l + 2) % 3]);
        let m0 = self.midpoint(a, b);
        match (split.contains(&key(b, c)), split.contains(&key(c, a))) {
            (false, false) => vec![[a, m0, c], [m0, b, c]],
            (true, false) => {
                let m1 = self.midpoint(b, c);
                vec![[a, m0, c], [m0, b, m1], [m0, m1, c]]
            }
            (false, true) => {
                let m1 = self.midpoint(c, a);
                vec![[a, m0, m1], [m1, m0, c], [m0, b, c]]
            }
            (true, true) => unreachable!("fully split leaves are red-refined"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn unit_square(n: usize) -> Mesh {
        build_rect_mesh(Rect::new(0.0, 1.0, 0.0, 1.0).unwrap(), n, n).unwrap()
    }

    #[test]
    fn rect_mesh_counts() {
        let psi = 2.0 * std::f64::consts::PI / 3.0;
        let m = build_rect_mesh(Rect::new(0.0, psi, 0.0, 1.0).unwrap(), 4, 4).unwrap();
        assert_eq!((m.n_vertices(), m.n_triangles()), (25, 32));
        let m = unit_square(1);
        assert_eq!((m.n_vertices(), m.n_triangles(), m.n_edges()), (4, 2, 5));
        assert_eq!(m.boundary_edges().count(), 4);
        m.check_invariants(DEFAULT_MIN_ANGLE_DEG).unwrap();
    }

    #[test]
    fn zero_counts_rejected() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        assert!(build_rect_mesh(r, 0, 3).is_err());
        assert!(build_rect_mesh(r, 3, 0).is_err());
        assert!(Rect::new(0.0, 0.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn diameters_and_lengths() {
        let m = unit_square(1);
        assert_relative_eq!(m.element_diameter(0), 2f64.sqrt());
        let s = 3.0;
        let h = s * 3f64.sqrt() / 2.0;
        let eq = Mesh::from_parts(vec![[0.0, 0.0], [s, 0.0], [s / 2.0, h]], vec![[0, 1, 2]]).unwrap();
        assert_relative_eq!(eq.element_diameter(0), s, epsilon = 1e-14);
        let scaled = Mesh::from_parts(
            m.vertices().iter().map(|p| [2.0 * p[0], 2.0 * p[1]]).collect(),
            m.triangles().to_vec(),
        )
        .unwrap();
        for k in 0..m.n_triangles() {
            assert_relative_eq!(scaled.element_diameter(k), 2.0 * m.element_diameter(k));
        }
        assert_eq!(segment_length([0.0, 0.0], [3.0, 4.0]).unwrap(), 5.0);
        assert!(segment_length([1.0, 1.0], [1.0, 1.0]).is_err());
    }

    #[test]
    fn clockwise_triangle_rejected() {
        let err = Mesh::from_parts(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]]);
        assert!(matches!(err, Err(Error::DegenerateElement { .. })));
    }

    #[test]
    fn red_refinement_of_both_triangles() {
        let m = unit_square(1);
        let r = m.refine_uniform();
        assert_eq!(r.n_triangles(), 8);
        assert_eq!(r.n_vertices(), 9);
        r.check_invariants(DEFAULT_MIN_ANGLE_DEG).unwrap();
    }

    #[test]
    fn empty_marks_is_identity() {
        let m = unit_square(3);
        let r = m.refine(&MarkSet::empty(&m));
        assert_eq!(r.n_triangles(), m.n_triangles());
        assert_eq!(r.vertices(), m.vertices());
    }

    #[test]
    fn single_mark_is_closed_conformingly() {
        let m = unit_square(1);
        let r = m.refine(&MarkSet::new(&m, [0]).unwrap());
        r.check_invariants(DEFAULT_MIN_ANGLE_DEG).unwrap();
        // red children of triangle 0 plus a green pair in triangle 1
        assert_eq!(r.n_triangles(), 6);
        let mut per_edge: HashMap<(usize, usize), usize> = HashMap::new();
        for t in r.triangles() {
            for i in 0..3 {
                *per_edge.entry(key(t[i], t[(i + 1) % 3])).or_default() += 1;
            }
        }
        let interior = per_edge.values().filter(|&&c| c == 2).count();
        assert_eq!(interior, r.interior_edges().count());
        assert!(per_edge.values().all(|&c| c == 1 || c == 2));
    }

    #[test]
    fn split_edge_is_halved() {
        let m = unit_square(1);
        let r = m.refine_uniform();
        let half = 0.5;
        let bottom: Vec<_> = r
            .boundary_edges()
            .filter(|&e| r.edge(e).vertices.iter().all(|&v| r.vertex(v)[1] == 0.0))
            .collect();
        assert_eq!(bottom.len(), 2);
        for e in bottom {
            assert_relative_eq!(r.edge_length(e), half);
        }
    }

    #[test]
    fn marked_green_child_refines_its_leaf() {
        let m = unit_square(2);
        let r1 = m.refine(&MarkSet::new(&m, [0]).unwrap());
        let green: Vec<usize> = (0..r1.n_triangles())
            .filter(|&k| r1.leaves().len() != r1.n_triangles() && {
                let leaf = r1.leaf_of(k);
                (0..r1.n_triangles()).filter(|&j| r1.leaf_of(j) == leaf).count() > 1
            })
            .collect();
        assert!(!green.is_empty());
        let r2 = r1.refine(&MarkSet::new(&r1, [green[0]]).unwrap());
        r2.check_invariants(DEFAULT_MIN_ANGLE_DEG).unwrap();
    }

    #[test]
    fn leaf_areas_are_preserved() {
        let m = build_rect_mesh(Rect::new(0.0, 2.0, 0.0, 1.0).unwrap(), 3, 2).unwrap();
        let r = m.refine(&MarkSet::new(&m, [1, 4]).unwrap());
        let mut sums = vec![0.0; m.leaves().len()];
        for k in 0..r.n_triangles() {
            sums[r.parent_leaf()[k]] += r.area(k);
        }
        for (leaf, s) in sums.iter().enumerate() {
            assert_relative_eq!(*s, m.leaf_area(leaf), max_relative = 1e-12);
        }
    }
}
