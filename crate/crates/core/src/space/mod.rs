//! Lagrange finite element spaces on a [`Mesh`].

mod basis;
mod quadrature;

pub use basis::{eval_basis, local_nodes, n_local_dofs, Hessian, ShapeEval, MAX_LOCAL_DOFS};
pub use quadrature::{EdgeRule, QuadratureRule};

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};

/// Affine map `x = x0 + J xi` from the reference triangle onto an element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AffineMap {
    pub origin: Point,
    pub jacobian: [[f64; 2]; 2],
    /// `J^{-T}`
    pub inv_t: [[f64; 2]; 2],
    pub det: f64,
}

impl AffineMap {
    pub fn new(points: [Point; 3]) -> Option<Self> {
        let [a, b, c] = points;
        let j = [[b[0] - a[0], c[0] - a[0]], [b[1] - a[1], c[1] - a[1]]];
        let det = j[0][0] * j[1][1] - j[0][1] * j[1][0];
        if !(det.abs() > 0.0) || !det.is_finite() {
            return None;
        }
        // J^{-1} = adj(J) / det; store its transpose
        let inv_t = [[j[1][1] / det, -j[1][0] / det], [-j[0][1] / det, j[0][0] / det]];
        Some(AffineMap {
            origin: a,
            jacobian: j,
            inv_t,
            det,
        })
    }

    pub fn for_element(mesh: &Mesh, k: usize) -> Result<Self> {
        Self::new(mesh.triangle_points(k)).ok_or(Error::DegenerateElement {
            element: k,
            det: 0.0,
        })
    }

    pub fn to_physical(&self, bary: [f64; 3]) -> Point {
        let (xi, eta) = (bary[1], bary[2]);
        [
            self.origin[0] + self.jacobian[0][0] * xi + self.jacobian[0][1] * eta,
            self.origin[1] + self.jacobian[1][0] * xi + self.jacobian[1][1] * eta,
        ]
    }

    pub fn to_barycentric(&self, x: Point) -> [f64; 3] {
        let d = [x[0] - self.origin[0], x[1] - self.origin[1]];
        // xi = J^{-1} d, and J^{-1} is the transpose of inv_t
        let xi = self.inv_t[0][0] * d[0] + self.inv_t[1][0] * d[1];
        let eta = self.inv_t[0][1] * d[0] + self.inv_t[1][1] * d[1];
        [1.0 - xi - eta, xi, eta]
    }

    pub fn push_gradient(&self, g: [f64; 2]) -> [f64; 2] {
        [
            self.inv_t[0][0] * g[0] + self.inv_t[0][1] * g[1],
            self.inv_t[1][0] * g[0] + self.inv_t[1][1] * g[1],
        ]
    }

    /// `J^{-T} H J^{-1}`; exact for affine elements.
    pub fn push_hessian(&self, h: Hessian) -> Hessian {
        let m = self.inv_t;
        let hm = [[h[0], h[1]], [h[1], h[2]]];
        let mut out = [[0.0; 2]; 2];
        for (r, row) in out.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                let mut s = 0.0;
                for a in 0..2 {
                    for b in 0..2 {
                        s += m[r][a] * hm[a][b] * m[c][b];
                    }
                }
                *v = s;
            }
        }
        [out[0][0], out[0][1], out[1][1]]
    }

    pub fn push_forward(&self, s: &ShapeEval) -> ShapeEval {
        let mut out = *s;
        for i in 0..s.n {
            out.grads[i] = self.push_gradient(s.grads[i]);
            out.hessians[i] = self.push_hessian(s.hessians[i]);
        }
        out
    }
}

/// Global numbering of Lagrange degrees of freedom.
#[derive(Debug, Clone, PartialEq)]
pub struct DofMap {
    degree: usize,
    element_dofs: Vec<usize>,
    n_dofs: usize,
    dirichlet: Vec<bool>,
    nodes: Vec<Point>,
}

impl DofMap {
    /// Vertex DOFs come first in vertex order; for P2 the edge DOFs follow in
    /// edge order.
    pub fn new(mesh: &Mesh, degree: usize) -> Result<Self> {
        if !(1..=2).contains(&degree) {
            return Err(Error::invalid(format!("polynomial degree must be 1 or 2, got {degree}")));
        }
        let nv = mesh.n_vertices();
        let n_dofs = if degree == 1 { nv } else { nv + mesh.n_edges() };
        let per = n_local_dofs(degree);
        let mut element_dofs = Vec::with_capacity(per * mesh.n_triangles());
        for k in 0..mesh.n_triangles() {
            element_dofs.extend(mesh.triangle(k));
            if degree == 2 {
                element_dofs.extend(mesh.triangle_edges(k).iter().map(|e| nv + e));
            }
        }
        let mut dirichlet: Vec<bool> = (0..nv).map(|v| mesh.is_boundary_vertex(v)).collect();
        let mut nodes = mesh.vertices().to_vec();
        if degree == 2 {
            for edge in mesh.edges() {
                dirichlet.push(edge.is_boundary());
                let (a, b) = (mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1]));
                nodes.push([0.5 * (a[0] + b[0]), 0.5 * (a[1] + b[1])]);
            }
        }
        Ok(DofMap {
            degree,
            element_dofs,
            n_dofs,
            dirichlet,
            nodes,
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }

    pub fn n_dofs(&self) -> usize {
        self.n_dofs
    }

    pub fn dofs_per_element(&self) -> usize {
        n_local_dofs(self.degree)
    }

    pub fn element(&self, k: usize) -> &[usize] {
        let per = self.dofs_per_element();
        &self.element_dofs[k * per..(k + 1) * per]
    }

    pub fn n_elements(&self) -> usize {
        self.element_dofs.len() / self.dofs_per_element()
    }

    pub fn is_dirichlet(&self, dof: usize) -> bool {
        self.dirichlet[dof]
    }

    pub fn dirichlet_mask(&self) -> &[bool] {
        &self.dirichlet
    }

    pub fn n_free(&self) -> usize {
        self.dirichlet.iter().filter(|d| !**d).count()
    }

    /// Physical location of every DOF node.
    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    /// Nodal interpolant of `f`.
    pub fn interpolate(&self, f: impl Fn(Point) -> f64) -> Vec<f64> {
        self.nodes.iter().map(|&x| f(x)).collect()
    }

    /// DOF indices shared by two adjacent elements must agree; used by tests.
    pub fn shared_dof_consistency(&self, mesh: &Mesh) -> bool {
        let mut seen: BTreeMap<usize, Point> = BTreeMap::new();
        for k in 0..mesh.n_triangles() {
            let map = AffineMap::for_element(mesh, k).expect("valid mesh");
            for (dof, node) in self.element(k).iter().zip(local_nodes(self.degree)) {
                let x = map.to_physical(node);
                if let Some(prev) = seen.insert(*dof, x) {
                    if (prev[0] - x[0]).abs() > 1e-12 || (prev[1] - x[1]).abs() > 1e-12 {
                        return false;
                    }
                }
            }
        }
        true
    }
}
