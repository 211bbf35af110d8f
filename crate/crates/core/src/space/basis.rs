//! Lagrange P1/P2 shape functions on the reference triangle.
//!
//! Local numbering: vertices 0, 1, 2, then the midpoints of edges
//! (0,1), (1,2), (2,0). Derivatives are taken with respect to the reference
//! coordinates `(xi, eta)` with `lambda_1 = xi`, `lambda_2 = eta`.

pub const MAX_LOCAL_DOFS: usize = 6;

/// Symmetric 2x2 hessian stored as `[xx, xy, yy]`.
pub type Hessian = [f64; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ShapeEval {
    pub n: usize,
    pub values: [f64; MAX_LOCAL_DOFS],
    pub grads: [[f64; 2]; MAX_LOCAL_DOFS],
    pub hessians: [Hessian; MAX_LOCAL_DOFS],
}

const BARY_GRAD: [[f64; 2]; 3] = [[-1.0, -1.0], [1.0, 0.0], [0.0, 1.0]];
pub(crate) const EDGE_VERTICES: [[usize; 2]; 3] = [[0, 1], [1, 2], [2, 0]];

pub fn n_local_dofs(degree: usize) -> usize {
    match degree {
        1 => 3,
        2 => 6,
        _ => panic!("unsupported degree {degree}"),
    }
}

fn outer_sym(a: [f64; 2], b: [f64; 2]) -> Hessian {
    [2.0 * a[0] * b[0], a[0] * b[1] + a[1] * b[0], 2.0 * a[1] * b[1]]
}

/// Values, reference gradients and reference hessians of every shape function
/// at a point given in barycentric coordinates.
pub fn eval_basis(degree: usize, bary: [f64; 3]) -> ShapeEval {
    let mut out = ShapeEval {
        n: n_local_dofs(degree),
        values: [0.0; MAX_LOCAL_DOFS],
        grads: [[0.0; 2]; MAX_LOCAL_DOFS],
        hessians: [[0.0; 3]; MAX_LOCAL_DOFS],
    };
    match degree {
        1 => {
            for i in 0..3 {
                out.values[i] = bary[i];
                out.grads[i] = BARY_GRAD[i];
            }
        }
        2 => {
            for i in 0..3 {
                let l = bary[i];
                let g = BARY_GRAD[i];
                out.values[i] = l * (2.0 * l - 1.0);
                out.grads[i] = [(4.0 * l - 1.0) * g[0], (4.0 * l - 1.0) * g[1]];
                let h = outer_sym(g, g);
                out.hessians[i] = [2.0 * h[0], 2.0 * h[1], 2.0 * h[2]];
            }
            for (e, [i, j]) in EDGE_VERTICES.iter().copied().enumerate() {
                let (li, lj) = (bary[i], bary[j]);
                let (gi, gj) = (BARY_GRAD[i], BARY_GRAD[j]);
                out.values[3 + e] = 4.0 * li * lj;
                out.grads[3 + e] = [4.0 * (lj * gi[0] + li * gj[0]), 4.0 * (lj * gi[1] + li * gj[1])];
                let h = outer_sym(gi, gj);
                out.hessians[3 + e] = [4.0 * h[0], 4.0 * h[1], 4.0 * h[2]];
            }
        }
        _ => panic!("unsupported degree {degree}"),
    }
    out
}

/// Barycentric coordinates of the local interpolation nodes.
pub fn local_nodes(degree: usize) -> Vec<[f64; 3]> {
    let mut nodes = vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]];
    if degree == 2 {
        for [i, j] in EDGE_VERTICES {
            let mut b = [0.0; 3];
            b[i] = 0.5;
            b[j] = 0.5;
            nodes.push(b);
        }
    }
    nodes
}
