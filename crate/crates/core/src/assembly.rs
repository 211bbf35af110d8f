//! Element kernels and global assembly for the variable-coefficient operator
//! `E p = div(D grad p)`.
//!
//! Element contributions are computed in parallel and scattered into the
//! global matrix sequentially in element order, so assembled values do not
//! depend on the thread count.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point};
use crate::problem::Coefficients;
use crate::sparse::CsrMatrix;
use crate::space::{eval_basis, AffineMap, DofMap, EdgeRule, QuadratureRule, MAX_LOCAL_DOFS};

/// Everything the kernels need at one quadrature point of one element.
#[derive(Debug, Clone, Copy)]
pub struct QuadPoint {
    pub x: Point,
    /// Quadrature weight times the element jacobian.
    pub weight: f64,
    pub n: usize,
    pub phi: [f64; MAX_LOCAL_DOFS],
    pub grad: [[f64; 2]; MAX_LOCAL_DOFS],
    /// `E` applied to each shape function.
    pub e_phi: [f64; MAX_LOCAL_DOFS],
    pub diffusion: [f64; 2],
    pub load: f64,
}

impl QuadPoint {
    pub fn new(problem: &dyn Coefficients, map: &AffineMap, degree: usize, bary: [f64; 3], weight: f64) -> Self {
        let x = map.to_physical(bary);
        let s = map.push_forward(&eval_basis(degree, bary));
        let diffusion = problem.diffusion(x);
        let div = problem.diffusion_divergence(x);
        let mut e_phi = [0.0; MAX_LOCAL_DOFS];
        for i in 0..s.n {
            let g = s.grads[i];
            let h = s.hessians[i];
            e_phi[i] = div[0] * g[0] + div[1] * g[1] + diffusion[0] * h[0] + diffusion[1] * h[2];
        }
        QuadPoint {
            x,
            weight: weight * map.det.abs(),
            n: s.n,
            phi: s.values,
            grad: s.grads,
            e_phi,
            diffusion,
            load: problem.load(x),
        }
    }

    pub fn value(&self, local: &[f64]) -> f64 {
        (0..self.n).map(|i| local[i] * self.phi[i]).sum()
    }

    pub fn gradient(&self, local: &[f64]) -> [f64; 2] {
        let mut g = [0.0; 2];
        for i in 0..self.n {
            g[0] += local[i] * self.grad[i][0];
            g[1] += local[i] * self.grad[i][1];
        }
        g
    }

    pub fn apply_e(&self, local: &[f64]) -> f64 {
        (0..self.n).map(|i| local[i] * self.e_phi[i]).sum()
    }

    /// `D grad u . grad v` for shape functions `i`, `j`.
    pub fn stiffness(&self, i: usize, j: usize) -> f64 {
        self.diffusion[0] * self.grad[i][0] * self.grad[j][0] + self.diffusion[1] * self.grad[i][1] * self.grad[j][1]
    }
}

/// Quadrature data of element `k` using the area rule.
pub fn element_quadrature(problem: &dyn Coefficients, mesh: &Mesh, degree: usize, k: usize, rule: &QuadratureRule) -> Result<Vec<QuadPoint>> {
    let map = AffineMap::for_element(mesh, k)?;
    Ok(rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(b, w)| QuadPoint::new(problem, &map, degree, *b, *w))
        .collect())
}

/// Local element matrix (row-major, `n x n`) and load vector.
#[derive(Debug, Clone)]
pub struct LocalSystem {
    pub n: usize,
    pub matrix: [[f64; MAX_LOCAL_DOFS]; MAX_LOCAL_DOFS],
    pub rhs: [f64; MAX_LOCAL_DOFS],
}

impl LocalSystem {
    pub fn zeros(n: usize) -> Self {
        LocalSystem {
            n,
            matrix: [[0.0; MAX_LOCAL_DOFS]; MAX_LOCAL_DOFS],
            rhs: [0.0; MAX_LOCAL_DOFS],
        }
    }

    /// Copies the upper triangle into the lower one so the matrix is exactly symmetric.
    pub fn mirror_upper(&mut self) {
        for i in 0..self.n {
            for j in 0..i {
                self.matrix[i][j] = self.matrix[j][i];
            }
        }
    }
}

/// A symmetric sparse system over the full DOF set; Dirichlet DOFs are
/// eliminated when solving.
#[derive(Debug, Clone)]
pub struct SparseSymSystem {
    pub matrix: CsrMatrix,
    pub rhs: Vec<f64>,
    pub dirichlet: Vec<bool>,
}

impl SparseSymSystem {
    pub fn n(&self) -> usize {
        self.matrix.n()
    }
}

/// Assembles `sum_K kernel(K)` into a global system.
pub fn assemble_with<F>(mesh: &Mesh, dofmap: &DofMap, kernel: F) -> Result<SparseSymSystem>
where
    F: Fn(usize) -> Result<LocalSystem> + Sync,
{
    let locals: Vec<LocalSystem> = (0..mesh.n_triangles()).into_par_iter().map(&kernel).collect::<Result<_>>()?;
    let mut matrix = CsrMatrix::with_pattern(dofmap);
    let mut rhs = vec![0.0; dofmap.n_dofs()];
    for (k, local) in locals.iter().enumerate() {
        let dofs = dofmap.element(k);
        for (a, &i) in dofs.iter().enumerate() {
            rhs[i] += local.rhs[a];
            for (b, &j) in dofs.iter().enumerate() {
                matrix.add(i, j, local.matrix[a][b]);
            }
        }
    }
    Ok(SparseSymSystem {
        matrix,
        rhs,
        dirichlet: dofmap.dirichlet_mask().to_vec(),
    })
}

/// Local stiffness `int_K D grad phi_j . grad phi_i` and load `int_K f phi_i`.
pub fn local_stiffness_load(qps: &[QuadPoint]) -> LocalSystem {
    let n = qps.first().map_or(0, |q| q.n);
    let mut local = LocalSystem::zeros(n);
    for q in qps {
        for i in 0..n {
            local.rhs[i] += q.weight * q.load * q.phi[i];
            for j in i..n {
                local.matrix[i][j] += q.weight * q.stiffness(i, j);
            }
        }
    }
    local.mirror_upper();
    local
}

fn stiffness_load(problem: &dyn Coefficients, mesh: &Mesh, dofmap: &DofMap) -> Result<SparseSymSystem> {
    let rule = QuadratureRule::triangle_degree4();
    assemble_with(mesh, dofmap, |k| {
        let qps = element_quadrature(problem, mesh, dofmap.degree(), k, &rule)?;
        Ok(local_stiffness_load(&qps))
    })
}

pub fn assemble_stiffness(problem: &dyn Coefficients, mesh: &Mesh, dofmap: &DofMap) -> Result<CsrMatrix> {
    Ok(stiffness_load(problem, mesh, dofmap)?.matrix)
}

pub fn assemble_load(problem: &dyn Coefficients, mesh: &Mesh, dofmap: &DofMap) -> Result<Vec<f64>> {
    Ok(stiffness_load(problem, mesh, dofmap)?.rhs)
}

/// Stiffness matrix and load vector in one pass.
pub fn assemble_reynolds(problem: &dyn Coefficients, mesh: &Mesh, dofmap: &DofMap) -> Result<SparseSymSystem> {
    stiffness_load(problem, mesh, dofmap)
}

/// A finite element function: one coefficient per DOF.
#[derive(Debug, Clone)]
pub struct DiscreteField {
    pub dofmap: Arc<DofMap>,
    pub values: Vec<f64>,
}

impl DiscreteField {
    pub fn new(dofmap: Arc<DofMap>, values: Vec<f64>) -> Result<Self> {
        if values.len() != dofmap.n_dofs() {
            return Err(Error::invalid(format!(
                "field has {} values for {} degrees of freedom",
                values.len(),
                dofmap.n_dofs()
            )));
        }
        Ok(DiscreteField { dofmap, values })
    }

    pub fn zeros(dofmap: Arc<DofMap>) -> Self {
        let n = dofmap.n_dofs();
        DiscreteField {
            dofmap,
            values: vec![0.0; n],
        }
    }

    pub fn interpolate(dofmap: Arc<DofMap>, f: impl Fn(Point) -> f64) -> Self {
        let values = dofmap.interpolate(f);
        DiscreteField { dofmap, values }
    }

    pub fn local_values(&self, k: usize) -> [f64; MAX_LOCAL_DOFS] {
        let mut out = [0.0; MAX_LOCAL_DOFS];
        for (a, &dof) in self.dofmap.element(k).iter().enumerate() {
            out[a] = self.values[dof];
        }
        out
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    fn check_same_space(&self, other: &DiscreteField) -> Result<()> {
        if Arc::ptr_eq(&self.dofmap, &other.dofmap) || self.dofmap == other.dofmap {
            Ok(())
        } else {
            Err(Error::DofMapMismatch)
        }
    }

    pub fn difference(&self, other: &DiscreteField) -> Result<DiscreteField> {
        self.check_same_space(other)?;
        Ok(DiscreteField {
            dofmap: self.dofmap.clone(),
            values: self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect(),
        })
    }

    /// Value, physical gradient and `E p_h` at a barycentric point of element `k`.
    pub fn eval(&self, problem: &dyn Coefficients, mesh: &Mesh, k: usize, bary: [f64; 3]) -> Result<(f64, [f64; 2], f64)> {
        let map = AffineMap::for_element(mesh, k)?;
        let q = QuadPoint::new(problem, &map, self.dofmap.degree(), bary, 0.0);
        let local = self.local_values(k);
        Ok((q.value(&local), q.gradient(&local), q.apply_e(&local)))
    }
}

/// `E p_h` evaluated elementwise at a barycentric point of element `k`.
pub fn eval_operator_e(problem: &dyn Coefficients, mesh: &Mesh, field: &DiscreteField, k: usize, bary: [f64; 3]) -> Result<f64> {
    Ok(field.eval(problem, mesh, k, bary)?.2)
}

/// `sqrt(int D grad r . grad r)`
pub fn energy_norm(problem: &dyn Coefficients, mesh: &Mesh, field: &DiscreteField) -> Result<f64> {
    let rule = QuadratureRule::triangle_degree4();
    let degree = field.dofmap.degree();
    let parts: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|k| {
            let local = field.local_values(k);
            let qps = element_quadrature(problem, mesh, degree, k, &rule)?;
            Ok(qps
                .iter()
                .map(|q| {
                    let g = q.gradient(&local);
                    q.weight * (q.diffusion[0] * g[0] * g[0] + q.diffusion[1] * g[1] * g[1])
                })
                .sum::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}

pub fn energy_norm_of_difference(problem: &dyn Coefficients, mesh: &Mesh, a: &DiscreteField, b: &DiscreteField) -> Result<f64> {
    energy_norm(problem, mesh, &a.difference(b)?)
}

/// Energy-norm distance between a discrete field and an exact solution given
/// by its gradient.
pub fn energy_error(problem: &dyn Coefficients, mesh: &Mesh, field: &DiscreteField, exact_gradient: impl Fn(Point) -> [f64; 2] + Sync) -> Result<f64> {
    let rule = QuadratureRule::triangle_degree4();
    let degree = field.dofmap.degree();
    let parts: Vec<f64> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|k| {
            let local = field.local_values(k);
            let qps = element_quadrature(problem, mesh, degree, k, &rule)?;
            Ok(qps
                .iter()
                .map(|q| {
                    let g = q.gradient(&local);
                    let ge = exact_gradient(q.x);
                    let d = [g[0] - ge[0], g[1] - ge[1]];
                    q.weight * (q.diffusion[0] * d[0] * d[0] + q.diffusion[1] * d[1] * d[1])
                })
                .sum::<f64>())
        })
        .collect::<Result<_>>()?;
    Ok(parts.iter().sum::<f64>().sqrt())
}

/// Point on edge `e` at parameter `t` in `[0, 1]`, measured from its
/// lower-indexed endpoint, and the unit normal pointing out of the edge's
/// first triangle.
pub fn edge_point_and_normal(mesh: &Mesh, e: usize, t: f64) -> (Point, [f64; 2]) {
    let edge = mesh.edge(e);
    let (a, b) = (mesh.vertex(edge.vertices[0]), mesh.vertex(edge.vertices[1]));
    let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
    let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
    let mut n = [(b[1] - a[1]) / len, -(b[0] - a[0]) / len];
    let k = edge.triangles[0].expect("edge has a triangle");
    let c = mesh.centroid(k);
    if (x[0] - c[0]) * n[0] + (x[1] - c[1]) * n[1] < 0.0 {
        n = [-n[0], -n[1]];
    }
    (x, n)
}

/// `(D grad p_h|K+ - D grad p_h|K-) . n` at parameter `t` along interior edge `e`,
/// with `K+` the edge's first triangle and `n` pointing out of `K+`.
pub fn edge_flux_jump(problem: &dyn Coefficients, mesh: &Mesh, field: &DiscreteField, e: usize, t: f64) -> Result<f64> {
    let edge = mesh.edge(e);
    let (Some(kp), Some(km)) = (edge.triangles[0], edge.triangles[1]) else {
        return Err(Error::invalid(format!("edge {e} is on the boundary")));
    };
    let (x, n) = edge_point_and_normal(mesh, e, t);
    let dd = problem.diffusion(x);
    let flux = |k: usize| -> Result<f64> {
        let bary = AffineMap::for_element(mesh, k)?.to_barycentric(x);
        let (_, g, _) = field.eval(problem, mesh, k, bary)?;
        Ok(dd[0] * g[0] * n[0] + dd[1] * g[1] * n[1])
    };
    Ok(flux(kp)? - flux(km)?)
}

/// `int_E jump^2 ds` by the edge Gauss rule.
pub fn edge_jump_squared(problem: &dyn Coefficients, mesh: &Mesh, field: &DiscreteField, e: usize) -> Result<f64> {
    let rule = EdgeRule::gauss3();
    let len = mesh.edge_length(e);
    let mut s = 0.0;
    for (t, w) in rule.points.iter().zip(&rule.weights) {
        let j = edge_flux_jump(problem, mesh, field, e, *t)?;
        s += w * len * j * j;
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, Rect};
    use crate::problem::{CustomProblem, ProblemSpec};
    use approx::assert_relative_eq;

    fn unit() -> Rect {
        Rect::new(0.0, 1.0, 0.0, 1.0).unwrap()
    }

    #[test]
    fn reference_triangle_stiffness() {
        let mesh = Mesh::from_parts(vec![[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], vec![[0, 1, 2]]).unwrap();
        let dm = DofMap::new(&mesh, 1).unwrap();
        let p = CustomProblem::constant_film(unit(), 1.0, 1.0, |_| 0.0);
        let a = assemble_stiffness(&p, &mesh, &dm).unwrap();
        let expected = [[1.0, -0.5, -0.5], [-0.5, 0.5, 0.0], [-0.5, 0.0, 0.5]];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(a.get(i, j), expected[i][j], epsilon = 1e-14);
            }
        }
    }

    #[test]
    fn stiffness_kernel_and_scaling() {
        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 6, 4).unwrap();
        for degree in [1, 2] {
            let dm = DofMap::new(&mesh, degree).unwrap();
            let a = assemble_stiffness(&p, &mesh, &dm).unwrap();
            assert_eq!(a.max_asymmetry(), 0.0);
            let ones = vec![1.0; dm.n_dofs()];
            let scale = a.mul_vec(&ones).iter().fold(0.0f64, |m, v| m.max(v.abs()));
            assert!(scale < 1e-11, "row sums {scale}");
        }
        let r = unit();
        let mesh = build_rect_mesh(r, 3, 3).unwrap();
        let dm = DofMap::new(&mesh, 2).unwrap();
        let a1 = assemble_stiffness(&CustomProblem::constant_film(r, 1.0, 0.5, |_| 0.0), &mesh, &dm).unwrap();
        let s = 2.0f64;
        let a2 = assemble_stiffness(&CustomProblem::constant_film(r, s.cbrt(), 0.5, |_| 0.0), &mesh, &dm).unwrap();
        for i in 0..dm.n_dofs() {
            let (cols, _) = a1.row(i);
            for &j in cols {
                assert_relative_eq!(a2.get(i, j), s * a1.get(i, j), max_relative = 1e-13, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn load_vector_for_unit_load() {
        let r = unit();
        let mesh = build_rect_mesh(r, 3, 3).unwrap();
        let dm = DofMap::new(&mesh, 1).unwrap();
        let zero = assemble_load(&CustomProblem::constant_film(r, 1.0, 1.0, |_| 0.0), &mesh, &dm).unwrap();
        assert!(zero.iter().all(|&v| v == 0.0));
        let b = assemble_load(&CustomProblem::constant_film(r, 1.0, 1.0, |_| 1.0), &mesh, &dm).unwrap();
        let mut patch = vec![0.0; dm.n_dofs()];
        for k in 0..mesh.n_triangles() {
            for &v in &mesh.triangle(k) {
                patch[v] += mesh.area(k);
            }
        }
        for i in 0..dm.n_dofs() {
            assert_relative_eq!(b[i], patch[i] / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn operator_e_examples() {
        let r = unit();
        let mesh = build_rect_mesh(r, 3, 2).unwrap();
        let p = CustomProblem::constant_film(r, 1.0, 1.0, |_| 0.0);
        let dm = Arc::new(DofMap::new(&mesh, 2).unwrap());
        let c = DiscreteField::interpolate(dm.clone(), |_| 4.2);
        let sq = DiscreteField::interpolate(dm, |x| x[0] * x[0]);
        for k in 0..mesh.n_triangles() {
            assert!(eval_operator_e(&p, &mesh, &c, k, [0.2, 0.5, 0.3]).unwrap().abs() < 1e-12);
            assert_relative_eq!(eval_operator_e(&p, &mesh, &sq, k, [0.2, 0.5, 0.3]).unwrap(), 2.0, epsilon = 1e-10);
        }
        // d^3 = 1 + theta, p = theta
        let manufactured = CustomProblem {
            film: Arc::new(|x| (1.0 + x[0]).cbrt()),
            film_gradient: Arc::new(|x| [(1.0 + x[0]).powf(-2.0 / 3.0) / 3.0, 0.0]),
            ..p
        };
        let dm1 = Arc::new(DofMap::new(&mesh, 1).unwrap());
        let lin = DiscreteField::interpolate(dm1, |x| x[0]);
        for k in 0..mesh.n_triangles() {
            assert_relative_eq!(eval_operator_e(&manufactured, &mesh, &lin, k, [0.1, 0.6, 0.3]).unwrap(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn energy_norm_examples() {
        let r = unit();
        let mesh = build_rect_mesh(r, 4, 4).unwrap();
        let p = CustomProblem::constant_film(r, 1.0, 1.0, |_| 0.0);
        let dm = Arc::new(DofMap::new(&mesh, 1).unwrap());
        let c = DiscreteField::interpolate(dm.clone(), |_| 3.0);
        assert_eq!(energy_norm(&p, &mesh, &c).unwrap(), 0.0);
        let x = DiscreteField::interpolate(dm.clone(), |x| x[0]);
        assert_relative_eq!(energy_norm(&p, &mesh, &x).unwrap(), 1.0, epsilon = 1e-13);
        let mut sx = x.clone();
        sx.values.iter_mut().for_each(|v| *v *= -2.5);
        assert_relative_eq!(energy_norm(&p, &mesh, &sx).unwrap(), 2.5, epsilon = 1e-13);

        let other = Arc::new(DofMap::new(&mesh, 2).unwrap());
        let y = DiscreteField::zeros(other);
        assert!(matches!(energy_norm_of_difference(&p, &mesh, &x, &y), Err(Error::DofMapMismatch)));
    }

    #[test]
    fn energy_norm_matches_quadratic_form() {
        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 6, 4).unwrap();
        for degree in [1, 2] {
            let dm = Arc::new(DofMap::new(&mesh, degree).unwrap());
            let a = assemble_stiffness(&p, &mesh, &dm).unwrap();
            let f = DiscreteField::interpolate(dm, |x| (3.0 * x[0]).sin() * x[1] * (1.0 - x[1]));
            let e = energy_norm(&p, &mesh, &f).unwrap();
            assert_relative_eq!(e * e, a.quadratic_form(&f.values), max_relative = 1e-10);
        }
    }

    #[test]
    fn flux_jumps() {
        let r = unit();
        let mesh = build_rect_mesh(r, 3, 3).unwrap();
        let p = CustomProblem::constant_film(r, 1.0, 1.0, |_| 0.0);
        let dm = Arc::new(DofMap::new(&mesh, 1).unwrap());
        let lin = DiscreteField::interpolate(dm.clone(), |x| 2.0 * x[0] - x[1]);
        for e in mesh.interior_edges() {
            assert!(edge_flux_jump(&p, &mesh, &lin, e, 0.3).unwrap().abs() < 1e-12);
        }
        let b = mesh.boundary_edges().next().unwrap();
        assert!(edge_flux_jump(&p, &mesh, &lin, b, 0.5).is_err());

        // kink across the vertical line x = 1/3: slope 1 on the left, 3 on the right
        let kink = DiscreteField::interpolate(dm, |x| if x[0] <= 1.0 / 3.0 { x[0] } else { 1.0 / 3.0 + 3.0 * (x[0] - 1.0 / 3.0) });
        let e = mesh
            .interior_edges()
            .find(|&e| {
                let [a, b] = mesh.edge(e).vertices;
                (mesh.vertex(a)[0] - 1.0 / 3.0).abs() < 1e-12 && (mesh.vertex(b)[0] - 1.0 / 3.0).abs() < 1e-12
            })
            .unwrap();
        let (_, n) = edge_point_and_normal(&mesh, e, 0.5);
        let j = edge_flux_jump(&p, &mesh, &kink, e, 0.5).unwrap();
        // K+ lies on the side the normal points away from
        let c = mesh.centroid(mesh.edge(e).triangles[0].unwrap());
        let (g_plus, g_minus) = if c[0] < 1.0 / 3.0 { (1.0, 3.0) } else { (3.0, 1.0) };
        assert_relative_eq!(j, (g_plus - g_minus) * n[0], epsilon = 1e-12);
        assert_relative_eq!(j.abs(), 2.0, epsilon = 1e-12);
    }
}
