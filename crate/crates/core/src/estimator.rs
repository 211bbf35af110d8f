//! Residual a posteriori estimators and maximum-strategy marking.
//!
//! Per element the Nitsche estimator is
//!
//! ```text
//! eta_K^2 = h_K^2 / d_K^3 ||E p_h + lambda_h + f||_K^2
//!         + sum_{E in dK interior} 1/2 h_E / d_E^3 ||[D grad p_h . n]||_E^2
//!         + ||(p_c - p_h)_+||_{energy, K}^2
//!         + int_K (p_h - p_c)_+ lambda_h
//! ```
//!
//! The penalty estimator keeps the first two terms with the penalty multiplier.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;

use crate::assembly::{edge_jump_squared, element_quadrature, DiscreteField};
use crate::error::{Error, Result};
use crate::mesh::{MarkSet, Mesh};
use crate::problem::{mean_d_edge, Coefficients};
use crate::solver::{point_state, ElementScales, Method, SolverConfig};
use crate::space::QuadratureRule;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorReport {
    /// Squared contributions per element: residual, edge jump, constraint violation, complementarity.
    pub terms: Vec<[f64; 4]>,
    /// `eta_K = sqrt(sum of terms)`.
    pub eta: Vec<f64>,
    pub total: f64,
    pub ndofs: usize,
}

impl EstimatorReport {
    pub fn from_terms(terms: Vec<[f64; 4]>, ndofs: usize) -> Self {
        let eta: Vec<f64> = terms.iter().map(|t| t.iter().sum::<f64>().sqrt()).collect();
        let total = terms.iter().flatten().sum::<f64>().sqrt();
        EstimatorReport { terms, eta, total, ndofs }
    }

    pub fn n_elements(&self) -> usize {
        self.eta.len()
    }

    pub fn max_eta(&self) -> f64 {
        self.eta.iter().copied().fold(0.0, f64::max)
    }

    /// Sum over elements of one term.
    pub fn term_total(&self, i: usize) -> f64 {
        self.terms.iter().map(|t| t[i]).sum()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut out = out;
        writeln!(out, "# ndofs={} eta_total={:e}", self.ndofs, self.total).map_err(|e| Error::io("<estimator report>", e))?;
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["element_id", "term1", "term2", "term3", "term4", "eta_K"])?;
        for (k, (t, eta)) in self.terms.iter().zip(&self.eta).enumerate() {
            w.write_record([k.to_string(), t[0].to_string(), t[1].to_string(), t[2].to_string(), t[3].to_string(), eta.to_string()])?;
        }
        w.flush().map_err(|e| Error::io("<estimator report>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// `1/2 h_E / d_E^3 ||jump||_E^2` for every interior edge; zero on the boundary.
fn edge_terms(problem: &dyn Coefficients, mesh: &Mesh, field: &DiscreteField) -> Result<Vec<f64>> {
    (0..mesh.n_edges())
        .into_par_iter()
        .map(|e| {
            if mesh.edge(e).is_boundary() {
                return Ok(0.0);
            }
            let d = mean_d_edge(problem, mesh, e);
            Ok(0.5 * mesh.edge_length(e) / d.powi(3) * edge_jump_squared(problem, mesh, field, e)?)
        })
        .collect()
}

fn estimate(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, field: &DiscreteField, method: Method) -> Result<EstimatorReport> {
    let rule = QuadratureRule::triangle_degree4();
    let degree = field.dofmap.degree();
    let scales = ElementScales::new(problem, mesh);
    let p_c = problem.cavitation_pressure();
    let edges = edge_terms(problem, mesh, field)?;
    let terms = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|k| {
            let qps = element_quadrature(problem, mesh, degree, k, &rule)?;
            let local = field.local_values(k);
            let weight = match method {
                Method::Nitsche => scales.nitsche_weight(k, config.alpha),
                Method::Penalty => scales.penalty_weight(k, config.penalty_eps, degree),
            };
            let mut t = [0.0; 4];
            for q in &qps {
                let s = point_state(q, &local, method, weight, p_c);
                let r = s.e_value + s.multiplier + s.load;
                t[0] += q.weight * r * r;
                if method == Method::Nitsche {
                    if s.value < p_c {
                        let g = s.gradient;
                        t[2] += q.weight * (q.diffusion[0] * g[0] * g[0] + q.diffusion[1] * g[1] * g[1]);
                    }
                    t[3] += q.weight * (s.value - p_c).max(0.0) * s.multiplier;
                }
            }
            t[0] *= scales.h[k].powi(2) / scales.d[k].powi(3);
            t[1] = mesh.triangle_edges(k).iter().map(|&e| edges[e]).sum();
            Ok(t)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EstimatorReport::from_terms(terms, field.dofmap.n_free()))
}

pub fn estimate_nitsche(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, field: &DiscreteField) -> Result<EstimatorReport> {
    estimate(problem, config, mesh, field, Method::Nitsche)
}

pub fn estimate_penalty(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, field: &DiscreteField) -> Result<EstimatorReport> {
    estimate(problem, config, mesh, field, Method::Penalty)
}

/// Estimator matching `config.method`.
pub fn estimate_for(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, field: &DiscreteField) -> Result<EstimatorReport> {
    estimate(problem, config, mesh, field, config.method)
}

/// Elements with `eta_K > beta max eta`.
pub fn mark(report: &EstimatorReport, mesh: &Mesh, beta: f64) -> Result<MarkSet> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!("beta must lie in (0, 1), got {beta}")));
    }
    if report.n_elements() != mesh.n_triangles() {
        return Err(Error::invalid("estimator report does not match the mesh"));
    }
    let threshold = beta * report.max_eta();
    MarkSet::new(mesh, report.eta.iter().enumerate().filter(|(_, e)| **e > threshold).map(|(k, _)| k))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_rect_mesh, Rect};
    use crate::problem::{CustomProblem, ProblemSpec};
    use crate::solver::fixed_point_solve;
    use crate::space::DofMap;
    use approx::assert_relative_eq;
    use std::sync::Arc;

    fn report(eta: &[f64]) -> EstimatorReport {
        EstimatorReport::from_terms(eta.iter().map(|e| [e * e, 0.0, 0.0, 0.0]).collect(), 0)
    }

    #[test]
    fn marking_examples() {
        let mesh = Mesh::from_parts(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0], [2.0, 0.0]],
            vec![[0, 1, 2], [0, 2, 3], [1, 4, 2]],
        )
        .unwrap();
        let m = mark(&report(&[3.0, 2.0, 0.5]), &mesh, 0.5).unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![0, 1]);
        assert!(mark(&report(&[0.0, 0.0, 0.0]), &mesh, 0.5).unwrap().is_empty());
        let m = mark(&report(&[2.0, 1.0, 1.0]), &mesh, 0.5).unwrap();
        assert_eq!(m.iter().collect::<Vec<_>>(), vec![0]);
        assert_eq!(mark(&report(&[1.0, 0.0, 1e-9]), &mesh, 1e-12).unwrap().len(), 2);
        assert!(mark(&report(&[1.0, 1.0, 1.0]), &mesh, 1.0).is_err());
        assert!(mark(&report(&[1.0, 1.0, 1.0]), &mesh, 0.0).is_err());
    }

    #[test]
    fn residual_free_discrete_solution() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let mesh = build_rect_mesh(r, 3, 3).unwrap();
        let p = CustomProblem::constant_film(r, 1.0, 1.0, |_| 0.0);
        let dm = Arc::new(DofMap::new(&mesh, 1).unwrap());
        let zero = DiscreteField::zeros(dm);
        let cfg = SolverConfig::default();
        for rep in [estimate_nitsche(&p, &cfg, &mesh, &zero).unwrap(), estimate_penalty(&p, &cfg, &mesh, &zero).unwrap()] {
            assert_eq!(rep.total, 0.0);
        }
    }

    #[test]
    fn globally_linear_field_has_no_jumps() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let mesh = build_rect_mesh(r, 4, 2).unwrap();
        let p = CustomProblem::constant_film(r, 1.0, 0.25, |_| 0.0);
        let dm = Arc::new(DofMap::new(&mesh, 1).unwrap());
        let lin = DiscreteField::interpolate(dm, |x| 5.0 + x[0] + 2.0 * x[1]);
        let rep = estimate_nitsche(&p, &SolverConfig::default(), &mesh, &lin).unwrap();
        assert!(rep.term_total(1) < 1e-24);
        assert_eq!(rep.term_total(2), 0.0);
        assert_eq!(rep.term_total(3), 0.0);
    }

    #[test]
    fn penalty_inactive_is_standard_residual_estimator() {
        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 6, 4).unwrap();
        let dm = Arc::new(DofMap::new(&mesh, 1).unwrap());
        let field = DiscreteField::interpolate(dm, |x| 1.0 + x[0]);
        let rep = estimate_penalty(&p, &SolverConfig::penalty(), &mesh, &field).unwrap();
        let rule = QuadratureRule::triangle_degree4();
        for k in 0..mesh.n_triangles() {
            let qps = element_quadrature(&p, &mesh, 1, k, &rule).unwrap();
            let local = field.local_values(k);
            let r2: f64 = qps.iter().map(|q| q.weight * (q.apply_e(&local) + q.load).powi(2)).sum();
            let h = mesh.element_diameter(k);
            let dk = crate::problem::mean_d_element(&p, &mesh, k);
            assert_relative_eq!(rep.terms[k][0], h * h / dk.powi(3) * r2, max_relative = 1e-12);
            assert_eq!(rep.terms[k][2], 0.0);
            assert_eq!(rep.terms[k][3], 0.0);
        }
    }

    #[test]
    fn report_decomposition_and_nonnegativity() {
        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 12, 8).unwrap();
        let cfg = SolverConfig::default();
        let dm = Arc::new(DofMap::new(&mesh, 2).unwrap());
        let sol = fixed_point_solve(&p, &cfg, &mesh, dm).unwrap();
        let rep = estimate_nitsche(&p, &cfg, &mesh, &sol.field).unwrap();
        assert!(rep.terms.iter().flatten().all(|t| *t >= 0.0));
        let parts: f64 = (0..4).map(|i| rep.term_total(i)).sum();
        assert_relative_eq!(rep.total * rep.total, parts, max_relative = 1e-12);
        assert_eq!(rep.ndofs, 345);
    }

    #[test]
    fn csv_has_summary_and_header() {
        let mut buf = Vec::new();
        report(&[1.0, 2.0]).write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with("# ndofs=0"));
        assert_eq!(lines[1], "element_id,term1,term2,term3,term4,eta_K");
        assert_eq!(lines.len(), 4);
    }
}
