//! Nitsche and penalty discretizations of the cavitation constraint
//! `p >= p_c`, solved by a fixed-point iteration on the discrete cavitation
//! region.
//!
//! For the Nitsche method the multiplier is eliminated elementwise; with
//! `rho_K = d_K^3 / (alpha h_K^2)` a quadrature point is *active* when
//! `rho_K (p_c - p_h) - f - E p_h > 0`, and the multiplier there is that
//! quantity. The penalty method activates points with `p_h < p_c` and uses
//! the weight `1 / (eps h_K^(k+1))`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assembly::{assemble_reynolds, assemble_with, element_quadrature, energy_norm, DiscreteField, LocalSystem, QuadPoint, SparseSymSystem};
use crate::error::{Error, Result};
use crate::mesh::Mesh;
use crate::problem::{mean_d_element, Coefficients};
use crate::sparse::solve_spd;
use crate::space::{AffineMap, DofMap, QuadratureRule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Nitsche,
    Penalty,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Nitsche => "nitsche",
            Method::Penalty => "penalty",
        })
    }
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "nitsche" => Ok(Method::Nitsche),
            "penalty" => Ok(Method::Penalty),
            other => Err(Error::invalid(format!("unknown method '{other}' (expected nitsche or penalty)"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    pub method: Method,
    /// Nitsche stabilization parameter.
    pub alpha: f64,
    /// Penalty parameter.
    pub penalty_eps: f64,
    /// Relative energy-norm tolerance on the fixed-point increment.
    pub tol_rel: f64,
    pub max_iter: usize,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            method: Method::Nitsche,
            alpha: 1e-2,
            penalty_eps: 10.0,
            tol_rel: 1e-10,
            max_iter: 100,
        }
    }
}

impl SolverConfig {
    pub fn penalty() -> Self {
        SolverConfig {
            method: Method::Penalty,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!("alpha must lie in (0, inf), got {}", self.alpha)));
        }
        if !(self.penalty_eps > 0.0 && self.penalty_eps.is_finite()) {
            return Err(Error::invalid(format!("penalty parameter must be positive, got {}", self.penalty_eps)));
        }
        if !(self.tol_rel > 0.0) {
            return Err(Error::invalid(format!("tol_rel must be positive, got {}", self.tol_rel)));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter must be at least 1"));
        }
        Ok(())
    }
}

/// Per-element `h_K` and `d_K`.
#[derive(Debug, Clone)]
pub struct ElementScales {
    pub h: Vec<f64>,
    pub d: Vec<f64>,
}

impl ElementScales {
    pub fn new(problem: &dyn Coefficients, mesh: &Mesh) -> Self {
        let (h, d) = (0..mesh.n_triangles())
            .into_par_iter()
            .map(|k| (mesh.element_diameter(k), mean_d_element(problem, mesh, k)))
            .unzip();
        ElementScales { h, d }
    }

    /// `rho_K = d_K^3 / (alpha h_K^2)`
    pub fn nitsche_weight(&self, k: usize, alpha: f64) -> f64 {
        self.d[k].powi(3) / (alpha * self.h[k] * self.h[k])
    }

    /// `1 / (eps h_K^(degree + 1))`
    pub fn penalty_weight(&self, k: usize, eps: f64, degree: usize) -> f64 {
        1.0 / (eps * self.h[k].powi(degree as i32 + 1))
    }
}

/// Discrete cavitation region, resolved per (element, quadrature point).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ActiveState {
    points_per_element: usize,
    active: Vec<bool>,
}

impl ActiveState {
    pub fn inactive(n_elements: usize, points_per_element: usize) -> Self {
        ActiveState {
            points_per_element,
            active: vec![false; n_elements * points_per_element],
        }
    }

    pub fn from_flags(points_per_element: usize, active: Vec<bool>) -> Result<Self> {
        if points_per_element == 0 || active.len() % points_per_element != 0 {
            return Err(Error::invalid("active flags do not match the quadrature layout"));
        }
        Ok(ActiveState { points_per_element, active })
    }

    pub fn is_active(&self, k: usize, q: usize) -> bool {
        self.active[k * self.points_per_element + q]
    }

    pub fn element(&self, k: usize) -> &[bool] {
        &self.active[k * self.points_per_element..(k + 1) * self.points_per_element]
    }

    pub fn n_elements(&self) -> usize {
        self.active.len() / self.points_per_element
    }

    pub fn points_per_element(&self) -> usize {
        self.points_per_element
    }

    pub fn count(&self) -> usize {
        self.active.iter().filter(|a| **a).count()
    }

    pub fn union(&self, other: &ActiveState) -> ActiveState {
        ActiveState {
            points_per_element: self.points_per_element,
            active: self.active.iter().zip(&other.active).map(|(a, b)| *a || *b).collect(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IterationStep {
    pub iter: usize,
    pub increment_norm: f64,
    pub active_points: usize,
    pub linres: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct IterationLog {
    pub steps: Vec<IterationStep>,
}

impl IterationLog {
    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn write_csv(&self, out: impl Write) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        for s in &self.steps {
            w.serialize(s)?;
        }
        w.flush().map_err(|e| Error::io("<iteration log>", e))?;
        Ok(())
    }

    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        self.write_csv(file)
    }
}

/// Nitsche indicator `rho_K (p_c - p) - f - E p`.
fn nitsche_indicator(rho: f64, p_c: f64, value: f64, load: f64, e_value: f64) -> f64 {
    rho * (p_c - value) - load - e_value
}

/// Pointwise quantities shared by the indicator, the multiplier and the estimators.
#[derive(Debug, Clone, Copy)]
pub struct PointState {
    pub value: f64,
    pub gradient: [f64; 2],
    pub e_value: f64,
    pub load: f64,
    /// Nitsche indicator value, or `p_c - p_h` for the penalty method.
    pub indicator: f64,
    pub multiplier: f64,
}

impl PointState {
    pub fn is_active(&self) -> bool {
        self.indicator > 0.0
    }
}

/// Evaluates the discrete solution and its multiplier at one quadrature point.
pub fn point_state(q: &QuadPoint, local: &[f64], method: Method, weight: f64, p_c: f64) -> PointState {
    let value = q.value(local);
    let e_value = q.apply_e(local);
    let (indicator, multiplier) = match method {
        Method::Nitsche => {
            let ind = nitsche_indicator(weight, p_c, value, q.load, e_value);
            (ind, ind.max(0.0))
        }
        Method::Penalty => {
            let gap = p_c - value;
            (gap, weight * gap.max(0.0))
        }
    };
    PointState {
        value,
        gradient: q.gradient(local),
        e_value,
        load: q.load,
        indicator,
        multiplier,
    }
}

fn method_weight(scales: &ElementScales, config: &SolverConfig, degree: usize, k: usize) -> f64 {
    match config.method {
        Method::Nitsche => scales.nitsche_weight(k, config.alpha),
        Method::Penalty => scales.penalty_weight(k, config.penalty_eps, degree),
    }
}

/// Whether the barycentric point of element `k` lies in the discrete cavitation region of `field`.
pub fn active_indicator(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, field: &DiscreteField, k: usize, bary: [f64; 3]) -> Result<bool> {
    Ok(pointwise(problem, config, mesh, field, k, bary)?.is_active())
}

/// Recovered multiplier `lambda_h` at a barycentric point of element `k`; always `>= 0`.
pub fn recover_multiplier(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, field: &DiscreteField, k: usize, bary: [f64; 3]) -> Result<f64> {
    Ok(pointwise(problem, config, mesh, field, k, bary)?.multiplier)
}

fn pointwise(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, field: &DiscreteField, k: usize, bary: [f64; 3]) -> Result<PointState> {
    let degree = field.dofmap.degree();
    let map = AffineMap::for_element(mesh, k)?;
    let q = QuadPoint::new(problem, &map, degree, bary, 0.0);
    let weight = match config.method {
        Method::Nitsche => mean_d_element(problem, mesh, k).powi(3) / (config.alpha * mesh.element_diameter(k).powi(2)),
        Method::Penalty => 1.0 / (config.penalty_eps * mesh.element_diameter(k).powi(degree as i32 + 1)),
    };
    Ok(point_state(&q, &field.local_values(k), config.method, weight, problem.cavitation_pressure()))
}

/// Active flags of `field` at every quadrature point of the area rule.
pub fn compute_state(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, scales: &ElementScales, field: &DiscreteField) -> Result<ActiveState> {
    let rule = QuadratureRule::triangle_degree4();
    let degree = field.dofmap.degree();
    let p_c = problem.cavitation_pressure();
    let flags: Vec<Vec<bool>> = (0..mesh.n_triangles())
        .into_par_iter()
        .map(|k| {
            let qps = element_quadrature(problem, mesh, degree, k, &rule)?;
            let local = field.local_values(k);
            let w = method_weight(scales, config, degree, k);
            Ok(qps.iter().map(|q| point_state(q, &local, config.method, w, p_c).is_active()).collect())
        })
        .collect::<Result<_>>()?;
    ActiveState::from_flags(rule.len(), flags.concat())
}

/// Per element, the multiplier `lambda_h` at each quadrature point of the area rule.
pub fn multiplier_samples(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, field: &DiscreteField) -> Result<Vec<Vec<f64>>> {
    let rule = QuadratureRule::triangle_degree4();
    let degree = field.dofmap.degree();
    let scales = ElementScales::new(problem, mesh);
    let p_c = problem.cavitation_pressure();
    (0..mesh.n_triangles())
        .into_par_iter()
        .map(|k| {
            let qps = element_quadrature(problem, mesh, degree, k, &rule)?;
            let local = field.local_values(k);
            let w = method_weight(&scales, config, degree, k);
            Ok(qps.iter().map(|q| point_state(q, &local, config.method, w, p_c).multiplier).collect())
        })
        .collect()
}

/// Measure of the active quadrature weight divided by the domain area.
pub fn cavitated_fraction(mesh: &Mesh, state: &ActiveState, domain_area: f64) -> f64 {
    let rule = QuadratureRule::triangle_degree4();
    let mut s = 0.0;
    for k in 0..mesh.n_triangles() {
        let scale = 2.0 * mesh.area(k);
        for (q, w) in rule.weights.iter().enumerate() {
            if state.is_active(k, q) {
                s += w * scale;
            }
        }
    }
    s / domain_area
}

/// Reynolds stiffness and load plus the Nitsche terms for a frozen active set.
pub fn assemble_nitsche_system(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, dofmap: &DofMap, scales: &ElementScales, state: &ActiveState) -> Result<SparseSymSystem> {
    if !(config.alpha > 0.0 && config.alpha.is_finite()) {
        return Err(Error::invalid(format!("alpha must lie in (0, inf), got {}", config.alpha)));
    }
    let rule = QuadratureRule::triangle_degree4();
    let p_c = problem.cavitation_pressure();
    assemble_with(mesh, dofmap, |k| {
        let qps = element_quadrature(problem, mesh, dofmap.degree(), k, &rule)?;
        let rho = scales.nitsche_weight(k, config.alpha);
        let stab = 1.0 / rho;
        let n = dofmap.dofs_per_element();
        let mut local = LocalSystem::zeros(n);
        for (qi, q) in qps.iter().enumerate() {
            let w = q.weight;
            if state.is_active(k, qi) {
                for i in 0..n {
                    local.rhs[i] += w * (p_c * q.e_phi[i] + rho * p_c * q.phi[i]);
                    for j in i..n {
                        local.matrix[i][j] += w * (q.stiffness(i, j) + q.phi[j] * q.e_phi[i] + q.e_phi[j] * q.phi[i] + rho * q.phi[i] * q.phi[j]);
                    }
                }
            } else {
                for i in 0..n {
                    local.rhs[i] += w * (q.load * q.phi[i] + stab * q.load * q.e_phi[i]);
                    for j in i..n {
                        local.matrix[i][j] += w * (q.stiffness(i, j) - stab * q.e_phi[i] * q.e_phi[j]);
                    }
                }
            }
        }
        local.mirror_upper();
        Ok(local)
    })
}

/// Reynolds stiffness and load plus the penalty mass term on active points.
pub fn assemble_penalty_system(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, dofmap: &DofMap, scales: &ElementScales, state: &ActiveState) -> Result<SparseSymSystem> {
    let rule = QuadratureRule::triangle_degree4();
    let p_c = problem.cavitation_pressure();
    let degree = dofmap.degree();
    assemble_with(mesh, dofmap, |k| {
        let qps = element_quadrature(problem, mesh, degree, k, &rule)?;
        let pen = scales.penalty_weight(k, config.penalty_eps, degree);
        let n = dofmap.dofs_per_element();
        let mut local = LocalSystem::zeros(n);
        for (qi, q) in qps.iter().enumerate() {
            let w = q.weight;
            let active = state.is_active(k, qi);
            for i in 0..n {
                local.rhs[i] += w * q.load * q.phi[i];
                if active {
                    local.rhs[i] += w * pen * p_c * q.phi[i];
                }
                for j in i..n {
                    let mut a = q.stiffness(i, j);
                    if active {
                        a += pen * q.phi[i] * q.phi[j];
                    }
                    local.matrix[i][j] += w * a;
                }
            }
        }
        local.mirror_upper();
        Ok(local)
    })
}

/// Solves the system with its Dirichlet DOFs eliminated (boundary value 0).
/// Returns the full-length solution and the relative residual of the reduced system.
pub fn linear_solve(system: &SparseSymSystem) -> Result<(Vec<f64>, f64)> {
    let keep: Vec<bool> = system.dirichlet.iter().map(|d| !d).collect();
    let (reduced, index) = system.matrix.restrict(&keep);
    let rhs: Vec<f64> = index.iter().map(|&i| system.rhs[i]).collect();
    let (x, res) = solve_spd(&reduced, &rhs).map_err(|e| match e {
        Error::NotPositiveDefinite { row, pivot } => Error::NotPositiveDefinite { row: index[row], pivot },
        other => other,
    })?;
    let mut full = vec![0.0; system.n()];
    for (&i, v) in index.iter().zip(x) {
        full[i] = v;
    }
    Ok((full, res))
}

/// Solution of the unconstrained Reynolds equation.
pub fn solve_unconstrained(problem: &dyn Coefficients, mesh: &Mesh, dofmap: Arc<DofMap>) -> Result<DiscreteField> {
    let system = assemble_reynolds(problem, mesh, &dofmap)?;
    let (x, _) = linear_solve(&system)?;
    DiscreteField::new(dofmap, x)
}

#[derive(Debug, Clone)]
pub struct FixedPointSolution {
    pub field: DiscreteField,
    /// Active set of the returned field.
    pub state: ActiveState,
    pub log: IterationLog,
    pub scales: ElementScales,
}

pub fn assemble_system(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, dofmap: &DofMap, scales: &ElementScales, state: &ActiveState) -> Result<SparseSymSystem> {
    match config.method {
        Method::Nitsche => assemble_nitsche_system(problem, config, mesh, dofmap, scales, state),
        Method::Penalty => assemble_penalty_system(problem, config, mesh, dofmap, scales, state),
    }
}

/// Fixed-point iteration on the active set, started from the unconstrained
/// solution. Stops when the active set reproduces itself or the energy
/// increment falls below `tol_rel` times the energy norm of the iterate.
///
/// If the active set alternates between two states for three consecutive
/// iterations, the union of the two is used for one step.
pub fn fixed_point_solve(problem: &dyn Coefficients, config: &SolverConfig, mesh: &Mesh, dofmap: Arc<DofMap>) -> Result<FixedPointSolution> {
    config.validate()?;
    let scales = ElementScales::new(problem, mesh);
    let mut field = solve_unconstrained(problem, mesh, dofmap.clone())?;
    let mut state = compute_state(problem, config, mesh, &scales, &field)?;
    let mut previous: Option<ActiveState> = None;
    let mut oscillations = 0;
    let mut log = IterationLog::default();

    for iter in 1..=config.max_iter {
        let system = assemble_system(problem, config, mesh, &dofmap, &scales, &state)?;
        let (x, linres) = linear_solve(&system)?;
        let next = DiscreteField::new(dofmap.clone(), x)?;
        let increment = energy_norm(problem, mesh, &next.difference(&field)?)?;
        let size = energy_norm(problem, mesh, &next)?;
        let next_state = compute_state(problem, config, mesh, &scales, &next)?;
        log.steps.push(IterationStep {
            iter,
            increment_norm: increment,
            active_points: next_state.count(),
            linres,
        });
        log::debug!("fixed point {iter}: increment {increment:.3e}, active {}", next_state.count());

        if next_state == state || increment <= config.tol_rel * size {
            return Ok(FixedPointSolution {
                field: next,
                state: next_state,
                log,
                scales,
            });
        }
        if previous.as_ref() == Some(&next_state) {
            oscillations += 1;
        } else {
            oscillations = 0;
        }
        let frozen = if oscillations >= 3 {
            oscillations = 0;
            log::debug!("active set cycling; freezing the union for one step");
            Some(state.union(&next_state))
        } else {
            None
        };
        previous = Some(std::mem::replace(&mut state, frozen.unwrap_or(next_state)));
        field = next;
    }
    Err(Error::NonConvergence { log })
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
    fn indicator_sign_checks() {
        // p = p_c, f = -1, E p = 0 -> indicator 1
        assert_eq!(nitsche_indicator(123.0, 0.0, 0.0, -1.0, 0.0), 1.0);
        assert!(nitsche_indicator(1e4, 0.0, 10.0, 3.0, -2.0) < 0.0);
    }

    #[test]
    fn multiplier_from_active_point() {
        let r = unit();
        let mesh = build_rect_mesh(r, 2, 2).unwrap();
        let p = CustomProblem::constant_film(r, 1.0, 1.0, |_| -1.0);
        let dm = Arc::new(DofMap::new(&mesh, 1).unwrap());
        let zero = DiscreteField::zeros(dm.clone());
        let cfg = SolverConfig::default();
        assert!(active_indicator(&p, &cfg, &mesh, &zero, 0, [0.2, 0.3, 0.5]).unwrap());
        assert_relative_eq!(recover_multiplier(&p, &cfg, &mesh, &zero, 0, [0.2, 0.3, 0.5]).unwrap(), 1.0);

        let high = DiscreteField::interpolate(dm.clone(), |_| 50.0);
        assert!(!active_indicator(&p, &cfg, &mesh, &high, 1, [0.2, 0.3, 0.5]).unwrap());
        assert_eq!(recover_multiplier(&p, &cfg, &mesh, &high, 1, [0.2, 0.3, 0.5]).unwrap(), 0.0);

        let pen = SolverConfig::penalty();
        let neg = DiscreteField::interpolate(dm, |_| -0.1);
        assert!(active_indicator(&p, &pen, &mesh, &neg, 0, [0.2, 0.3, 0.5]).unwrap());
        assert!(!active_indicator(&p, &pen, &mesh, &high, 0, [0.2, 0.3, 0.5]).unwrap());
    }

    #[test]
    fn penalty_weights() {
        let scales = ElementScales {
            h: vec![1.0, 0.5],
            d: vec![1.0, 1.0],
        };
        assert_relative_eq!(scales.penalty_weight(0, 10.0, 1), 0.1);
        assert_relative_eq!(scales.penalty_weight(1, 10.0, 1), 0.4);
        assert_relative_eq!(scales.penalty_weight(1, 10.0, 2), 0.8);
    }

    #[test]
    fn nitsche_system_reductions() {
        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 6, 4).unwrap();
        let scales = ElementScales::new(&p, &mesh);
        let cfg = SolverConfig::default();
        for degree in [1, 2] {
            let dm = DofMap::new(&mesh, degree).unwrap();
            let none = ActiveState::inactive(mesh.n_triangles(), 6);
            let sys = assemble_nitsche_system(&p, &cfg, &mesh, &dm, &scales, &none).unwrap();
            assert_eq!(sys.matrix.max_asymmetry(), 0.0);
            linear_solve(&sys).unwrap();
            let all = ActiveState::from_flags(6, vec![true; 6 * mesh.n_triangles()]).unwrap();
            let sys = assemble_nitsche_system(&p, &cfg, &mesh, &dm, &scales, &all).unwrap();
            assert_eq!(sys.matrix.max_asymmetry(), 0.0);
            linear_solve(&sys).unwrap();
        }
        let bad = SolverConfig { alpha: 0.0, ..cfg };
        let dm = DofMap::new(&mesh, 1).unwrap();
        assert!(assemble_nitsche_system(&p, &bad, &mesh, &dm, &scales, &ActiveState::inactive(mesh.n_triangles(), 6)).is_err());
    }

    #[test]
    fn all_active_p1_with_unit_film_is_stiffness_plus_mass() {
        let r = unit();
        let mesh = build_rect_mesh(r, 3, 3).unwrap();
        let p = CustomProblem::constant_film(r, 1.0, 1.0, |_| 0.0);
        let dm = DofMap::new(&mesh, 1).unwrap();
        let scales = ElementScales::new(&p, &mesh);
        let cfg = SolverConfig::default();
        let all = ActiveState::from_flags(6, vec![true; 6 * mesh.n_triangles()]).unwrap();
        let sys = assemble_nitsche_system(&p, &cfg, &mesh, &dm, &scales, &all).unwrap();
        let stiff = crate::assembly::assemble_stiffness(&p, &mesh, &dm).unwrap();
        // uniform mesh: every rho_K is equal, and the P1 mass matrix has row sums = patch area / 3
        let rho = scales.nitsche_weight(0, cfg.alpha);
        let ones = vec![1.0; dm.n_dofs()];
        let diff: Vec<f64> = sys.matrix.mul_vec(&ones).iter().zip(stiff.mul_vec(&ones)).map(|(a, b)| a - b).collect();
        for v in 0..dm.n_dofs() {
            let patch: f64 = (0..mesh.n_triangles()).filter(|&k| mesh.triangle(k).contains(&v)).map(|k| mesh.area(k)).sum();
            assert_relative_eq!(diff[v], rho * patch / 3.0, max_relative = 1e-10);
        }
    }

    #[test]
    fn penalty_without_active_points_is_plain_reynolds() {
        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 4, 3).unwrap();
        let dm = DofMap::new(&mesh, 2).unwrap();
        let scales = ElementScales::new(&p, &mesh);
        let none = ActiveState::inactive(mesh.n_triangles(), 6);
        let sys = assemble_penalty_system(&p, &SolverConfig::penalty(), &mesh, &dm, &scales, &none).unwrap();
        let plain = assemble_reynolds(&p, &mesh, &dm).unwrap();
        assert_eq!(sys.matrix, plain.matrix);
        assert_eq!(sys.rhs, plain.rhs);
    }

    #[test]
    fn constant_film_converges_to_zero_in_one_step() {
        let r = unit();
        let mesh = build_rect_mesh(r, 4, 4).unwrap();
        let p = CustomProblem::constant_film(r, 1.3, 0.25, |_| 0.0);
        for cfg in [SolverConfig::default(), SolverConfig::penalty()] {
            let dm = Arc::new(DofMap::new(&mesh, 2).unwrap());
            let sol = fixed_point_solve(&p, &cfg, &mesh, dm).unwrap();
            assert_eq!(sol.log.len(), 1);
            assert!(sol.field.values.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn benchmark_unconstrained_has_negative_spike() {
        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 12, 8).unwrap();
        let dm = Arc::new(DofMap::new(&mesh, 1).unwrap());
        let u = solve_unconstrained(&p, &mesh, dm).unwrap();
        assert!(u.min() < 0.0 && u.max() > 0.0);
    }

    #[test]
    fn iteration_log_csv() {
        let log = IterationLog {
            steps: vec![IterationStep {
                iter: 1,
                increment_norm: 0.5,
                active_points: 3,
                linres: 1e-15,
            }],
        };
        let mut buf = Vec::new();
        log.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("iter,increment_norm,active_points,linres\n1,0.5,3,"));
    }
}
