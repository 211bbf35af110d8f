//! Self-checks run by `reynolds-fem verify`.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::assembly::energy_error;
use crate::driver::{run_adaptive, RunConfig};
use crate::error::Result;
use crate::mesh::{build_rect_mesh, MarkSet, DEFAULT_MIN_ANGLE_DEG};
use crate::problem::{Coefficients, CustomProblem, ProblemSpec};
use crate::solver::{assemble_system, compute_state, linear_solve, multiplier_samples, solve_unconstrained, ElementScales, Method, SolverConfig};
use crate::space::DofMap;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Check {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

/// `p = sin(3 theta / 2) sin(pi y)` on the benchmark domain with the benchmark film,
/// loaded by `f = -E p`.
pub fn manufactured_problem() -> (CustomProblem, impl Fn([f64; 2]) -> [f64; 2] + Sync) {
    let spec = ProblemSpec::benchmark();
    let c = spec.aspect;
    let load = move |x: [f64; 2]| {
        let (t, y) = (x[0], x[1]);
        let d = spec.d_value(x);
        let dd = spec.film_gradient(x)[0];
        let (s, co) = ((1.5 * t).sin(), (1.5 * t).cos());
        let sy = (PI * y).sin();
        let p_t = 1.5 * co * sy;
        let p_tt = -2.25 * s * sy;
        let p_yy = -PI * PI * s * sy;
        -(3.0 * d * d * dd * p_t + d.powi(3) * (p_tt + c * p_yy))
    };
    let problem = CustomProblem {
        domain: spec.domain,
        film: Arc::new(move |x| spec.d_value(x)),
        film_gradient: Arc::new(move |x| spec.film_gradient(x)),
        load: Arc::new(load),
        aspect: c,
        cavitation_pressure: 0.0,
    };
    let grad = |x: [f64; 2]| {
        let (t, y) = (x[0], x[1]);
        [1.5 * (1.5 * t).cos() * (PI * y).sin(), PI * (1.5 * t).sin() * (PI * y).cos()]
    };
    (problem, grad)
}

/// Energy errors of the unconstrained solution on `levels` uniformly refined meshes.
pub fn manufactured_errors(degree: usize, nx: usize, ny: usize, levels: usize) -> Result<Vec<(usize, f64)>> {
    let (problem, grad) = manufactured_problem();
    let mut mesh = build_rect_mesh(problem.domain(), nx, ny)?;
    let mut out = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        if level > 0 {
            mesh = mesh.refine_uniform();
        }
        let dm = Arc::new(DofMap::new(&mesh, degree)?);
        let n = dm.n_free();
        let field = solve_unconstrained(&problem, &mesh, dm)?;
        out.push((n, energy_error(&problem, &mesh, &field, &grad)?));
    }
    Ok(out)
}

/// Least-squares slope of `log2 e` against refinement level, negated.
pub fn observed_rate(errors: &[(usize, f64)]) -> f64 {
    let n = errors.len() as f64;
    let xs: Vec<f64> = (0..errors.len()).map(|i| i as f64).collect();
    let ys: Vec<f64> = errors.iter().map(|(_, e)| e.log2()).collect();
    let (mx, my) = (xs.iter().sum::<f64>() / n, ys.iter().sum::<f64>() / n);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    -sxy / sxx
}

fn rate_check(degree: usize) -> Result<Check> {
    let errors = manufactured_errors(degree, 3, 2, 4)?;
    let rate = observed_rate(&errors);
    let target = degree as f64;
    Ok(Check::new(
        &format!("manufactured P{degree} energy rate"),
        (rate - target).abs() <= 0.15,
        format!("rate {rate:.3}, expected {target} +- 0.15"),
    ))
}

fn mesh_check() -> Result<Check> {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = ProblemSpec::benchmark();
    let mut mesh = build_rect_mesh(spec.domain, 6, 4)?;
    for _ in 0..8 {
        let n = mesh.n_triangles();
        let marks = MarkSet::new(&mesh, (0..n).filter(|_| rng.gen_bool(0.2)))?;
        mesh = mesh.refine(&marks);
        if let Err(e) = mesh.check_invariants(DEFAULT_MIN_ANGLE_DEG) {
            return Ok(Check::new("mesh conformity and angle floor", false, e.to_string()));
        }
    }
    Ok(Check::new(
        "mesh conformity and angle floor",
        true,
        format!("{} triangles, min angle {:.2} deg", mesh.n_triangles(), mesh.min_angle()),
    ))
}

fn benchmark_checks() -> Result<Vec<Check>> {
    let run = run_adaptive(&RunConfig::benchmark(Method::Nitsche, 1, 4))?;
    let spec = ProblemSpec::benchmark();
    let cfg = SolverConfig::default();
    let lambda = multiplier_samples(&spec, &cfg, &run.mesh, &run.field)?;
    let min_lambda = lambda.iter().flatten().copied().fold(f64::INFINITY, f64::min);
    let scales = ElementScales::new(&spec, &run.mesh);
    let system = assemble_system(&spec, &cfg, &run.mesh, &run.field.dofmap, &scales, &run.state)?;
    let asym = system.matrix.max_asymmetry();
    let spd = linear_solve(&system).is_ok();
    let again = compute_state(&spec, &cfg, &run.mesh, &scales, &run.field)?;
    let p_max = run.field.max();
    let p_min = run.field.min();
    Ok(vec![
        Check::new("multiplier nonnegative", min_lambda >= 0.0, format!("min lambda {min_lambda:e}")),
        Check::new("system symmetric and positive definite", asym == 0.0 && spd, format!("asymmetry {asym:e}, cholesky ok: {spd}")),
        Check::new("active set is a fixed point", again == run.state, format!("{} active points", again.count())),
        Check::new("weak constraint", p_min >= -1e-2 * p_max, format!("min p {p_min:.4e}, max p {p_max:.4}")),
    ])
}

pub fn run_verification() -> Result<Vec<Check>> {
    let mut checks = vec![rate_check(1)?, rate_check(2)?, mesh_check()?];
    checks.extend(benchmark_checks()?);
    Ok(checks)
}
