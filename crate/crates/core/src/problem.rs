//! Film thickness, diffusion tensor and loading of the normalized Reynolds
//! equation on a partial journal bearing.
//!
//! The pressure operator is `E p = div(D grad p)` with `D = d^3 diag(1, c)`,
//! where `c = (R/L)^2` and the coordinates are `(theta, y)`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Mesh, Point, Rect};
use crate::space::{AffineMap, EdgeRule, QuadratureRule};

/// Coefficient data the discretization needs.
pub trait Coefficients: Send + Sync {
    fn domain(&self) -> Rect;
    /// Film thickness `d`.
    fn film(&self, x: Point) -> f64;
    fn film_gradient(&self, x: Point) -> [f64; 2];
    /// Loading `f`.
    fn load(&self, x: Point) -> f64;
    /// `c = (R/L)^2`, scaling the axial diffusion.
    fn aspect(&self) -> f64;
    fn cavitation_pressure(&self) -> f64;

    /// Diagonal of `D = d^3 diag(1, c)`.
    fn diffusion(&self, x: Point) -> [f64; 2] {
        let d3 = self.film(x).powi(3);
        [d3, self.aspect() * d3]
    }

    /// Divergence of the columns of `D`: `(d/dtheta D_11, d/dy D_22)`.
    fn diffusion_divergence(&self, x: Point) -> [f64; 2] {
        let d = self.film(x);
        let g = self.film_gradient(x);
        let s = 3.0 * d * d;
        [s * g[0], self.aspect() * s * g[1]]
    }
}

/// Partial journal bearing with `d(theta) = 1 + eps cos(theta - phi)` and
/// `f = -6 dd/dtheta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProblemSpec {
    pub domain: Rect,
    pub eccentricity: f64,
    pub phase: f64,
    pub aspect: f64,
    pub cavitation_pressure: f64,
}

/// Attitude angle of the benchmark bearing: 0.5483 with the digits 88 repeating.
pub const BENCHMARK_ATTITUDE: f64 = 0.548_388_888_888_889;

/// Phase of `d` on the benchmark arc. The arc is centred on the load line,
/// which trails the minimum film by the attitude angle, so `theta = 0` sits
/// `2 pi / 3 - attitude` ahead of the line of centres.
pub const BENCHMARK_PHASE: f64 = BENCHMARK_ATTITUDE - 2.0 * PI / 3.0;

impl Default for ProblemSpec {
    fn default() -> Self {
        ProblemSpec::benchmark()
    }
}

impl ProblemSpec {
    /// 120 degree bearing, `L/R = 2`, eccentricity 0.9, `p_c = 0`.
    pub fn benchmark() -> Self {
        ProblemSpec {
            domain: Rect {
                x0: 0.0,
                x1: 2.0 * PI / 3.0,
                y0: 0.0,
                y1: 1.0,
            },
            eccentricity: 0.9,
            phase: BENCHMARK_PHASE,
            aspect: 0.25,
            cavitation_pressure: 0.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Rect::new(self.domain.x0, self.domain.x1, self.domain.y0, self.domain.y1)?;
        if self.domain.x1 - self.domain.x0 > 2.0 * PI + 1e-12 {
            return Err(Error::invalid("bearing extent must not exceed 2*pi"));
        }
        if !(self.eccentricity > 0.0 && self.eccentricity < 1.0) {
            return Err(Error::invalid(format!("eccentricity must lie in (0, 1), got {}", self.eccentricity)));
        }
        if !(self.aspect > 0.0) || !self.aspect.is_finite() {
            return Err(Error::invalid(format!("aspect factor must be positive, got {}", self.aspect)));
        }
        if !self.phase.is_finite() || !self.cavitation_pressure.is_finite() {
            return Err(Error::invalid("phase and cavitation pressure must be finite"));
        }
        Ok(())
    }

    pub fn d_value(&self, x: Point) -> f64 {
        1.0 + self.eccentricity * (x[0] - self.phase).cos()
    }

    pub fn f_value(&self, x: Point) -> f64 {
        6.0 * self.eccentricity * (x[0] - self.phase).sin()
    }
}

impl Coefficients for ProblemSpec {
    fn domain(&self) -> Rect {
        self.domain
    }

    fn film(&self, x: Point) -> f64 {
        self.d_value(x)
    }

    fn film_gradient(&self, x: Point) -> [f64; 2] {
        [-self.eccentricity * (x[0] - self.phase).sin(), 0.0]
    }

    fn load(&self, x: Point) -> f64 {
        self.f_value(x)
    }

    fn aspect(&self) -> f64 {
        self.aspect
    }

    fn cavitation_pressure(&self) -> f64 {
        self.cavitation_pressure
    }
}

type ScalarFn = Arc<dyn Fn(Point) -> f64 + Send + Sync>;
type VectorFn = Arc<dyn Fn(Point) -> [f64; 2] + Send + Sync>;

/// Coefficients given by closures; used for manufactured solutions.
#[derive(Clone)]
pub struct CustomProblem {
    pub domain: Rect,
    pub film: ScalarFn,
    pub film_gradient: VectorFn,
    pub load: ScalarFn,
    pub aspect: f64,
    pub cavitation_pressure: f64,
}

impl std::fmt::Debug for CustomProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CustomProblem")
            .field("domain", &self.domain)
            .field("aspect", &self.aspect)
            .field("cavitation_pressure", &self.cavitation_pressure)
            .finish_non_exhaustive()
    }
}

impl CustomProblem {
    /// Constant film thickness with the given load.
    pub fn constant_film(domain: Rect, d: f64, aspect: f64, load: impl Fn(Point) -> f64 + Send + Sync + 'static) -> Self {
        CustomProblem {
            domain,
            film: Arc::new(move |_| d),
            film_gradient: Arc::new(|_| [0.0, 0.0]),
            load: Arc::new(load),
            aspect,
            cavitation_pressure: 0.0,
        }
    }
}

impl Coefficients for CustomProblem {
    fn domain(&self) -> Rect {
        self.domain
    }
    fn film(&self, x: Point) -> f64 {
        (self.film)(x)
    }
    fn film_gradient(&self, x: Point) -> [f64; 2] {
        (self.film_gradient)(x)
    }
    fn load(&self, x: Point) -> f64 {
        (self.load)(x)
    }
    fn aspect(&self) -> f64 {
        self.aspect
    }
    fn cavitation_pressure(&self) -> f64 {
        self.cavitation_pressure
    }
}

/// `d_K`: quadrature mean of `d` over element `k`.
pub fn mean_d_element(problem: &dyn Coefficients, mesh: &Mesh, k: usize) -> f64 {
    let rule = QuadratureRule::triangle_degree4();
    let map = AffineMap::for_element(mesh, k).expect("valid mesh");
    let total: f64 = rule.weights.iter().sum();
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(b, w)| w * problem.film(map.to_physical(*b)))
        .sum::<f64>()
        / total
}

/// `d_E`: quadrature mean of `d` along edge `e`.
pub fn mean_d_edge(problem: &dyn Coefficients, mesh: &Mesh, e: usize) -> f64 {
    let rule = EdgeRule::gauss3();
    let [a, b] = mesh.edge(e).vertices;
    let (pa, pb) = (mesh.vertex(a), mesh.vertex(b));
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| w * problem.film([pa[0] + t * (pb[0] - pa[0]), pa[1] + t * (pb[1] - pa[1])]))
        .sum()
}

/// Largest ratio `max_K d / min_K d` over elements, sampled at vertices and
/// quadrature points.
pub fn quasi_uniformity_ratio(problem: &dyn Coefficients, mesh: &Mesh) -> f64 {
    let rule = QuadratureRule::triangle_degree4();
    let mut worst: f64 = 1.0;
    for k in 0..mesh.n_triangles() {
        let map = AffineMap::for_element(mesh, k).expect("valid mesh");
        let samples = rule
            .points
            .iter()
            .copied()
            .chain([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]])
            .map(|b| problem.film(map.to_physical(b)));
        let (lo, hi) = samples.fold((f64::INFINITY, 0.0f64), |(lo, hi), d| (lo.min(d), hi.max(d)));
        worst = worst.max(hi / lo);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_rect_mesh;
    use approx::assert_relative_eq;

    #[test]
    fn film_thickness_values() {
        let p = ProblemSpec::benchmark();
        assert_relative_eq!(p.d_value([p.phase, 0.3]), 1.9, epsilon = 1e-15);
        assert_relative_eq!(p.d_value([p.phase + PI, 0.3]), 0.1, epsilon = 1e-14);
        assert_eq!(p.d_value([1.0, 0.0]), p.d_value([1.0, 0.77]));
    }

    #[test]
    fn load_values() {
        let p = ProblemSpec::benchmark();
        assert_eq!(p.f_value([p.phase, 0.5]), 0.0);
        assert_relative_eq!(p.f_value([p.phase + PI / 2.0, 0.5]), 5.4, epsilon = 1e-14);
        for t in [0.1, 1.0, 2.0, 3.0] {
            assert!(p.f_value([p.phase + t, 0.0]) > 0.0);
        }
    }

    #[test]
    fn film_gradient_matches_finite_difference() {
        let p = ProblemSpec::benchmark();
        let h = 1e-6;
        for t in [0.0, 0.4, 1.3, 2.0] {
            let fd = (p.d_value([t + h, 0.5]) - p.d_value([t - h, 0.5])) / (2.0 * h);
            assert_relative_eq!(p.film_gradient([t, 0.5])[0], fd, max_relative = 1e-6);
            let d3 = |t: f64| p.d_value([t, 0.5]).powi(3);
            let fd3 = (d3(t + h) - d3(t - h)) / (2.0 * h);
            assert_relative_eq!(p.diffusion_divergence([t, 0.5])[0], fd3, max_relative = 1e-6);
        }
    }

    #[test]
    fn diffusion_is_positive_definite() {
        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 12, 8).unwrap();
        let rule = QuadratureRule::triangle_degree4();
        for k in 0..mesh.n_triangles() {
            let map = AffineMap::for_element(&mesh, k).unwrap();
            for b in &rule.points {
                let x = map.to_physical(*b);
                let dd = p.diffusion(x);
                let bound = p.film(x).powi(3) * p.aspect.min(1.0);
                assert!(dd[0] >= bound && dd[1] >= bound && bound > 0.0);
            }
        }
    }

    #[test]
    fn element_and_edge_means() {
        let r = Rect::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let mesh = build_rect_mesh(r, 2, 2).unwrap();
        let constant = CustomProblem::constant_film(r, 2.0, 1.0, |_| 0.0);
        assert_relative_eq!(mean_d_element(&constant, &mesh, 3), 2.0, epsilon = 1e-14);
        assert_relative_eq!(mean_d_edge(&constant, &mesh, 4), 2.0, epsilon = 1e-14);

        let linear = CustomProblem {
            film: Arc::new(|x| 1.0 + 2.0 * x[0] + x[1]),
            film_gradient: Arc::new(|_| [2.0, 1.0]),
            ..constant
        };
        for k in 0..mesh.n_triangles() {
            let c = mesh.centroid(k);
            assert_relative_eq!(mean_d_element(&linear, &mesh, k), linear.film(c), epsilon = 1e-13);
        }

        let p = ProblemSpec::benchmark();
        let mesh = build_rect_mesh(p.domain, 12, 8).unwrap();
        let k = (0..mesh.n_triangles())
            .find(|&k| {
                let t = mesh.triangle_points(k);
                let lo = t.iter().map(|v| v[0]).fold(f64::INFINITY, f64::min);
                let hi = t.iter().map(|v| v[0]).fold(f64::NEG_INFINITY, f64::max);
                lo <= p.phase + PI && p.phase + PI <= hi
            })
            .unwrap();
        let dk = mean_d_element(&p, &mesh, k);
        assert!(dk > 0.1 && dk < 1.9);
        assert!(p.domain.contains([p.phase + PI, 0.5]));
    }

    #[test]
    fn invalid_specs_rejected() {
        let mut p = ProblemSpec::benchmark();
        p.eccentricity = 1.0;
        assert!(p.validate().is_err());
        let mut p = ProblemSpec::benchmark();
        p.aspect = 0.0;
        assert!(p.validate().is_err());
        assert!(ProblemSpec::benchmark().validate().is_ok());
    }
}
