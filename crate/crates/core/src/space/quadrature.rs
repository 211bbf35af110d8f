//! Quadrature rules on the reference triangle and the unit interval.

/// Points in barycentric coordinates with weights summing to the area of the
/// reference triangle `{(0,0), (1,0), (0,1)}`, i.e. 1/2.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

/// Gauss-Legendre rule on `[0, 1]`; weights sum to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeRule {
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

impl QuadratureRule {
    /// Symmetric 6-point rule, exact for polynomials of degree 4.
    pub fn triangle_degree4() -> Self {
        const A: f64 = 0.445_948_490_915_964_886;
        const WA: f64 = 0.223_381_589_678_011_466;
        const B: f64 = 0.091_576_213_509_770_743;
        const WB: f64 = 0.109_951_743_655_321_868;
        let orbit = |a: f64| [[1.0 - 2.0 * a, a, a], [a, 1.0 - 2.0 * a, a], [a, a, 1.0 - 2.0 * a]];
        let mut points = orbit(A).to_vec();
        points.extend(orbit(B));
        let weights = [WA, WA, WA, WB, WB, WB].iter().map(|w| 0.5 * w).collect();
        QuadratureRule {
            points,
            weights,
            degree: 4,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl EdgeRule {
    /// Three-point Gauss rule, exact for polynomials of degree 5.
    pub fn gauss3() -> Self {
        let s = 0.5 * (3.0f64 / 5.0).sqrt();
        EdgeRule {
            points: vec![0.5 - s, 0.5, 0.5 + s],
            weights: vec![5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0],
            degree: 5,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}
