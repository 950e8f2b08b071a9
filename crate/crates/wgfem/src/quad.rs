//! Quadrature rules: Gauss-Legendre on `[-1, 1]` for edges and rules on the
//! reference triangle for element interiors. Polygons are integrated by
//! centroid-fan subtriangulation, which is exact for polynomials.

use nalgebra::Point2;

use crate::error::{Result, WgError};
use crate::mesh::Mesh;
use crate::real::{real, Real};

pub const MAX_EDGE_POINTS: usize = 12;
pub const MAX_TRIANGLE_DEGREE: usize = 12;

/// Quadrature rule on the reference triangle `(0,0), (1,0), (0,1)`.
#[derive(Clone, Debug)]
pub struct TriangleRule<T: Real> {
    pub points: Vec<Point2<T>>,
    pub weights: Vec<T>,
    pub degree: usize,
}

/// Gauss-Legendre rule on `[-1, 1]`, exact to degree `2 * points - 1`.
#[derive(Clone, Debug)]
pub struct EdgeRule<T: Real> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
    pub degree: usize,
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`, computed by Newton
/// iteration on the Legendre recurrence in `f64` and converted.
pub fn gauss_legendre<T: Real>(points: usize) -> Result<EdgeRule<T>> {
    if points == 0 || points > MAX_EDGE_POINTS {
        return Err(WgError::UnsupportedQuadrature(points));
    }
    let n = points;
    let mut xs = vec![0.0f64; n];
    let mut ws = vec![0.0f64; n];
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            let (p, dp) = legendre_with_derivative(n, x);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, dp) = legendre_with_derivative(n, x);
        xs[n - 1 - i] = x;
        ws[n - 1 - i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    Ok(EdgeRule {
        points: xs.into_iter().map(real).collect(),
        weights: ws.into_iter().map(real).collect(),
        degree: 2 * n - 1,
    })
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, dp)
}

/// Rule on the reference triangle exact for all polynomials of total degree
/// `degree`. Degree 1 is the one-point centroid rule; higher degrees use a
/// positive-weight product rule on the collapsed square.
pub fn triangle_rule<T: Real>(degree: usize) -> Result<TriangleRule<T>> {
    if degree == 0 || degree > MAX_TRIANGLE_DEGREE {
        return Err(WgError::UnsupportedQuadrature(degree));
    }
    if degree == 1 {
        let third = real::<T>(1.0 / 3.0);
        return Ok(TriangleRule {
            points: vec![Point2::new(third, third)],
            weights: vec![real(0.5)],
            degree: 1,
        });
    }
    // Collapse x = u, y = v (1 - u): the Jacobian (1 - u) raises the
    // u-direction degree by one, so m Gauss points need 2m - 1 >= degree + 1.
    let m = (degree + 3) / 2;
    let line: EdgeRule<T> = gauss_legendre(m)?;
    let half = real::<T>(0.5);
    let mut points = Vec::with_capacity(m * m);
    let mut weights = Vec::with_capacity(m * m);
    for (iu, &tu) in line.points.iter().enumerate() {
        let u = half * (tu + T::one());
        let wu = line.weights[iu] * half;
        for (iv, &tv) in line.points.iter().enumerate() {
            let v = half * (tv + T::one());
            let wv = line.weights[iv] * half;
            points.push(Point2::new(u, v * (T::one() - u)));
            weights.push(wu * wv * (T::one() - u));
        }
    }
    Ok(TriangleRule {
        points,
        weights,
        degree,
    })
}

/// Quadrature points and weights mapped onto a physical element. Triangles
/// are mapped affinely; general polygons are fanned into triangles around
/// the centroid.
#[derive(Clone, Debug)]
pub struct ElementRule<T: Real> {
    pub points: Vec<Point2<T>>,
    pub weights: Vec<T>,
    pub degree: usize,
}

impl<T: Real> ElementRule<T> {
    /// Integrates a function over the element.
    pub fn integrate<F: FnMut(Point2<T>) -> T>(&self, mut f: F) -> T {
        self.points
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (&p, &w)| acc + f(p) * w)
    }
}

/// Maps a reference-triangle rule onto element `el` of the mesh.
pub fn element_rule<T: Real>(mesh: &Mesh<T>, el: usize, rule: &TriangleRule<T>) -> ElementRule<T> {
    let poly = mesh.element(el);
    let mut points = Vec::new();
    let mut weights = Vec::new();
    let mut map_triangle = |a: Point2<T>, b: Point2<T>, c: Point2<T>| {
        let jac = ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs();
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let x = a.x + (b.x - a.x) * p.x + (c.x - a.x) * p.y;
            let y = a.y + (b.y - a.y) * p.x + (c.y - a.y) * p.y;
            points.push(Point2::new(x, y));
            // Reference weights sum to 1/2; the factor 2 |J| / 2 = |J|
            // comes from mapping the half-area reference triangle.
            weights.push(w * jac);
        }
    };
    if poly.len() == 3 {
        map_triangle(
            mesh.vertex(poly[0]),
            mesh.vertex(poly[1]),
            mesh.vertex(poly[2]),
        );
    } else {
        let c = mesh.geometry(el).centroid;
        for i in 0..poly.len() {
            let a = mesh.vertex(poly[i]);
            let b = mesh.vertex(poly[(i + 1) % poly.len()]);
            map_triangle(c, a, b);
        }
    }
    ElementRule {
        points,
        weights,
        degree: rule.degree,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::num::NonZeroU32;

    /// Analytic value of the monomial integral over the reference triangle:
    /// `int x^a y^b = a! b! / (a + b + 2)!`.
    fn monomial_integral(a: u32, b: u32) -> f64 {
        let fact = |k: u32| (1..=k as u64).product::<u64>() as f64;
        fact(a) * fact(b) / fact(a + b + 2)
    }

    #[test]
    fn degree_one_is_centroid_rule() {
        let rule: TriangleRule<f64> = triangle_rule(1).unwrap();
        assert_eq!(rule.points.len(), 1);
        assert!((rule.weights[0] - 0.5).abs() < 1e-15);
        let one: f64 = rule.weights.iter().sum();
        assert!((one - 0.5).abs() < 1e-15);
    }

    #[test]
    fn degree_two_x_squared() {
        let rule: TriangleRule<f64> = triangle_rule(2).unwrap();
        let val: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| p.x * p.x * w)
            .sum();
        assert!((val - 1.0 / 12.0).abs() < 1e-15, "got {val}");
    }

    #[test]
    fn degree_six_x3_y3() {
        let rule: TriangleRule<f64> = triangle_rule(6).unwrap();
        let val: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| p.x.powi(3) * p.y.powi(3) * w)
            .sum();
        let exact = monomial_integral(3, 3);
        assert!((exact - 1.0 / 1120.0).abs() < 1e-18);
        assert!((val - exact).abs() < 1e-15, "got {val}, want {exact}");
    }

    #[test]
    fn triangle_exactness_all_monomials() {
        for degree in 1..=10usize {
            let rule: TriangleRule<f64> = triangle_rule(degree).unwrap();
            let wsum: f64 = rule.weights.iter().sum();
            assert!((wsum - 0.5).abs() < 1e-13, "weight sum at degree {degree}");
            for d in 0..=degree as u32 {
                for a in 0..=d {
                    let b = d - a;
                    let val: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| p.x.powi(a as i32) * p.y.powi(b as i32) * w)
                        .sum();
                    let exact = monomial_integral(a, b);
                    assert!(
                        ((val - exact) / exact).abs() < 1e-12,
                        "degree {degree} monomial x^{a} y^{b}: {val} vs {exact}"
                    );
                }
            }
        }
    }

    #[test]
    fn edge_rule_examples() {
        let one: EdgeRule<f64> = gauss_legendre(1).unwrap();
        let t: f64 = one
            .points
            .iter()
            .zip(&one.weights)
            .map(|(&x, &w)| x * w)
            .sum();
        assert!(t.abs() < 1e-15, "midpoint rule integrates t to zero");

        let two: EdgeRule<f64> = gauss_legendre(2).unwrap();
        let t2: f64 = two
            .points
            .iter()
            .zip(&two.weights)
            .map(|(&x, &w)| x * x * w)
            .sum();
        assert!((t2 - 2.0 / 3.0).abs() < 1e-15);

        let three: EdgeRule<f64> = gauss_legendre(3).unwrap();
        let t4: f64 = three
            .points
            .iter()
            .zip(&three.weights)
            .map(|(&x, &w)| x.powi(4) * w)
            .sum();
        assert!((t4 - 2.0 / 5.0).abs() < 1e-15);
    }

    #[test]
    fn edge_rule_exactness() {
        for npts in 1..=10usize {
            let rule: EdgeRule<f64> = gauss_legendre(npts).unwrap();
            for d in 0..=rule.degree as u32 {
                let val: f64 = rule
                    .points
                    .iter()
                    .zip(&rule.weights)
                    .map(|(&x, &w)| x.powi(d as i32) * w)
                    .sum();
                let exact = if d % 2 == 0 {
                    2.0 / (d as f64 + 1.0)
                } else {
                    0.0
                };
                assert!(
                    (val - exact).abs() < 1e-13,
                    "{npts} points, t^{d}: {val} vs {exact}"
                );
            }
        }
    }

    #[test]
    fn unsupported_degrees_error() {
        assert!(matches!(
            triangle_rule::<f64>(0),
            Err(WgError::UnsupportedQuadrature(0))
        ));
        assert!(triangle_rule::<f64>(13).is_err());
        assert!(gauss_legendre::<f64>(0).is_err());
        assert!(gauss_legendre::<f64>(13).is_err());
    }

    #[test]
    fn element_rule_integrates_area() {
        let mesh: Mesh<f64> = Mesh::uniform_triangles(NonZeroU32::new(3).unwrap());
        let rule = triangle_rule(2).unwrap();
        for el in 0..mesh.num_elements() {
            let phys = element_rule(&mesh, el, &rule);
            let area = phys.integrate(|_| 1.0);
            assert!((area - mesh.geometry(el).area).abs() < 1e-15);
        }
    }

    #[test]
    fn polygon_fan_is_exact_for_polynomials() {
        let text = "wgmesh 2d\n9 4\n\
            0 0\n0.5 0\n1 0\n0 0.5\n0.5 0.5\n1 0.5\n0 1\n0.5 1\n1 1\n\
            4 0 1 4 3\n4 1 2 5 4\n4 3 4 7 6\n4 4 5 8 7\n";
        let mesh: Mesh<f64> = crate::mesh::parse_wgmesh(text).unwrap();
        let rule = triangle_rule(4).unwrap();
        // int over [0,1]^2 of x^2 y^2 = 1/9, assembled from the 4 quads.
        let total: f64 = (0..4)
            .map(|el| element_rule(&mesh, el, &rule).integrate(|p| p.x * p.x * p.y * p.y))
            .sum();
        assert!((total - 1.0 / 9.0).abs() < 1e-14, "got {total}");
    }
}
