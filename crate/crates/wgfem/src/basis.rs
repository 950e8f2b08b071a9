//! Polynomial bases on elements and edges.
//!
//! Element interiors use centroid-shifted, diameter-scaled monomials
//! `((x - x_T)/h_T)^a ((y - y_T)/h_T)^b`, ordered by total degree; this
//! keeps the nested property that the `P_{k-1}` basis is a prefix of the
//! `P_k` basis. Edges carry either mapped Legendre polynomials (variant P)
//! or the three-dimensional trace space of rigid motions (variant RM),
//! referenced to the edge midpoint so the shared-edge unknowns are
//! single-valued.

use nalgebra::{DMatrix, Point2, Vector2};

use crate::error::{Result, WgError};
use crate::mesh::{EdgeFrame, ElementGeometry, Mesh};
use crate::quad::{EdgeRule, ElementRule};
use crate::real::{real, Real};

/// Dimension of the scalar polynomial space `P_k` in 2D.
pub const fn scalar_dim(k: usize) -> usize {
    (k + 1) * (k + 2) / 2
}

/// Monomial exponent pairs for `P_k`, ordered by total degree with the
/// x-power descending within each degree.
pub fn monomial_exponents(k: usize) -> Vec<(u32, u32)> {
    let mut exps = Vec::with_capacity(scalar_dim(k));
    for d in 0..=k as u32 {
        for a in (0..=d).rev() {
            exps.push((a, d - a));
        }
    }
    exps
}

/// Scaled monomial basis of `P_k(T)` on one element.
#[derive(Clone, Debug)]
pub struct ElementBasis<T: Real> {
    pub element: usize,
    pub degree: usize,
    pub centroid: Point2<T>,
    pub inv_h: T,
    exps: Vec<(u32, u32)>,
}

impl<T: Real> ElementBasis<T> {
    pub fn new(element: usize, degree: usize, geo: &ElementGeometry<T>) -> Self {
        ElementBasis {
            element,
            degree,
            centroid: geo.centroid,
            inv_h: T::one() / geo.diameter,
            exps: monomial_exponents(degree),
        }
    }

    pub fn dim(&self) -> usize {
        self.exps.len()
    }

    #[inline]
    fn local(&self, p: Point2<T>) -> (T, T) {
        (
            (p.x - self.centroid.x) * self.inv_h,
            (p.y - self.centroid.y) * self.inv_h,
        )
    }

    pub fn eval(&self, i: usize, p: Point2<T>) -> T {
        let (xi, eta) = self.local(p);
        let (a, b) = self.exps[i];
        xi.powi(a as i32) * eta.powi(b as i32)
    }

    /// Gradient of the i-th scalar basis function at a physical point.
    pub fn eval_grad(&self, i: usize, p: Point2<T>) -> Vector2<T> {
        let (xi, eta) = self.local(p);
        let (a, b) = self.exps[i];
        let dx = if a == 0 {
            T::zero()
        } else {
            real::<T>(a as f64) * xi.powi(a as i32 - 1) * eta.powi(b as i32) * self.inv_h
        };
        let dy = if b == 0 {
            T::zero()
        } else {
            real::<T>(b as f64) * xi.powi(a as i32) * eta.powi(b as i32 - 1) * self.inv_h
        };
        Vector2::new(dx, dy)
    }

    /// Vector basis of `[P_k(T)]^2`, component-major: indices `0..dim` are
    /// the x-component functions, `dim..2*dim` the y-component ones.
    pub fn eval_vector(&self, i: usize, p: Point2<T>) -> Vector2<T> {
        let n = self.dim();
        let val = self.eval(i % n, p);
        if i < n {
            Vector2::new(val, T::zero())
        } else {
            Vector2::new(T::zero(), val)
        }
    }

    /// Coefficient matrices of the partial derivatives, mapping `P_k`
    /// coefficients to `P_{k-1}` coefficients (the 1/h_T scale included).
    pub fn derivative_maps(&self) -> (DMatrix<T>, DMatrix<T>) {
        let k = self.degree;
        let n = scalar_dim(k);
        let m = scalar_dim(k - 1);
        let lower = monomial_exponents(k - 1);
        let index_of = |a: u32, b: u32| lower.iter().position(|&e| e == (a, b)).unwrap();
        let mut dx = DMatrix::zeros(m, n);
        let mut dy = DMatrix::zeros(m, n);
        for (j, &(a, b)) in self.exps.iter().enumerate() {
            if a > 0 {
                dx[(index_of(a - 1, b), j)] = real::<T>(a as f64) * self.inv_h;
            }
            if b > 0 {
                dy[(index_of(a, b - 1), j)] = real::<T>(b as f64) * self.inv_h;
            }
        }
        (dx, dy)
    }
}

/// Legendre polynomial `P_j(t)` by the three-term recurrence.
pub fn legendre<T: Real>(j: usize, t: T) -> T {
    match j {
        0 => T::one(),
        1 => t,
        _ => {
            let mut p0 = T::one();
            let mut p1 = t;
            for k in 2..=j {
                let kf = real::<T>(k as f64);
                let p2 = ((real::<T>(2.0) * kf - T::one()) * t * p1 - (kf - T::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            p1
        }
    }
}

/// Trace basis on one edge.
#[derive(Clone, Debug)]
pub enum EdgeBasis<T: Real> {
    /// Rigid-motion traces: `(1,0)`, `(0,1)` and `(t/2) * w` where `w` is
    /// the edge tangent rotated by +90 degrees and `t` the arc-length
    /// parameter on `[-1, 1]`.
    RigidMotion { rot: Vector2<T> },
    /// `[P_m(e)]^2` with mapped Legendre polynomials, component-major.
    Poly { degree: usize },
}

impl<T: Real> EdgeBasis<T> {
    pub fn rigid_motion(frame: &EdgeFrame<T>) -> Self {
        let t = frame.tangent;
        EdgeBasis::RigidMotion {
            rot: Vector2::new(-t.y, t.x),
        }
    }

    pub fn poly(degree: usize) -> Self {
        EdgeBasis::Poly { degree }
    }

    pub fn dim(&self) -> usize {
        match self {
            EdgeBasis::RigidMotion { .. } => 3,
            EdgeBasis::Poly { degree } => 2 * (degree + 1),
        }
    }

    /// Polynomial degree in the edge parameter.
    pub fn param_degree(&self) -> usize {
        match self {
            EdgeBasis::RigidMotion { .. } => 1,
            EdgeBasis::Poly { degree } => *degree,
        }
    }

    /// Evaluates basis function `i` at parameter `t`, in global components.
    pub fn eval(&self, i: usize, t: T) -> Vector2<T> {
        match self {
            EdgeBasis::RigidMotion { rot } => match i {
                0 => Vector2::new(T::one(), T::zero()),
                1 => Vector2::new(T::zero(), T::one()),
                2 => *rot * (t / real(2.0)),
                _ => unreachable!("rigid motion trace basis has dimension 3"),
            },
            EdgeBasis::Poly { degree } => {
                let per = degree + 1;
                let val = legendre(i % per, t);
                if i < per {
                    Vector2::new(val, T::zero())
                } else {
                    Vector2::new(T::zero(), val)
                }
            }
        }
    }
}

/// Mass matrix of a scalar element basis: `M[i][j] = int_T m_i m_j`.
pub fn element_scalar_mass<T: Real>(
    basis: &ElementBasis<T>,
    rule: &ElementRule<T>,
) -> Result<DMatrix<T>> {
    if rule.degree < 2 * basis.degree {
        return Err(WgError::InsufficientQuadrature {
            got: rule.degree,
            need: 2 * basis.degree,
        });
    }
    let n = basis.dim();
    let mut m = DMatrix::zeros(n, n);
    let mut vals = vec![T::zero(); n];
    for (p, &w) in rule.points.iter().zip(&rule.weights) {
        for (i, v) in vals.iter_mut().enumerate() {
            *v = basis.eval(i, *p);
        }
        for i in 0..n {
            for j in i..n {
                m[(i, j)] += vals[i] * vals[j] * w;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    Ok(m)
}

/// Mass matrix of an edge trace basis: `M[i][j] = <psi_i, psi_j>_e`.
pub fn edge_mass<T: Real>(
    basis: &EdgeBasis<T>,
    frame: &EdgeFrame<T>,
    rule: &EdgeRule<T>,
) -> Result<DMatrix<T>> {
    if rule.degree < 2 * basis.param_degree() {
        return Err(WgError::InsufficientQuadrature {
            got: rule.degree,
            need: 2 * basis.param_degree(),
        });
    }
    let n = basis.dim();
    let jac = frame.jacobian();
    let mut m = DMatrix::zeros(n, n);
    for (&t, &w) in rule.points.iter().zip(&rule.weights) {
        for i in 0..n {
            let vi = basis.eval(i, t);
            for j in i..n {
                m[(i, j)] += vi.dot(&basis.eval(j, t)) * w * jac;
            }
        }
    }
    for i in 0..n {
        for j in 0..i {
            m[(i, j)] = m[(j, i)];
        }
    }
    Ok(m)
}

/// The three rigid motions on an element: two translations and the
/// scaled rotation `(-(y - y_T), x - x_T) / h_T`.
#[derive(Clone, Debug)]
pub struct RigidMotions<T: Real> {
    pub centroid: Point2<T>,
    pub inv_h: T,
}

impl<T: Real> RigidMotions<T> {
    pub fn new(geo: &ElementGeometry<T>) -> Self {
        RigidMotions {
            centroid: geo.centroid,
            inv_h: T::one() / geo.diameter,
        }
    }

    pub fn eval(&self, i: usize, p: Point2<T>) -> Vector2<T> {
        match i {
            0 => Vector2::new(T::one(), T::zero()),
            1 => Vector2::new(T::zero(), T::one()),
            2 => Vector2::new(
                -(p.y - self.centroid.y) * self.inv_h,
                (p.x - self.centroid.x) * self.inv_h,
            ),
            _ => unreachable!("rigid motion space has dimension 3"),
        }
    }

    /// Coefficients of the rigid motions in the element's component-major
    /// vector basis of `[P_k(T)]^2`.
    pub fn interior_coefficients(&self, k: usize) -> [Vec<T>; 3] {
        let n = scalar_dim(k);
        let mut c0 = vec![T::zero(); 2 * n];
        let mut c1 = vec![T::zero(); 2 * n];
        let mut c2 = vec![T::zero(); 2 * n];
        // Monomial order starts (0,0), (1,0), (0,1).
        c0[0] = T::one();
        c1[n] = T::one();
        c2[2] = -T::one(); // x-component: -eta
        c2[n + 1] = T::one(); // y-component: +xi
        [c0, c1, c2]
    }
}

/// A bivariate polynomial in global coordinates, used for exact test fields.
#[derive(Clone, Debug)]
pub struct Poly2<T: Real> {
    /// Terms `(a, b, c)` representing `c x^a y^b`.
    pub terms: Vec<(u32, u32, T)>,
}

impl<T: Real> Poly2<T> {
    pub fn zero() -> Self {
        Poly2 { terms: Vec::new() }
    }

    pub fn eval(&self, p: Point2<T>) -> T {
        self.terms.iter().fold(T::zero(), |acc, &(a, b, c)| {
            acc + c * p.x.powi(a as i32) * p.y.powi(b as i32)
        })
    }

    pub fn dx(&self) -> Poly2<T> {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(a, _, _)| a > 0)
                .map(|&(a, b, c)| (a - 1, b, c * real(a as f64)))
                .collect(),
        }
    }

    pub fn dy(&self) -> Poly2<T> {
        Poly2 {
            terms: self
                .terms
                .iter()
                .filter(|&&(_, b, _)| b > 0)
                .map(|&(a, b, c)| (a, b - 1, c * real(b as f64)))
                .collect(),
        }
    }

    /// Dense polynomial of total degree `<= degree` with random coefficients
    /// in `(-1, 1)`.
    pub fn random<R: rand::Rng>(degree: usize, rng: &mut R) -> Self {
        let terms = monomial_exponents(degree)
            .into_iter()
            .map(|(a, b)| (a, b, real::<T>(rng.gen_range(-1.0..1.0))))
            .collect();
        Poly2 { terms }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::{element_rule, gauss_legendre, triangle_rule};
    use std::num::NonZeroU32;

    fn reference_like_mesh() -> Mesh<f64> {
        Mesh::uniform_triangles(NonZeroU32::new(1).unwrap())
    }

    #[test]
    fn monomial_order_is_nested() {
        assert_eq!(
            monomial_exponents(2),
            vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]
        );
        let k2 = monomial_exponents(2);
        let k1 = monomial_exponents(1);
        assert_eq!(&k2[..k1.len()], &k1[..]);
    }

    #[test]
    fn zeroth_basis_function_is_one_at_centroid() {
        let mesh = reference_like_mesh();
        for el in 0..mesh.num_elements() {
            let basis = ElementBasis::new(el, 2, mesh.geometry(el));
            let c = mesh.geometry(el).centroid;
            assert!((basis.eval(0, c) - 1.0).abs() < 1e-15);
            for i in 1..basis.dim() {
                assert!(basis.eval(i, c).abs() < 1.0);
            }
        }
    }

    #[test]
    fn p0_mass_is_element_area() {
        let mesh = reference_like_mesh();
        let rule = triangle_rule(1).unwrap();
        let basis = ElementBasis::new(0, 0, mesh.geometry(0));
        let phys = element_rule(&mesh, 0, &rule);
        let m = element_scalar_mass(&basis, &phys).unwrap();
        assert_eq!(m.nrows(), 1);
        assert!((m[(0, 0)] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn insufficient_quadrature_is_rejected() {
        let mesh = reference_like_mesh();
        let basis = ElementBasis::new(0, 2, mesh.geometry(0));
        let phys = element_rule(&mesh, 0, &triangle_rule(2).unwrap());
        assert!(matches!(
            element_scalar_mass(&basis, &phys),
            Err(WgError::InsufficientQuadrature { got: 2, need: 4 })
        ));
    }

    #[test]
    fn rm_edge_mass_matches_analytic_integrals() {
        // Bottom edge of the reference triangle: length 1, tangent (1,0),
        // w = (0,1). Analytically <1,1> = l, <w t/2, w t/2> = l/12, and all
        // off-diagonal entries vanish by parity.
        let mesh = reference_like_mesh();
        let e = mesh
            .edges()
            .iter()
            .position(|e| e.vertices == [0, 1])
            .unwrap();
        let frame = mesh.edge_frame(e);
        let basis = EdgeBasis::rigid_motion(&frame);
        let rule = gauss_legendre(3).unwrap();
        let m = edge_mass(&basis, &frame, &rule).unwrap();
        let l = frame.length;
        let expected = [[l, 0.0, 0.0], [0.0, l, 0.0], [0.0, 0.0, l / 12.0]];
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (m[(i, j)] - expected[i][j]).abs() < 1e-15,
                    "entry ({i},{j}): {} vs {}",
                    m[(i, j)],
                    expected[i][j]
                );
            }
        }
        assert!(m.clone().cholesky().is_some(), "edge mass is SPD");
    }

    #[test]
    fn legendre_edge_mass_is_diagonal() {
        let mesh = reference_like_mesh();
        let frame = mesh.edge_frame(0);
        let basis = EdgeBasis::poly(1);
        let rule = gauss_legendre(3).unwrap();
        let m = edge_mass(&basis, &frame, &rule).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    assert!(m[(i, j)].abs() < 1e-13, "off-diagonal ({i},{j})");
                }
            }
        }
        let l = frame.length;
        assert!((m[(0, 0)] - l).abs() < 1e-14);
        assert!((m[(1, 1)] - l / 3.0).abs() < 1e-14);
    }

    #[test]
    fn rigid_motions_have_zero_strain() {
        let mesh = reference_like_mesh();
        let rm = RigidMotions::new(mesh.geometry(0));
        // Finite-difference strain at sample points.
        let h = 1e-6;
        for i in 0..3 {
            for &(x, y) in &[(0.3, 0.2), (0.7, 0.6), (0.1, 0.05)] {
                let p = Point2::new(x, y);
                let fxp = rm.eval(i, Point2::new(x + h, y));
                let fxm = rm.eval(i, Point2::new(x - h, y));
                let fyp = rm.eval(i, Point2::new(x, y + h));
                let fym = rm.eval(i, Point2::new(x, y - h));
                let du = [(fxp - fxm) / (2.0 * h), (fyp - fym) / (2.0 * h)];
                let exx = du[0].x;
                let eyy = du[1].y;
                let exy = 0.5 * (du[0].y + du[1].x);
                assert!(exx.abs() < 1e-9 && eyy.abs() < 1e-9 && exy.abs() < 1e-9);
                let _ = p;
            }
            // The rotation has a skew gradient with off-diagonals -/+ 1/h_T.
            if i == 2 {
                let inv_h = rm.inv_h;
                let p = Point2::new(0.4, 0.3);
                let gx = (rm.eval(2, Point2::new(p.x + h, p.y)) - rm.eval(2, Point2::new(p.x - h, p.y))) / (2.0 * h);
                let gy = (rm.eval(2, Point2::new(p.x, p.y + h)) - rm.eval(2, Point2::new(p.x, p.y - h))) / (2.0 * h);
                assert!((gx.y - inv_h).abs() < 1e-9);
                assert!((gy.x + inv_h).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn scaled_monomial_mass_is_well_conditioned() {
        // Elements of the uniform meshes are all similar triangles, so a
        // few representative sizes cover the n <= 64 range.
        for n in [1u32, 7, 64] {
            let mesh: Mesh<f64> = Mesh::uniform_triangles(NonZeroU32::new(n).unwrap());
            for k in 1..=2usize {
                let basis = ElementBasis::new(0, k, mesh.geometry(0));
                let phys = element_rule(&mesh, 0, &triangle_rule(2 * k).unwrap());
                let m = element_scalar_mass(&basis, &phys).unwrap();
                let eig = m.symmetric_eigenvalues();
                let max = eig.iter().cloned().fold(f64::MIN, f64::max);
                let min = eig.iter().cloned().fold(f64::MAX, f64::min);
                assert!(min > 0.0);
                assert!(max / min < 1e6, "cond at n={n}, k={k}: {}", max / min);
            }
        }
    }

    #[test]
    fn derivative_maps_are_exact() {
        let mesh = reference_like_mesh();
        let basis = ElementBasis::new(0, 2, mesh.geometry(0));
        let (dx, _dy) = basis.derivative_maps();
        // d/dx of basis function (2,0) at index 3 is 2 xi / h_T at index (1,0).
        let mut coeffs = vec![0.0; basis.dim()];
        coeffs[3] = 1.0;
        let d: Vec<f64> = (0..scalar_dim(1))
            .map(|i| (0..basis.dim()).map(|j| dx[(i, j)] * coeffs[j]).sum())
            .collect();
        let p = Point2::new(0.4, 0.1);
        let lower = ElementBasis::new(0, 1, mesh.geometry(0));
        let val: f64 = d.iter().enumerate().map(|(i, c)| c * lower.eval(i, p)).sum();
        assert!((val - basis.eval_grad(3, p).x).abs() < 1e-14);
    }

    #[test]
    fn poly2_derivatives() {
        let p = Poly2::<f64> {
            terms: vec![(2, 1, 3.0), (0, 0, 1.0)],
        };
        let at = Point2::new(0.5, 2.0);
        assert!((p.eval(at) - (3.0 * 0.25 * 2.0 + 1.0)).abs() < 1e-15);
        assert!((p.dx().eval(at) - 6.0 * 0.5 * 2.0).abs() < 1e-15);
        assert!((p.dy().eval(at) - 3.0 * 0.25).abs() < 1e-15);
    }
}
