//! Weak functions, L2 projections, and the element-local discrete weak
//! operators realized as dense matrices on local degrees of freedom.
//!
//! For a weak function `v = {v0, vb}` on an element `T`, the discrete weak
//! gradient `G v` is the tensor polynomial in `[P_{k-1}(T)]^{2x2}` with
//! `(G v, tau)_T = -(v0, div tau)_T + <vb, tau n>_{dT}` for every tensor
//! basis function `tau`, and the discrete weak divergence `D v` is the
//! scalar polynomial in `P_{k-1}(T)` defined the same way against scalar
//! test functions. The weak strain is the symmetric part of `G`, and the
//! stabilizer `S` penalizes the mismatch `Q_b v0 - vb` on element
//! boundaries, scaled by `1/h_T`.

use nalgebra::{Cholesky, DMatrix, DVector, Dyn, Matrix2, Point2, Vector2};

use crate::basis::{scalar_dim, EdgeBasis, ElementBasis};
use crate::error::{Result, WgError};
use crate::mesh::{EdgeFrame, Mesh};
use crate::quad::{element_rule, gauss_legendre, triangle_rule, EdgeRule};
use crate::real::{real, Real};

/// Which trace space the scheme uses on edges.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Variant {
    /// Traces of rigid motions (3 functions per edge); lowest order only.
    RigidMotion,
    /// Full vector polynomials `[P_m(e)]^2` with `m = max(k-1, 1)`.
    Poly,
}

impl std::fmt::Display for Variant {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Variant::RigidMotion => write!(f, "rm"),
            Variant::Poly => write!(f, "p1"),
        }
    }
}

/// Scheme descriptor: polynomial order `k` and edge variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Scheme {
    pub k: usize,
    pub variant: Variant,
}

impl Scheme {
    pub fn new(k: usize, variant: Variant) -> Result<Self> {
        if !(1..=2).contains(&k) {
            return Err(WgError::InvalidParameter(format!(
                "polynomial order k = {k} not supported (k must be 1 or 2)"
            )));
        }
        if variant == Variant::RigidMotion && k != 1 {
            return Err(WgError::InvalidParameter(
                "the rigid-motion trace variant requires k = 1".into(),
            ));
        }
        Ok(Scheme { k, variant })
    }

    /// Interior block length: `2 dim P_k(T)`.
    pub fn interior_dim(&self) -> usize {
        2 * scalar_dim(self.k)
    }

    /// Edge polynomial degree for the P variant.
    pub fn edge_degree(&self) -> usize {
        self.k.saturating_sub(1).max(1)
    }

    /// Trace block length per edge.
    pub fn edge_dim(&self) -> usize {
        match self.variant {
            Variant::RigidMotion => 3,
            Variant::Poly => 2 * (self.edge_degree() + 1),
        }
    }
}

/// Global degree-of-freedom layout: all interior blocks first
/// (component-major within each element), then edge blocks in global edge
/// order.
#[derive(Clone, Copy, Debug)]
pub struct DofMap {
    pub n_elements: usize,
    pub n_edges: usize,
    pub interior_dim: usize,
    pub edge_dim: usize,
}

impl DofMap {
    pub fn new<T: Real>(mesh: &Mesh<T>, scheme: Scheme) -> Self {
        DofMap {
            n_elements: mesh.num_elements(),
            n_edges: mesh.num_edges(),
            interior_dim: scheme.interior_dim(),
            edge_dim: scheme.edge_dim(),
        }
    }

    pub fn total(&self) -> usize {
        self.n_elements * self.interior_dim + self.n_edges * self.edge_dim
    }

    pub fn interior_offset(&self, el: usize) -> usize {
        el * self.interior_dim
    }

    pub fn edge_offset(&self, e: usize) -> usize {
        self.n_elements * self.interior_dim + e * self.edge_dim
    }

    /// Global indices of the local DOFs of an element: interior block, then
    /// the blocks of its edges in CCW traversal order.
    pub fn local_to_global<T: Real>(&self, mesh: &Mesh<T>, el: usize) -> Vec<usize> {
        let mut map = Vec::with_capacity(self.interior_dim + 4 * self.edge_dim);
        let base = self.interior_offset(el);
        map.extend(base..base + self.interior_dim);
        for &e in mesh.element_edge_ids(el) {
            let off = self.edge_offset(e);
            map.extend(off..off + self.edge_dim);
        }
        map
    }
}

/// A member of the weak finite element space: interior coefficients per
/// element plus single-valued trace coefficients per edge, stored flat in
/// the [`DofMap`] layout.
#[derive(Clone, Debug)]
pub struct WeakFunction<T: Real> {
    pub scheme: Scheme,
    pub dofs: DofMap,
    pub values: Vec<T>,
}

impl<T: Real> WeakFunction<T> {
    pub fn zero(scheme: Scheme, dofs: DofMap) -> Self {
        WeakFunction {
            scheme,
            dofs,
            values: vec![T::zero(); dofs.total()],
        }
    }

    pub fn interior_block(&self, el: usize) -> &[T] {
        let o = self.dofs.interior_offset(el);
        &self.values[o..o + self.dofs.interior_dim]
    }

    pub fn edge_block(&self, e: usize) -> &[T] {
        let o = self.dofs.edge_offset(e);
        &self.values[o..o + self.dofs.edge_dim]
    }

    pub fn interior_block_mut(&mut self, el: usize) -> &mut [T] {
        let o = self.dofs.interior_offset(el);
        &mut self.values[o..o + self.dofs.interior_dim]
    }

    pub fn edge_block_mut(&mut self, e: usize) -> &mut [T] {
        let o = self.dofs.edge_offset(e);
        &mut self.values[o..o + self.dofs.edge_dim]
    }

    /// Gathers the local DOF vector of an element.
    pub fn local_dofs(&self, mesh: &Mesh<T>, el: usize) -> DVector<T> {
        let map = self.dofs.local_to_global(mesh, el);
        DVector::from_iterator(map.len(), map.iter().map(|&g| self.values[g]))
    }
}

/// Elementwise pressure field with `P_{k-1}(T)` coefficients per element in
/// the element's scaled monomial basis.
#[derive(Clone, Debug)]
pub struct PressureField<T: Real> {
    pub k: usize,
    pub per_element: usize,
    pub values: Vec<T>,
}

impl<T: Real> PressureField<T> {
    pub fn zero(k: usize, n_elements: usize) -> Self {
        let per = scalar_dim(k - 1);
        PressureField {
            k,
            per_element: per,
            values: vec![T::zero(); per * n_elements],
        }
    }

    pub fn block(&self, el: usize) -> &[T] {
        &self.values[el * self.per_element..(el + 1) * self.per_element]
    }

    pub fn block_mut(&mut self, el: usize) -> &mut [T] {
        let per = self.per_element;
        &mut self.values[el * per..(el + 1) * per]
    }
}

/// Per-edge cached data: frame, trace basis, mass matrix and its factor.
pub struct EdgeOps<T: Real> {
    pub frame: EdgeFrame<T>,
    pub basis: EdgeBasis<T>,
    pub mass: DMatrix<T>,
    pub mass_chol: Cholesky<T, Dyn>,
}

/// Per-element dense matrices realizing the weak operators on local DOFs.
pub struct ElementOps<T: Real> {
    pub basis: ElementBasis<T>,
    /// Scalar mass of `P_k(T)`; the leading `dim P_{k-1}` block is the
    /// `P_{k-1}` mass thanks to the nested monomial ordering.
    pub mass: DMatrix<T>,
    pub mass_chol: Cholesky<T, Dyn>,
    pub mass_km1_chol: Cholesky<T, Dyn>,
    /// Weak gradient: local DOFs -> tensor coefficients (4M x L).
    pub g: DMatrix<T>,
    /// Weak divergence: local DOFs -> scalar coefficients (M x L).
    pub d: DMatrix<T>,
    /// Weak strain: symmetrized weak gradient (4M x L).
    pub e: DMatrix<T>,
    /// Stabilizer quadratic form on local DOFs (L x L), `1/h_T` included.
    pub s: DMatrix<T>,
    /// Per local edge: trace projection of the interior vector basis,
    /// `Q_b(v0|_e)` as edge coefficients (Ne x 2N).
    pub qb_interior: Vec<DMatrix<T>>,
    pub local_dim: usize,
}

/// All per-mesh operator data for one scheme.
pub struct Operators<T: Real> {
    pub scheme: Scheme,
    pub dofs: DofMap,
    pub edges: Vec<EdgeOps<T>>,
    pub elements: Vec<ElementOps<T>>,
    /// Standard edge rule (`k + 2` Gauss points).
    pub edge_rule: EdgeRule<T>,
    /// Elevated edge rule for non-polynomial data (`k + 4` points).
    pub edge_rule_hi: EdgeRule<T>,
}

/// Tensor slot order for `[P_{k-1}(T)]^{2x2}` coefficients: row-major
/// `(0,0), (0,1), (1,0), (1,1)`, each slot holding `dim P_{k-1}` monomials.
pub const TENSOR_SLOTS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

impl<T: Real> Operators<T> {
    /// Builds bases, mass matrices and the weak operator matrices for every
    /// element of the mesh. Construction is element-independent.
    pub fn build(mesh: &Mesh<T>, scheme: Scheme) -> Result<Self> {
        let k = scheme.k;
        let n = scalar_dim(k);
        let m = scalar_dim(k - 1);
        let dofs = DofMap::new(mesh, scheme);
        let edge_rule = gauss_legendre(k + 2)?;
        let edge_rule_hi = gauss_legendre(k + 4)?;
        let tri_rule = triangle_rule(2 * k + 2)?;

        let mut edges = Vec::with_capacity(mesh.num_edges());
        for e in 0..mesh.num_edges() {
            let frame = mesh.edge_frame(e);
            let basis = match scheme.variant {
                Variant::RigidMotion => EdgeBasis::rigid_motion(&frame),
                Variant::Poly => EdgeBasis::poly(scheme.edge_degree()),
            };
            let mass = crate::basis::edge_mass(&basis, &frame, &edge_rule)?;
            let mass_chol = mass.clone().cholesky().ok_or_else(|| WgError::SingularMass {
                context: format!("edge {e} trace mass"),
            })?;
            edges.push(EdgeOps {
                frame,
                basis,
                mass,
                mass_chol,
            });
        }

        let mut elements = Vec::with_capacity(mesh.num_elements());
        for el in 0..mesh.num_elements() {
            let geo = mesh.geometry(el);
            let basis = ElementBasis::new(el, k, geo);
            let rule = element_rule(mesh, el, &tri_rule);
            let mass = crate::basis::element_scalar_mass(&basis, &rule)?;
            let mass_chol = mass.clone().cholesky().ok_or_else(|| WgError::SingularMass {
                context: format!("element {el} scalar mass"),
            })?;
            let mass_km1 = mass.view((0, 0), (m, m)).into_owned();
            let mass_km1_chol = mass_km1.cholesky().ok_or_else(|| WgError::SingularMass {
                context: format!("element {el} P_(k-1) mass"),
            })?;

            // Interior moment matrices: I_x[a][b] = int_T (d_x m_a) m_b and
            // the y analogue, for a in P_{k-1} rows and b in P_k columns.
            let mut ix = DMatrix::<T>::zeros(m, n);
            let mut iy = DMatrix::<T>::zeros(m, n);
            for (p, &w) in rule.points.iter().zip(&rule.weights) {
                let vals: Vec<T> = (0..n).map(|b| basis.eval(b, *p)).collect();
                for a in 0..m {
                    let grad = basis.eval_grad(a, *p);
                    for b in 0..n {
                        ix[(a, b)] += grad.x * vals[b] * w;
                        iy[(a, b)] += grad.y * vals[b] * w;
                    }
                }
            }

            // Edge moments: per local edge, E_c[i_e][b] = <psi_{i_e} . e_c, m_b>_e.
            let local_edges = mesh.element_edge_ids(el);
            let ne = scheme.edge_dim();
            let mut edge_moments: Vec<[DMatrix<T>; 2]> = Vec::with_capacity(local_edges.len());
            for &e in local_edges {
                let eops = &edges[e];
                let mut mx = DMatrix::<T>::zeros(ne, n);
                let mut my = DMatrix::<T>::zeros(ne, n);
                let jac = eops.frame.jacobian();
                for (&t, &w) in edge_rule.points.iter().zip(&edge_rule.weights) {
                    let x = eops.frame.point(t);
                    let mvals: Vec<T> = (0..n).map(|b| basis.eval(b, x)).collect();
                    for ie in 0..ne {
                        let psi = eops.basis.eval(ie, t);
                        for b in 0..n {
                            mx[(ie, b)] += psi.x * mvals[b] * w * jac;
                            my[(ie, b)] += psi.y * mvals[b] * w * jac;
                        }
                    }
                }
                edge_moments.push([mx, my]);
            }

            let local_dim = 2 * n + local_edges.len() * ne;
            let ecol = |le: usize, ie: usize| 2 * n + le * ne + ie;

            // Weak gradient right-hand side (4M x L) and solve.
            let mut g_rhs = DMatrix::<T>::zeros(4 * m, local_dim);
            for (slot, &(r, c)) in TENSOR_SLOTS.iter().enumerate() {
                for a in 0..m {
                    let row = slot * m + a;
                    // Interior columns: -(v0, div tau)_T with div tau = e_r d_c m_a.
                    let dic = if c == 0 { &ix } else { &iy };
                    for b in 0..n {
                        g_rhs[(row, r * n + b)] = -dic[(a, b)];
                    }
                    // Edge columns: <vb, tau n>_e = n_c <psi_r, m_a>_e.
                    for (le, moments) in edge_moments.iter().enumerate() {
                        let nrm = mesh.outward_normal(el, le);
                        let nc = if c == 0 { nrm.x } else { nrm.y };
                        for ie in 0..ne {
                            g_rhs[(row, ecol(le, ie))] += nc * moments[r][(ie, a)];
                        }
                    }
                }
            }
            let mut g = DMatrix::<T>::zeros(4 * m, local_dim);
            for slot in 0..4 {
                let block = g_rhs.view((slot * m, 0), (m, local_dim)).into_owned();
                let solved = mass_km1_chol.solve(&block);
                g.view_mut((slot * m, 0), (m, local_dim)).copy_from(&solved);
            }

            // Weak divergence right-hand side (M x L) and solve.
            let mut d_rhs = DMatrix::<T>::zeros(m, local_dim);
            for a in 0..m {
                for b in 0..n {
                    d_rhs[(a, b)] = -ix[(a, b)];
                    d_rhs[(a, n + b)] = -iy[(a, b)];
                }
                for (le, moments) in edge_moments.iter().enumerate() {
                    let nrm = mesh.outward_normal(el, le);
                    for ie in 0..ne {
                        d_rhs[(a, ecol(le, ie))] +=
                            nrm.x * moments[0][(ie, a)] + nrm.y * moments[1][(ie, a)];
                    }
                }
            }
            let d = mass_km1_chol.solve(&d_rhs);

            // Weak strain: symmetrize the off-diagonal slots.
            let mut e_mat = g.clone();
            let half = real::<T>(0.5);
            for a in 0..m {
                for col in 0..local_dim {
                    let g01 = g[(m + a, col)];
                    let g10 = g[(2 * m + a, col)];
                    let sym = half * (g01 + g10);
                    e_mat[(m + a, col)] = sym;
                    e_mat[(2 * m + a, col)] = sym;
                }
            }

            // Trace projections of the interior basis and the stabilizer.
            let mut qb_interior = Vec::with_capacity(local_edges.len());
            let mut s = DMatrix::<T>::zeros(local_dim, local_dim);
            let inv_h = T::one() / geo.diameter;
            for (le, &e) in local_edges.iter().enumerate() {
                let eops = &edges[e];
                let mut nmat = DMatrix::<T>::zeros(ne, 2 * n);
                for ie in 0..ne {
                    for b in 0..n {
                        nmat[(ie, b)] = edge_moments[le][0][(ie, b)];
                        nmat[(ie, n + b)] = edge_moments[le][1][(ie, b)];
                    }
                }
                let b_le = eops.mass_chol.solve(&nmat);

                // J maps local DOFs to edge coefficients of Q_b v0 - vb.
                let mut j = DMatrix::<T>::zeros(ne, local_dim);
                j.view_mut((0, 0), (ne, 2 * n)).copy_from(&b_le);
                for ie in 0..ne {
                    j[(ie, ecol(le, ie))] = -T::one();
                }
                s += (j.transpose() * &eops.mass * &j) * inv_h;
                qb_interior.push(b_le);
            }

            elements.push(ElementOps {
                basis,
                mass,
                mass_chol,
                mass_km1_chol,
                g,
                d,
                e: e_mat,
                s,
                qb_interior,
                local_dim,
            });
        }

        Ok(Operators {
            scheme,
            dofs,
            edges,
            elements,
            edge_rule,
            edge_rule_hi,
        })
    }

    pub fn scalar_dim_k(&self) -> usize {
        scalar_dim(self.scheme.k)
    }

    pub fn scalar_dim_km1(&self) -> usize {
        scalar_dim(self.scheme.k - 1)
    }

    /// L2 projection of a vector field onto `[P_k(T)]^2` on one element
    /// (the interior part `Q_0`), using the elevated element rule.
    pub fn project_interior<F>(&self, mesh: &Mesh<T>, el: usize, f: F) -> Result<DVector<T>>
    where
        F: Fn(Point2<T>) -> Vector2<T>,
    {
        let n = self.scalar_dim_k();
        let rule = element_rule(mesh, el, &triangle_rule(2 * self.scheme.k + 4)?);
        let ops = &self.elements[el];
        let mut rhs = DMatrix::<T>::zeros(n, 2);
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let fv = f(*p);
            for b in 0..n {
                let mb = ops.basis.eval(b, *p);
                rhs[(b, 0)] += fv.x * mb * w;
                rhs[(b, 1)] += fv.y * mb * w;
            }
        }
        let sol = ops.mass_chol.solve(&rhs);
        let mut out = DVector::zeros(2 * n);
        for b in 0..n {
            out[b] = sol[(b, 0)];
            out[n + b] = sol[(b, 1)];
        }
        Ok(out)
    }

    /// L2 projection `Q_b` of a vector field onto the trace space of one
    /// edge, using the elevated edge rule.
    pub fn project_edge<F>(&self, e: usize, f: F) -> DVector<T>
    where
        F: Fn(Point2<T>) -> Vector2<T>,
    {
        let eops = &self.edges[e];
        let ne = eops.basis.dim();
        let jac = eops.frame.jacobian();
        let mut rhs = DVector::<T>::zeros(ne);
        for (&t, &w) in self.edge_rule_hi.points.iter().zip(&self.edge_rule_hi.weights) {
            let x = eops.frame.point(t);
            let fv = f(x);
            for ie in 0..ne {
                rhs[ie] += fv.dot(&eops.basis.eval(ie, t)) * w * jac;
            }
        }
        eops.mass_chol.solve(&rhs)
    }

    /// Full projection `Q_h u = {Q_0 u, Q_b u}` onto the weak space.
    pub fn project_weak<F>(&self, mesh: &Mesh<T>, f: F) -> Result<WeakFunction<T>>
    where
        F: Fn(Point2<T>) -> Vector2<T>,
    {
        let mut wf = WeakFunction::zero(self.scheme, self.dofs);
        for el in 0..mesh.num_elements() {
            let block = self.project_interior(mesh, el, &f)?;
            wf.interior_block_mut(el).copy_from_slice(block.as_slice());
        }
        for e in 0..mesh.num_edges() {
            let block = self.project_edge(e, &f);
            wf.edge_block_mut(e).copy_from_slice(block.as_slice());
        }
        Ok(wf)
    }

    /// Scalar L2 projection onto `P_{k-1}(T)` elementwise.
    pub fn project_pressure<F>(&self, mesh: &Mesh<T>, f: F) -> Result<PressureField<T>>
    where
        F: Fn(Point2<T>) -> T,
    {
        let m = self.scalar_dim_km1();
        let mut out = PressureField::zero(self.scheme.k, mesh.num_elements());
        let tri = triangle_rule(2 * self.scheme.k + 4)?;
        for el in 0..mesh.num_elements() {
            let rule = element_rule(mesh, el, &tri);
            let ops = &self.elements[el];
            let mut rhs = DVector::<T>::zeros(m);
            for (p, &w) in rule.points.iter().zip(&rule.weights) {
                let fv = f(*p);
                for a in 0..m {
                    rhs[a] += fv * ops.basis.eval(a, *p) * w;
                }
            }
            let sol = ops.mass_km1_chol.solve(&rhs);
            out.block_mut(el).copy_from_slice(sol.as_slice());
        }
        Ok(out)
    }

    /// Tensor L2 projection onto `[P_{k-1}(T)]^{2x2}` on one element, in
    /// the slot-major coefficient layout.
    pub fn project_tensor<F>(&self, mesh: &Mesh<T>, el: usize, f: F) -> Result<DVector<T>>
    where
        F: Fn(Point2<T>) -> Matrix2<T>,
    {
        let m = self.scalar_dim_km1();
        let rule = element_rule(mesh, el, &triangle_rule(2 * self.scheme.k + 4)?);
        let ops = &self.elements[el];
        let mut rhs = DMatrix::<T>::zeros(m, 4);
        for (p, &w) in rule.points.iter().zip(&rule.weights) {
            let fv = f(*p);
            for a in 0..m {
                let ma = ops.basis.eval(a, *p);
                for (slot, &(r, c)) in TENSOR_SLOTS.iter().enumerate() {
                    rhs[(a, slot)] += fv[(r, c)] * ma * w;
                }
            }
        }
        let sol = ops.mass_km1_chol.solve(&rhs);
        let mut out = DVector::zeros(4 * m);
        for slot in 0..4 {
            for a in 0..m {
                out[slot * m + a] = sol[(a, slot)];
            }
        }
        Ok(out)
    }

    /// Embeds a rigid-motion-variant weak function into the P variant on
    /// the same mesh: `P_RM(e)` is a subspace of `[P_1(e)]^2`.
    pub fn embed_rigid_motion(
        &self,
        target: &Operators<T>,
        wf: &WeakFunction<T>,
    ) -> WeakFunction<T> {
        assert_eq!(self.scheme.variant, Variant::RigidMotion);
        assert_eq!(target.scheme.variant, Variant::Poly);
        let mut out = WeakFunction::zero(target.scheme, target.dofs);
        out.values[..self.dofs.n_elements * self.dofs.interior_dim]
            .copy_from_slice(&wf.values[..self.dofs.n_elements * self.dofs.interior_dim]);
        let per = target.scheme.edge_degree() + 1;
        for (e, eops) in self.edges.iter().enumerate() {
            let EdgeBasis::RigidMotion { rot } = eops.basis else {
                unreachable!()
            };
            let rm = wf.edge_block(e);
            let block = out.edge_block_mut(e);
            let half = real::<T>(0.5);
            // (1,0) and (0,1) map to the constant Legendre mode; the scaled
            // rotation (t/2) w maps to the linear mode in each component.
            block[0] = rm[0];
            block[per] = rm[1];
            block[1] = rm[2] * rot.x * half;
            block[per + 1] = rm[2] * rot.y * half;
        }
        out
    }
}

/// Edge quadrature helper re-exported for modules integrating against
/// exact solutions on edges.
pub fn elevated_edge_rule<T: Real>(k: usize) -> EdgeRule<T> {
    gauss_legendre(k + 4).expect("edge rule in supported range")
}
