//! Continuous piecewise polynomials of degree `p` on a [`Mesh1D`] with
//! homogeneous Dirichlet conditions.
//!
//! The basis is nodal at the Gauss–Lobatto points of each element. For
//! evaluation a field is converted element by element into Legendre (modal)
//! coefficients, which gives values and derivatives at arbitrary points in
//! `O(p)` operations and stays well conditioned at high degree.

use std::fmt::Write as _;
use std::sync::Arc;

use crate::banded::BandedSym;
use crate::error::{Error, Result};
use crate::mesh::{CellId, Element, Mesh1D};
use crate::scalar::{cst, from_usize, to_f64, Real};
use crate::time_basis::{gauss_lobatto_nodes, legendre_with_derivs, RefQuadrature};

/// Tolerance on `|u0|` at the boundary accepted by the energy projection in
/// double precision; scaled up with the machine epsilon of coarser types.
pub const BOUNDARY_TOLERANCE: f64 = 1e-10;

/// Values and reference derivatives of the nodal basis at a set of points.
#[derive(Clone, Debug)]
pub struct RefTable<T> {
    pub points: Vec<T>,
    /// `phi[q][j] = [φ_j, dφ_j/dξ, d²φ_j/dξ²]` at `points[q]`.
    pub phi: Vec<Vec<[T; 3]>>,
}

/// Conforming finite element space `V_h ⊂ H¹₀` on a mesh.
#[derive(Clone, Debug)]
pub struct FemSpace<T> {
    mesh: Mesh1D<T>,
    p: usize,
    ref_nodes: Vec<T>,
    /// Row-major `(p+1)²` map from nodal to Legendre coefficients.
    to_modal: Vec<T>,
}

impl<T: Real> FemSpace<T> {
    pub fn new(mesh: Mesh1D<T>, p: usize) -> Result<Self> {
        if p == 0 {
            return Err(Error::InvalidDegree(p));
        }
        let ref_nodes = gauss_lobatto_nodes::<T>(p);
        let n = p + 1;
        let mut vand = vec![T::zero(); n * n];
        let mut buf = vec![[T::zero(); 3]; n];
        for (i, &x) in ref_nodes.iter().enumerate() {
            legendre_with_derivs(x, &mut buf);
            for k in 0..n {
                vand[i * n + k] = buf[k][0];
            }
        }
        let to_modal = invert_dense(&vand, n).ok_or(Error::SingularMatrix(0))?;
        Ok(Self { mesh, p, ref_nodes, to_modal })
    }

    pub fn mesh(&self) -> &Mesh1D<T> {
        &self.mesh
    }

    pub fn degree(&self) -> usize {
        self.p
    }

    pub fn n_elements(&self) -> usize {
        self.mesh.len()
    }

    /// Number of global nodes including the two boundary nodes.
    pub fn n_nodes(&self) -> usize {
        self.p * self.n_elements() + 1
    }

    /// Number of unknowns (interior nodes).
    pub fn n_dofs(&self) -> usize {
        self.n_nodes() - 2
    }

    #[inline]
    pub fn global_node(&self, e: usize, j: usize) -> usize {
        e * self.p + j
    }

    /// Unknown index of local node `j` of element `e`, `None` on the boundary.
    #[inline]
    pub fn dof(&self, e: usize, j: usize) -> Option<usize> {
        let g = self.global_node(e, j);
        (g >= 1 && g + 1 < self.n_nodes()).then(|| g - 1)
    }

    pub fn ref_nodes(&self) -> &[T] {
        &self.ref_nodes
    }

    /// Physical coordinates of all global nodes.
    pub fn node_coords(&self) -> Vec<T> {
        let mut xs = Vec::with_capacity(self.n_nodes());
        for (e, el) in self.mesh.elements().enumerate() {
            let start = if e == 0 { 0 } else { 1 };
            xs.extend(self.ref_nodes[start..].iter().map(|&xi| el.to_physical(xi)));
        }
        xs
    }

    /// Basis functions of one element tabulated at reference points.
    pub fn tabulate(&self, points: &[T]) -> RefTable<T> {
        let n = self.p + 1;
        let mut buf = vec![[T::zero(); 3]; n];
        let phi = points
            .iter()
            .map(|&xi| {
                legendre_with_derivs(xi, &mut buf);
                (0..n)
                    .map(|j| {
                        let mut v = [T::zero(); 3];
                        for (k, leg) in buf.iter().enumerate() {
                            let c = self.to_modal[k * n + j];
                            v[0] += c * leg[0];
                            v[1] += c * leg[1];
                            v[2] += c * leg[2];
                        }
                        v
                    })
                    .collect()
            })
            .collect();
        RefTable { points: points.to_vec(), phi }
    }

    /// Nodal values of element `e` (zeros at the boundary nodes).
    pub fn local_nodal(&self, coeffs: &[T], e: usize) -> Vec<T> {
        (0..=self.p).map(|j| self.dof(e, j).map_or(T::zero(), |d| coeffs[d])).collect()
    }

    /// Legendre representation of a field restricted to element `e`.
    pub fn modal(&self, coeffs: &[T], e: usize) -> ModalPoly<T> {
        let nodal = self.local_nodal(coeffs, e);
        let n = self.p + 1;
        let modal = (0..n)
            .map(|k| (0..n).map(|j| self.to_modal[k * n + j] * nodal[j]).sum())
            .collect();
        ModalPoly { coeffs: modal, element: self.mesh.element(e) }
    }

    pub fn eval(&self, coeffs: &[T], x: T) -> Result<T> {
        let e = self.mesh.locate(x)?;
        Ok(self.modal(coeffs, e).eval(x))
    }

    /// Nodal interpolant of `f` (boundary values discarded).
    pub fn interpolate(&self, f: impl Fn(T) -> T) -> Vec<T> {
        let xs = self.node_coords();
        xs[1..xs.len() - 1].iter().map(|&x| f(x)).collect()
    }

    /// Mass and stiffness matrices over all global nodes, boundary included.
    pub fn assemble_full(&self, kappa: T) -> (BandedSym<T>, BandedSym<T>) {
        let n = self.n_nodes();
        let mut mass = BandedSym::zeros(n, self.p);
        let mut stiff = BandedSym::zeros(n, self.p);
        let quad = RefQuadrature::<T>::gauss_legendre(self.p + 2);
        let table = self.tabulate(&quad.points);
        for (e, el) in self.mesh.elements().enumerate() {
            let h = el.h();
            let jm = h * cst(0.5);
            let jk = kappa * cst::<T>(2.0) / h;
            for i in 0..=self.p {
                for j in 0..=i {
                    let mut m = T::zero();
                    let mut k = T::zero();
                    for (q, &w) in quad.weights.iter().enumerate() {
                        let (a, b) = (table.phi[q][i], table.phi[q][j]);
                        m += w * a[0] * b[0];
                        k += w * a[1] * b[1];
                    }
                    let (gi, gj) = (self.global_node(e, i), self.global_node(e, j));
                    mass.add(gi, gj, m * jm);
                    stiff.add(gi, gj, k * jk);
                }
            }
        }
        (mass, stiff)
    }

    /// Mass `M` and stiffness `K_κ` restricted to the interior unknowns.
    pub fn assemble(&self, kappa: T) -> (BandedSym<T>, BandedSym<T>) {
        let (mf, kf) = self.assemble_full(kappa);
        (restrict_interior(&mf), restrict_interior(&kf))
    }

    /// Load vector `(g, φ_i)` with an `n_quad`-point Gauss rule per element.
    pub fn load_vector(&self, g: impl Fn(T) -> T, n_quad: usize) -> Vec<T> {
        let quad = RefQuadrature::<T>::gauss_legendre(n_quad);
        let table = self.tabulate(&quad.points);
        let mut b = vec![T::zero(); self.n_dofs()];
        for (e, el) in self.mesh.elements().enumerate() {
            let jac = el.h() * cst(0.5);
            for (q, (&xi, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
                let gv = g(el.to_physical(xi)) * w * jac;
                for j in 0..=self.p {
                    if let Some(d) = self.dof(e, j) {
                        b[d] += gv * table.phi[q][j][0];
                    }
                }
            }
        }
        b
    }

    /// `(v, φ_i)` for a field living on another mesh of the same frame. The
    /// integral is split over the common refinement so it is exact.
    pub fn load_from_field(&self, v: &SpatialField<T>) -> Result<Vec<T>> {
        let union = Mesh1D::common_refinement(&[&self.mesh, v.space.mesh()])?;
        let quad = RefQuadrature::<T>::gauss_legendre(self.p.max(v.space.p) + 2);
        let mut b = vec![T::zero(); self.n_dofs()];
        let mut buf = Vec::new();
        for cell in union.elements() {
            let e_new = self.mesh.containing(cell.id).ok_or(Error::MeshMismatch)?;
            let e_old = v.space.mesh().containing(cell.id).ok_or(Error::MeshMismatch)?;
            let el_new = self.mesh.element(e_new);
            let old = v.space.modal(&v.coeffs, e_old);
            let xis: Vec<T> = quad.points.iter().map(|&s| el_new.to_reference(cell.to_physical(s))).collect();
            let table = self.tabulate(&xis);
            let jac = cell.h() * cst(0.5);
            for (q, (&s, &w)) in quad.points.iter().zip(&quad.weights).enumerate() {
                let val = old.eval_derivs_with(cell.to_physical(s), &mut buf)[0] * w * jac;
                for j in 0..=self.p {
                    if let Some(d) = self.dof(e_new, j) {
                        b[d] += val * table.phi[q][j][0];
                    }
                }
            }
        }
        Ok(b)
    }
}

fn restrict_interior<T: Real>(full: &BandedSym<T>) -> BandedSym<T> {
    let n = full.n() - 2;
    let bw = full.bandwidth();
    let mut out = BandedSym::zeros(n, bw);
    for i in 0..n {
        for j in i.saturating_sub(bw)..=i {
            out.add(i, j, full.get(i + 1, j + 1));
        }
    }
    out
}

/// Gauss–Jordan inverse of a small dense matrix (row major), partial pivoting.
fn invert_dense<T: Real>(a: &[T], n: usize) -> Option<Vec<T>> {
    let mut m = a.to_vec();
    let mut inv = vec![T::zero(); n * n];
    for i in 0..n {
        inv[i * n + i] = T::one();
    }
    for col in 0..n {
        let piv = (col..n).max_by(|&i, &j| {
            m[i * n + col].abs().partial_cmp(&m[j * n + col].abs()).unwrap()
        })?;
        if m[piv * n + col] == T::zero() {
            return None;
        }
        for k in 0..n {
            m.swap(col * n + k, piv * n + k);
            inv.swap(col * n + k, piv * n + k);
        }
        let d = m[col * n + col];
        for k in 0..n {
            m[col * n + k] /= d;
            inv[col * n + k] /= d;
        }
        for i in 0..n {
            if i != col {
                let f = m[i * n + col];
                if f != T::zero() {
                    for k in 0..n {
                        m[i * n + k] = m[i * n + k] - f * m[col * n + k];
                        inv[i * n + k] = inv[i * n + k] - f * inv[col * n + k];
                    }
                }
            }
        }
    }
    Some(inv)
}

/// A polynomial on one element in Legendre form.
#[derive(Clone, Debug)]
pub struct ModalPoly<T> {
    pub coeffs: Vec<T>,
    pub element: Element<T>,
}

impl<T: Real> ModalPoly<T> {
    pub fn eval(&self, x: T) -> T {
        let mut buf = Vec::new();
        self.eval_derivs_with(x, &mut buf)[0]
    }

    /// Value, first and second physical derivative at `x`.
    pub fn eval_derivs(&self, x: T) -> [T; 3] {
        let mut buf = Vec::new();
        self.eval_derivs_with(x, &mut buf)
    }

    pub fn eval_derivs_with(&self, x: T, buf: &mut Vec<[T; 3]>) -> [T; 3] {
        buf.resize(self.coeffs.len(), [T::zero(); 3]);
        legendre_with_derivs(self.element.to_reference(x), buf);
        let s = cst::<T>(2.0) / self.element.h();
        let mut out = [T::zero(); 3];
        for (c, l) in self.coeffs.iter().zip(buf.iter()) {
            out[0] += *c * l[0];
            out[1] += *c * l[1];
            out[2] += *c * l[2];
        }
        out[1] *= s;
        out[2] *= s * s;
        out
    }
}

/// Member of a [`FemSpace`], stored by its interior nodal values.
#[derive(Clone, Debug)]
pub struct SpatialField<T> {
    pub space: Arc<FemSpace<T>>,
    pub coeffs: Vec<T>,
}

impl<T: Real> SpatialField<T> {
    pub fn new(space: Arc<FemSpace<T>>, coeffs: Vec<T>) -> Self {
        assert_eq!(coeffs.len(), space.n_dofs());
        Self { space, coeffs }
    }

    pub fn zero(space: Arc<FemSpace<T>>) -> Self {
        let n = space.n_dofs();
        Self { space, coeffs: vec![T::zero(); n] }
    }

    pub fn interpolant(space: Arc<FemSpace<T>>, f: impl Fn(T) -> T) -> Self {
        let coeffs = space.interpolate(f);
        Self { space, coeffs }
    }

    pub fn mesh(&self) -> &Mesh1D<T> {
        self.space.mesh()
    }

    pub fn modal(&self, e: usize) -> ModalPoly<T> {
        self.space.modal(&self.coeffs, e)
    }

    /// Local polynomial of the element containing the cell `id`.
    pub fn modal_on(&self, id: CellId) -> Result<ModalPoly<T>> {
        let e = self.space.mesh().containing(id).ok_or(Error::MeshMismatch)?;
        Ok(self.modal(e))
    }

    pub fn eval(&self, x: T) -> Result<T> {
        self.space.eval(&self.coeffs, x)
    }

    pub fn eval_derivs(&self, x: T) -> Result<[T; 3]> {
        let e = self.space.mesh().locate(x)?;
        Ok(self.modal(e).eval_derivs(x))
    }

    /// Sampled sup-norm (see [`sample_points`]).
    pub fn sup_norm(&self) -> T {
        let pts = sample_points::<T>(self.space.p + 3);
        let mut buf = Vec::new();
        let mut best = T::zero();
        for e in 0..self.space.n_elements() {
            let poly = self.modal(e);
            for &xi in &pts {
                let x = poly.element.to_physical(xi);
                best = best.max(poly.eval_derivs_with(x, &mut buf)[0].abs());
            }
        }
        best
    }

    /// `x value` table with `n_per_element` equispaced interior samples per
    /// element plus the element end points.
    pub fn sample_table(&self, n_per_element: usize) -> String {
        let pts = sample_points::<T>(n_per_element);
        let mut out = String::new();
        for e in 0..self.space.n_elements() {
            let poly = self.modal(e);
            let skip = usize::from(e > 0);
            for &xi in &pts[skip..] {
                let x = poly.element.to_physical(xi);
                let _ = writeln!(out, "{} {}", x, poly.eval(x));
            }
        }
        out
    }

    pub fn add_scaled(&self, s: T, other: &Self) -> Self {
        assert!(Arc::ptr_eq(&self.space, &other.space) || self.coeffs.len() == other.coeffs.len());
        let coeffs = self.coeffs.iter().zip(&other.coeffs).map(|(&a, &b)| a + s * b).collect();
        Self { space: self.space.clone(), coeffs }
    }
}

/// Reference sampling points: both end points plus `n_interior` equispaced
/// interior points.
pub fn sample_points<T: Real>(n_interior: usize) -> Vec<T> {
    let n = n_interior + 1;
    (0..=n)
        .map(|i| -T::one() + cst::<T>(2.0) * from_usize::<T>(i) / from_usize::<T>(n))
        .collect()
}

/// Sampled sup-norm of a function over a mesh with `n_interior` interior
/// samples per element.
pub fn sup_norm_fn<T: Real>(f: impl Fn(T) -> T, mesh: &Mesh1D<T>, n_interior: usize) -> T {
    let pts = sample_points::<T>(n_interior);
    mesh.elements()
        .flat_map(|el| pts.iter().map(move |&xi| el.to_physical(xi)).collect::<Vec<_>>())
        .map(|x| f(x).abs())
        .fold(T::zero(), T::max)
}

/// Galerkin solution of `-κ w'' = g`, `w = 0` on the boundary.
pub fn elliptic_solve<T: Real>(
    space: Arc<FemSpace<T>>,
    kappa: T,
    g: impl Fn(T) -> T,
) -> Result<SpatialField<T>> {
    let (_, stiff) = space.assemble(kappa);
    let b = space.load_vector(g, space.degree() + 3);
    let coeffs = stiff.cholesky()?.solve(&b);
    Ok(SpatialField::new(space, coeffs))
}

/// Energy projection `π₁u₀`: `(π₁u₀', v') = (-u₀'', v)` for all `v ∈ V_h`.
pub fn energy_projection<T: Real>(
    space: Arc<FemSpace<T>>,
    u0: impl Fn(T) -> T,
    u0_dd: impl Fn(T) -> T,
) -> Result<SpatialField<T>> {
    let (a, b) = space.mesh().domain();
    let (left, right) = (u0(a), u0(b));
    let tol = cst::<T>(BOUNDARY_TOLERANCE).max(T::epsilon() * cst(1e4));
    if left.abs() > tol || right.abs() > tol {
        return Err(Error::BoundaryData { left: to_f64(left), right: to_f64(right) });
    }
    elliptic_solve(space, T::one(), |x| -u0_dd(x))
}
