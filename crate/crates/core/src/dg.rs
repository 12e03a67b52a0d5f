//! One time slab of the dG(r)-cG(p) scheme, solved by Picard iteration.
//!
//! On `I_m × V_h` the solution is `U(t) = Σ_j L̃_j(t) U_j` with `L̃_j` the
//! orthonormal Legendre basis of the slab. Testing with `L̃_i φ_a` gives
//!
//! ```text
//! Σ_j C_ij M U_j + K U_i = F_i(U) + L̃_i(t_{m-1}) (U_{m-1}^-, φ)
//! ```
//!
//! with `C_ij = ∫ L̃_j' L̃_i + L̃_j(t_{m-1}) L̃_i(t_{m-1})`. Unknowns are
//! interleaved (`dof·(r+1) + j`) so the coupled system is banded and one LU
//! factorisation serves every Picard iteration.

use std::sync::Arc;

use crate::banded::{Banded, BandedLu};
use crate::error::Result;
use crate::fem::{FemSpace, ModalPoly, RefTable, SpatialField};
use crate::mesh::CellId;
use crate::problems::ProblemDef;
use crate::scalar::{cst, Real};
use crate::time_basis::{orthonormal_basis, time_quadrature_points, IntervalMap, RefQuadrature, SlabTimeTable};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardOptions<T> {
    /// Relative tolerance on the sup-norm of coefficient increments.
    pub tol: T,
    pub max_iters: usize,
}

impl<T: Real> Default for PicardOptions<T> {
    fn default() -> Self {
        Self { tol: cst(1e-11), max_iters: 50 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PicardReport<T> {
    pub iterations: usize,
    pub final_increment: T,
    pub converged: bool,
}

/// Number of Gauss points per element for loads involving `f(U)`.
pub fn spatial_quadrature_points(p: usize, f_degree: usize) -> usize {
    (p + 3).max(((f_degree + 1) * p).div_ceil(2) + 1)
}

/// Space-time solution on one slab.
#[derive(Clone, Debug)]
pub struct SlabSolution<T> {
    pub space: Arc<FemSpace<T>>,
    pub table: SlabTimeTable<T>,
    /// `modes[j]` holds the interior nodal values of the coefficient of `L̃_j`.
    pub modes: Vec<Vec<T>>,
    /// `U(t_{m-1}^-)`, on the previous mesh.
    pub prev: SpatialField<T>,
    pub report: PicardReport<T>,
}

/// Local polynomials of a slab solution on one cell of a mesh refining the
/// slab's mesh and the previous mesh.
#[derive(Clone, Debug)]
pub struct SlabLocal<T> {
    pub modes: Vec<ModalPoly<T>>,
    pub prev: ModalPoly<T>,
}

impl<T: Real> SlabLocal<T> {
    /// Value and x-derivatives of every mode into `out`; returns those of
    /// the previous trace.
    pub fn at(&self, x: T, buf: &mut Vec<[T; 3]>, out: &mut Vec<[T; 3]>) -> [T; 3] {
        out.clear();
        out.extend(self.modes.iter().map(|m| m.eval_derivs_with(x, buf)));
        self.prev.eval_derivs_with(x, buf)
    }
}

impl<T: Real> SlabSolution<T> {
    pub fn r(&self) -> usize {
        self.table.r
    }

    pub fn map(&self) -> &IntervalMap<T> {
        &self.table.map
    }

    pub fn mode_field(&self, j: usize) -> SpatialField<T> {
        SpatialField::new(self.space.clone(), self.modes[j].clone())
    }

    /// `U(t)` as a finite element field, `t` in the closed slab.
    pub fn at_time(&self, t: T) -> SpatialField<T> {
        let basis = orthonormal_basis(self.r(), self.map(), t);
        self.combine(basis.iter().map(|b| b[0]))
    }

    fn combine(&self, weights: impl Iterator<Item = T>) -> SpatialField<T> {
        let mut c = vec![T::zero(); self.space.n_dofs()];
        for (w, mode) in weights.zip(&self.modes) {
            for (ci, &m) in c.iter_mut().zip(mode) {
                *ci += w * m;
            }
        }
        SpatialField::new(self.space.clone(), c)
    }

    /// `U(t_m^-)`.
    pub fn trace_minus(&self) -> SpatialField<T> {
        self.combine(self.table.basis_end.iter().map(|b| b[0]))
    }

    /// `U(t_{m-1}^+)`.
    pub fn trace_plus(&self) -> SpatialField<T> {
        self.combine(self.table.basis_start.iter().map(|b| b[0]))
    }

    pub fn eval(&self, x: T, t: T) -> Result<T> {
        self.at_time(t).eval(x)
    }

    pub fn local(&self, id: CellId) -> Result<SlabLocal<T>> {
        let e = self.space.mesh().containing(id).ok_or(crate::Error::MeshMismatch)?;
        Ok(SlabLocal {
            modes: self.modes.iter().map(|m| self.space.modal(m, e)).collect(),
            prev: self.prev.modal_on(id)?,
        })
    }
}

/// Assembled slab operator and the quadrature used for `f(U)` loads.
struct SlabSystem<T> {
    space: Arc<FemSpace<T>>,
    table: SlabTimeTable<T>,
    matrix: Banded<T>,
    xq: RefQuadrature<T>,
    xtab: RefTable<T>,
    prev_load: Vec<T>,
}

impl<T: Real> SlabSystem<T> {
    fn new(
        problem: &ProblemDef<T>,
        prev: &SpatialField<T>,
        space: Arc<FemSpace<T>>,
        table: SlabTimeTable<T>,
    ) -> Result<Self> {
        let r = table.r;
        let n = r + 1;
        let p = space.degree();
        let (mass, stiff) = space.assemble(problem.kappa);
        let c = temporal_matrix(&table);
        let nd = space.n_dofs();
        let mut matrix = Banded::zeros(nd * n, p * n + r);
        for a in 0..nd {
            for b in a.saturating_sub(p)..(a + p + 1).min(nd) {
                let (m, k) = (mass.get(a, b), stiff.get(a, b));
                for i in 0..n {
                    for j in 0..n {
                        let mut v = c[i][j] * m;
                        if i == j {
                            v += k;
                        }
                        if v != T::zero() {
                            matrix.add(a * n + i, b * n + j, v);
                        }
                    }
                }
            }
        }
        let xq = RefQuadrature::gauss_legendre(spatial_quadrature_points(p, problem.f_degree));
        let xtab = space.tabulate(&xq.points);
        let prev_load = space.load_from_field(prev)?;
        Ok(Self { space, table, matrix, xq, xtab, prev_load })
    }

    /// `F_i(U) + L̃_i(t_{m-1}) b_prev`, interleaved. `u_at(e, s, x, q)` gives
    /// the iterate at spatial point `s` of element `e` and time point `q`.
    fn rhs(&self, problem: &ProblemDef<T>, mut u_at: impl FnMut(usize, usize, T, usize) -> T) -> Vec<T> {
        let n = self.table.r + 1;
        let p = self.space.degree();
        let mut rhs = vec![T::zero(); self.space.n_dofs() * n];
        let mut proj = vec![T::zero(); n];
        for (e, el) in self.space.mesh().elements().enumerate() {
            let jac = el.h() * cst(0.5);
            for (s, (&xi, &ws)) in self.xq.points.iter().zip(&self.xq.weights).enumerate() {
                let x = el.to_physical(xi);
                proj.iter_mut().for_each(|v| *v = T::zero());
                for (q, (&t, &wt)) in self.table.times.iter().zip(&self.table.weights).enumerate() {
                    let fv = (problem.f)(x, t, u_at(e, s, x, q)) * wt;
                    for (i, pi) in proj.iter_mut().enumerate() {
                        *pi += fv * self.table.basis[q][i][0];
                    }
                }
                for a in 0..=p {
                    if let Some(d) = self.space.dof(e, a) {
                        let phi = self.xtab.phi[s][a][0] * ws * jac;
                        for i in 0..n {
                            rhs[d * n + i] += phi * proj[i];
                        }
                    }
                }
            }
        }
        for (d, &b) in self.prev_load.iter().enumerate() {
            for i in 0..n {
                rhs[d * n + i] += self.table.basis_start[i][0] * b;
            }
        }
        rhs
    }

    /// Right-hand side with `f` evaluated at the interleaved iterate.
    fn rhs_at(&self, problem: &ProblemDef<T>, coeffs: &[T]) -> Vec<T> {
        let n = self.table.r + 1;
        let p = self.space.degree();
        let ns = self.xq.len();
        let ne = self.space.n_elements();
        // Iterate values at every (element, spatial point, time point).
        let mut vals = vec![T::zero(); ne * ns * self.table.len()];
        let mut modes = vec![T::zero(); n];
        for e in 0..ne {
            for s in 0..ns {
                modes.iter_mut().for_each(|v| *v = T::zero());
                for a in 0..=p {
                    if let Some(d) = self.space.dof(e, a) {
                        let phi = self.xtab.phi[s][a][0];
                        for j in 0..n {
                            modes[j] += phi * coeffs[d * n + j];
                        }
                    }
                }
                for q in 0..self.table.len() {
                    let base = &self.table.basis[q];
                    vals[(e * ns + s) * self.table.len() + q] = (0..n).map(|j| modes[j] * base[j][0]).sum();
                }
            }
        }
        let nt = self.table.len();
        self.rhs(problem, |e, s, _, q| vals[(e * ns + s) * nt + q])
    }
}

/// `C_ij = ∫ L̃_j' L̃_i + L̃_j(t_start) L̃_i(t_start)`.
fn temporal_matrix<T: Real>(table: &SlabTimeTable<T>) -> Vec<Vec<T>> {
    let n = table.r + 1;
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    let mut v = table.basis_start[j][0] * table.basis_start[i][0];
                    for (q, &w) in table.weights.iter().enumerate() {
                        v += w * table.basis[q][j][1] * table.basis[q][i][0];
                    }
                    v
                })
                .collect()
        })
        .collect()
}

/// Time table sized for the problem's nonlinearity.
pub fn slab_table<T: Real>(problem: &ProblemDef<T>, map: IntervalMap<T>, r: usize) -> SlabTimeTable<T> {
    SlabTimeTable::new(map, r, time_quadrature_points(r, problem.f_degree))
}

/// Solves one slab. Picard non-convergence is reported, not raised.
pub fn solve_slab<T: Real>(
    problem: &ProblemDef<T>,
    prev: &SpatialField<T>,
    space: Arc<FemSpace<T>>,
    map: IntervalMap<T>,
    r: usize,
    opts: PicardOptions<T>,
) -> Result<SlabSolution<T>> {
    let table = slab_table(problem, map, r);
    let sys = SlabSystem::new(problem, prev, space.clone(), table)?;
    let lu: BandedLu<T> = sys.matrix.lu()?;
    let n = r + 1;

    // Initial iterate: f frozen at the previous trace, constant in time.
    let xs: Vec<Vec<T>> = space
        .mesh()
        .elements()
        .map(|el| sys.xq.points.iter().map(|&xi| el.to_physical(xi)).collect())
        .collect();
    let prev_vals: Vec<Vec<T>> = xs
        .iter()
        .map(|row| row.iter().map(|&x| prev.eval(x)).collect::<Result<Vec<_>>>())
        .collect::<Result<_>>()?;
    let rhs0 = sys.rhs(problem, |e, s, _, _| prev_vals[e][s]);
    let mut coeffs = lu.solve(&rhs0);

    let mut report = PicardReport { iterations: 0, final_increment: T::infinity(), converged: false };
    for it in 1..=opts.max_iters {
        let next = lu.solve(&sys.rhs_at(problem, &coeffs));
        let inc = next.iter().zip(&coeffs).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
        let size = next.iter().fold(T::zero(), |m, v| m.max(v.abs()));
        coeffs = next;
        report.iterations = it;
        report.final_increment = inc;
        if !inc.is_finite() || coeffs.iter().any(|v| !v.is_finite()) {
            report.final_increment = T::infinity();
            break;
        }
        if inc <= opts.tol * size.max(T::one()) {
            report.converged = true;
            break;
        }
    }

    let modes = (0..n).map(|j| (0..space.n_dofs()).map(|d| coeffs[d * n + j]).collect()).collect();
    Ok(SlabSolution { space, table: sys.table, modes, prev: prev.clone(), report })
}

/// Relative residual of the discrete slab equations with `f` evaluated at
/// the returned solution.
pub fn slab_residual<T: Real>(problem: &ProblemDef<T>, slab: &SlabSolution<T>) -> Result<T> {
    let sys = SlabSystem::new(problem, &slab.prev, slab.space.clone(), slab.table.clone())?;
    let n = slab.r() + 1;
    let mut coeffs = vec![T::zero(); slab.space.n_dofs() * n];
    for (j, mode) in slab.modes.iter().enumerate() {
        for (d, &v) in mode.iter().enumerate() {
            coeffs[d * n + j] = v;
        }
    }
    let rhs = sys.rhs_at(problem, &coeffs);
    let lhs = sys.matrix.matvec(&coeffs);
    let num = lhs.iter().zip(&rhs).fold(T::zero(), |m, (a, b)| m.max((*a - *b).abs()));
    let den = rhs.iter().fold(T::zero(), |m, v| m.max(v.abs()));
    Ok(num / den.max(T::min_positive_value()))
}
