//! Temporal and elliptic reconstruction of a slab solution and the
//! estimators derived from them.
//!
//! With `J = U(t_{m-1}^+) - U(t_{m-1}^-)` the reconstruction is
//! `Ũ = U + Q J`. The discrete laplacian is `A = Π f(U) - Ũ_t`, where `Π` is
//! the L² projection onto polynomials of degree `r` in time, and
//! `Ã = A + Q [A]` with `[A] = A(t_{m-1}^+) - A(t_{m-1}^-)`. Everything is
//! evaluated lazily at points of the common refinement of the meshes
//! involved; `Π f(U)` is not a finite element function.

use crate::error::Result;
use crate::estimator::{estimate_from_samples, sample_cell, CellSamples, EllipticEstimate};
use crate::fem::sample_points;
use crate::mesh::{Element, Mesh1D};
use crate::dg::{spatial_quadrature_points, SlabLocal, SlabSolution};
use crate::problems::ProblemDef;
use crate::scalar::{cst, Real};
use crate::time_basis::{lifting_q_all, orthonormal_basis, RefQuadrature};

/// Spatial data of a slab at one point `x`, independent of time.
#[derive(Clone, Debug)]
pub struct PointState<T> {
    pub x: T,
    /// `[v, v', v'']` of every temporal mode.
    pub modes: Vec<[T; 3]>,
    /// The node jump `J` and its x-derivatives.
    pub jump: [T; 3],
    /// Coefficients of `Π f(U)` against the orthonormal time basis.
    pub pi_f: Vec<T>,
    /// `[A]` at the left node (zero until set by the caller).
    pub a_jump: T,
}

/// Every reconstructed quantity at one space-time point.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct PointValues<T> {
    /// `U` and x-derivatives.
    pub u: [T; 3],
    /// `Ũ` and x-derivatives.
    pub u_rec: [T; 3],
    /// `Ũ_t` and x-derivatives.
    pub u_rec_t: [T; 3],
    pub u_rec_tt: T,
    pub pi_f: T,
    pub pi_f_t: T,
    pub a: T,
    pub a_rec: T,
    pub a_rec_t: T,
}

impl<T: Real> PointState<T> {
    pub fn new(
        slab: &SlabSolution<T>,
        problem: &ProblemDef<T>,
        local: &SlabLocal<T>,
        x: T,
        buf: &mut Vec<[T; 3]>,
    ) -> Self {
        let mut modes = Vec::with_capacity(slab.r() + 1);
        let prev = local.at(x, buf, &mut modes);
        let tab = &slab.table;
        let mut jump = [T::zero(); 3];
        for (k, jk) in jump.iter_mut().enumerate() {
            let plus: T = modes.iter().zip(&tab.basis_start).map(|(m, b)| m[k] * b[0]).sum();
            *jk = plus - prev[k];
        }
        let mut pi_f = vec![T::zero(); modes.len()];
        for (q, (&t, &w)) in tab.times.iter().zip(&tab.weights).enumerate() {
            let u: T = modes.iter().zip(&tab.basis[q]).map(|(m, b)| m[0] * b[0]).sum();
            let fw = (problem.f)(x, t, u) * w;
            for (c, b) in pi_f.iter_mut().zip(&tab.basis[q]) {
                *c += fw * b[0];
            }
        }
        Self { x, modes, jump, pi_f, a_jump: T::zero() }
    }

    /// Values at a time with basis values `basis` and lifting values `lift`.
    pub fn values(&self, basis: &[[T; 3]], lift: [T; 3]) -> PointValues<T> {
        let mut v = PointValues::default();
        for (m, b) in self.modes.iter().zip(basis) {
            for k in 0..3 {
                v.u[k] += m[k] * b[0];
                v.u_rec_t[k] += m[k] * b[1];
            }
            v.u_rec_tt += m[0] * b[2];
        }
        for k in 0..3 {
            v.u_rec[k] = v.u[k] + lift[0] * self.jump[k];
            v.u_rec_t[k] += lift[1] * self.jump[k];
        }
        v.u_rec_tt += lift[2] * self.jump[0];
        for (c, b) in self.pi_f.iter().zip(basis) {
            v.pi_f += *c * b[0];
            v.pi_f_t += *c * b[1];
        }
        v.a = v.pi_f - v.u_rec_t[0];
        v.a_rec = v.a + lift[0] * self.a_jump;
        v.a_rec_t = v.pi_f_t - v.u_rec_tt + lift[1] * self.a_jump;
        v
    }
}

/// Where `A(t_{m-1}^-)` comes from.
#[derive(Clone, Copy, Debug)]
pub enum LeftTrace<'a, T> {
    /// First slab: `A(t_0^-) = -κ u0''`.
    Initial,
    /// The previous slab.
    Slab(&'a SlabSolution<T>),
}

/// Estimator values of one slab, sampled at the slab's time quadrature.
#[derive(Clone, Debug)]
pub struct EstimatorSample<T> {
    pub times: Vec<T>,
    pub weights: Vec<T>,
    pub eta_space: Vec<T>,
    pub eta_space_dt: Vec<T>,
    pub eta_time: T,
    /// `‖Ũ(t_q)‖`.
    pub u_rec_norm: Vec<T>,
    /// `‖J‖ = sup |U(t_{m-1}^+) - U(t_{m-1}^-)|`; equals `max_t ‖U - Ũ‖`.
    pub jump_norm: T,
    pub union_mesh: Mesh1D<T>,
    /// Local contributions `[q][cell]` of the space estimator.
    pub local_space: Vec<Vec<T>>,
    /// Local contributions `[q][cell]` of the space-derivative estimator.
    pub local_space_dt: Vec<Vec<T>>,
}

impl<T: Real> EstimatorSample<T> {
    pub fn int_eta_space(&self) -> T {
        self.weights.iter().zip(&self.eta_space).map(|(&w, &e)| w * e).sum()
    }

    pub fn int_eta_space_dt(&self) -> T {
        self.weights.iter().zip(&self.eta_space_dt).map(|(&w, &e)| w * e).sum()
    }

    pub fn max_eta_space(&self) -> T {
        self.eta_space.iter().fold(T::zero(), |m, &v| m.max(v))
    }

    /// `m t_m k_m r_m eta_time int_eta_space int_eta_space_dt`.
    pub fn log_line(&self, m: usize, t_m: T, k: T, r: usize) -> String {
        format!(
            "{m} {t_m} {k} {r} {} {} {}",
            self.eta_time,
            self.int_eta_space(),
            self.int_eta_space_dt()
        )
    }
}

/// Reconstruction of one slab.
#[derive(Clone, Debug)]
pub struct Reconstruction<'a, T> {
    pub slab: &'a SlabSolution<T>,
    pub problem: &'a ProblemDef<T>,
    pub left: LeftTrace<'a, T>,
    /// Common refinement of the current, previous and (if any) second
    /// previous mesh.
    pub union: Mesh1D<T>,
}

/// Per-cell evaluation context.
struct CellContext<T> {
    el: Element<T>,
    local: SlabLocal<T>,
    left: Option<SlabLocal<T>>,
}

impl<'a, T: Real> Reconstruction<'a, T> {
    pub fn new(slab: &'a SlabSolution<T>, problem: &'a ProblemDef<T>, left: LeftTrace<'a, T>) -> Result<Self> {
        let mut meshes = vec![slab.space.mesh(), slab.prev.mesh()];
        if let LeftTrace::Slab(prev) = left {
            meshes.push(prev.space.mesh());
            meshes.push(prev.prev.mesh());
        }
        let union = Mesh1D::common_refinement(&meshes)?;
        Ok(Self { slab, problem, left, union })
    }

    fn context(&self, el: Element<T>) -> Result<CellContext<T>> {
        let local = self.slab.local(el.id)?;
        let left = match self.left {
            LeftTrace::Initial => None,
            LeftTrace::Slab(prev) => Some(prev.local(el.id)?),
        };
        Ok(CellContext { el, local, left })
    }

    /// `A(t_{m-1}^-)` at `x`.
    fn left_laplacian(&self, ctx: &CellContext<T>, x: T, buf: &mut Vec<[T; 3]>) -> T {
        match (self.left, &ctx.left) {
            (LeftTrace::Slab(prev), Some(local)) => {
                let st = PointState::new(prev, self.problem, local, x, buf);
                st.values(&prev.table.basis_end, prev.table.lift_end).a
            }
            _ => -self.problem.kappa * (self.problem.u0_dd)(x),
        }
    }

    fn state(&self, ctx: &CellContext<T>, x: T, buf: &mut Vec<[T; 3]>) -> PointState<T> {
        let mut st = PointState::new(self.slab, self.problem, &ctx.local, x, buf);
        let tab = &self.slab.table;
        let a_plus = st.values(&tab.basis_start, tab.lift_start).a;
        st.a_jump = a_plus - self.left_laplacian(ctx, x, buf);
        st
    }

    /// Reconstructed quantities at `(x, t)`, `t` in the closed slab.
    pub fn eval(&self, x: T, t: T) -> Result<PointValues<T>> {
        let el = self.union.element(self.union.locate(x)?);
        let ctx = self.context(el)?;
        let mut buf = Vec::new();
        let st = self.state(&ctx, x, &mut buf);
        let map = self.slab.map();
        Ok(st.values(&orthonormal_basis(self.slab.r(), map, t), lifting_q_all(self.slab.r(), t, map)))
    }

    /// `R_time = f(Ũ) - Ũ_t - Ã` at `(x, t)`, together with the same quantity
    /// computed as `f(Ũ) - Π f(U) - Q [A]`.
    pub fn time_residual_both(&self, x: T, t: T) -> Result<(T, T)> {
        let el = self.union.element(self.union.locate(x)?);
        let ctx = self.context(el)?;
        let mut buf = Vec::new();
        let st = self.state(&ctx, x, &mut buf);
        let map = self.slab.map();
        let lift = lifting_q_all(self.slab.r(), t, map);
        let v = st.values(&orthonormal_basis(self.slab.r(), map, t), lift);
        let f = (self.problem.f)(x, t, v.u_rec[0]);
        Ok((f - v.u_rec_t[0] - v.a_rec, f - v.pi_f - lift[0] * st.a_jump))
    }

    /// All estimators of the slab, sampled on the union mesh.
    pub fn estimators(&self) -> Result<EstimatorSample<T>> {
        let tab = &self.slab.table;
        let nq = tab.len();
        let kappa = self.problem.kappa;
        let n_interior = self.slab.space.degree() + 3;
        let pts = sample_points::<T>(n_interior);
        let ncell = self.union.len();
        let mut s_eta = vec![Vec::with_capacity(ncell); nq];
        let mut s_dot = vec![Vec::with_capacity(ncell); nq];
        let mut r_sup = vec![T::zero(); nq];
        let mut u_sup = vec![T::zero(); nq];
        let mut jump_norm = T::zero();
        let mut buf = Vec::new();
        for el in self.union.elements() {
            let ctx = self.context(el)?;
            let states: Vec<PointState<T>> = pts
                .iter()
                .enumerate()
                .map(|(i, &xi)| {
                    let x = if i == 0 {
                        el.x_left
                    } else if i == pts.len() - 1 {
                        el.x_right
                    } else {
                        el.to_physical(xi)
                    };
                    self.state(&ctx, x, &mut buf)
                })
                .collect();
            for st in &states {
                jump_norm = jump_norm.max(st.jump[0].abs());
            }
            for q in 0..nq {
                let t = tab.times[q];
                let vals: Vec<PointValues<T>> =
                    states.iter().map(|st| st.values(&tab.basis[q], tab.lift[q])).collect();
                for (st, v) in states.iter().zip(&vals) {
                    let r = (self.problem.f)(st.x, t, v.u_rec[0]) - v.u_rec_t[0] - v.a_rec;
                    r_sup[q] = r_sup[q].max(r.abs());
                    u_sup[q] = u_sup[q].max(v.u_rec[0].abs());
                }
                let mut it = vals.iter();
                s_eta[q].push(sample_cell(&ctx.el, n_interior, |_| {
                    let v = it.next().unwrap();
                    (v.u_rec[1], v.a_rec + kappa * v.u_rec[2])
                }));
                let mut it = vals.iter();
                s_dot[q].push(sample_cell(&ctx.el, n_interior, |_| {
                    let v = it.next().unwrap();
                    (v.u_rec_t[1], v.a_rec_t + kappa * v.u_rec_t[2])
                }));
            }
        }
        let est = |samples: &[CellSamples<T>]| estimate_from_samples(&self.union, kappa, samples);
        let eta: Vec<EllipticEstimate<T>> = s_eta.iter().map(|s| est(s)).collect();
        let dot: Vec<EllipticEstimate<T>> = s_dot.iter().map(|s| est(s)).collect();
        let locals = |e: &EllipticEstimate<T>| (0..ncell).map(|c| e.local(c)).collect::<Vec<_>>();
        Ok(EstimatorSample {
            times: tab.times.clone(),
            weights: tab.weights.clone(),
            eta_space: eta.iter().map(|e| e.total).collect(),
            eta_space_dt: dot.iter().map(|e| e.total).collect(),
            eta_time: tab.weights.iter().zip(&r_sup).map(|(&w, &r)| w * r).sum(),
            u_rec_norm: u_sup,
            jump_norm,
            local_space: eta.iter().map(locals).collect(),
            local_space_dt: dot.iter().map(locals).collect(),
            union_mesh: self.union.clone(),
        })
    }

    /// Largest relative defect of `κ(U_x(t_q), φ_i') = (A(t_q), φ_i)` over
    /// the basis functions of the slab's space and the time quadrature points.
    /// `(A, φ_i)` uses the pointwise laplacian with the solver's spatial rule.
    pub fn duality_defect(&self) -> Result<T> {
        let space = &self.slab.space;
        let tab = &self.slab.table;
        let p = space.degree();
        let xq = RefQuadrature::<T>::gauss_legendre(spatial_quadrature_points(p, self.problem.f_degree));
        let xtab = space.tabulate(&xq.points);
        let nq = tab.len();
        let mut stiff_part = vec![vec![T::zero(); space.n_dofs()]; nq];
        let mut a_part = vec![vec![T::zero(); space.n_dofs()]; nq];
        let mut buf = Vec::new();
        // (A, φ) is split over the union cells so the jump part is exact; the
        // Π f part follows the solver's rule on elements of the slab mesh.
        let gauss = RefQuadrature::<T>::gauss_legendre(p + 2);
        for cell in self.union.elements() {
            let ctx = self.context(cell)?;
            let e = space.mesh().containing(cell.id).ok_or(crate::Error::MeshMismatch)?;
            let el = space.mesh().element(e);
            let xis: Vec<T> = gauss.points.iter().map(|&s| el.to_reference(cell.to_physical(s))).collect();
            let phis = space.tabulate(&xis);
            let jac = cell.h() * cst(0.5);
            for (g, (&s, &w)) in gauss.points.iter().zip(&gauss.weights).enumerate() {
                let x = cell.to_physical(s);
                let st = PointState::new(self.slab, self.problem, &ctx.local, x, &mut buf);
                for q in 0..nq {
                    let v = st.values(&tab.basis[q], tab.lift[q]);
                    for a in 0..=p {
                        if let Some(d) = space.dof(e, a) {
                            let ph = phis.phi[g][a];
                            // κ(U_x, φ') + (Ũ_t, φ), both polynomial and exact here.
                            stiff_part[q][d] += w * jac * (self.problem.kappa * v.u[1] * ph[1] * cst::<T>(2.0) / el.h());
                            a_part[q][d] -= w * jac * v.u_rec_t[0] * ph[0];
                        }
                    }
                }
            }
        }
        for (e, el) in space.mesh().elements().enumerate() {
            let jac = el.h() * cst(0.5);
            for (s, (&xi, &w)) in xq.points.iter().zip(&xq.weights).enumerate() {
                // A slab element may be coarser than the previous mesh.
                let x = el.to_physical(xi);
                let ctx = self.context(self.union.element(self.union.locate(x)?))?;
                let st = PointState::new(self.slab, self.problem, &ctx.local, x, &mut buf);
                for q in 0..nq {
                    let pf: T = st.pi_f.iter().zip(&tab.basis[q]).map(|(c, b)| *c * b[0]).sum();
                    for a in 0..=p {
                        if let Some(d) = space.dof(e, a) {
                            a_part[q][d] += w * jac * pf * xtab.phi[s][a][0];
                        }
                    }
                }
            }
        }
        let mut num = T::zero();
        let mut den = T::zero();
        for q in 0..nq {
            for (s, a) in stiff_part[q].iter().zip(&a_part[q]) {
                num = num.max((*s - *a).abs());
                den = den.max(s.abs()).max(a.abs());
            }
        }
        Ok(num / den.max(T::min_positive_value()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dg::{solve_slab, PicardOptions};
    use crate::fem::{energy_projection, FemSpace, SpatialField};
    use crate::problems::{preset, LipschitzModulus};
    use crate::time_basis::IntervalMap;
    use std::sync::Arc;

    fn space(n: usize, p: usize, a: f64, b: f64) -> Arc<FemSpace<f64>> {
        Arc::new(FemSpace::new(Mesh1D::uniform(a, b, n).unwrap(), p).unwrap())
    }

    #[test]
    fn r0_hand_evaluation() {
        // Single interior dof: prev = 1, slab value 2 at the node x = 1/2.
        let problem = preset::<f64>("linear_heat").unwrap();
        let s = Arc::new(FemSpace::new(Mesh1D::uniform(0.0, 1.0, 2).unwrap(), 1).unwrap());
        let map = IntervalMap::new(0.0, 0.5).unwrap();
        let mut slab = solve_slab(
            &problem,
            &SpatialField::new(s.clone(), vec![1.0]),
            s.clone(),
            map,
            0,
            PicardOptions::default(),
        )
        .unwrap();
        // Overwrite the mode so U = 2 on the slab.
        slab.modes[0] = vec![2.0 * map.k().sqrt()];
        let rec = Reconstruction::new(&slab, &problem, LeftTrace::Initial).unwrap();
        let at = |t: f64| rec.eval(0.5, t).unwrap().u_rec[0];
        assert!((at(0.0) - 1.0).abs() < 1e-14);
        assert!((at(0.5) - 2.0).abs() < 1e-14);
        assert!((at(0.25) - 1.5).abs() < 1e-14);
    }

    #[test]
    fn zero_jump_gives_identity() {
        let problem = preset::<f64>("linear_heat").unwrap();
        let s = space(4, 2, 0.0, 1.0);
        let prev = SpatialField::interpolant(s.clone(), |x| x * (1.0 - x));
        let map = IntervalMap::new(0.0, 0.1).unwrap();
        let mut slab = solve_slab(&problem, &prev, s, map, 1, PicardOptions::default()).unwrap();
        // Make the solution constant in time and equal to prev.
        slab.modes[0] = prev.coeffs.iter().map(|v| v * map.k().sqrt()).collect();
        slab.modes[1].iter_mut().for_each(|v| *v = 0.0);
        let rec = Reconstruction::new(&slab, &problem, LeftTrace::Initial).unwrap();
        for &t in &[0.0, 0.03, 0.1] {
            for &x in &[0.1, 0.37, 0.9] {
                let v = rec.eval(x, t).unwrap();
                assert!((v.u_rec[0] - v.u[0]).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn first_slab_left_trace_is_minus_kappa_u0_dd() {
        let problem = preset::<f64>("linear_heat").unwrap();
        let s = space(8, 3, 0.0, 1.0);
        let u0 = energy_projection(s.clone(), problem.u0.as_ref(), problem.u0_dd.as_ref()).unwrap();
        let slab = solve_slab(&problem, &u0, s, IntervalMap::new(0.0, 0.01).unwrap(), 1, PicardOptions::default())
            .unwrap();
        let rec = Reconstruction::new(&slab, &problem, LeftTrace::Initial).unwrap();
        let el = rec.union.element(2);
        let ctx = rec.context(el).unwrap();
        let mut buf = Vec::new();
        let x = 0.3;
        let pi = std::f64::consts::PI;
        assert!((rec.left_laplacian(&ctx, x, &mut buf) - pi * pi * (pi * x).sin()).abs() < 1e-12);
        // Ã at the left node equals the left trace.
        let v = rec.eval(x, 0.0).unwrap();
        assert!((v.a_rec - pi * pi * (pi * x).sin()).abs() < 1e-10);
    }

    #[test]
    fn steady_laplacian_is_f() {
        let mut problem = preset::<f64>("linear_heat").unwrap();
        problem.f = Arc::new(|_, _, _| 2.0);
        problem.lipschitz = LipschitzModulus::constant(0.0);
        let s = space(4, 2, 0.0, 1.0);
        let prev = energy_projection(s.clone(), |x| x * (1.0 - x), |_| -2.0).unwrap();
        let slab =
            solve_slab(&problem, &prev, s, IntervalMap::new(0.0, 0.1).unwrap(), 2, PicardOptions::default()).unwrap();
        let rec = Reconstruction::new(&slab, &problem, LeftTrace::Initial).unwrap();
        for &t in &[0.0, 0.05, 0.1] {
            let v = rec.eval(0.41, t).unwrap();
            assert!((v.a - 2.0).abs() < 1e-9);
        }
    }

    #[test]
    fn dual_path_time_residual_and_duality() {
        let mut problem = preset::<f64>("quadratic_gaussian").unwrap();
        problem.u0 = Arc::new(|x: f64| 3.0 * (-2.0 * x * x).exp() - 3.0 * (-50.0f64).exp());
        problem.u0_dd = Arc::new(|x: f64| 3.0 * (16.0 * x * x - 4.0) * (-2.0 * x * x).exp());
        let s1 = space(16, 2, -5.0, 5.0);
        let s2 = Arc::new(FemSpace::new(s1.mesh().refine([s1.mesh().leaves()[8]]).unwrap(), 2).unwrap());
        let u0 = energy_projection(s1.clone(), problem.u0.as_ref(), problem.u0_dd.as_ref()).unwrap();
        let opts = PicardOptions::default();
        let slab1 = solve_slab(&problem, &u0, s1, IntervalMap::new(0.0, 0.01).unwrap(), 2, opts).unwrap();
        let slab2 =
            solve_slab(&problem, &slab1.trace_minus(), s2, IntervalMap::new(0.01, 0.02).unwrap(), 2, opts).unwrap();
        let rec1 = Reconstruction::new(&slab1, &problem, LeftTrace::Initial).unwrap();
        let rec2 = Reconstruction::new(&slab2, &problem, LeftTrace::Slab(&slab1)).unwrap();
        for &x in &[-1.3, -0.2, 0.05, 0.7] {
            for &t in &[0.01, 0.013, 0.02] {
                let (a, b) = rec2.time_residual_both(x, t).unwrap();
                assert!((a - b).abs() < 1e-11 * (1.0 + a.abs()), "{a} {b}");
            }
            // Continuity of Ũ and Ã across t = 0.01.
            let l = rec1.eval(x, 0.01).unwrap();
            let r = rec2.eval(x, 0.01).unwrap();
            assert!((l.u_rec[0] - r.u_rec[0]).abs() < 1e-10);
            assert!((l.a_rec - r.a_rec).abs() < 1e-9 * (1.0 + l.a_rec.abs()));
        }
        assert!(rec1.duality_defect().unwrap() < 1e-9);
        assert!(rec2.duality_defect().unwrap() < 1e-9);
    }

    #[test]
    fn duality_after_coarsening() {
        // The second slab lives on a mesh coarser than the first.
        let problem = preset::<f64>("quadratic_gaussian").unwrap();
        let coarse = Mesh1D::uniform(-5.0, 5.0, 8).unwrap();
        let fine = coarse.refine_uniform().unwrap();
        let s1 = Arc::new(FemSpace::new(fine, 3).unwrap());
        let s2 = Arc::new(FemSpace::new(coarse, 3).unwrap());
        let u0 = energy_projection(s1.clone(), problem.u0.as_ref(), problem.u0_dd.as_ref()).unwrap();
        let opts = PicardOptions::default();
        let slab1 = solve_slab(&problem, &u0, s1, IntervalMap::new(0.0, 0.005).unwrap(), 1, opts).unwrap();
        let slab2 =
            solve_slab(&problem, &slab1.trace_minus(), s2, IntervalMap::new(0.005, 0.01).unwrap(), 1, opts).unwrap();
        let rec = Reconstruction::new(&slab2, &problem, LeftTrace::Slab(&slab1)).unwrap();
        assert_eq!(rec.union, *slab1.space.mesh());
        assert!(rec.duality_defect().unwrap() < 1e-9);
    }

    #[test]
    fn estimators_are_nonnegative_and_union_is_idempotent() {
        let problem = preset::<f64>("linear_manufactured").unwrap();
        let s = space(8, 2, 0.0, 1.0);
        let u0 = energy_projection(s.clone(), problem.u0.as_ref(), problem.u0_dd.as_ref()).unwrap();
        let slab = solve_slab(&problem, &u0, s.clone(), IntervalMap::new(0.0, 0.05).unwrap(), 1, PicardOptions::default())
            .unwrap();
        let rec = Reconstruction::new(&slab, &problem, LeftTrace::Initial).unwrap();
        assert_eq!(rec.union, *s.mesh());
        let est = rec.estimators().unwrap();
        assert!(est.eta_time >= 0.0);
        assert!(est.eta_space.iter().chain(&est.eta_space_dt).all(|&v| v >= 0.0));
        assert!(est.local_space.iter().flatten().all(|&v| v >= 0.0));
        assert_eq!(est.times.len(), slab.table.len());
    }

    /// η_time decreases like k^(r+2) on the linear manufactured problem.
    #[test]
    fn time_estimator_rate() {
        let problem = preset::<f64>("linear_manufactured").unwrap();
        let s = space(16, 4, 0.0, 1.0);
        let u0 = energy_projection(s.clone(), problem.u0.as_ref(), problem.u0_dd.as_ref()).unwrap();
        for r in 0..=2 {
            let etas: Vec<f64> = [0.1, 0.05, 0.025]
                .iter()
                .map(|&k| {
                    let slab = solve_slab(&problem, &u0, s.clone(), IntervalMap::new(0.0, k).unwrap(), r, PicardOptions::default())
                        .unwrap();
                    Reconstruction::new(&slab, &problem, LeftTrace::Initial).unwrap().estimators().unwrap().eta_time
                })
                .collect();
            let rate = (etas[1] / etas[2]).log2();
            assert!(rate > r as f64 + 2.0 - 0.3, "r={r} rate={rate} {etas:?}");
        }
    }
}
