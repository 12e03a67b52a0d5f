//! Pointwise residual estimator for the elliptic problem `-κ w'' = g`.
//!
//! For a piecewise polynomial `w_h` on a mesh the estimator collects
//! `h_K² sup_K |g + κ w_h''| / κ` on every element and `h_z |[w_h']_z|` at every
//! interior node (`h_z` the larger adjacent element). The estimate is the
//! maximum of these contributions.

use crate::fem::{sample_points, SpatialField};
use crate::mesh::{Element, Mesh1D};
use crate::scalar::Real;

#[derive(Clone, Debug, PartialEq)]
pub struct EllipticEstimate<T> {
    pub total: T,
    /// Residual contribution of each element of the estimation mesh.
    pub per_element: Vec<T>,
    /// Jump contribution of each interior node; node `i` sits between
    /// elements `i` and `i + 1`.
    pub per_node: Vec<T>,
}

impl<T: Real> EllipticEstimate<T> {
    /// Largest contribution touching element `e` (residual and both end
    /// point jumps).
    pub fn local(&self, e: usize) -> T {
        let mut v = self.per_element[e];
        if e > 0 {
            v = v.max(self.per_node[e - 1]);
        }
        if let Some(&j) = self.per_node.get(e) {
            v = v.max(j);
        }
        v
    }
}

/// Samples of one element: `dw` at both end points and `g + κ w''` at the
/// sampling points.
#[derive(Clone, Debug, Default)]
pub struct CellSamples<T> {
    pub dw_left: T,
    pub dw_right: T,
    pub residual_sup: T,
}

/// Builds the estimate from per-element samples, one entry per element of
/// `mesh` in order.
pub fn estimate_from_samples<T: Real>(
    mesh: &Mesh1D<T>,
    kappa: T,
    samples: &[CellSamples<T>],
) -> EllipticEstimate<T> {
    assert_eq!(samples.len(), mesh.len());
    let hs: Vec<T> = mesh.elements().map(|e| e.h()).collect();
    let per_element: Vec<T> = hs
        .iter()
        .zip(samples)
        .map(|(&h, s)| h * h * s.residual_sup / kappa)
        .collect();
    let per_node: Vec<T> = (0..mesh.len().saturating_sub(1))
        .map(|i| hs[i].max(hs[i + 1]) * (samples[i + 1].dw_left - samples[i].dw_right).abs())
        .collect();
    let total = per_element
        .iter()
        .chain(&per_node)
        .fold(T::zero(), |acc, &v| acc.max(v));
    EllipticEstimate { total, per_element, per_node }
}

/// Samples an element through a callback returning `(w', g + κ w'')` at a
/// physical point. Uses `n_interior` interior points plus both end points.
pub fn sample_cell<T: Real>(
    el: &Element<T>,
    n_interior: usize,
    mut at: impl FnMut(T) -> (T, T),
) -> CellSamples<T> {
    let pts = sample_points::<T>(n_interior);
    let mut s = CellSamples::default();
    let last = pts.len() - 1;
    for (i, &xi) in pts.iter().enumerate() {
        let x = if i == 0 {
            el.x_left
        } else if i == last {
            el.x_right
        } else {
            el.to_physical(xi)
        };
        let (dw, res) = at(x);
        if i == 0 {
            s.dw_left = dw;
        }
        if i == last {
            s.dw_right = dw;
        }
        s.residual_sup = s.residual_sup.max(res.abs());
    }
    s
}

/// Estimator for a finite element field and load `g` on the field's own mesh.
pub fn estimate<T: Real>(w: &SpatialField<T>, g: impl Fn(T) -> T, kappa: T) -> EllipticEstimate<T> {
    estimate_on(w, g, kappa, w.mesh())
}

/// Estimator evaluated on `mesh`, which must refine the field's mesh.
pub fn estimate_on<T: Real>(
    w: &SpatialField<T>,
    g: impl Fn(T) -> T,
    kappa: T,
    mesh: &Mesh1D<T>,
) -> EllipticEstimate<T> {
    let n = w.space.degree() + 3;
    let mut buf = Vec::new();
    let samples: Vec<_> = mesh
        .elements()
        .map(|el| {
            let poly = w.modal_on(el.id).expect("estimation mesh must refine the field mesh");
            sample_cell(&el, n, |x| {
                let d = poly.eval_derivs_with(x, &mut buf);
                (d[1], g(x) + kappa * d[2])
            })
        })
        .collect();
    estimate_from_samples(mesh, kappa, &samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::{elliptic_solve, sup_norm_fn, FemSpace};
    use std::f64::consts::PI;
    use std::sync::Arc;

    fn space(n: usize, p: usize) -> Arc<FemSpace<f64>> {
        Arc::new(FemSpace::new(Mesh1D::uniform(0.0, 1.0, n).unwrap(), p).unwrap())
    }

    #[test]
    fn zero_for_exact_linear_data() {
        for p in 1..=3 {
            let w = elliptic_solve(space(6, p), 2.0, |_| 0.0).unwrap();
            assert!(estimate(&w, |_| 0.0, 2.0).total < 1e-12);
        }
    }

    #[test]
    fn hand_computed_hat() {
        // Hat function on 4 cells of width 1/4 peaking at x = 1/2, p = 1.
        let s = space(4, 1);
        let w = SpatialField::new(s, vec![0.0, 1.0, 0.0]);
        let est = estimate(&w, |_| 0.0, 1.0);
        assert!(est.per_element.iter().all(|&v| v == 0.0));
        // Jumps of w': 4 at x=1/4, -8 at x=1/2, 4 at x=3/4.
        let expect = [1.0, 2.0, 1.0];
        for (a, b) in est.per_node.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!((est.total - 2.0).abs() < 1e-12);
        assert!((est.local(1) - 2.0).abs() < 1e-12);
        assert!((est.local(0) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn residual_term_by_hand() {
        // p = 1: w'' = 0 so the element term is h² sup|g| / κ.
        let s = space(2, 1);
        let w = SpatialField::zero(s);
        let est = estimate(&w, |x| 3.0 * x, 1.5);
        assert!((est.per_element[0] - 0.25 * 1.5 / 1.5).abs() < 1e-14);
        assert!((est.per_element[1] - 0.25 * 3.0 / 1.5).abs() < 1e-14);
    }

    #[test]
    fn manufactured_effectivity() {
        let g = |x: f64| PI * PI * (PI * x).sin();
        let w = elliptic_solve(space(8, 1), 1.0, g).unwrap();
        let err = sup_norm_fn(|x| w.eval(x).unwrap() - (PI * x).sin(), w.mesh(), 200);
        let est = estimate(&w, g, 1.0).total;
        assert!(est >= err, "{est} {err}");
        assert!(est / err <= 10.0, "{est} {err}");
    }

    #[test]
    fn kappa_scaling_invariance() {
        let g = |x: f64| (3.0 * x).exp();
        let s = space(5, 2);
        let w1 = elliptic_solve(s.clone(), 1.0, g).unwrap();
        let w10 = elliptic_solve(s, 10.0, |x| 10.0 * g(x)).unwrap();
        let e1 = estimate(&w1, g, 1.0).total;
        let e10 = estimate(&w10, |x| 10.0 * g(x), 10.0).total;
        assert!((e1 - e10).abs() < 1e-10 * e1);
        for (a, b) in w1.coeffs.iter().zip(&w10.coeffs) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn refining_frozen_field_does_not_grow_element_terms() {
        let s = space(4, 2);
        let w = SpatialField::interpolant(s.clone(), |x| x * (1.0 - x) * (x + 0.5));
        let g = |x: f64| (5.0 * x).cos();
        let coarse = estimate(&w, g, 1.0);
        let fine_mesh = s.mesh().refine_uniform().unwrap();
        let fine = estimate_on(&w, g, 1.0, &fine_mesh);
        for (i, el) in fine_mesh.elements().enumerate() {
            let parent = s.mesh().containing(el.id).unwrap();
            assert!(fine.per_element[i] <= coarse.per_element[parent] + 1e-14);
        }
    }
}
