//! Conditional a posteriori bound.
//!
//! Per slab the accumulator is
//!
//! ```text
//! ψ_m = θ_{m-1} ψ_{m-1} + C∞ ∫ 𝔏(‖Ũ‖, ‖Ũ‖ + C∞η) η + η_time + C∞ ∫ η̇
//! ```
//!
//! and the bound holds on `I_m` provided `φ_m(δ) = 1 + δ(∫ L(s, δ) - 1)` has a
//! root `δ_m ≥ 1`, where `L(s, δ) = 𝔏(δψ_m + a(s), δψ_m + a(s))` and
//! `a = ‖Ũ‖ + C∞ η`. The growth factor is
//! `θ_m = exp ∫ 𝔏(δ_m ψ_m + a, a)`.

use crate::problems::LipschitzModulus;
use crate::reconstruct::EstimatorSample;
use crate::scalar::{cst, Real};

/// Upper end of the root search.
pub const DELTA_MAX: f64 = 1e8;

/// Time-sampled scalar inputs of the bound on one slab.
#[derive(Clone, Debug, PartialEq)]
pub struct SlabBoundData<T> {
    pub k: T,
    pub times: Vec<T>,
    pub weights: Vec<T>,
    /// `‖Ũ(t_q)‖`.
    pub u_norm: Vec<T>,
    pub eta_space: Vec<T>,
    pub eta_space_dt: Vec<T>,
    pub eta_time: T,
    /// `sup_t ‖U - Ũ‖`.
    pub jump_norm: T,
}

impl<T: Real> SlabBoundData<T> {
    pub fn from_sample(k: T, s: &EstimatorSample<T>) -> Self {
        Self {
            k,
            times: s.times.clone(),
            weights: s.weights.clone(),
            u_norm: s.u_rec_norm.clone(),
            eta_space: s.eta_space.clone(),
            eta_space_dt: s.eta_space_dt.clone(),
            eta_time: s.eta_time,
            jump_norm: s.jump_norm,
        }
    }

    /// Constant-in-time data on a slab of length `k`, with a 1-point rule.
    pub fn frozen(k: T, u_norm: T, eta_space: T, eta_space_dt: T, eta_time: T) -> Self {
        Self {
            k,
            times: vec![T::zero()],
            weights: vec![k],
            u_norm: vec![u_norm],
            eta_space: vec![eta_space],
            eta_space_dt: vec![eta_space_dt],
            eta_time,
            jump_norm: T::zero(),
        }
    }

    fn a(&self, q: usize, c_inf: T) -> T {
        self.u_norm[q] + c_inf * self.eta_space[q]
    }

    fn integrate(&self, f: impl Fn(usize) -> T) -> T {
        self.weights.iter().enumerate().map(|(q, &w)| w * f(q)).sum()
    }
}

/// `φ_m(δ)`.
pub fn phi<T: Real>(delta: T, psi: T, data: &SlabBoundData<T>, l: &LipschitzModulus<T>, c_inf: T) -> T {
    let int_l = data.integrate(|q| {
        let arg = delta * psi + data.a(q, c_inf);
        l.eval(data.times[q], arg, arg)
    });
    T::one() + delta * (int_l - T::one())
}

/// `θ_m` for a given root.
pub fn theta<T: Real>(delta: T, psi: T, data: &SlabBoundData<T>, l: &LipschitzModulus<T>, c_inf: T) -> T {
    data.integrate(|q| {
        let a = data.a(q, c_inf);
        l.eval(data.times[q], delta * psi + a, a)
    })
    .exp()
}

/// Coefficients `(B, c)` of `φ(δ) = 1 + δ(B - 1) + c δ²` for `𝔏 = a + b`.
pub fn quadratic_coefficients<T: Real>(psi: T, data: &SlabBoundData<T>, c_inf: T) -> (T, T) {
    let b = cst::<T>(2.0) * data.integrate(|q| data.a(q, c_inf));
    (b, cst::<T>(2.0) * data.k * psi)
}

/// Smallest root `δ ≥ 1` of `1 + δ(B - 1) + c δ²`, `c ≥ 0`.
pub fn quadratic_root<T: Real>(b: T, c: T) -> Option<T> {
    let s = T::one() - b;
    if !(s > T::zero()) {
        return None;
    }
    let disc = s * s - cst::<T>(4.0) * c;
    if disc < T::zero() {
        return None;
    }
    // 2 / (s + √disc) is the smaller root without cancellation.
    let delta = cst::<T>(2.0) / (s + disc.sqrt());
    accept(delta)
}

fn accept<T: Real>(delta: T) -> Option<T> {
    let delta = if delta < T::one() && delta > T::one() - cst(1e-12) { T::one() } else { delta };
    (delta >= T::one() && delta <= cst(DELTA_MAX) && delta.is_finite()).then_some(delta)
}

/// Smallest root of `φ` in `[1, DELTA_MAX]`, or `None`.
pub fn delta_root<T: Real>(psi: T, data: &SlabBoundData<T>, l: &LipschitzModulus<T>, c_inf: T) -> Option<T> {
    if l.quadratic {
        let (b, c) = quadratic_coefficients(psi, data, c_inf);
        return quadratic_root(b, c);
    }
    delta_root_newton(psi, data, l, c_inf)
}

/// Generic root search. Newton from `δ = 1` with a finite-difference slope;
/// for the usual convex `φ` the iterates increase monotonically towards the
/// smallest root. An overshoot is resolved by bisection, and a non-negative
/// slope falls back to a doubling scan.
pub fn delta_root_newton<T: Real>(psi: T, data: &SlabBoundData<T>, l: &LipschitzModulus<T>, c_inf: T) -> Option<T> {
    let f = |d: T| phi(d, psi, data, l, c_inf);
    let max = cst::<T>(DELTA_MAX);
    let mut x = T::one();
    let mut fx = f(x);
    if !fx.is_finite() {
        return None;
    }
    if fx <= T::zero() {
        return Some(x);
    }
    for _ in 0..500 {
        let h = x * cst(1e-7);
        let slope = (f(x + h) - f(x - h)) / (h + h);
        if !(slope < T::zero()) {
            return scan(&f, x, max);
        }
        let next = (x - fx / slope).min(max);
        let fnext = f(next);
        if !fnext.is_finite() {
            return scan(&f, x, max);
        }
        if fnext <= T::zero() {
            return accept(bisect(&f, x, next));
        }
        if next >= max {
            return None;
        }
        if next - x <= cst::<T>(1e-15) * next {
            return accept(next);
        }
        x = next;
        fx = fnext;
    }
    scan(&f, x, max)
}

/// Doubling scan from `lo` (where `φ > 0`) for a sign change.
fn scan<T: Real>(f: &impl Fn(T) -> T, mut lo: T, max: T) -> Option<T> {
    while lo < max {
        let hi = (lo + lo).min(max);
        let fh = f(hi);
        if !fh.is_finite() {
            return None;
        }
        if fh <= T::zero() {
            return accept(bisect(f, lo, hi));
        }
        lo = hi;
    }
    None
}

/// Bisection on `[lo, hi]` with `φ(lo) > 0 ≥ φ(hi)`.
fn bisect<T: Real>(f: &impl Fn(T) -> T, mut lo: T, mut hi: T) -> T {
    for _ in 0..200 {
        if hi - lo <= cst::<T>(4e-16) * hi {
            break;
        }
        let mid = (lo + hi) * cst(0.5);
        if f(mid) > T::zero() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    if f(lo).abs() < f(hi).abs() {
        lo
    } else {
        hi
    }
}

/// Running accumulators of the bound.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundState<T> {
    pub m: usize,
    pub psi: T,
    pub theta: T,
    pub theta_tilde: T,
    pub delta: Option<T>,
    pub max_eta_space: T,
    pub max_jump: T,
    /// `θ_m ψ_m + C∞ max η_space`.
    pub bound_reconstructed: T,
    /// `bound_reconstructed + max ‖U - Ũ‖`.
    pub bound_error: T,
}

/// `φ_m` has no root in `[1, DELTA_MAX]`: the bound cannot be continued.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoRoot<T> {
    pub m: usize,
    pub psi: T,
}

impl<T: Real> Default for BoundState<T> {
    fn default() -> Self {
        Self::initial()
    }
}

impl<T: Real> BoundState<T> {
    pub fn initial() -> Self {
        Self {
            m: 0,
            psi: T::zero(),
            theta: T::one(),
            theta_tilde: T::one(),
            delta: None,
            max_eta_space: T::zero(),
            max_jump: T::zero(),
            bound_reconstructed: T::zero(),
            bound_error: T::zero(),
        }
    }

    /// `ψ_m` from this state (step `m - 1`) and the slab data.
    pub fn next_psi(&self, data: &SlabBoundData<T>, l: &LipschitzModulus<T>, c_inf: T) -> T {
        let spatial = data.integrate(|q| {
            let u = data.u_norm[q];
            let eta = data.eta_space[q];
            l.eval(data.times[q], u, u + c_inf * eta) * eta
        });
        self.theta * self.psi + c_inf * spatial + data.eta_time + c_inf * data.integrate(|q| data.eta_space_dt[q])
    }

    /// Advances the recursion by one slab.
    pub fn advance(&self, data: &SlabBoundData<T>, l: &LipschitzModulus<T>, c_inf: T) -> Result<Self, NoRoot<T>> {
        let m = self.m + 1;
        let psi = self.next_psi(data, l, c_inf);
        let delta = delta_root(psi, data, l, c_inf).ok_or(NoRoot { m, psi })?;
        let theta = theta(delta, psi, data, l, c_inf);
        let max_eta_space = data.eta_space.iter().fold(self.max_eta_space, |a, &b| a.max(b));
        let max_jump = self.max_jump.max(data.jump_norm);
        let bound_reconstructed = theta * psi + c_inf * max_eta_space;
        Ok(Self {
            m,
            psi,
            theta,
            theta_tilde: self.theta_tilde * theta,
            delta: Some(delta),
            max_eta_space,
            max_jump,
            bound_reconstructed,
            bound_error: bound_reconstructed + max_jump,
        })
    }

    /// `m psi theta theta_tilde delta bound_rec bound_err`.
    pub fn log_line(&self) -> String {
        let delta = self.delta.map_or("none".to_string(), |d| d.to_string());
        format!(
            "{} {} {} {} {} {} {}",
            self.m, self.psi, self.theta, self.theta_tilde, delta, self.bound_reconstructed, self.bound_error
        )
    }
}
