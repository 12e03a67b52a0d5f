//! Legendre polynomials, Gauss rules and the per-slab temporal machinery:
//! the orthonormal Legendre basis on `I_m`, the L² projection onto it, and the
//! lifting polynomial `Q_m` that turns a node jump into a continuous
//! reconstruction.

use crate::error::{Error, Result};
use crate::scalar::{cst, from_usize, to_f64, Real};

/// Value of the Legendre polynomial `P_n` at `x`, by three-term recurrence.
pub fn legendre<T: Real>(n: usize, x: T) -> T {
    let mut p_prev = T::one();
    if n == 0 {
        return p_prev;
    }
    let mut p = x;
    for i in 1..n {
        let fi = from_usize::<T>(i);
        let next = ((fi + fi + T::one()) * x * p - fi * p_prev) / (fi + T::one());
        p_prev = p;
        p = next;
    }
    p
}

/// Fills `out[i] = [P_i(x), P_i'(x), P_i''(x)]` for `i = 0..out.len()`.
pub fn legendre_with_derivs<T: Real>(x: T, out: &mut [[T; 3]]) {
    let n = out.len();
    if n == 0 {
        return;
    }
    out[0] = [T::one(), T::zero(), T::zero()];
    if n == 1 {
        return;
    }
    out[1] = [x, T::one(), T::zero()];
    for i in 1..n - 1 {
        let fi = from_usize::<T>(i);
        let two_i_plus_one = fi + fi + T::one();
        let v = (two_i_plus_one * x * out[i][0] - fi * out[i - 1][0]) / (fi + T::one());
        let d1 = out[i - 1][1] + two_i_plus_one * out[i][0];
        let d2 = out[i - 1][2] + two_i_plus_one * out[i][1];
        out[i + 1] = [v, d1, d2];
    }
}

fn legendre_and_derivative<T: Real>(n: usize, x: T) -> (T, T, T) {
    let mut buf = vec![[T::zero(); 3]; n + 1];
    legendre_with_derivs(x, &mut buf);
    (buf[n][0], buf[n][1], buf[n][2])
}

/// Quadrature rule on the reference interval `[-1, 1]`.
#[derive(Clone, Debug, PartialEq)]
pub struct RefQuadrature<T> {
    pub points: Vec<T>,
    pub weights: Vec<T>,
}

impl<T: Real> RefQuadrature<T> {
    /// `n`-point Gauss–Legendre rule, exact for polynomials of degree `2n - 1`.
    pub fn gauss_legendre(n: usize) -> Self {
        assert!(n > 0, "Gauss-Legendre rule needs at least one point");
        let mut points = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let nf = from_usize::<T>(n);
        let half = (n + 1) / 2;
        for i in 0..half {
            // Tricomi initial guess, then Newton on P_n.
            let theta = T::PI() * (from_usize::<T>(i) + cst(0.75)) / (nf + cst(0.5));
            let mut x = theta.cos();
            for _ in 0..100 {
                let (p, dp, _) = legendre_and_derivative(n, x);
                let dx = p / dp;
                x = x - dx;
                if dx.abs() <= T::epsilon() * cst(4.0) {
                    break;
                }
            }
            let (_, dp, _) = legendre_and_derivative(n, x);
            let w = cst::<T>(2.0) / ((T::one() - x * x) * dp * dp);
            points[n - 1 - i] = x;
            weights[n - 1 - i] = w;
            points[i] = -x;
            weights[i] = w;
        }
        if n % 2 == 1 {
            points[n / 2] = T::zero();
        }
        Self { points, weights }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Highest polynomial degree integrated exactly.
    pub fn exact_degree(&self) -> usize {
        2 * self.len() - 1
    }

    /// Integrates `f` over the physical interval `[a, b]`.
    pub fn integrate(&self, a: T, b: T, f: impl Fn(T) -> T) -> T {
        let half = (b - a) * cst(0.5);
        let mid = (b + a) * cst(0.5);
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<T>()
            * half
    }
}

/// Gauss–Lobatto–Legendre nodes of degree `p` on `[-1, 1]` (ascending,
/// endpoints included).
pub fn gauss_lobatto_nodes<T: Real>(p: usize) -> Vec<T> {
    assert!(p >= 1);
    let mut nodes = vec![T::zero(); p + 1];
    nodes[0] = -T::one();
    nodes[p] = T::one();
    let pf = from_usize::<T>(p);
    for i in 1..p {
        let mut x = -(T::PI() * from_usize::<T>(i) / pf).cos();
        for _ in 0..100 {
            let (_, d1, d2) = legendre_and_derivative(p, x);
            let dx = d1 / d2;
            x = x - dx;
            if dx.abs() <= T::epsilon() * cst(4.0) {
                break;
            }
        }
        nodes[i] = x;
    }
    nodes
}

/// Affine map between the reference interval `[-1, 1]` and `[t_start, t_end]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IntervalMap<T> {
    pub t_start: T,
    pub t_end: T,
}

impl<T: Real> IntervalMap<T> {
    pub fn new(t_start: T, t_end: T) -> Result<Self> {
        if !(t_end > t_start) || !t_start.is_finite() || !t_end.is_finite() {
            return Err(Error::InvalidInterval {
                t_start: to_f64(t_start),
                t_end: to_f64(t_end),
            });
        }
        Ok(Self { t_start, t_end })
    }

    /// Step length `k = t_end - t_start`.
    #[inline]
    pub fn k(&self) -> T {
        self.t_end - self.t_start
    }

    #[inline]
    pub fn to_physical(&self, t_hat: T) -> T {
        (self.k() * t_hat + (self.t_start + self.t_end)) * cst(0.5)
    }

    #[inline]
    pub fn to_reference(&self, t: T) -> T {
        if t == self.t_end {
            return T::one();
        }
        if t == self.t_start {
            return -T::one();
        }
        (t + t - (self.t_start + self.t_end)) / self.k()
    }

    /// Physical points and weights of a reference rule mapped onto the interval.
    pub fn map_rule(&self, quad: &RefQuadrature<T>) -> (Vec<T>, Vec<T>) {
        let half = self.k() * cst(0.5);
        let pts = quad.points.iter().map(|&p| self.to_physical(p)).collect();
        let wts = quad.weights.iter().map(|&w| w * half).collect();
        (pts, wts)
    }
}

/// Scale factor of the `j`-th L²(I_m)-orthonormal Legendre polynomial.
#[inline]
pub fn orthonormal_scale<T: Real>(j: usize, k: T) -> T {
    (from_usize::<T>(2 * j + 1) / k).sqrt()
}

/// Values of the orthonormal basis and its first two time derivatives at `t`.
pub fn orthonormal_basis<T: Real>(r: usize, map: &IntervalMap<T>, t: T) -> Vec<[T; 3]> {
    let k = map.k();
    let dt = cst::<T>(2.0) / k;
    let mut buf = vec![[T::zero(); 3]; r + 1];
    legendre_with_derivs(map.to_reference(t), &mut buf);
    buf.iter()
        .enumerate()
        .map(|(j, v)| {
            let s = orthonormal_scale(j, k);
            [s * v[0], s * v[1] * dt, s * v[2] * dt * dt]
        })
        .collect()
}

/// Lifting polynomial `Q(t) = ½(-1)^r (P_{r+1}(t̂) - P_r(t̂))` and its first two
/// time derivatives.
pub fn lifting_q_all<T: Real>(r: usize, t: T, map: &IntervalMap<T>) -> [T; 3] {
    let mut buf = vec![[T::zero(); 3]; r + 2];
    legendre_with_derivs(map.to_reference(t), &mut buf);
    let sign = if r % 2 == 0 { cst::<T>(0.5) } else { cst::<T>(-0.5) };
    let dt = cst::<T>(2.0) / map.k();
    [
        sign * (buf[r + 1][0] - buf[r][0]),
        sign * (buf[r + 1][1] - buf[r][1]) * dt,
        sign * (buf[r + 1][2] - buf[r][2]) * dt * dt,
    ]
}

/// `Q_m(t)`; equals -1 at `t_start` and 0 at `t_end` for every degree.
pub fn lifting_q<T: Real>(r: usize, t: T, map: &IntervalMap<T>) -> T {
    lifting_q_all(r, t, map)[0]
}

/// `dQ_m/dt`, chain-rule factor `2/k` included.
pub fn lifting_q_dt<T: Real>(r: usize, t: T, map: &IntervalMap<T>) -> T {
    lifting_q_all(r, t, map)[1]
}

/// Coefficients against the L²(I_m)-orthonormal Legendre basis.
#[derive(Clone, Debug, PartialEq)]
pub struct LegendreCoeffs<T>(pub Vec<T>);

impl<T: Real> LegendreCoeffs<T> {
    pub fn degree(&self) -> usize {
        self.0.len().saturating_sub(1)
    }

    pub fn eval(&self, t: T, map: &IntervalMap<T>) -> T {
        let basis = orthonormal_basis(self.degree(), map, t);
        self.0.iter().zip(&basis).map(|(&c, b)| c * b[0]).sum()
    }
}

/// Temporal L² projection of `f` onto polynomials of degree `r` on the interval.
pub fn project_l2_time<T: Real>(
    f: impl Fn(T) -> T,
    r: usize,
    map: &IntervalMap<T>,
    quad: &RefQuadrature<T>,
) -> LegendreCoeffs<T> {
    let k = map.k();
    let half = k * cst(0.5);
    let mut coeffs = vec![T::zero(); r + 1];
    let mut buf = vec![[T::zero(); 3]; r + 1];
    for (&p, &w) in quad.points.iter().zip(&quad.weights) {
        legendre_with_derivs(p, &mut buf);
        let fv = f(map.to_physical(p)) * w * half;
        for (j, c) in coeffs.iter_mut().enumerate() {
            *c += fv * buf[j][0] * orthonormal_scale(j, k);
        }
    }
    LegendreCoeffs(coeffs)
}

/// Number of Gauss points used for time integrals on a degree-`r` slab when
/// the nonlinearity is (at most) a polynomial of degree `q_f`.
pub fn time_quadrature_points(r: usize, q_f: usize) -> usize {
    let nonlinear = (q_f * (r + 1) + r).div_ceil(2) + 1;
    (r + 3).max(nonlinear)
}

/// Orthonormal basis and lifting polynomial tabulated on one slab: at the
/// Gauss points of the slab rule, and at both end points.
#[derive(Clone, Debug)]
pub struct SlabTimeTable<T> {
    pub map: IntervalMap<T>,
    pub r: usize,
    /// Physical quadrature abscissae.
    pub times: Vec<T>,
    /// Physical quadrature weights (sum to `k`).
    pub weights: Vec<T>,
    /// `basis[q][j] = [L_j, L_j', L_j'']` at `times[q]`.
    pub basis: Vec<Vec<[T; 3]>>,
    /// `lift[q] = [Q, Q', Q'']` at `times[q]`.
    pub lift: Vec<[T; 3]>,
    pub basis_start: Vec<[T; 3]>,
    pub basis_end: Vec<[T; 3]>,
    pub lift_start: [T; 3],
    pub lift_end: [T; 3],
}

impl<T: Real> SlabTimeTable<T> {
    pub fn new(map: IntervalMap<T>, r: usize, n_points: usize) -> Self {
        let quad = RefQuadrature::<T>::gauss_legendre(n_points);
        let (times, weights) = map.map_rule(&quad);
        let basis = times.iter().map(|&t| orthonormal_basis(r, &map, t)).collect();
        let lift = times.iter().map(|&t| lifting_q_all(r, t, &map)).collect();
        Self {
            basis_start: orthonormal_basis(r, &map, map.t_start),
            basis_end: orthonormal_basis(r, &map, map.t_end),
            lift_start: lifting_q_all(r, map.t_start, &map),
            lift_end: lifting_q_all(r, map.t_end, &map),
            map,
            r,
            times,
            weights,
            basis,
            lift,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // Oracle: explicit closed forms of the first few Legendre polynomials.
    fn legendre_closed(n: usize, x: f64) -> f64 {
        match n {
            0 => 1.0,
            1 => x,
            2 => 0.5 * (3.0 * x * x - 1.0),
            3 => 0.5 * (5.0 * x.powi(3) - 3.0 * x),
            4 => (35.0 * x.powi(4) - 30.0 * x * x + 3.0) / 8.0,
            _ => unreachable!(),
        }
    }

    #[test]
    fn legendre_examples() {
        assert_eq!(legendre(0, 0.3_f64), 1.0);
        assert_eq!(legendre(3, 1.0_f64), 1.0);
        assert_eq!(legendre(3, -1.0_f64), -1.0);
        assert_relative_eq!(legendre(2, 0.0_f64), -0.5);
        for n in 0..=4 {
            for i in 0..=20 {
                let x = -1.0 + 0.1 * i as f64;
                assert_relative_eq!(legendre(n, x), legendre_closed(n, x), epsilon = 1e-14);
            }
        }
        for n in 0..12 {
            assert_eq!(legendre(n, 1.0_f64), 1.0);
            assert_eq!(legendre(n, -1.0_f64), if n % 2 == 0 { 1.0 } else { -1.0 });
        }
    }

    #[test]
    fn legendre_derivatives_match_finite_differences() {
        let mut buf = vec![[0.0_f64; 3]; 9];
        let h = 1e-5;
        for &x in &[-0.7, -0.1, 0.33, 0.9] {
            legendre_with_derivs(x, &mut buf);
            for (n, v) in buf.iter().enumerate() {
                let fd1 = (legendre(n, x + h) - legendre(n, x - h)) / (2.0 * h);
                let fd2 =
                    (legendre(n, x + h) - 2.0 * legendre(n, x) + legendre(n, x - h)) / (h * h);
                assert_relative_eq!(v[0], legendre(n, x), epsilon = 1e-14);
                assert!((v[1] - fd1).abs() < 1e-7 * (1.0 + fd1.abs()));
                assert!((v[2] - fd2).abs() < 1e-3 * (1.0 + fd2.abs()));
            }
        }
    }

    #[test]
    fn gauss_rules_integrate_monomials_exactly() {
        for n in 1..=12 {
            let q = RefQuadrature::<f64>::gauss_legendre(n);
            let wsum: f64 = q.weights.iter().sum();
            assert_relative_eq!(wsum, 2.0, epsilon = 1e-13);
            assert!(q.weights.iter().all(|&w| w > 0.0));
            for d in 0..=q.exact_degree() {
                let exact = if d % 2 == 1 { 0.0 } else { 2.0 / (d as f64 + 1.0) };
                let approx: f64 =
                    q.points.iter().zip(&q.weights).map(|(x, w)| w * x.powi(d as i32)).sum();
                assert!((approx - exact).abs() < 1e-13, "n={n} d={d}");
            }
        }
    }

    #[test]
    fn gauss_rule_single_precision() {
        let q = RefQuadrature::<f32>::gauss_legendre(5);
        let wsum: f32 = q.weights.iter().sum();
        assert!((wsum - 2.0).abs() < 1e-5);
        let i4: f32 = q.points.iter().zip(&q.weights).map(|(x, w)| w * x.powi(4)).sum();
        assert!((i4 - 0.4).abs() < 1e-5);
    }

    #[test]
    fn lobatto_nodes_are_extrema_of_legendre() {
        for p in 1..=10 {
            let nodes = gauss_lobatto_nodes::<f64>(p);
            assert_eq!(nodes.len(), p + 1);
            assert!(nodes.windows(2).all(|w| w[0] < w[1]));
            for &x in &nodes[1..p] {
                let (_, d1, _) = legendre_and_derivative(p, x);
                assert!(d1.abs() < 1e-11, "p={p} x={x} d1={d1}");
            }
        }
    }

    #[test]
    fn interval_map_round_trip() {
        let map = IntervalMap::new(0.3_f64, 0.45).unwrap();
        for i in 0..=10 {
            let t_hat = -1.0 + 0.2 * i as f64;
            assert_relative_eq!(map.to_reference(map.to_physical(t_hat)), t_hat, epsilon = 1e-13);
        }
        assert_eq!(map.to_physical(-1.0), 0.3);
        assert!(IntervalMap::new(1.0_f64, 1.0).is_err());
    }

    #[test]
    fn lifting_endpoint_values() {
        let map = IntervalMap::new(0.2_f64, 0.7).unwrap();
        for r in 0..8 {
            assert_eq!(lifting_q(r, map.t_start, &map), -1.0);
            assert_eq!(lifting_q(r, map.t_end, &map), 0.0);
        }
        let mid = 0.5 * (map.t_start + map.t_end);
        assert_relative_eq!(lifting_q(1, mid, &map), 0.25);
        for &t in &[0.2, 0.31, 0.6] {
            assert_relative_eq!(lifting_q_dt(0, t, &map), 1.0 / map.k(), epsilon = 1e-14);
        }
    }

    #[test]
    fn lifting_derivative_matches_central_difference() {
        let map = IntervalMap::new(1.0_f64, 1.25).unwrap();
        let h = 1e-6;
        for r in 0..7 {
            for &t in &[1.01, 1.1, 1.2] {
                let fd = (lifting_q(r, t + h, &map) - lifting_q(r, t - h, &map)) / (2.0 * h);
                let d = lifting_q_dt(r, t, &map);
                assert!((d - fd).abs() <= 1e-8 * d.abs().max(1.0), "r={r}");
            }
        }
    }

    #[test]
    fn lifting_duality_on_monomials() {
        // ∫ Q' v = v(t_start) for polynomials of degree ≤ r.
        let map = IntervalMap::new(-0.5_f64, 1.5).unwrap();
        for r in 0..7 {
            let quad = RefQuadrature::gauss_legendre(r + 2);
            for d in 0..=r {
                let v = |t: f64| (t - 0.1).powi(d as i32);
                let lhs = quad.integrate(map.t_start, map.t_end, |t| lifting_q_dt(r, t, &map) * v(t));
                assert!((lhs - v(map.t_start)).abs() < 1e-10, "r={r} d={d}");
            }
        }
    }

    #[test]
    fn projection_examples() {
        let map = IntervalMap::new(0.0_f64, 1.0).unwrap();
        let quad = RefQuadrature::gauss_legendre(6);
        let c = project_l2_time(|t| t * t, 0, &map, &quad);
        assert_relative_eq!(c.eval(0.4, &map), 1.0 / 3.0, epsilon = 1e-14);

        let cubic = |t: f64| 1.0 - 2.0 * t + 0.5 * t.powi(3);
        let c3 = project_l2_time(cubic, 3, &map, &quad);
        for &t in &[0.0, 0.25, 0.8] {
            assert_relative_eq!(c3.eval(t, &map), cubic(t), epsilon = 1e-12);
        }
    }

    #[test]
    fn projection_residual_is_orthogonal() {
        let map = IntervalMap::new(0.1_f64, 0.4).unwrap();
        let f = |t: f64| (3.0 * t).exp() * (5.0 * t).sin();
        for r in 0..5 {
            let quad = RefQuadrature::gauss_legendre(3 * (r + 3));
            let c = project_l2_time(f, r, &map, &quad);
            let oracle = RefQuadrature::gauss_legendre(4 * 3 * (r + 3));
            for j in 0..=r {
                let ip = oracle.integrate(map.t_start, map.t_end, |t| {
                    (f(t) - c.eval(t, &map)) * legendre(j, map.to_reference(t))
                });
                assert!(ip.abs() < 1e-10, "r={r} j={j} ip={ip}");
            }
        }
    }

    #[test]
    fn quadrature_point_rule() {
        assert_eq!(time_quadrature_points(0, 2), 3);
        assert_eq!(time_quadrature_points(2, 2), 5);
        assert_eq!(time_quadrature_points(3, 2), 7);
    }
}
