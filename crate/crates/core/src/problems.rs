//! Model problems `u_t - κ u_xx = f(x, t, u)` on an interval with `u = 0` on
//! the boundary.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::scalar::{cst, Real};

pub type Fn1<T> = Arc<dyn Fn(T) -> T + Send + Sync>;
pub type Fn2<T> = Arc<dyn Fn(T, T) -> T + Send + Sync>;
pub type Fn3<T> = Arc<dyn Fn(T, T, T) -> T + Send + Sync>;

/// Local Lipschitz modulus: `|f(v) - f(w)| ≤ 𝔏(t, |v|, |w|) |v - w|`.
#[derive(Clone)]
pub struct LipschitzModulus<T> {
    modulus: Fn3<T>,
    /// Set when `𝔏(t, a, b) = a + b`, which gives a closed form for the root
    /// of the bound condition.
    pub quadratic: bool,
}

impl<T: Real> LipschitzModulus<T> {
    pub fn new(modulus: impl Fn(T, T, T) -> T + Send + Sync + 'static) -> Self {
        Self { modulus: Arc::new(modulus), quadratic: false }
    }

    pub fn constant(c: T) -> Self {
        Self::new(move |_, _, _| c)
    }

    /// `𝔏(t, a, b) = a + b`, the modulus of `f(u) = u²`.
    pub fn quadratic() -> Self {
        Self { modulus: Arc::new(|_, a, b| a + b), quadratic: true }
    }

    #[inline]
    pub fn eval(&self, t: T, a: T, b: T) -> T {
        (self.modulus)(t, a, b)
    }
}

impl<T> fmt::Debug for LipschitzModulus<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("LipschitzModulus").field("quadratic", &self.quadratic).finish()
    }
}

/// Everything the solver needs to know about a problem.
#[derive(Clone)]
pub struct ProblemDef<T> {
    pub name: String,
    pub a: T,
    pub b: T,
    pub kappa: T,
    pub u0: Fn1<T>,
    pub u0_dd: Fn1<T>,
    /// `f(x, t, u)`.
    pub f: Fn3<T>,
    pub lipschitz: LipschitzModulus<T>,
    /// Polynomial degree of `f` in `u` used to size the time quadrature;
    /// 4 for non-polynomial nonlinearities.
    pub f_degree: usize,
    /// Exact solution `u(x, t)` when known.
    pub exact: Option<Fn2<T>>,
}

impl<T> fmt::Debug for ProblemDef<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ProblemDef")
            .field("name", &self.name)
            .field("lipschitz", &self.lipschitz)
            .field("f_degree", &self.f_degree)
            .field("exact", &self.exact.is_some())
            .finish()
    }
}

pub const PRESETS: [&str; 5] = ["quadratic_gaussian", "cubic", "exponential", "linear_manufactured", "linear_heat"];

/// Gaussian `amp·exp(-2x²)` on `(-5, 5)` shifted so it vanishes at both ends.
fn gaussian<T: Real>(amp: f64) -> (Fn1<T>, Fn1<T>) {
    let amp = cst::<T>(amp);
    let two = cst::<T>(2.0);
    let raw = move |x: T| amp * (-two * x * x).exp();
    // The raw boundary values are equal, so the linear interpolant is a constant.
    let tail = raw(cst(5.0));
    let u0 = Arc::new(move |x: T| raw(x) - tail);
    let u0_dd = Arc::new(move |x: T| amp * (cst::<T>(16.0) * x * x - cst(4.0)) * (-two * x * x).exp());
    (u0, u0_dd)
}

/// Looks up a preset by name.
pub fn preset<T: Real>(name: &str) -> Result<ProblemDef<T>> {
    let pi = T::PI();
    let sin_pi = move |x: T| (pi * x).sin();
    let p = match name {
        "quadratic_gaussian" => {
            let (u0, u0_dd) = gaussian::<T>(10.0);
            ProblemDef {
                name: name.into(),
                a: cst(-5.0),
                b: cst(5.0),
                kappa: T::one(),
                u0,
                u0_dd,
                f: Arc::new(|_, _, u| u * u),
                lipschitz: LipschitzModulus::quadratic(),
                f_degree: 2,
                exact: None,
            }
        }
        "cubic" => {
            let (u0, u0_dd) = gaussian::<T>(5.0);
            ProblemDef {
                name: name.into(),
                a: cst(-5.0),
                b: cst(5.0),
                kappa: T::one(),
                u0,
                u0_dd,
                f: Arc::new(|_, _, u| u * u * u),
                lipschitz: LipschitzModulus::new(|_, a, b| a * a + a * b + b * b),
                f_degree: 3,
                exact: None,
            }
        }
        "exponential" => {
            let hp = pi * cst(0.5);
            ProblemDef {
                name: name.into(),
                a: -T::one(),
                b: T::one(),
                kappa: T::one(),
                u0: Arc::new(move |x| (hp * x).cos()),
                u0_dd: Arc::new(move |x| -hp * hp * (hp * x).cos()),
                f: Arc::new(|_, _, u: T| u.exp()),
                lipschitz: LipschitzModulus::new(|_, a: T, b: T| a.max(b).exp()),
                f_degree: 4,
                exact: None,
            }
        }
        "linear_manufactured" => {
            let c = pi * pi - cst(2.0);
            ProblemDef {
                name: name.into(),
                a: T::zero(),
                b: T::one(),
                kappa: T::one(),
                u0: Arc::new(sin_pi),
                u0_dd: Arc::new(move |x| -pi * pi * sin_pi(x)),
                f: Arc::new(move |x, t, u| u + c * (-t).exp() * sin_pi(x)),
                lipschitz: LipschitzModulus::constant(T::one()),
                f_degree: 4,
                exact: Some(Arc::new(move |x, t| (-t).exp() * sin_pi(x))),
            }
        }
        "linear_heat" => ProblemDef {
            name: name.into(),
            a: T::zero(),
            b: T::one(),
            kappa: T::one(),
            u0: Arc::new(sin_pi),
            u0_dd: Arc::new(move |x| -pi * pi * sin_pi(x)),
            f: Arc::new(|_, _, _| T::zero()),
            lipschitz: LipschitzModulus::constant(T::zero()),
            f_degree: 1,
            exact: Some(Arc::new(move |x, t| (-pi * pi * t).exp() * sin_pi(x))),
        },
        other => return Err(Error::UnknownProblem(other.into())),
    };
    Ok(p)
}
