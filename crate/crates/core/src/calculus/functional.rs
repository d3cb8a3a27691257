use std::sync::Arc;

use crate::path::{PathView, StopSide};
use crate::scalar::Scalar;

/// A non-anticipative functional `(t, x_t) -> R`.
///
/// `x` is always a stopped path, so an implementation cannot read the future.
/// `t` may exceed the stopping time of `x` (horizontal moves freeze the path).
pub trait Functional<T: Scalar>: Send + Sync {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T;

    /// Closed-form vertical gradient, when one is known.
    fn vertical_gradient(&self, _t: T, _x: &PathView<'_, T>) -> Option<Vec<T>> {
        None
    }

    /// Closed-form horizontal derivative, when one is known.
    fn horizontal_derivative(&self, _t: T, _x: &PathView<'_, T>) -> Option<T> {
        None
    }

    fn label(&self) -> String {
        "functional".into()
    }
}

impl<T: Scalar, F: Functional<T> + ?Sized> Functional<T> for Arc<F> {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T {
        (**self).eval(t, x)
    }
    fn vertical_gradient(&self, t: T, x: &PathView<'_, T>) -> Option<Vec<T>> {
        (**self).vertical_gradient(t, x)
    }
    fn horizontal_derivative(&self, t: T, x: &PathView<'_, T>) -> Option<T> {
        (**self).horizontal_derivative(t, x)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

impl<T: Scalar, F: Functional<T> + ?Sized> Functional<T> for Box<F> {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T {
        (**self).eval(t, x)
    }
    fn vertical_gradient(&self, t: T, x: &PathView<'_, T>) -> Option<Vec<T>> {
        (**self).vertical_gradient(t, x)
    }
    fn horizontal_derivative(&self, t: T, x: &PathView<'_, T>) -> Option<T> {
        (**self).horizontal_derivative(t, x)
    }
    fn label(&self) -> String {
        (**self).label()
    }
}

/// Vector-valued functional used as an integrand against a `d`-dimensional path.
pub trait Integrand<T: Scalar>: Send + Sync {
    fn dim(&self) -> usize;
    fn eval_into(&self, t: T, x: &PathView<'_, T>, out: &mut [T]);
    fn label(&self) -> String;
}

/// Implements `Integrand` (dimension 1) for scalar functional types.
macro_rules! scalar_integrand {
    ($([$($g:tt)*] $ty:ty),* $(,)?) => {$(
        impl<$($g)*> $crate::calculus::Integrand<T> for $ty {
            fn dim(&self) -> usize {
                1
            }
            fn eval_into(&self, t: T, x: &$crate::path::PathView<'_, T>, out: &mut [T]) {
                out[0] = $crate::calculus::Functional::eval(self, t, x);
            }
            fn label(&self) -> String {
                $crate::calculus::Functional::label(self)
            }
        }
    )*};
}
pub(crate) use scalar_integrand;

scalar_integrand!(
    [T: Scalar] dyn Functional<T>,
    [T: Scalar, F: Functional<T> + ?Sized] Arc<F>,
    [T: Scalar, F: Functional<T> + ?Sized] Box<F>,
    [T: Scalar] FnFunctional<T>,
);

/// Stacks scalar functionals into a vector integrand.
#[derive(Clone)]
pub struct Components<T: Scalar>(pub Vec<Arc<dyn Functional<T>>>);

impl<T: Scalar> Integrand<T> for Components<T> {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn eval_into(&self, t: T, x: &PathView<'_, T>, out: &mut [T]) {
        for (o, f) in out.iter_mut().zip(&self.0) {
            *o = f.eval(t, x);
        }
    }
    fn label(&self) -> String {
        let parts: Vec<String> = self.0.iter().map(|f| Functional::label(f)).collect();
        format!("[{}]", parts.join(", "))
    }
}

type EvalFn<T> = Box<dyn Fn(T, &PathView<'_, T>) -> T + Send + Sync>;
type GradFn<T> = Box<dyn Fn(T, &PathView<'_, T>) -> Vec<T> + Send + Sync>;

/// Closure-backed functional with optional closed-form derivatives.
pub struct FnFunctional<T: Scalar> {
    label: String,
    f: EvalFn<T>,
    grad: Option<GradFn<T>>,
    theta: Option<EvalFn<T>>,
}

impl<T: Scalar> FnFunctional<T> {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(T, &PathView<'_, T>) -> T + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            f: Box::new(f),
            grad: None,
            theta: None,
        }
    }

    pub fn with_gradient(
        mut self,
        g: impl Fn(T, &PathView<'_, T>) -> Vec<T> + Send + Sync + 'static,
    ) -> Self {
        self.grad = Some(Box::new(g));
        self
    }

    pub fn with_horizontal(
        mut self,
        d: impl Fn(T, &PathView<'_, T>) -> T + Send + Sync + 'static,
    ) -> Self {
        self.theta = Some(Box::new(d));
        self
    }
}

impl<T: Scalar> Functional<T> for FnFunctional<T> {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T {
        (self.f)(t, x)
    }
    fn vertical_gradient(&self, t: T, x: &PathView<'_, T>) -> Option<Vec<T>> {
        self.grad.as_ref().map(|g| g(t, x))
    }
    fn horizontal_derivative(&self, t: T, x: &PathView<'_, T>) -> Option<T> {
        self.theta.as_ref().map(|d| d(t, x))
    }
    fn label(&self) -> String {
        self.label.clone()
    }
}

/// Everyday functionals.
pub mod library {
    use super::*;

    pub fn constant<T: Scalar>(c: T) -> FnFunctional<T> {
        FnFunctional::new(format!("const({c})"), move |_, _| c)
            .with_gradient(|_, x| vec![T::zero(); x.dim()])
            .with_horizontal(|_, _| T::zero())
    }

    /// `x(t)` (first component).
    pub fn spot<T: Scalar>() -> FnFunctional<T> {
        FnFunctional::new("x(t)", |_, x| x.spot(0))
            .with_gradient(|_, x| {
                let mut g = vec![T::zero(); x.dim()];
                g[0] = T::one();
                g
            })
            .with_horizontal(|_, _| T::zero())
    }

    /// `x(t-)`: strictly causal.
    pub fn left_spot<T: Scalar>() -> FnFunctional<T> {
        FnFunctional::new("x(t-)", |t, x| x.left_limit(t, 0))
            .with_gradient(|_, x| vec![T::zero(); x.dim()])
    }

    /// `x(t)^2`.
    pub fn spot_squared<T: Scalar>() -> FnFunctional<T> {
        FnFunctional::new("x(t)^2", |_, x| x.spot(0) * x.spot(0))
            .with_gradient(|_, x| vec![T::lit(2.0) * x.spot(0)])
            .with_horizontal(|_, _| T::zero())
    }

    /// `t·x(t)`.
    pub fn time_times_spot<T: Scalar>() -> FnFunctional<T> {
        FnFunctional::new("t*x(t)", |t, x| t * x.spot(0))
            .with_gradient(|t, _| vec![t])
            .with_horizontal(|_, x| x.spot(0))
    }

    /// `(1/T) ∫_0^t x(s) ds`.
    pub fn running_mean<T: Scalar>(horizon: T) -> FnFunctional<T> {
        FnFunctional::new("running mean", move |t, x| x.integral(t, 0) / horizon)
            .with_gradient(|_, x| vec![T::zero(); x.dim()])
            .with_horizontal(move |t, x| x.value(t, 0) / horizon)
    }

    /// `1{Δx(t) != 0}`: discontinuous on purpose.
    pub fn jump_indicator<T: Scalar>() -> FnFunctional<T> {
        FnFunctional::new("1{jump}", |t, x: &PathView<'_, T>| {
            if x.jump(t, 0).abs() > T::lit(1e-12) {
                T::one()
            } else {
                T::zero()
            }
        })
    }

    /// Evaluates `f` on `x_{t-}`, i.e. the left-limit version `F_-`.
    pub fn strictly_causal<T: Scalar, F: Functional<T> + 'static>(f: F) -> FnFunctional<T> {
        let label = format!("{}(t, x_t-)", Functional::label(&f));
        FnFunctional::new(label, move |t, x| f.eval(t, &x.restop(t, StopSide::Before)))
    }
}
