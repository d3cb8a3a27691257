use serde::Serialize;

use super::Functional;
use crate::error::{Error, Result};
use crate::path::PathView;
use crate::scalar::Scalar;

/// `1e-4·max(1, |x|)`.
pub fn default_step<T: Scalar>(spot: T) -> T {
    T::lit(1e-4) * spot.abs().max(T::one())
}

fn check_step<T: Scalar>(h: T) -> Result<()> {
    if !(h > T::zero()) || !h.is_finite() {
        return Err(Error::InvalidParams(format!("step must be positive, got {h}")));
    }
    Ok(())
}

/// `∇_x F(t, x_t)`: the closed form if `f` carries one, finite differences otherwise.
pub fn vertical_derivative<T: Scalar>(
    f: &(impl Functional<T> + ?Sized),
    t: T,
    x: &PathView<'_, T>,
    h: Option<T>,
) -> Result<Vec<T>> {
    if let Some(h) = h {
        check_step(h)?;
    }
    match f.vertical_gradient(t, x) {
        Some(g) => Ok(g),
        None => vertical_derivative_fd(f, t, x, h),
    }
}

/// Central difference per component, one-sided (forward) when the downward
/// bump would leave the positive orthant.
pub fn vertical_derivative_fd<T: Scalar>(
    f: &(impl Functional<T> + ?Sized),
    t: T,
    x: &PathView<'_, T>,
    h: Option<T>,
) -> Result<Vec<T>> {
    let mut out = Vec::with_capacity(x.dim());
    for c in 0..x.dim() {
        let xi = x.spot(c);
        let h = h.unwrap_or_else(|| default_step(xi));
        check_step(h)?;
        let up = f.eval(t, &x.bumped_component(c, h)?);
        let d = if xi - h > T::zero() {
            let down = f.eval(t, &x.bumped_component(c, -h)?);
            (up - down) / (T::lit(2.0) * h)
        } else {
            (up - f.eval(t, x)) / h
        };
        out.push(d);
    }
    Ok(out)
}

/// `(F(t+h, x_t) − F(t, x_t)) / h` with the path frozen at `x_t`.
pub fn horizontal_derivative<T: Scalar>(
    f: &(impl Functional<T> + ?Sized),
    t: T,
    x: &PathView<'_, T>,
    h: Option<T>,
) -> Result<T> {
    let h = h.unwrap_or_else(|| default_step(T::one()));
    check_step(h)?;
    Ok((f.eval(t + h, x) - f.eval(t, x)) / h)
}

/// Forward difference refined by one step-halving Richardson pass.
pub fn horizontal_derivative_richardson<T: Scalar>(
    f: &(impl Functional<T> + ?Sized),
    t: T,
    x: &PathView<'_, T>,
    h: Option<T>,
) -> Result<T> {
    let h = h.unwrap_or_else(|| default_step(T::one()));
    let coarse = horizontal_derivative(f, t, x, Some(h))?;
    let fine = horizontal_derivative(f, t, x, Some(h / T::lit(2.0)))?;
    Ok(T::lit(2.0) * fine - coarse)
}

/// Closed-form gradient next to its finite-difference counterpart.
#[derive(Debug, Clone, Serialize)]
pub struct GradientCheck {
    pub analytic: Option<Vec<f64>>,
    pub numeric: Vec<f64>,
    /// Max componentwise `|a − n| / max(1, |a|)`; zero when no closed form exists.
    pub rel_err: f64,
}

pub fn gradient_check<T: Scalar>(
    f: &(impl Functional<T> + ?Sized),
    t: T,
    x: &PathView<'_, T>,
    h: Option<T>,
) -> Result<GradientCheck> {
    let numeric = vertical_derivative_fd(f, t, x, h)?;
    let analytic = f.vertical_gradient(t, x);
    let rel_err = analytic.as_ref().map_or(0.0, |a| {
        a.iter()
            .zip(&numeric)
            .map(|(a, n)| (a.as_f64() - n.as_f64()).abs() / a.as_f64().abs().max(1.0))
            .fold(0.0, f64::max)
    });
    Ok(GradientCheck {
        analytic: analytic.map(|a| a.iter().map(|v| v.as_f64()).collect()),
        numeric: numeric.iter().map(|v| v.as_f64()).collect(),
        rel_err,
    })
}
