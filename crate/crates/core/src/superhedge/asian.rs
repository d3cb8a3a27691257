use serde::{Deserialize, Serialize};

use crate::calculus::Functional;
use crate::error::{Error, Result};
use crate::path::{PathView, Segment};
use crate::scalar::Scalar;

/// Open price band `a < x < b`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBounds<T> {
    pub a: T,
    pub b: T,
}

impl<T: Scalar> ScenarioBounds<T> {
    pub fn new(a: T, b: T) -> Result<Self> {
        if !(a >= T::zero()) || !(b > a) || !b.is_finite() {
            return Err(Error::InvalidParams(format!("need 0 <= a < b, got a = {a}, b = {b}")));
        }
        Ok(Self { a, b })
    }

    pub fn width(&self) -> T {
        self.b - self.a
    }

    pub fn contains(&self, x: T) -> bool {
        self.a < x && x < self.b
    }

    /// Inner margin used by generators and the oracle.
    pub fn margin(&self) -> T {
        T::lit(1e-6) * self.width()
    }
}

/// Asian call `((1/T)∫_0^T x ds − K)^+` on the band `(a, b)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsianParams<T> {
    #[serde(rename = "T")]
    pub maturity: T,
    #[serde(rename = "K")]
    pub strike: T,
    pub a: T,
    pub b: T,
}

impl<T: Scalar> AsianParams<T> {
    pub fn new(maturity: T, strike: T, a: T, b: T) -> Result<Self> {
        if !(maturity > T::zero()) || !(strike >= T::zero()) {
            return Err(Error::InvalidParams(format!(
                "need T > 0 and K >= 0, got T = {maturity}, K = {strike}"
            )));
        }
        ScenarioBounds::new(a, b)?;
        Ok(Self { maturity, strike, a, b })
    }

    pub fn bounds(&self) -> ScenarioBounds<T> {
        ScenarioBounds { a: self.a, b: self.b }
    }

    pub fn payoff(&self, running: T) -> T {
        (running / self.maturity - self.strike).max(T::zero())
    }

    /// `(t, A_t, x(t))` read off a stopped path; `t` is clamped at maturity.
    pub fn state(&self, t: T, x: &PathView<'_, T>) -> AsianState<T> {
        let s = t.min(self.maturity);
        AsianState {
            t: s,
            running: x.integral(s, 0),
            spot: x.value(s, 0),
        }
    }

    fn check(&self, s: &AsianState<T>) -> Result<()> {
        let tol = T::lit(1e-9) * (T::one() + s.t * self.b);
        let ok = self.bounds().contains(s.spot)
            && s.t >= T::zero()
            && s.t <= self.maturity + T::time_tol()
            && s.running >= self.a * s.t - tol
            && s.running <= self.b * s.t + tol;
        if ok {
            Ok(())
        } else {
            Err(Error::OutOfBounds {
                t: s.t.as_f64(),
                spot: s.spot.as_f64(),
                a: self.a.as_f64(),
                b: self.b.as_f64(),
            })
        }
    }

    /// Payoff if the spot sat at `c` for the rest of the horizon.
    #[inline]
    fn branch(&self, s: &AsianState<T>, c: T) -> T {
        let rest = (self.maturity - s.t).max(T::zero());
        ((s.running + c * rest) / self.maturity - self.strike).max(T::zero())
    }

    pub fn h_plus(&self, s: &AsianState<T>) -> T {
        self.branch(s, self.b)
    }

    pub fn h_minus(&self, s: &AsianState<T>) -> T {
        self.branch(s, self.a)
    }

    pub(crate) fn cost_to_go_raw(&self, s: &AsianState<T>) -> T {
        let p = (s.spot - self.a) / (self.b - self.a);
        p * self.h_plus(s) + (T::one() - p) * self.h_minus(s)
    }

    pub(crate) fn delta_raw(&self, s: &AsianState<T>) -> T {
        (self.h_plus(s) - self.h_minus(s)) / (self.b - self.a)
    }

    pub(crate) fn theta_raw(&self, s: &AsianState<T>) -> T {
        if s.t >= self.maturity || !(self.h_plus(s) > T::zero()) || self.h_minus(s) > T::zero() {
            return T::zero();
        }
        (s.spot - self.b) * (s.spot - self.a) / (self.maturity * (self.b - self.a))
    }

    /// Exact `∫_{s0}^{s1} 𝒟U(s, x_s) ds` along the stopped path `x`.
    pub fn theta_integral(&self, x: &PathView<'_, T>, s0: T, s1: T) -> T {
        let s1 = s1.min(self.maturity);
        let mut total = T::zero();
        x.for_each_segment(s0, s1, 0, |seg| total = total + self.segment_theta(&seg));
        total
    }

    fn segment_theta(&self, seg: &Segment<T>) -> T {
        let len = seg.end - seg.start;
        if !(len > T::zero()) {
            return T::zero();
        }
        let (m, x0, big_t) = (seg.slope, seg.spot, self.maturity);
        let half = T::lit(0.5);
        // Sign of T·(H^± − 0) before clipping: (m/2)τ² + (x0 − c)τ + g0.
        let coeffs = |c: T| {
            (
                half * m,
                x0 - c,
                seg.area + c * (big_t - seg.start) - self.strike * big_t,
            )
        };
        let (qp, qm) = (coeffs(self.b), coeffs(self.a));
        let mut cuts = vec![T::zero(), len];
        for q in [qp, qm] {
            for r in quadratic_roots(q) {
                if r > T::zero() && r < len {
                    cuts.push(r);
                }
            }
        }
        cuts.sort_by(|u, v| u.partial_cmp(v).unwrap());
        let eval = |q: (T, T, T), tau: T| (q.0 * tau + q.1) * tau + q.2;
        let (p, q) = (x0 - self.b, x0 - self.a);
        let anti = |tau: T| {
            p * q * tau + (p + q) * m * tau * tau * half + m * m * tau * tau * tau / T::lit(3.0)
        };
        let mut sum = T::zero();
        for w in cuts.windows(2) {
            let (lo, hi) = (w[0], w[1]);
            if !(hi > lo) {
                continue;
            }
            let mid = half * (lo + hi);
            if eval(qp, mid) > T::zero() && !(eval(qm, mid) > T::zero()) {
                sum = sum + anti(hi) - anti(lo);
            }
        }
        sum / (big_t * (self.b - self.a))
    }
}

/// Real roots of `q.0 τ² + q.1 τ + q.2`.
fn quadratic_roots<T: Scalar>(q: (T, T, T)) -> Vec<T> {
    let (a, b, c) = q;
    let scale = b.abs().max(c.abs()).max(T::min_positive_value());
    if a.abs() <= T::epsilon() * scale {
        return if b != T::zero() { vec![-c / b] } else { vec![] };
    }
    let disc = b * b - T::lit(4.0) * a * c;
    if disc < T::zero() {
        return vec![];
    }
    let sq = disc.sqrt();
    let k = -T::lit(0.5) * (b + if b >= T::zero() { sq } else { -sq });
    let mut r = Vec::with_capacity(2);
    if k != T::zero() {
        r.push(c / k);
    }
    r.push(k / a);
    r
}

/// `(t, A_t = ∫_0^t x ds, x(t))`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsianState<T> {
    pub t: T,
    #[serde(rename = "A")]
    pub running: T,
    #[serde(rename = "x")]
    pub spot: T,
}

impl<T: Scalar> AsianState<T> {
    pub fn new(t: T, running: T, spot: T) -> Self {
        Self { t, running, spot }
    }
}

/// `U = p·H⁺ + (1 − p)·H⁻` with `p = (x − a)/(b − a)`.
pub fn asian_cost_to_go<T: Scalar>(params: &AsianParams<T>, s: &AsianState<T>) -> Result<T> {
    params.check(s)?;
    Ok(params.cost_to_go_raw(s))
}

/// `∇_x U = (H⁺ − H⁻)/(b − a)`.
pub fn asian_delta<T: Scalar>(params: &AsianParams<T>, s: &AsianState<T>) -> Result<T> {
    params.check(s)?;
    Ok(params.delta_raw(s))
}

/// `𝒟U = (x − b)(x − a)/(T(b − a))·1{H⁺ > 0}·1{H⁻ = 0}`.
pub fn asian_theta<T: Scalar>(params: &AsianParams<T>, s: &AsianState<T>) -> Result<T> {
    params.check(s)?;
    Ok(params.theta_raw(s))
}

/// Band-free limit `(A/T − K)^+ + x(T − t)/T`.
pub fn whole_space_limit<T: Scalar>(t: T, running: T, spot: T, maturity: T, strike: T) -> Result<T> {
    if t > maturity + T::time_tol() || !(maturity > T::zero()) {
        return Err(Error::InvalidParams(format!("need 0 < T and t <= T, got t = {t}, T = {maturity}")));
    }
    let rest = (maturity - t).max(T::zero());
    Ok((running / maturity - strike).max(T::zero()) + spot * rest / maturity)
}

/// `U_b − U_∞` for the band `(a, b)`.
pub fn whole_space_gap<T: Scalar>(params: &AsianParams<T>, s: &AsianState<T>) -> Result<T> {
    Ok(asian_cost_to_go(params, s)?
        - whole_space_limit(s.t, s.running, s.spot, params.maturity, params.strike)?)
}

/// `U(t, x_t)` as a functional.
#[derive(Debug, Clone, Copy)]
pub struct CostToGo<T>(pub AsianParams<T>);

impl<T: Scalar> Functional<T> for CostToGo<T> {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T {
        self.0.cost_to_go_raw(&self.0.state(t, x))
    }
    fn vertical_gradient(&self, t: T, x: &PathView<'_, T>) -> Option<Vec<T>> {
        Some(vec![self.0.delta_raw(&self.0.state(t, x))])
    }
    fn horizontal_derivative(&self, t: T, x: &PathView<'_, T>) -> Option<T> {
        Some(self.0.theta_raw(&self.0.state(t, x)))
    }
    fn label(&self) -> String {
        "asian U".into()
    }
}

/// Hedge ratio `∇_x U(t, x_t)`; depends on `(t, A_t)` only.
#[derive(Debug, Clone, Copy)]
pub struct Delta<T>(pub AsianParams<T>);

impl<T: Scalar> Functional<T> for Delta<T> {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T {
        self.0.delta_raw(&self.0.state(t, x))
    }
    fn vertical_gradient(&self, _t: T, _x: &PathView<'_, T>) -> Option<Vec<T>> {
        Some(vec![T::zero()])
    }
    fn label(&self) -> String {
        "asian delta".into()
    }
}

/// Superhedge value `V(t, x_t) = U(t, x_t) − ∫_{t0}^t 𝒟U(s, x_s) ds`.
#[derive(Debug, Clone, Copy)]
pub struct HedgeValue<T> {
    pub params: AsianParams<T>,
    pub t0: T,
}

impl<T: Scalar> Functional<T> for HedgeValue<T> {
    fn eval(&self, t: T, x: &PathView<'_, T>) -> T {
        let p = &self.params;
        p.cost_to_go_raw(&p.state(t, x)) - p.theta_integral(x, self.t0, t)
    }
    fn vertical_gradient(&self, t: T, x: &PathView<'_, T>) -> Option<Vec<T>> {
        Some(vec![self.params.delta_raw(&self.params.state(t, x))])
    }
    fn horizontal_derivative(&self, _t: T, _x: &PathView<'_, T>) -> Option<T> {
        Some(T::zero())
    }
    fn label(&self) -> String {
        "asian superhedge value".into()
    }
}

crate::calculus::scalar_integrand!(
    [T: Scalar] CostToGo<T>,
    [T: Scalar] Delta<T>,
    [T: Scalar] HedgeValue<T>,
);

#[cfg(test)]
mod tests {
    use super::*;
    use crate::path::{CadlagPath, StopSide};

    fn canon(k: f64) -> AsianParams<f64> {
        AsianParams::new(1.0, k, 0.0, 2.0).unwrap()
    }

    #[test]
    fn canonical_state() {
        let p = canon(1.0);
        let s = AsianState::new(0.0, 0.0, 1.0);
        assert_eq!(asian_cost_to_go(&p, &s).unwrap(), 0.5);
        assert_eq!(asian_delta(&p, &s).unwrap(), 0.5);
        assert_eq!(asian_theta(&p, &s).unwrap(), -0.5);
        assert_eq!(whole_space_limit(0.0, 0.0, 1.0, 1.0, 1.0).unwrap(), 1.0);
    }

    #[test]
    fn strike_zero() {
        let p = canon(0.0);
        let s = AsianState::new(0.3, 0.4, 1.7);
        assert!((asian_delta(&p, &s).unwrap() - 0.7).abs() < 1e-15);
        assert!(asian_theta(&p, &s).unwrap().abs() == 0.0);
        assert_eq!(asian_cost_to_go(&p, &AsianState::new(0.0, 0.0, 1.0)).unwrap(), 1.0);
    }

    #[test]
    fn terminal_and_bounds() {
        let p = canon(1.0);
        assert_eq!(asian_cost_to_go(&p, &AsianState::new(1.0, 1.5, 1.2)).unwrap(), 0.5);
        assert!(asian_cost_to_go(&p, &AsianState::new(0.0, 0.0, 2.0)).is_err());
        assert!(asian_delta(&p, &AsianState::new(0.5, 1.5, 1.0)).is_err());
    }

    #[test]
    fn theta_integral_on_constant_path() {
        let p = canon(1.0);
        let x = CadlagPath::<f64>::constant(1.0);
        // H⁺ = (t + 2(1 − t)) − 1 = 1 − t stays positive on [0, 1).
        let v = x.view(1.0, StopSide::At);
        assert!((p.theta_integral(&v, 0.0, 1.0) + 0.5).abs() < 1e-15);
    }

    #[test]
    fn theta_integral_on_linear_segment_matches_quadrature() {
        let p = AsianParams::new(1.0, 1.1, 0.5, 2.0).unwrap();
        let x = CadlagPath::<f64>::linear(&[(0.0, 0.9), (0.4, 1.8), (1.0, 0.7)]).unwrap();
        let v = x.view(1.0, StopSide::At);
        let exact = p.theta_integral(&v, 0.0, 1.0);
        let n = 200_000;
        let h = 1.0 / n as f64;
        let quad: f64 = (0..n)
            .map(|i| {
                let s = (i as f64 + 0.5) * h;
                p.theta_raw(&p.state(s, &x.view(s, StopSide::At))) * h
            })
            .sum();
        assert!(exact < 0.0);
        assert!((exact - quad).abs() < 1e-6, "{exact} vs {quad}");
    }

    #[test]
    fn roots() {
        let mut r = quadratic_roots((1.0, -3.0, 2.0));
        r.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(r, vec![1.0, 2.0]);
        assert_eq!(quadratic_roots((0.0, 2.0, -1.0)), vec![0.5]);
        assert!(quadratic_roots((1.0, 0.0, 1.0)).is_empty());
    }
}
