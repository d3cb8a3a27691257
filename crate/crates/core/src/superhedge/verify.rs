use serde::Serialize;

use super::asian::{AsianParams, AsianState};
use crate::error::{Error, Result};
use crate::path::{CadlagPath, Interpolation, PathView, StopSide};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize)]
pub struct EpsilonCheck {
    pub epsilon: f64,
    /// `∫_t^T 𝒟U(s, z^ε_s) ds`.
    pub theta_integral: f64,
    /// `−ε(1 − ε/(b − a))`.
    pub lower_bound: f64,
    pub within: bool,
    /// Bound that also charges the initial `[t, t+ε)` stretch at `x(t)`:
    /// `−ε((b − x)(x − a)/(T(b − a)) + (1 − ε/(b − a))(T − t − ε)^+/T)`.
    pub general_bound: f64,
    pub within_general: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerificationReport {
    pub t: f64,
    /// Largest theta over the scanned `(s, A, z)` states.
    pub max_theta: f64,
    pub theta_nonpositive: bool,
    pub family: Vec<EpsilonCheck>,
    /// Best value over the family: an estimate of the sup, expected to be 0.
    pub sup_estimate: f64,
    /// Family values increase as ε shrinks.
    pub monotone: bool,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

/// `z^ε`: equal to `x` up to `t`, to `x(t)` on `[t, t+ε)`, then `b − ε`.
pub fn adversarial_path<T: Scalar>(
    params: &AsianParams<T>,
    x: &PathView<'_, T>,
    epsilon: T,
) -> Result<CadlagPath<T>> {
    let t = x.time();
    let mut rows = x.to_path().to_rows();
    let level = params.b - epsilon;
    if !params.bounds().contains(level) {
        return Err(Error::InvalidParams(format!("epsilon {epsilon} leaves the band")));
    }
    let switch = t + epsilon;
    if x.base().mode() == Interpolation::Linear {
        let spot = x.spot(0);
        if rows.last().is_none_or(|r| r.0 < t) {
            rows.push((t, vec![spot]));
        }
        rows.push((switch, vec![spot]));
    }
    rows.push((switch, vec![level]));
    CadlagPath::from_rows(x.base().mode(), 1, &rows, Some(vec![x.initial(0)]))
}

/// Sign scan of theta plus the `z^ε` family bound at `x_t`.
pub fn verification_check<T: Scalar>(
    params: &AsianParams<T>,
    x: &PathView<'_, T>,
    epsilons: &[T],
    tol: f64,
) -> Result<VerificationReport> {
    let t = x.time();
    let bounds = params.bounds();
    if !bounds.contains(x.spot(0)) {
        return Err(Error::OutOfBounds {
            t: t.as_f64(),
            spot: x.spot(0).as_f64(),
            a: params.a.as_f64(),
            b: params.b.as_f64(),
        });
    }
    let a_t = x.integral(t, 0);
    let n = 24;
    let mut max_theta = f64::NEG_INFINITY;
    let mut witness = None;
    for i in 0..n {
        let s = t + (params.maturity - t) * T::lit(i as f64 / n as f64);
        for j in 0..=n {
            let w = T::lit(j as f64 / n as f64);
            let running = a_t + (s - t) * (params.a + (params.b - params.a) * w);
            for k in 1..n {
                let z = params.a + bounds.width() * T::lit(k as f64 / n as f64);
                let th = params.theta_raw(&AsianState::new(s, running, z)).as_f64();
                if th > max_theta {
                    max_theta = th;
                }
                if th > tol && witness.is_none() {
                    witness = Some(format!("theta {th} > 0 at s={s}, A={running}, z={z}"));
                }
            }
        }
    }
    let width = bounds.width().as_f64();
    let mut family = Vec::new();
    for &eps in epsilons {
        let z = adversarial_path(params, x, eps)?;
        let v = z.view(params.maturity, StopSide::At);
        let integral = params.theta_integral(&v, t, params.maturity).as_f64();
        let e = eps.as_f64();
        let lower = -e * (1.0 - e / width);
        let within = integral <= tol && integral >= lower - tol;
        let (xt, big_t) = (x.spot(0).as_f64(), params.maturity.as_f64());
        let (a, b) = (params.a.as_f64(), params.b.as_f64());
        let general = -e
            * ((b - xt) * (xt - a) / (big_t * width)
                + (1.0 - e / width) * (big_t - t.as_f64() - e).max(0.0) / big_t);
        let within_general = integral <= tol && integral >= general - tol;
        if !within && witness.is_none() {
            witness = Some(format!("epsilon {e}: integral {integral} outside [{lower}, 0]"));
        }
        family.push(EpsilonCheck {
            epsilon: e,
            theta_integral: integral,
            lower_bound: lower,
            within,
            general_bound: general,
            within_general,
        });
    }
    let mut by_eps = family.clone();
    by_eps.sort_by(|p, q| q.epsilon.partial_cmp(&p.epsilon).unwrap());
    let monotone = by_eps
        .windows(2)
        .all(|w| w[1].theta_integral >= w[0].theta_integral - tol);
    let sup_estimate = family.iter().map(|f| f.theta_integral).fold(f64::NEG_INFINITY, f64::max);
    let theta_nonpositive = max_theta <= tol;
    Ok(VerificationReport {
        t: t.as_f64(),
        max_theta,
        theta_nonpositive,
        pass: theta_nonpositive && monotone && family.iter().all(|f| f.within),
        family,
        sup_estimate,
        monotone,
        witness,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_family() {
        let p = AsianParams::new(1.0, 1.0, 0.0, 2.0).unwrap();
        let x = CadlagPath::<f64>::constant(1.0);
        let r = verification_check(&p, &x.view(0.0, StopSide::At), &[0.1, 0.01], 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
        assert!((r.family[0].theta_integral + 0.095).abs() < 1e-12);
        assert!((r.family[1].theta_integral + 0.00995).abs() < 1e-12);
    }

    #[test]
    fn stated_bound_is_not_general() {
        // H⁻ never turns positive, so z^ε pays theta on both stretches.
        let p = AsianParams::new(1.0, 1.5, 0.0, 2.0).unwrap();
        let x = CadlagPath::<f64>::constant(1.0);
        let r = verification_check(&p, &x.view(0.0, StopSide::At), &[0.1, 0.01], 1e-9).unwrap();
        assert!(r.family.iter().all(|f| !f.within && f.within_general));
        assert!(r.theta_nonpositive && r.monotone && !r.pass);
    }

    #[test]
    fn constant_near_top() {
        let p = AsianParams::new(1.0, 0.5, 0.0, 2.0).unwrap();
        let d = 1e-3;
        let x = CadlagPath::<f64>::constant(2.0 - d);
        // H⁻ = A − 0.5 turns positive at A = 0.5, i.e. s = 0.5/(2 − d).
        let stop = 0.5 / (2.0 - d);
        let want = stop * (-d) * (2.0 - d) / 2.0;
        let got = p.theta_integral(&x.view(1.0, StopSide::At), 0.0, 1.0);
        assert!((got - want).abs() < 1e-15);
    }

    #[test]
    fn linear_path_family() {
        let p = AsianParams::new(1.0, 1.0, 0.0, 2.0).unwrap();
        let x = CadlagPath::<f64>::linear(&[(0.0, 1.0), (0.5, 1.2)]).unwrap();
        let z = adversarial_path(&p, &x.view(0.2, StopSide::At), 0.1).unwrap();
        assert!((z.value(0.25, 0) - x.value(0.2, 0)).abs() < 1e-12);
        assert_eq!(z.value(0.3, 0), 1.9);
        let r = verification_check(&p, &x.view(0.2, StopSide::At), &[0.1, 0.01], 1e-9).unwrap();
        assert!(r.pass, "{r:?}");
    }
}
