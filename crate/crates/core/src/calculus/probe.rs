use serde::Serialize;

use super::{vertical_derivative_fd, Functional};
use crate::error::Result;
use crate::path::{approximate, CadlagPath, PartitionLadder, StopSide};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Serialize)]
pub struct CausalityRecord {
    pub path: usize,
    pub t: f64,
    /// Jump used as witness: the path's own jump at `t`, or a synthetic one.
    pub witness_jump: f64,
    /// `|F(t, y_t) − F(t, y_{t−})| / |Δy(t)|`.
    pub jump_gap: f64,
    /// `‖∇_x F(t, x_t)‖_∞` by finite differences.
    pub grad_norm: f64,
    pub causal_by_jump: bool,
    pub causal_by_gradient: bool,
}

impl CausalityRecord {
    pub fn consistent(&self) -> bool {
        self.causal_by_jump == self.causal_by_gradient
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CausalityReport {
    pub label: String,
    pub tol: f64,
    pub records: Vec<CausalityRecord>,
    pub strictly_causal: bool,
    pub inconsistencies: usize,
}

/// Samples `F` against `F_−` and against its vertical gradient on every
/// `(path, t)` pair. Where a path is continuous at `t` a witness jump of
/// `0.1·x(t−)` is grafted on.
pub fn causality_probe<T: Scalar>(
    f: &(impl Functional<T> + ?Sized),
    paths: &[CadlagPath<T>],
    times: &[T],
    h: Option<T>,
    tol: f64,
) -> Result<CausalityReport> {
    let mut records = Vec::new();
    for (pi, p) in paths.iter().enumerate() {
        for &t in times {
            let before = p.view(t, StopSide::Before);
            let e: Vec<T> = (0..p.dim())
                .map(|c| {
                    let j = p.jump(t, c);
                    if j.abs() > T::lit(1e-12) * p.left_limit(t, c).abs().max(T::one()) {
                        j
                    } else {
                        T::lit(0.1) * p.left_limit(t, c)
                    }
                })
                .collect();
            let scale = e.iter().fold(T::zero(), |m, v| m.max(v.abs()));
            let after = before.bumped(&e)?;
            let gap = ((f.eval(t, &after) - f.eval(t, &before)).abs() / scale).as_f64();
            let grad = vertical_derivative_fd(f, t, &p.view(t, StopSide::At), h)?;
            let grad_norm = grad.iter().fold(0.0f64, |m, g| m.max(g.as_f64().abs()));
            records.push(CausalityRecord {
                path: pi,
                t: t.as_f64(),
                witness_jump: e[0].as_f64(),
                jump_gap: gap,
                grad_norm,
                causal_by_jump: gap < tol,
                causal_by_gradient: grad_norm < tol,
            });
        }
    }
    let strictly_causal =
        !records.is_empty() && records.iter().all(|r| r.causal_by_jump && r.causal_by_gradient);
    let inconsistencies = records.iter().filter(|r| !r.consistent()).count();
    Ok(CausalityReport {
        label: f.label(),
        tol,
        records,
        strictly_causal,
        inconsistencies,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ContinuityConfig {
    /// Offsets for the one-sided limits along the path.
    pub deltas: Vec<f64>,
    /// Ladder levels for the approximation limits.
    pub levels: Vec<usize>,
    pub tol: f64,
}

impl Default for ContinuityConfig {
    fn default() -> Self {
        Self {
            deltas: vec![1e-5, 1e-6, 1e-7],
            levels: vec![12, 13, 14],
            tol: 1e-3,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub condition: String,
    pub max_deviation: f64,
    pub pass: bool,
}

/// Sampled diagnostic, not a proof of membership.
#[derive(Debug, Clone, Serialize)]
pub struct ContinuityReport {
    pub label: String,
    pub t: f64,
    pub checks: Vec<ConditionCheck>,
    pub pass: bool,
    pub note: &'static str,
}

/// Samples left/right continuity of `F` at `t`, along the path (1a, 2a)
/// and along the approximating sequence at `t'_n = max{t_i < t}` (1c, 2c).
pub fn continuity_probe<T: Scalar>(
    f: &(impl Functional<T> + ?Sized),
    path: &CadlagPath<T>,
    ladder: &PartitionLadder<T>,
    t: T,
    cfg: &ContinuityConfig,
) -> Result<ContinuityReport> {
    let left_ref = f.eval(t, &path.view(t, StopSide::Before));
    let right_ref = f.eval(t, &path.view(t, StopSide::At));
    let dev = |v: T, r: T| (v - r).abs().as_f64();

    let mut d1a = 0.0f64;
    let mut d2a = 0.0f64;
    for &d in &cfg.deltas {
        let d = T::lit(d);
        if t - d > T::zero() {
            let s = t - d;
            d1a = d1a.max(dev(f.eval(s, &path.view(s, StopSide::Before)), left_ref));
        }
        let s = t + d;
        d2a = d2a.max(dev(f.eval(s, &path.view(s, StopSide::At)), right_ref));
    }

    let mut d1c = 0.0f64;
    let mut d2c = 0.0f64;
    for &n in &cfg.levels {
        let xn = approximate(path, ladder, n)?;
        let tn = ladder.predecessor(n, t)?;
        d1c = d1c.max(dev(f.eval(tn, &xn.view(tn, StopSide::Before)), left_ref));
        d2c = d2c.max(dev(f.eval(tn, &xn.view(tn, StopSide::At)), right_ref));
    }

    let checks: Vec<ConditionCheck> = [("1a", d1a), ("2a", d2a), ("1c", d1c), ("2c", d2c)]
        .into_iter()
        .map(|(c, m)| ConditionCheck {
            condition: c.into(),
            max_deviation: m,
            pass: m.is_finite() && m <= cfg.tol,
        })
        .collect();
    Ok(ContinuityReport {
        label: f.label(),
        t: t.as_f64(),
        pass: checks.iter().all(|c| c.pass),
        checks,
        note: "sampled diagnostic",
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::calculus::library;

    fn paths() -> Vec<CadlagPath<f64>> {
        vec![
            CadlagPath::<f64>::step(&[(0.0, 1.0), (0.5, 2.0)]).unwrap(),
            CadlagPath::<f64>::linear(&[(0.0, 1.0), (1.0, 1.5)]).unwrap(),
        ]
    }

    #[test]
    fn left_spot_is_strictly_causal() {
        let r = causality_probe(&library::left_spot::<f64>(), &paths(), &[0.25, 0.5], None, 1e-6)
            .unwrap();
        assert!(r.strictly_causal);
        assert_eq!(r.inconsistencies, 0);
    }

    #[test]
    fn spot_is_not() {
        let r = causality_probe(&library::spot::<f64>(), &paths(), &[0.5], None, 1e-6).unwrap();
        assert!(!r.strictly_causal);
        assert_eq!(r.inconsistencies, 0);
        assert!((r.records[0].jump_gap - 1.0).abs() < 1e-12);
        assert!((r.records[0].grad_norm - 1.0).abs() < 1e-9);
    }

    #[test]
    fn running_mean_is_continuous() {
        let p = &paths()[0];
        let lad = PartitionLadder::dyadic(1.0, 14).unwrap();
        for t in [0.0, 0.3, 0.5] {
            let r = continuity_probe(&library::running_mean::<f64>(1.0), p, &lad, t, &Default::default())
                .unwrap();
            assert!(r.pass, "{r:?}");
        }
    }

    #[test]
    fn jump_indicator_fails_right_continuity() {
        let p = &paths()[0];
        let lad = PartitionLadder::dyadic(1.0, 14).unwrap();
        let r = continuity_probe(&library::jump_indicator::<f64>(), p, &lad, 0.5, &Default::default())
            .unwrap();
        let c2a = r.checks.iter().find(|c| c.condition == "2a").unwrap();
        assert!(!c2a.pass);
        assert!(!r.pass);
    }
}
