use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Integrand;
use crate::error::{Error, Result};
use crate::path::{approximate_on, CadlagPath, PartitionLadder, StopSide};
use crate::scalar::Scalar;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct IntegralConfig {
    pub first_level: usize,
    pub last_level: usize,
    pub abs_tol: f64,
    pub rel_tol: f64,
}

impl Default for IntegralConfig {
    fn default() -> Self {
        Self {
            first_level: 6,
            last_level: 14,
            abs_tol: 1e-6,
            rel_tol: 1e-4,
        }
    }
}

impl IntegralConfig {
    pub fn levels(first_level: usize, last_level: usize) -> Self {
        Self {
            first_level,
            last_level,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IntegralEstimate<T> {
    /// `(n, I(t, x^n_t))` for each level.
    pub levels: Vec<(usize, T)>,
    pub limit: Option<T>,
    pub converged: bool,
    /// `|I_N − I_{N−1}|` between the two finest levels.
    pub level_gap: T,
}

impl<T: Scalar> IntegralEstimate<T> {
    pub fn at_level(&self, n: usize) -> Option<T> {
        self.levels.iter().find(|(m, _)| *m == n).map(|(_, v)| *v)
    }

    pub fn finest(&self) -> T {
        self.levels.last().map(|(_, v)| *v).unwrap_or_else(T::zero)
    }
}

/// Left Riemann sum over one grid:
/// `Σ_{t0 <= t_i <= t} φ(t_i, x^n_{t_i−})·(x(t_{i+1}) − x(t_i))`.
pub fn riemann_sum<T: Scalar>(
    phi: &(impl Integrand<T> + ?Sized),
    path: &CadlagPath<T>,
    grid: &[T],
    t0: T,
    t: T,
) -> Result<T> {
    let d = path.dim();
    if phi.dim() != d {
        return Err(Error::Dimension {
            expected: d,
            got: phi.dim(),
        });
    }
    let approx = approximate_on(path, grid);
    let tol = T::time_tol();
    let mut buf = vec![T::zero(); d];
    let mut inc = vec![T::zero(); d];
    let mut sum = T::zero();
    for i in 0..grid.len().saturating_sub(1) {
        let ti = grid[i];
        if ti > t + tol {
            break;
        }
        if ti < t0 - tol {
            continue;
        }
        let mut any = false;
        for (c, v) in inc.iter_mut().enumerate() {
            *v = path.value(grid[i + 1], c) - path.value(ti, c);
            any |= *v != T::zero();
        }
        if !any {
            continue;
        }
        let view = approx.view(ti, StopSide::Before);
        phi.eval_into(ti, &view, &mut buf);
        for c in 0..d {
            sum = sum + buf[c] * inc[c];
        }
    }
    Ok(sum)
}

pub fn pathwise_integral<T: Scalar>(
    phi: &(impl Integrand<T> + ?Sized),
    path: &CadlagPath<T>,
    ladder: &PartitionLadder<T>,
    t: T,
    cfg: &IntegralConfig,
) -> Result<IntegralEstimate<T>> {
    pathwise_integral_between(phi, path, ladder, T::zero(), t, cfg)
}

/// Pathwise integral over `[t0, t]`, one Riemann sum per ladder level.
/// Converged when the finest gap is within tolerance and no larger than
/// the one before it.
pub fn pathwise_integral_between<T: Scalar>(
    phi: &(impl Integrand<T> + ?Sized),
    path: &CadlagPath<T>,
    ladder: &PartitionLadder<T>,
    t0: T,
    t: T,
    cfg: &IntegralConfig,
) -> Result<IntegralEstimate<T>> {
    if cfg.first_level > cfg.last_level {
        return Err(Error::InvalidParams("empty level range".into()));
    }
    if t > ladder.horizon() + T::time_tol() {
        return Err(Error::InvalidParams(format!(
            "t = {t} beyond ladder horizon {}",
            ladder.horizon()
        )));
    }
    let levels: Vec<(usize, T)> = (cfg.first_level..=cfg.last_level)
        .into_par_iter()
        .map(|n| Ok((n, riemann_sum(phi, path, ladder.grid(n)?, t0, t)?)))
        .collect::<Result<_>>()?;

    let gaps: Vec<T> = levels.windows(2).map(|w| (w[1].1 - w[0].1).abs()).collect();
    let top = levels.last().map(|l| l.1).unwrap_or_else(T::zero);
    let tol = T::lit(cfg.abs_tol).max(T::lit(cfg.rel_tol) * top.abs());
    let level_gap = gaps.last().copied().unwrap_or_else(T::zero);
    let shrinking = gaps.len() < 2 || gaps[gaps.len() - 1] <= gaps[gaps.len() - 2] + T::lit(1e-15);
    let converged = !gaps.is_empty() && level_gap <= tol && shrinking;
    Ok(IntegralEstimate {
        levels,
        limit: converged.then_some(top),
        converged,
        level_gap,
    })
}
